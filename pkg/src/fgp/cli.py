"""Command-line entry point: one subcommand per pipeline stage plus `all`."""

import argparse
import json
import logging
import sys

from .errors import FgpError
from .pipeline import (
    STAGE_ORDER,
    PipelineConfig,
    ingest_manifest,
    run_all,
    run_stage,
)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fgp",
        description="Fine-grained image classification pipeline (staged, cached).",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="stage", required=True)
    for stage in STAGE_ORDER + ("all",):
        p = sub.add_parser(stage, help=f"run the {stage} stage" if stage != "all" else "run every stage in order")
        p.add_argument("--manifest", required=True, help="dataset manifest CSV")
        p.add_argument("--config", required=True, help="pipeline configuration file")
        p.add_argument("--cache", required=True, help="cache directory for stage products")
        p.add_argument("--workers", type=int, default=1, help="parallel workers (default 1)")
        p.add_argument(
            "--debug-images",
            action="store_true",
            help="write annotated detection images next to stage products",
        )
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.workers < 1:
        print("error: ArgumentError: --workers must be >= 1", file=sys.stderr)
        return 2
    try:
        config = PipelineConfig.load(args.config)
        manifest = ingest_manifest(args.manifest, bbox_policy=config.bbox_policy)
        if args.stage == "all":
            summaries = run_all(
                manifest, config, args.cache, workers=args.workers,
                debug_images=args.debug_images,
            )
        else:
            summaries = [
                run_stage(
                    args.stage, manifest, config, args.cache,
                    workers=args.workers, debug_images=args.debug_images,
                )
            ]
    except FgpError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    for summary in summaries:
        print(json.dumps(summary, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
