"""Pipeline orchestration: manifest ingestion, configuration, staged
execution with caching, and the deterministic full-chain runner.

Stages: segment -> heads -> vocab -> extract -> train -> predict ->
evaluate -> report. Each stage is idempotent: per-image products are keyed
by content hash, stage directories carry the hash of the configuration
fields the stage depends on.
"""

import csv
import dataclasses
import hashlib
import json
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import descript, encode, evalrep, headdet, learn, segment
from .errors import ArgumentError, ConfigError, IngestError, StaleCacheError
from .imgio import BBox, crop, decode_image, resize, to_grayscale

MANIFEST_HEADER = ["path", "class", "split", "x", "y", "w", "h"]
SPLITS = ("train", "val", "test")

FEATURE_GROUPS = {
    "sift_body": ("sift_body",),
    "color_names": ("color_names",),
    "lbp": ("lbp_s1", "lbp_s2", "lbp_s4"),
    "sift_head": ("sift_head",),
}


@dataclass
class PipelineConfig:
    seed: int = 0
    max_dim: int = 0  # 0 = no resize cap
    bbox_policy: str = "reject"  # or "clip"
    # GrabCut
    grabcut_components: int = 5
    grabcut_lambda: float = 50.0
    grabcut_iterations: int = 5
    # Head detector
    hough_mag_threshold: float = 260.0
    hough_peak_threshold: float = 0.5
    hough_nms_radius: float = 8.0
    hough_r_min_frac: float = 0.01
    hough_r_max_frac: float = 0.08
    head_margin: float = 3.0
    # Dense SIFT geometry
    sift_step: int = 4
    sift_patch: int = 16
    head_sift_step: int = 2
    head_sift_patch: int = 16
    # Vocabularies
    vocab_body: int = 1000
    vocab_head: int = 500
    vocab_samples: int = 200000
    vocab_iters: int = 15
    # Pooling
    pyramid_levels: int = 3
    colorname_levels: int = 5
    lbp_scales: str = "1,2,4"
    colorname_table: str = ""  # empty = packaged table
    # Kernel map
    kernel_order: int = 1
    kernel_period: float = 0.65
    kernel_gamma: float = 0.5
    # SVM
    svm_c: float = 10.0
    svm_tol: float = 1e-3
    svm_max_iters: int = 1000
    svm_pos_weight: float = 1.0
    # Feature selection (comma-joined FEATURE_GROUPS keys)
    features: str = "sift_body,color_names,lbp,sift_head"
    # Reporting
    report_k: int = 5
    heatmap_size: int = 330

    def canonical(self):
        items = sorted(dataclasses.asdict(self).items())
        return "".join(f"{k}={v!r}\n" for k, v in items)

    def fingerprint(self):
        return hashlib.sha256(self.canonical().encode()).digest()

    def lbp_scale_list(self):
        return tuple(int(s) for s in self.lbp_scales.split(","))

    def block_names(self):
        """Enabled feature blocks in the fixed concatenation order."""
        groups = [g.strip() for g in self.features.split(",") if g.strip()]
        for g in groups:
            if g not in FEATURE_GROUPS:
                raise ConfigError(f"unknown feature group {g!r}")
        blocks = []
        for g, names in FEATURE_GROUPS.items():
            if g in groups:
                blocks.extend(names)
        return tuple(blocks)

    def kernel_spec(self):
        return encode.KernelMapSpec(
            order=self.kernel_order, period=self.kernel_period, gamma=self.kernel_gamma
        )

    def save(self, path):
        Path(path).write_text(
            "".join(
                f"{k}={v}\n" for k, v in sorted(dataclasses.asdict(self).items())
            )
        )

    @classmethod
    def load(cls, path):
        fields = {f.name: f for f in dataclasses.fields(cls)}
        values = {}
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, raw = line.partition("=")
            key = key.strip()
            if key not in fields:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            typ = fields[key].type
            try:
                if typ in (int, "int"):
                    values[key] = int(raw)
                elif typ in (float, "float"):
                    values[key] = float(raw)
                else:
                    values[key] = raw.strip()
            except ValueError as e:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {e}") from e
        return cls(**values)


# Configuration fields each stage's outputs depend on (cumulative).
_FIELDS_SEGMENT = (
    "seed",
    "max_dim",
    "bbox_policy",
    "grabcut_components",
    "grabcut_lambda",
    "grabcut_iterations",
)
_FIELDS_HEADS = (
    "max_dim",
    "bbox_policy",
    "hough_mag_threshold",
    "hough_peak_threshold",
    "hough_nms_radius",
    "hough_r_min_frac",
    "hough_r_max_frac",
    "head_margin",
)
_FIELDS_VOCAB = _FIELDS_SEGMENT + _FIELDS_HEADS + (
    "sift_step",
    "sift_patch",
    "head_sift_step",
    "head_sift_patch",
    "vocab_body",
    "vocab_head",
    "vocab_samples",
    "vocab_iters",
)
_FIELDS_BLOCKS = _FIELDS_VOCAB + (
    "pyramid_levels",
    "colorname_levels",
    "lbp_scales",
    "colorname_table",
)
_FIELDS_EXTRACT = _FIELDS_BLOCKS + ("kernel_order", "kernel_period", "kernel_gamma", "features")
_FIELDS_TRAIN = _FIELDS_EXTRACT + ("svm_c", "svm_tol", "svm_max_iters", "svm_pos_weight")

STAGE_FIELDS = {
    "segment": _FIELDS_SEGMENT,
    "heads": _FIELDS_HEADS,
    "vocab": _FIELDS_VOCAB,
    "blocks": _FIELDS_BLOCKS,
    "extract": _FIELDS_EXTRACT,
    "train": _FIELDS_TRAIN,
    "predict": _FIELDS_TRAIN,
    "evaluate": _FIELDS_TRAIN,
    "report": _FIELDS_TRAIN + ("report_k", "heatmap_size"),
}

STAGE_ORDER = ("segment", "heads", "vocab", "extract", "train", "predict", "evaluate", "report")


@dataclass
class ManifestEntry:
    path: str
    class_id: str  # "?" for unlabeled
    split: str
    bbox: BBox
    key: str  # content-addressed cache key

    @property
    def labeled(self):
        return self.class_id != "?"


@dataclass
class Manifest:
    entries: list

    def split(self, name):
        return [e for e in self.entries if e.split == name]


def ingest_manifest(path, bbox_policy="reject"):
    """Parse and validate the dataset manifest CSV.

    Every referenced image must exist and decode; bad bounding boxes are
    rejected (or clipped when bbox_policy = "clip"); duplicate paths fail.
    """
    entries = []
    seen = {}
    base = Path(path).resolve().parent
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: empty manifest")
        if header != MANIFEST_HEADER:
            raise IngestError(f"{path}:1: header must be {','.join(MANIFEST_HEADER)}")
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != 7:
                raise IngestError(f"{path}:{lineno}: expected 7 fields, got {len(row)}")
            img_path, class_id, split, *box = row
            if split not in SPLITS:
                raise IngestError(f"{path}:{lineno}: bad split {split!r}")
            if split in ("train", "val") and class_id == "?":
                raise IngestError(f"{path}:{lineno}: {split} entry must have a class id")
            if img_path in seen:
                raise IngestError(
                    f"{path}:{lineno}: duplicate path {img_path!r} (first at line {seen[img_path]})"
                )
            seen[img_path] = lineno
            try:
                x, y, w, h = (int(v) for v in box)
            except ValueError:
                raise IngestError(f"{path}:{lineno}: non-integer bbox {box}")
            full = Path(img_path)
            if not full.is_absolute():
                full = base / full
            try:
                data = full.read_bytes()
            except OSError as e:
                raise IngestError(f"{path}:{lineno}: cannot read image: {e}")
            try:
                img = decode_image(data)
            except Exception as e:
                raise IngestError(f"{path}:{lineno}: image does not decode: {e}")
            ih, iw = img.shape[:2]
            bbox = BBox(x, y, w, h)
            try:
                bbox.validate(iw, ih)
            except Exception as e:
                if bbox_policy == "clip":
                    x0, y0 = max(0, x), max(0, y)
                    x1, y1 = min(iw, x + w), min(ih, y + h)
                    if x1 <= x0 or y1 <= y0:
                        raise IngestError(f"{path}:{lineno}: bbox {bbox} outside image")
                    bbox = BBox(x0, y0, x1 - x0, y1 - y0)
                else:
                    raise IngestError(f"{path}:{lineno}: {e}")
            key = hashlib.sha256(img_path.encode() + b"\x00" + hashlib.sha256(data).digest()).hexdigest()[:24]
            entries.append(
                ManifestEntry(path=str(full), class_id=class_id, split=split, bbox=bbox, key=key)
            )
    return Manifest(entries=entries)


def _stage_hash(config, stage):
    payload = "".join(
        f"{k}={getattr(config, k)!r}\n" for k in sorted(STAGE_FIELDS[stage])
    )
    return hashlib.sha256(payload.encode()).hexdigest()


def _prepare_stage_dir(cache_dir, stage, config):
    d = Path(cache_dir) / stage
    marker = d / "_config"
    want = _stage_hash(config, stage)
    if d.exists() and (not marker.exists() or marker.read_text() != want):
        shutil.rmtree(d)
    d.mkdir(parents=True, exist_ok=True)
    marker.write_text(want)
    return d


def _require_stage_dir(cache_dir, stage, config):
    d = Path(cache_dir) / stage
    marker = d / "_config"
    if not marker.exists():
        raise StaleCacheError(f"stage {stage!r} has not been run; run `fgp {stage}` first")
    if marker.read_text() != _stage_hash(config, stage):
        raise StaleCacheError(
            f"cached {stage!r} outputs were produced under a different configuration; "
            f"re-run `fgp {stage}`"
        )
    return d


def _image_seed(config, entry):
    h = hashlib.sha256(f"{config.seed}:{entry.path}".encode()).digest()
    return int.from_bytes(h[:8], "little") % (2**63)


def _load_image(entry, config):
    """Decode an entry's image, applying the optional max-dimension cap.

    Returns (image, bbox) with the bbox rescaled to the resized image."""
    img = decode_image(Path(entry.path).read_bytes())
    bbox = entry.bbox
    h, w = img.shape[:2]
    if config.max_dim and max(h, w) > config.max_dim:
        s = config.max_dim / max(h, w)
        nw, nh = max(1, round(w * s)), max(1, round(h * s))
        img = resize(img, nw, nh)
        x0 = min(nw - 1, int(bbox.x * s))
        y0 = min(nh - 1, int(bbox.y * s))
        x1 = min(nw, max(x0 + 1, round((bbox.x + bbox.w) * s)))
        y1 = min(nh, max(y0 + 1, round((bbox.y + bbox.h) * s)))
        bbox = BBox(x0, y0, x1 - x0, y1 - y0)
    return img, bbox


def _pmap(fn, items, workers):
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- stages


def _stage_segment(manifest, config, cache_dir, workers, debug):
    d = _prepare_stage_dir(cache_dir, "segment", config)

    def work(entry):
        out = d / f"{entry.key}.pgm"
        if out.exists():
            return ("hit", False)
        img, bbox = _load_image(entry, config)
        mask = segment.grabcut(
            img,
            bbox,
            iterations=config.grabcut_iterations,
            K=config.grabcut_components,
            lam=config.grabcut_lambda,
            seed=_image_seed(config, entry),
        )
        out.write_bytes(segment.mask_to_bytes(mask))
        return ("computed", mask.degenerate)

    results = _pmap(work, manifest.entries, workers)
    return {
        "stage": "segment",
        "images": len(results),
        "cache_hits": sum(1 for r in results if r[0] == "hit"),
        "degenerate": sum(1 for r in results if r[1]),
    }


def _head_radii(config, crop_w, crop_h):
    m = min(crop_w, crop_h)
    r_min = max(2, round(config.hough_r_min_frac * m))
    r_max = max(r_min, min(round(config.hough_r_max_frac * m), m // 2))
    return r_min, r_max


def _stage_heads(manifest, config, cache_dir, workers, debug):
    d = _prepare_stage_dir(cache_dir, "heads", config)

    def work(entry):
        out = d / f"{entry.key}.json"
        if out.exists():
            return ("hit", json.loads(out.read_text())["detected"])
        img, bbox = _load_image(entry, config)
        region = crop(img, bbox)
        gray = to_grayscale(region)
        r_min, r_max = _head_radii(config, bbox.w, bbox.h)
        face = None
        if gray.shape[0] >= 3 and gray.shape[1] >= 3 and 2 * r_max <= min(gray.shape):
            circles = headdet.hough_circles(
                gray,
                r_min,
                r_max,
                config.hough_mag_threshold,
                config.hough_peak_threshold,
                config.hough_nms_radius,
            )
            face = headdet.find_face(circles, bbox.w, bbox.h)
        if face is None:
            head = headdet.fallback_head(bbox)
        else:
            hb = headdet.head_bbox(face, bbox.w, bbox.h, margin=config.head_margin)
            head = headdet.HeadBox(
                box=BBox(hb.box.x + bbox.x, hb.box.y + bbox.y, hb.box.w, hb.box.h),
                detected=True,
            )
        out.write_text(
            json.dumps(
                {
                    "detected": head.detected,
                    "x": head.box.x,
                    "y": head.box.y,
                    "w": head.box.w,
                    "h": head.box.h,
                }
            )
        )
        if debug:
            if face is not None:
                _write_debug_detection(d / f"{entry.key}.debug.ppm", region, face, bbox)
            if gray.shape[0] >= 3 and gray.shape[1] >= 3 and 2 * r_max <= min(gray.shape):
                acc = headdet.hough_accumulator(gray, r_min, r_max, config.hough_mag_threshold)
                _write_debug_accumulator(d / f"{entry.key}.acc.ppm", acc)
        return ("computed", head.detected)

    results = _pmap(work, manifest.entries, workers)
    n = len(results)
    return {
        "stage": "heads",
        "images": n,
        "cache_hits": sum(1 for r in results if r[0] == "hit"),
        "detected": sum(1 for r in results if r[1]),
        "detection_rate": (sum(1 for r in results if r[1]) / n) if n else 0.0,
    }


def _write_debug_accumulator(path, acc):
    """Max-projection of the vote accumulator over radii as a gray PPM."""
    from .imgio import encode_ppm

    proj = acc.max(axis=0).astype(np.float64)
    top = proj.max()
    if top > 0:
        proj = proj * (255.0 / top)
    img = np.repeat(np.rint(proj).astype(np.uint8)[:, :, None], 3, axis=2)
    path.write_bytes(encode_ppm(img))


def _write_debug_detection(path, region, face, bbox):
    from .imgio import encode_ppm

    img = region.copy()
    for c, color in (
        (face.eye_left, (255, 0, 0)),
        (face.eye_right, (0, 255, 0)),
        (face.nose, (0, 0, 255)),
    ):
        y, x, r = int(c.cy), int(c.cx), int(c.r)
        y0, y1 = max(0, y - r), min(img.shape[0], y + r + 1)
        x0, x1 = max(0, x - r), min(img.shape[1], x + r + 1)
        img[y0:y1, x] = color
        img[y, x0:x1] = color
    path.write_bytes(encode_ppm(img))


def _load_mask(cache_dir, config, entry, bbox):
    d = _require_stage_dir(cache_dir, "segment", config)
    f = d / f"{entry.key}.pgm"
    if not f.exists():
        raise StaleCacheError(f"missing segmentation mask for {entry.path}; re-run `fgp segment`")
    return segment.mask_from_bytes(f.read_bytes(), seed_box=bbox)


def _load_head(cache_dir, config, entry):
    d = _require_stage_dir(cache_dir, "heads", config)
    f = d / f"{entry.key}.json"
    if not f.exists():
        raise StaleCacheError(f"missing head box for {entry.path}; re-run `fgp heads`")
    rec = json.loads(f.read_text())
    return headdet.HeadBox(
        box=BBox(rec["x"], rec["y"], rec["w"], rec["h"]), detected=rec["detected"]
    )


def _crop_mask(mask, bbox):
    labels = mask.labels[bbox.y : bbox.y + bbox.h, bbox.x : bbox.x + bbox.w]
    return segment.Mask(labels=labels, hard=np.zeros_like(labels, dtype=bool))


def _body_descriptors(img, bbox, mask, config):
    region = crop(img, bbox)
    return descript.opponent_sift(
        region, config.sift_step, config.sift_patch, _crop_mask(mask, bbox)
    )


def _head_descriptors(img, head, config):
    region = crop(img, head.box)
    gray = to_grayscale(region)
    return descript.dense_sift(gray, config.head_sift_step, config.head_sift_patch)


def _stage_vocab(manifest, config, cache_dir, workers, debug):
    train = manifest.split("train")
    if not train:
        raise ArgumentError("vocabulary training needs a train split")
    d = _prepare_stage_dir(cache_dir, "vocab", config)
    body_path = d / "body.vocb"
    head_path = d / "head.vocb"
    if body_path.exists() and head_path.exists():
        return {"stage": "vocab", "cache_hits": 2, "images": len(train)}
    per_image = max(1, -(-config.vocab_samples // len(train)))  # ceil division

    def work(entry):
        img, bbox = _load_image(entry, config)
        mask = _load_mask(cache_dir, config, entry, bbox)
        head = _load_head(cache_dir, config, entry)
        body = _body_descriptors(img, bbox, mask, config).vectors
        hdesc = _head_descriptors(img, head, config).vectors
        rng = np.random.default_rng(_image_seed(config, entry))
        if len(body) > per_image:
            body = body[np.sort(rng.choice(len(body), per_image, replace=False))]
        if len(hdesc) > per_image:
            hdesc = hdesc[np.sort(rng.choice(len(hdesc), per_image, replace=False))]
        return body, hdesc

    results = _pmap(work, train, workers)
    body_pool = np.concatenate([r[0] for r in results if len(r[0])])
    head_pool = np.concatenate([r[1] for r in results if len(r[1])])
    rng = np.random.default_rng(config.seed)
    if len(body_pool) > config.vocab_samples:
        body_pool = body_pool[np.sort(rng.choice(len(body_pool), config.vocab_samples, replace=False))]
    if len(head_pool) > config.vocab_samples:
        head_pool = head_pool[np.sort(rng.choice(len(head_pool), config.vocab_samples, replace=False))]
    body_vocab = encode.kmeans(
        body_pool, config.vocab_body, seed=config.seed, max_iters=config.vocab_iters
    )
    head_vocab = encode.kmeans(
        head_pool, config.vocab_head, seed=config.seed + 1, max_iters=config.vocab_iters
    )
    encode.save_vocabulary(body_vocab, body_path)
    encode.save_vocabulary(head_vocab, head_path)
    return {
        "stage": "vocab",
        "cache_hits": 0,
        "images": len(train),
        "body_pool": len(body_pool),
        "head_pool": len(head_pool),
    }


def _compute_blocks(entry, config, cache_dir, vocabs, table):
    """All per-image pooled histograms (pre kernel map), cached as .npy."""
    d = Path(cache_dir) / "blocks"
    body_vocab, head_vocab = vocabs
    names = ["sift_body", "color_names"] + [f"lbp_s{s}" for s in config.lbp_scale_list()] + [
        "sift_head"
    ]
    paths = {n: d / f"{entry.key}.{n}.npy" for n in names}
    if all(p.exists() for p in paths.values()):
        return {n: np.load(p) for n, p in paths.items()}, True

    img, bbox = _load_image(entry, config)
    mask = _load_mask(cache_dir, config, entry, bbox)
    head = _load_head(cache_dir, config, entry)
    mcrop = _crop_mask(mask, bbox)
    region = crop(img, bbox)
    gray = to_grayscale(region)
    pyr = encode.PyramidSpec(config.pyramid_levels)
    cn_pyr = encode.PyramidSpec(config.colorname_levels)
    blocks = {}

    body = _body_descriptors(img, bbox, mask, config)
    xs, ys, words = encode.quantize(body.xs, body.ys, body.vectors, body_vocab)
    blocks["sift_body"] = encode.pyramid_pool(xs, ys, words, body_vocab.k, bbox.w, bbox.h, pyr)

    cn = descript.color_name_map(region, table)
    fg_y, fg_x = np.nonzero(mcrop.labels == 1)
    blocks["color_names"] = encode.pyramid_pool(
        fg_x, fg_y, cn[fg_y, fg_x], len(descript.COLOR_NAMES), bbox.w, bbox.h, cn_pyr
    )

    for s in config.lbp_scale_list():
        if gray.shape[0] > 2 * s + 1 and gray.shape[1] > 2 * s + 1:
            codes, border = descript.lbp_codes(gray, s)
            sel = mcrop.labels[border : border + codes.shape[0], border : border + codes.shape[1]] == 1
            yy, xx = np.nonzero(sel)
            blocks[f"lbp_s{s}"] = encode.pyramid_pool(
                xx + border, yy + border, codes[yy, xx], descript.LBP_BINS, bbox.w, bbox.h, pyr
            )
        else:
            blocks[f"lbp_s{s}"] = np.zeros(descript.LBP_BINS * pyr.total_cells)

    hdesc = _head_descriptors(img, head, config)
    xs, ys, words = encode.quantize(hdesc.xs, hdesc.ys, hdesc.vectors, head_vocab)
    blocks["sift_head"] = encode.pyramid_pool(
        xs, ys, words, head_vocab.k, head.box.w, head.box.h, pyr
    )

    for n, p in paths.items():
        np.save(p, blocks[n])
    return blocks, False


def _stage_extract(manifest, config, cache_dir, workers, debug):
    vocab_dir = _require_stage_dir(cache_dir, "vocab", config)
    vocabs = (
        encode.load_vocabulary(vocab_dir / "body.vocb"),
        encode.load_vocabulary(vocab_dir / "head.vocb"),
    )
    table = descript.load_colorname_table(config.colorname_table or None)
    _prepare_stage_dir(cache_dir, "blocks", config)
    d = _prepare_stage_dir(cache_dir, "extract", config)
    spec = config.kernel_spec()
    order = config.block_names()

    def work(entry):
        out = d / f"{entry.key}.feat"
        if out.exists():
            return "hit"
        blocks, _ = _compute_blocks(entry, config, cache_dir, vocabs, table)
        fv = encode.assemble_feature(blocks, spec, order=order)
        encode.save_feature(fv, out)
        return "computed"

    results = _pmap(work, manifest.entries, workers)
    return {
        "stage": "extract",
        "images": len(results),
        "cache_hits": sum(1 for r in results if r == "hit"),
    }


def feature_table_assembly(manifest, split, config, cache_dir):
    """Features of one split as a matrix in manifest order, plus labels.

    Raises if any cached feature file is missing, naming the image."""
    d = _require_stage_dir(cache_dir, "extract", config)
    entries = manifest.split(split)
    rows = []
    layout = None
    for entry in entries:
        f = d / f"{entry.key}.feat"
        if not f.exists():
            raise StaleCacheError(f"missing feature file for {entry.path}; re-run `fgp extract`")
        fv = encode.load_feature(f)
        if layout is None:
            layout = fv.layout
        elif layout != fv.layout:
            raise StaleCacheError(f"feature layout mismatch for {entry.path}")
        rows.append(fv.values)
    X = np.asarray(rows) if rows else np.empty((0, 0))
    labels = [e.class_id for e in entries]
    return X, labels, layout


def _stage_train(manifest, config, cache_dir, workers, debug):
    X, labels, _ = feature_table_assembly(manifest, "train", config, cache_dir)
    if len(X) == 0:
        raise ArgumentError("train split is empty")
    d = _prepare_stage_dir(cache_dir, "train", config)
    out = d / "model.svml"
    if out.exists():
        return {"stage": "train", "cache_hits": 1, "examples": len(X)}
    model = learn.train_ova(
        X,
        labels,
        C=config.svm_c,
        tol=config.svm_tol,
        max_outer_iters=config.svm_max_iters,
        pos_weight=config.svm_pos_weight,
        seed=config.seed,
        fingerprint=config.fingerprint(),
    )
    learn.save_model(model, out)
    return {
        "stage": "train",
        "cache_hits": 0,
        "examples": len(X),
        "classes": len(model.classes),
    }


def _stage_predict(manifest, config, cache_dir, workers, debug):
    train_dir = _require_stage_dir(cache_dir, "train", config)
    model = learn.load_model(train_dir / "model.svml", expected_fingerprint=config.fingerprint())
    d = _prepare_stage_dir(cache_dir, "predict", config)
    out = d / "scores.csv"
    if out.exists():
        return {"stage": "predict", "cache_hits": 1}
    entries = [e for e in manifest.entries if e.split != "train"]
    extract_dir = _require_stage_dir(cache_dir, "extract", config)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "split", "true"] + list(model.classes))
        for entry in entries:
            f = extract_dir / f"{entry.key}.feat"
            if not f.exists():
                raise StaleCacheError(
                    f"missing feature file for {entry.path}; re-run `fgp extract`"
                )
            fv = encode.load_feature(f)
            scores, _ = learn.predict(model, fv.values)
            writer.writerow(
                [entry.path, entry.split, entry.class_id] + [f"{s:.9e}" for s in scores]
            )
    return {"stage": "predict", "cache_hits": 0, "images": len(entries)}


def _read_scores(cache_dir, config, split):
    d = _require_stage_dir(cache_dir, "predict", config)
    f = d / "scores.csv"
    if not f.exists():
        raise StaleCacheError("missing predictions; re-run `fgp predict`")
    with open(f, newline="") as fh:
        reader = csv.reader(fh)
        classes = next(reader)[3:]
        rows, truths = [], []
        for parts in reader:
            if parts[1] != split:
                continue
            truths.append(parts[2])
            rows.append([float(v) for v in parts[3:]])
    return np.asarray(rows), truths, classes


def _stage_evaluate(manifest, config, cache_dir, workers, debug):
    scores, truths, classes = _read_scores(cache_dir, config, "val")
    if len(scores) == 0:
        raise ArgumentError("no val split predictions to evaluate")
    report = evalrep.evaluate(scores, truths, classes=classes)
    d = _prepare_stage_dir(cache_dir, "evaluate", config)
    (d / "summary.txt").write_text(evalrep.summary_lines(report))
    np.savetxt(d / "confusion.csv", report.confusion, fmt="%d", delimiter=",")
    return {
        "stage": "evaluate",
        "map": report.map,
        "recognition_rate": report.recognition_rate,
        "classes": len(report.classes),
    }


def _stage_report(manifest, config, cache_dir, workers, debug):
    from .imgio import encode_ppm

    scores, truths, classes = _read_scores(cache_dir, config, "val")
    report = evalrep.evaluate(scores, truths, classes=classes)
    d = _prepare_stage_dir(cache_dir, "report", config)
    k = min(config.report_k, len(report.classes))
    tables = evalrep.report_tables(report, k)
    (d / "top_classes.csv").write_text(tables["top"])
    (d / "bottom_classes.csv").write_text(tables["bottom"])
    (d / "confused_pairs.csv").write_text(tables["confused"])
    heat = evalrep.render_heatmap(report.confusion, config.heatmap_size)
    (d / "confusion.ppm").write_bytes(encode_ppm(heat))
    return {"stage": "report", "tables": 3, "heatmap": str(d / "confusion.ppm")}


_STAGES = {
    "segment": _stage_segment,
    "heads": _stage_heads,
    "vocab": _stage_vocab,
    "extract": _stage_extract,
    "train": _stage_train,
    "predict": _stage_predict,
    "evaluate": _stage_evaluate,
    "report": _stage_report,
}


def run_stage(stage, manifest, config, cache_dir, workers=1, debug_images=False):
    if stage not in _STAGES:
        raise ArgumentError(f"unknown stage {stage!r}; stages: {', '.join(STAGE_ORDER)}")
    Path(cache_dir).mkdir(parents=True, exist_ok=True)
    return _STAGES[stage](manifest, config, cache_dir, workers, debug_images)


def run_all(manifest, config, cache_dir, workers=1, debug_images=False):
    return [
        run_stage(stage, manifest, config, cache_dir, workers, debug_images)
        for stage in STAGE_ORDER
    ]
