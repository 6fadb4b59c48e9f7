"""Acceptance suite: one test per release criterion.

Each test prints a single ``criterion N: PASS|FAIL`` line (visible with
``pytest -v -s`` or on failure) and asserts the stated tolerance.  Criterion 1
is expected to fail: the order-1 kernel map cannot meet the 0.05 uniform
bound at period 0.65 (best achievable with this construction is ~0.051 at a
tuned period; ~0.056 at 0.65).  The failure is kept honest rather than
loosening the tolerance.
"""

import hashlib
import time
from pathlib import Path

import numpy as np
import pytest

from fgp import descript, encode, evalrep, headdet, learn, pipeline, segment
from fgp.encode import KernelMapSpec
from fgp.maxflow import FlowNetwork, max_flow
from synth import render_blank, render_face, render_noise, write_breed_fixture

from test_learn import cvxpy_oracle
from test_maxflow import brute_force_min_cut


def _report(n, ok, detail, elapsed, limit):
    status = "PASS" if ok and elapsed < limit else "FAIL"
    print(f"criterion {n}: {status} ({detail}; {elapsed:.2f}s < {limit}s)")
    assert elapsed < limit, f"criterion {n} exceeded time budget: {elapsed:.2f}s"
    assert ok, f"criterion {n} failed: {detail}"


DESK = dict(
    vocab_body=64,
    vocab_head=32,
    vocab_samples=20000,
    vocab_iters=10,
    svm_max_iters=400,
)


def test_criterion_1_kernel_map_fidelity():
    t0 = time.perf_counter()
    spec = KernelMapSpec(order=1, period=0.65, gamma=0.5)
    grid = np.linspace(0.01, 1.0, 50)
    feats = np.stack([encode.hkm_expand(np.array([v]), spec) for v in grid])
    approx = feats @ feats.T
    X, Y = np.meshgrid(grid, grid, indexing="ij")
    exact = (X * Y) ** 0.25 / np.cosh((np.log(Y) - np.log(X)) / 2.0)
    max_err = float(np.abs(approx - exact).max())

    rng = np.random.default_rng(0)
    x = rng.uniform(0.01, 1, 100)
    y = rng.uniform(0.01, 1, 100)
    ident = float(
        np.abs(2 * x * y / (x + y) - np.sqrt(x * y) / np.cosh((np.log(y) - np.log(x)) / 2)).max()
    )
    elapsed = time.perf_counter() - t0
    ok = ident <= 1e-12 and max_err <= 0.05
    _report(1, ok, f"max kernel error {max_err:.4f} (bound 0.05), identity {ident:.1e}", elapsed, 1.0)


def test_criterion_2_maxflow_exactness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    mismatches = 0
    for _ in range(200):
        inner = int(rng.integers(0, 13))
        n = inner + 2
        s, t = 0, n - 1
        edges = []
        for u in range(n):
            for v in range(n):
                if u != v and rng.random() < 0.35:
                    edges.append((u, v, int(rng.integers(0, 21))))
        net = FlowNetwork(n, s, t)
        for u, v, c in edges:
            net.add_edge(u, v, c)
        flow, _ = max_flow(net)
        if flow != brute_force_min_cut(n, s, t, edges):
            mismatches += 1
    elapsed = time.perf_counter() - t0
    _report(2, mismatches == 0, f"{200 - mismatches}/200 networks exact", elapsed, 10.0)


def test_criterion_3_grabcut_oracle():
    t0 = time.perf_counter()
    img = np.zeros((100, 100, 3), dtype=np.uint8)
    img[:, :] = (30, 60, 200)
    img[30:70, 30:70] = (200, 40, 30)
    rng = np.random.default_rng(3)
    img = np.clip(img.astype(int) + rng.integers(-6, 7, img.shape), 0, 255).astype(np.uint8)
    from fgp.imgio import BBox

    bbox = BBox(25, 25, 50, 50)
    mask = segment.grabcut(img, bbox, iterations=5, K=5, lam=50.0, seed=0)
    truth = np.zeros((100, 100), dtype=bool)
    truth[30:70, 30:70] = True
    pred = mask.labels.astype(bool)
    iou = (pred & truth).sum() / (pred | truth).sum()
    energies = mask.energies
    monotone = all(b <= a + 1e-6 for a, b in zip(energies, energies[1:]))
    # bbox complement must be all background
    comp = np.ones((100, 100), dtype=bool)
    comp[25:75, 25:75] = False
    comp_bg = not pred[comp].any()
    elapsed = time.perf_counter() - t0
    ok = iou >= 0.99 and monotone and comp_bg
    _report(3, ok, f"IoU {iou:.4f}, monotone={monotone}, complement all-BG={comp_bg}", elapsed, 5.0)


def test_criterion_4_head_detector_suite():
    t0 = time.perf_counter()
    from fgp.imgio import to_grayscale

    detected = 0
    for trial in range(100):
        rng = np.random.default_rng(1000 + trial)
        img, truth = render_face(rng)
        circles = headdet.hough_circles(to_grayscale(img), 2, 14, 260.0, 0.5, 8.0)
        face = headdet.find_face(circles, img.shape[1], img.shape[0])
        if face is None:
            continue
        errs = []
        for part, circ in (("eye_left", face.eye_left), ("eye_right", face.eye_right), ("nose", face.nose)):
            tx, ty, _ = truth[part]
            errs.append(np.hypot(circ.cx - tx, circ.cy - ty))
        if max(errs) <= 3.0:
            detected += 1
    false_pos = 0
    for trial in range(100):
        rng = np.random.default_rng(5000 + trial)
        img = render_noise(rng) if trial % 2 == 0 else render_blank(int(rng.integers(0, 256)))
        false_pos += len(headdet.hough_circles(to_grayscale(img), 2, 14, 260.0, 0.5, 8.0))
    elapsed = time.perf_counter() - t0
    ok = detected >= 95 and false_pos == 0
    _report(4, ok, f"{detected}/100 faces within 3 px, {false_pos} detections on noise/blank", elapsed, 30.0)


def test_criterion_5_svm_vs_qp_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(4, 11))
        d = int(rng.integers(1, 4))
        X = rng.normal(size=(n, d))
        y = np.where(rng.random(n) > 0.5, 1.0, -1.0)
        if np.all(y > 0) or np.all(y < 0):
            y[0] = -y[0]
        C = float(rng.choice([0.1, 1.0, 10.0]))
        w, b = learn.train_binary(X, y, C, tol=1e-8, max_outer_iters=20000)
        ours = learn.primal_objective(X, y, w, b, C)
        oracle = cvxpy_oracle(X, y, C)
        worst = max(worst, (ours - oracle) / max(abs(oracle), 1e-12))
    elapsed = time.perf_counter() - t0
    _report(5, worst <= 1e-4, f"worst relative objective gap {worst:.2e}", elapsed, 30.0)


def test_criterion_6_ap_fixtures_and_golden_report():
    t0 = time.perf_counter()
    ap1 = evalrep.average_precision([3, 2, 1, 0], [1, 1, 0, 0])
    ap2 = evalrep.average_precision([2, 1], [0, 1])
    ap3 = evalrep.average_precision([4, 3, 2, 1], [1, 0, 1, 0])
    ok_ap = (
        abs(ap1 - 1.0) <= 1e-9
        and abs(ap2 - 0.5) <= 1e-9
        and abs(ap3 - (1 + 2 / 3) / 2) <= 1e-9
    )
    conf = np.array([[4, 1, 0], [0, 3, 2], [1, 0, 5]])
    digest = hashlib.sha256(evalrep.render_heatmap(conf, 9).tobytes()).hexdigest()
    ok_golden = digest == "35a92556033da24e15b73107675ad899a2c7d3ccb6f3985fd701921cf241da17"
    elapsed = time.perf_counter() - t0
    _report(6, ok_ap and ok_golden, f"AP fixtures ok={ok_ap}, golden bytes ok={ok_golden}", elapsed, 5.0)


def test_criterion_7_descriptor_invariants():
    t0 = time.perf_counter()
    sift = descript.dense_sift(np.full((32, 32), 77.0), step=8, patch=16)
    sift_zero = np.all(sift.vectors == 0)

    rng = np.random.default_rng(17)
    img = rng.uniform(0, 255, (20, 20))
    lbp_inv = np.allclose(
        descript.lbp_hist(img, scale=1), descript.lbp_hist(np.rot90(img), scale=1), atol=0
    )

    color = rng.integers(0, 256, (12, 12, 3), dtype=np.uint8)
    cn_sum = abs(descript.color_names(color).sum() - 1.0) <= 1e-9

    cfg = pipeline.PipelineConfig()
    cells3 = encode.PyramidSpec(cfg.pyramid_levels).total_cells
    cells5 = encode.PyramidSpec(cfg.colorname_levels).total_cells
    base = (
        cfg.vocab_body * cells3
        + 11 * cells5
        + len(cfg.lbp_scale_list()) * 10 * cells3
        + cfg.vocab_head * cells3
    )
    length = base * (2 * cfg.kernel_order + 1)
    ok_len = base == 35881 and length == 107643
    elapsed = time.perf_counter() - t0
    ok = sift_zero and lbp_inv and cn_sum and ok_len
    _report(
        7,
        ok,
        f"constant SIFT zero={sift_zero}, LBP rot-inv={lbp_inv}, color sum 1={cn_sum}, length={length}",
        elapsed,
        10.0,
    )


@pytest.fixture(scope="module")
def breed_fixture(tmp_path_factory):
    root = tmp_path_factory.mktemp("breeds")
    manifest_path = write_breed_fixture(root, n_train=25, n_val=10, seed=7)
    return root, manifest_path


def _run_cli(manifest, cfg_path, cache, workers=2):
    from fgp.cli import main

    rc = main(
        [
            "all",
            "--manifest", str(manifest),
            "--config", str(cfg_path),
            "--cache", str(cache),
            "--workers", str(workers),
        ]
    )
    assert rc == 0
    return float(
        next(
            line.split("=")[1]
            for line in (Path(cache) / "evaluate" / "summary.txt").read_text().splitlines()
            if line.startswith("map=")
        )
    )


def test_criterion_8_end_to_end_desk_run(breed_fixture):
    root, manifest_path = breed_fixture
    cache = root / "cache8"
    cfg_path = root / "desk.cfg"
    pipeline.PipelineConfig(**DESK).save(cfg_path)

    t0 = time.perf_counter()
    combined_map = _run_cli(manifest_path, cfg_path, cache, workers=2)
    elapsed = time.perf_counter() - t0

    singles = {}
    for feat in ("sift_body", "color_names", "lbp", "sift_head"):
        single_cfg = root / f"{feat}.cfg"
        pipeline.PipelineConfig(**DESK, features=feat).save(single_cfg)
        singles[feat] = _run_cli(manifest_path, single_cfg, cache, workers=2)

    ok = combined_map >= 0.6 and all(combined_map > v for v in singles.values())
    detail = "combined mAP %.4f vs singles %s" % (
        combined_map,
        {k: round(v, 4) for k, v in singles.items()},
    )
    _report(8, ok, detail, elapsed, 600.0)


def test_criterion_9_determinism_across_workers(breed_fixture):
    root, manifest_path = breed_fixture
    cfg_path = root / "desk9.cfg"
    pipeline.PipelineConfig(**DESK).save(cfg_path)
    t0 = time.perf_counter()
    digests = []
    for run, workers in (("a", 1), ("b", 4)):
        cache = root / f"cache9{run}"
        _run_cli(manifest_path, cfg_path, cache, workers=workers)
        model = hashlib.sha256((cache / "train" / "model.svml").read_bytes()).hexdigest()
        summary = hashlib.sha256((cache / "evaluate" / "summary.txt").read_bytes()).hexdigest()
        digests.append((model, summary))
    elapsed = time.perf_counter() - t0
    ok = digests[0] == digests[1]
    _report(9, ok, f"model+summary digests equal across workers 1 vs 4: {ok}", elapsed, 1200.0)
