"""Synthetic image generators for the test and acceptance suites.

Two families:
- face scenes: dark eye/nose discs on a light background, with ground-truth
  circle parameters, for exercising the geometric head detector;
- a 5-class "breed" fixture: textured blob renders with class-specific
  color, texture and eye spacing, for the end-to-end pipeline run.
"""

import csv
from pathlib import Path

import numpy as np

from fgp.imgio import BBox, encode_ppm

IMG = 96  # canvas side for all synthetic scenes


def _disc(img, cx, cy, r, color):
    yy, xx = np.mgrid[0 : img.shape[0], 0 : img.shape[1]]
    sel = (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
    img[sel] = color


def render_face(rng, size=IMG):
    """A frontal 'face': two eyes and a nose as dark discs on a light
    background. Returns (image, truth) with truth = dict of circle params."""
    img = np.full((size, size, 3), 200, dtype=np.uint8)
    # mild background variation, far below the gradient threshold
    noise = rng.integers(-6, 7, size=(size, size, 1))
    img = np.clip(img.astype(np.int16) + noise, 0, 255).astype(np.uint8)

    d = int(rng.integers(22, 37))  # eye distance
    r_eye = int(rng.integers(4, 8))
    # keep the nose/eye radius ratio well inside the detector's [0.5, 2.5]
    # band even when detected radii jitter by a pixel
    r_nose = int(rng.integers(r_eye, min(12, int(1.6 * r_eye)) + 1))
    drop = int(round(d * rng.uniform(0.5, 1.2)))
    incline = int(rng.integers(-3, 4))  # vertical eye offset, keeps incline small
    cx = size // 2 + int(rng.integers(-8, 9))
    cy = size // 2 - drop // 2 + int(rng.integers(-6, 7))
    ex_l, ey_l = cx - d // 2, cy - incline // 2
    ex_r, ey_r = cx - d // 2 + d, cy + incline - incline // 2
    nx = cx + int(rng.integers(-2, 3))
    ny = (ey_l + ey_r) // 2 + drop

    dark = (30, 30, 30)
    _disc(img, ex_l, ey_l, r_eye, dark)
    _disc(img, ex_r, ey_r, r_eye, dark)
    _disc(img, nx, ny, r_nose, dark)
    truth = {
        "eye_left": (ex_l, ey_l, r_eye),
        "eye_right": (ex_r, ey_r, r_eye),
        "nose": (nx, ny, r_nose),
    }
    return img, truth


def render_noise(rng, size=IMG, amplitude=20):
    """Uniform noise around mid-gray; gradients stay below the detector's
    magnitude threshold, so it must produce zero circles."""
    base = np.full((size, size, 3), 128, dtype=np.int16)
    noise = rng.integers(-amplitude, amplitude + 1, size=(size, size, 1))
    return np.clip(base + noise, 0, 255).astype(np.uint8)


def render_blank(value=128, size=IMG):
    return np.full((size, size, 3), value, dtype=np.uint8)


# ------------------------------------------------------------ breed fixture
#
# Five synthetic "breeds" on a shared light-gray background:
#   class 0: dark red body, fine horizontal stripes
#   class 1: class 0 with all body colors doubled (a pure gain change)
#   class 2: dark red body, fine *vertical* stripes
#   class 3: blue body, coarse horizontal stripes
#   class 4: green body, fine horizontal stripes
#
# Designed failure modes per feature: normalized gradient features cannot
# tell 0 from 1 (gain-invariant); color histograms cannot tell 0 from 2
# (same palette); rotation-invariant texture cannot tell 0/1/2/4 apart.
# Only the combination separates all five.

BREED_CLASSES = ("c0", "c1", "c2", "c3", "c4")

# Bright eyes: the eye-to-stripe contrast clears the detector's gradient
# threshold while stripe-to-stripe contrast stays below it. Class 1 is an
# exact x2 gain of class 0 everywhere inside the body, eyes included.
_BREEDS = {
    0: dict(a=(100, 30, 30), b=(50, 15, 15), eye=(127, 127, 127), period=8, vertical=False),
    1: dict(a=(200, 60, 60), b=(100, 30, 30), eye=(254, 254, 254), period=8, vertical=False),
    2: dict(a=(100, 30, 30), b=(50, 15, 15), eye=(127, 127, 127), period=8, vertical=True),
    3: dict(a=(50, 60, 170), b=(25, 30, 85), eye=(235, 235, 235), period=20, vertical=False),
    4: dict(a=(40, 160, 40), b=(20, 80, 20), eye=(235, 235, 235), period=8, vertical=False),
}

_EYE_SPACING = {0: 18, 1: 18, 2: 18, 3: 22, 4: 18}


def render_breed(class_idx, rng, size=IMG):
    """One fixture image. Returns (image, bbox)."""
    spec = _BREEDS[class_idx]
    img = np.full((size, size, 3), 210, dtype=np.uint8)
    img = np.clip(
        img.astype(np.int16) + rng.integers(-5, 6, size=(size, size, 1)), 0, 255
    ).astype(np.uint8)

    bw, bh = 64, 64
    bx = (size - bw) // 2 + int(rng.integers(-5, 6))
    by = (size - bh) // 2 + int(rng.integers(-5, 6))

    phase = int(rng.integers(0, spec["period"]))
    yy, xx = np.mgrid[0:bh, 0:bw]
    coord = xx if spec["vertical"] else yy
    stripe = ((coord + phase) // (spec["period"] // 2)) % 2
    body = np.where(stripe[:, :, None] == 0, spec["a"], spec["b"]).astype(np.int16)
    body += rng.integers(-6, 7, size=(bh, bw, 1))
    img[by : by + bh, bx : bx + bw] = np.clip(body, 0, 255).astype(np.uint8)

    # face: two eyes and a nose in the upper body half
    d = _EYE_SPACING[class_idx]
    fcx = bx + bw // 2 + int(rng.integers(-1, 2))
    fcy = by + bh // 3 + int(rng.integers(-1, 2))
    r_eye = 4
    drop = int(round(0.8 * d))
    _disc(img, fcx - d // 2, fcy, r_eye, spec["eye"])
    _disc(img, fcx - d // 2 + d, fcy, r_eye, spec["eye"])
    _disc(img, fcx, fcy + drop, r_eye + 1, spec["eye"])

    return img, BBox(bx, by, bw, bh)


def write_breed_fixture(root, n_train=25, n_val=10, seed=7):
    """Render the 5-class fixture and write images plus a manifest CSV.

    Returns the manifest path. Deterministic for a fixed seed."""
    root = Path(root)
    img_dir = root / "images"
    img_dir.mkdir(parents=True, exist_ok=True)
    manifest = root / "manifest.csv"
    rng = np.random.default_rng(seed)
    with open(manifest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "class", "split", "x", "y", "w", "h"])
        for split, count in (("train", n_train), ("val", n_val)):
            for idx, cls in enumerate(BREED_CLASSES):
                for i in range(count):
                    img, bbox = render_breed(idx, rng)
                    name = f"{cls}_{split}_{i:03d}.ppm"
                    (img_dir / name).write_bytes(encode_ppm(img))
                    writer.writerow(
                        [f"images/{name}", cls, split, bbox.x, bbox.y, bbox.w, bbox.h]
                    )
    return manifest
