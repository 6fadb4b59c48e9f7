#!/usr/bin/env python3
"""Generate the packaged color-name lookup table (data/colornames.cn11).

Each 8x8x8-quantized RGB cell (cell-center color) is assigned to the nearest
anchor color in CIELAB. Format: magic "CN11", then 32768 bin indices,
r-major then g then b.
"""

import pathlib

import numpy as np

# One anchor per color name, order fixed by the histogram bin order.
ANCHORS = {
    "black": (0, 0, 0),
    "blue": (0, 0, 255),
    "brown": (125, 70, 30),
    "grey": (128, 128, 128),
    "green": (0, 128, 0),
    "orange": (255, 165, 0),
    "pink": (255, 170, 185),
    "purple": (128, 0, 128),
    "red": (220, 30, 30),
    "white": (255, 255, 255),
    "yellow": (255, 255, 0),
}


def srgb_to_lab(rgb):
    """rgb in [0, 1], shape (..., 3) -> CIELAB (D65)."""
    rgb = np.asarray(rgb, dtype=np.float64)
    lin = np.where(rgb <= 0.04045, rgb / 12.92, ((rgb + 0.055) / 1.055) ** 2.4)
    m = np.array(
        [
            [0.4124564, 0.3575761, 0.1804375],
            [0.2126729, 0.7151522, 0.0721750],
            [0.0193339, 0.1191920, 0.9503041],
        ]
    )
    xyz = lin @ m.T
    white = np.array([0.95047, 1.0, 1.08883])
    t = xyz / white
    f = np.where(t > (6 / 29) ** 3, np.cbrt(t), t / (3 * (6 / 29) ** 2) + 4 / 29)
    L = 116 * f[..., 1] - 16
    a = 500 * (f[..., 0] - f[..., 1])
    b = 200 * (f[..., 1] - f[..., 2])
    return np.stack([L, a, b], axis=-1)


def build_table():
    q = (np.arange(32) * 8 + 4) / 255.0  # cell-center value per channel
    r, g, b = np.meshgrid(q, q, q, indexing="ij")
    cells = np.stack([r, g, b], axis=-1).reshape(-1, 3)
    lab = srgb_to_lab(cells)
    anchors_lab = srgb_to_lab(np.array(list(ANCHORS.values())) / 255.0)
    d = ((lab[:, None, :] - anchors_lab[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d, axis=1).astype(np.uint8)


def main():
    out = pathlib.Path(__file__).resolve().parent.parent / "src" / "fgp" / "data"
    out.mkdir(parents=True, exist_ok=True)
    table = build_table()
    (out / "colornames.cn11").write_bytes(b"CN11" + table.tobytes())
    print(f"wrote {out / 'colornames.cn11'} ({4 + table.size} bytes)")


if __name__ == "__main__":
    main()
