"""Local descriptors: dense SIFT (gray and opponent), color-name histograms
and multi-scale rotation-invariant LBP. All extractors are mask-aware."""

import importlib.resources
import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, ConfigError
from .imgio import to_opponent

CN_MAGIC = b"CN11"
COLOR_NAMES = (
    "black",
    "blue",
    "brown",
    "grey",
    "green",
    "orange",
    "pink",
    "purple",
    "red",
    "white",
    "yellow",
)

SIFT_SPATIAL_BINS = 4
SIFT_ORI_BINS = 8
SIFT_CLAMP = 0.2

LBP_P = 8
LBP_BINS = 10  # riu2 for P=8: classes 0..8 plus non-uniform


@dataclass
class DescriptorSet:
    dim: int
    xs: np.ndarray  # patch center x
    ys: np.ndarray  # patch center y
    vectors: np.ndarray  # (n, dim)

    def __len__(self):
        return len(self.vectors)


def _sift_weight_tensor(patch):
    """(16, patch, patch) tensor of spatial-bin bilinear weights times the
    Gaussian window (sigma = patch / 2)."""
    sigma = patch / 2.0
    center = (patch - 1) / 2.0
    cell = patch / SIFT_SPATIAL_BINS
    coords = np.arange(patch)
    gauss = np.exp(-((coords - center) ** 2) / (2.0 * sigma**2))
    g2 = gauss[:, None] * gauss[None, :]
    bc = (coords + 0.5) / cell - 0.5  # spatial bin coordinate per pixel
    lo = np.floor(bc).astype(int)
    frac = bc - lo
    wt = np.zeros((SIFT_SPATIAL_BINS * SIFT_SPATIAL_BINS, patch, patch))
    for yi in range(patch):
        for xi in range(patch):
            for by, wy in ((lo[yi], 1 - frac[yi]), (lo[yi] + 1, frac[yi])):
                if not 0 <= by < SIFT_SPATIAL_BINS or wy == 0:
                    continue
                for bx, wx in ((lo[xi], 1 - frac[xi]), (lo[xi] + 1, frac[xi])):
                    if not 0 <= bx < SIFT_SPATIAL_BINS or wx == 0:
                        continue
                    wt[by * SIFT_SPATIAL_BINS + bx, yi, xi] = wy * wx * g2[yi, xi]
    return wt


_WEIGHT_CACHE = {}


def dense_sift(plane, step, patch, mask=None):
    """Densely sampled 128-d SIFT descriptors on a regular grid.

    Per patch: 4x4 spatial x 8 orientation bins of gradient magnitude with
    bilinear interpolation, Gaussian weighted, L2-normalized with 0.2
    clamping. All-zero patches stay all-zero. With a mask, patches whose
    center is background are dropped.
    """
    if patch < 8 or patch % 4 != 0:
        raise ArgumentError(f"patch must be >= 8 and divisible by 4, got {patch}")
    if step < 1:
        raise ArgumentError(f"step must be >= 1, got {step}")
    g = np.asarray(plane, dtype=np.float64)
    h, w = g.shape
    dim = SIFT_SPATIAL_BINS * SIFT_SPATIAL_BINS * SIFT_ORI_BINS
    if h < patch or w < patch:
        return DescriptorSet(dim=dim, xs=np.empty(0, int), ys=np.empty(0, int),
                             vectors=np.empty((0, dim)))
    gy, gx = np.gradient(g)
    mag = np.hypot(gx, gy)
    ang = np.mod(np.arctan2(gy, gx), 2.0 * np.pi)
    t = ang * (SIFT_ORI_BINS / (2.0 * np.pi))
    o0 = np.floor(t).astype(int) % SIFT_ORI_BINS
    o1 = (o0 + 1) % SIFT_ORI_BINS
    w1 = t - np.floor(t)
    ori = np.zeros((SIFT_ORI_BINS, h, w))
    idx = np.indices((h, w))
    ori[o0, idx[0], idx[1]] += mag * (1.0 - w1)
    ori[o1, idx[0], idx[1]] += mag * w1

    if patch not in _WEIGHT_CACHE:
        _WEIGHT_CACHE[patch] = _sift_weight_tensor(patch)
    wt = _WEIGHT_CACHE[patch]

    xs, ys, vecs = [], [], []
    for y0 in range(0, h - patch + 1, step):
        for x0 in range(0, w - patch + 1, step):
            cx = x0 + patch // 2
            cy = y0 + patch // 2
            if mask is not None and mask.labels[cy, cx] == 0:
                continue
            block = ori[:, y0 : y0 + patch, x0 : x0 + patch]
            # layout: spatial bins row-major, orientations within each bin
            desc = np.tensordot(wt, block, axes=([1, 2], [1, 2])).reshape(-1)
            norm = np.linalg.norm(desc)
            if norm > 0:
                desc = np.minimum(desc / norm, SIFT_CLAMP)
                n2 = np.linalg.norm(desc)
                if n2 > 0:
                    desc = desc / n2
            xs.append(cx)
            ys.append(cy)
            vecs.append(desc)
    return DescriptorSet(
        dim=dim,
        xs=np.asarray(xs, dtype=int),
        ys=np.asarray(ys, dtype=int),
        vectors=np.asarray(vecs) if vecs else np.empty((0, dim)),
    )


def opponent_sift(img, step, patch, mask=None):
    """dense_sift on each opponent plane at shared locations; dim 384."""
    o1, o2, o3 = to_opponent(img)
    sets = [dense_sift(p, step, patch, mask) for p in (o1, o2, o3)]
    vecs = (
        np.concatenate([s.vectors for s in sets], axis=1)
        if len(sets[0])
        else np.empty((0, 3 * sets[0].dim))
    )
    return DescriptorSet(dim=3 * sets[0].dim, xs=sets[0].xs, ys=sets[0].ys, vectors=vecs)


_CN_TABLE = None


def load_colorname_table(path=None):
    """32x32x32 RGB -> color-name-bin lookup table (binary, magic CN11)."""
    if path is None:
        data = (importlib.resources.files("fgp") / "data" / "colornames.cn11").read_bytes()
        src = "packaged colornames.cn11"
    else:
        try:
            with open(path, "rb") as f:
                data = f.read()
        except OSError as e:
            raise ConfigError(f"cannot read color-name table {path}: {e}") from e
        src = str(path)
    if len(data) != 4 + 32768 or data[:4] != CN_MAGIC:
        raise ConfigError(f"invalid color-name table {src}: bad magic or size {len(data)}")
    table = np.frombuffer(data, dtype=np.uint8, offset=4)
    if table.max() >= len(COLOR_NAMES):
        raise ConfigError(f"invalid color-name table {src}: bin index out of range")
    return table


def _default_table():
    global _CN_TABLE
    if _CN_TABLE is None:
        _CN_TABLE = load_colorname_table()
    return _CN_TABLE


def color_name_map(img, table=None):
    """Per-pixel color-name bin indices, shape (H, W) uint8."""
    if table is None:
        table = _default_table()
    img = np.asarray(img)
    r, g, b = img[:, :, 0] >> 3, img[:, :, 1] >> 3, img[:, :, 2] >> 3
    return table[(r.astype(np.int64) * 32 + g) * 32 + b]


def color_names(img, mask=None, table=None):
    """11-bin L1-normalized color-name histogram over counted pixels."""
    bins = color_name_map(img, table)
    if mask is not None:
        bins = bins[mask.labels == 1]
    hist = np.bincount(bins.reshape(-1), minlength=len(COLOR_NAMES)).astype(np.float64)
    total = hist.sum()
    if total > 0:
        hist /= total
    return hist


_RIU2_LUT = None


def _riu2_lut():
    """Map 8-bit LBP code -> riu2 class (popcount if <= 2 transitions else 9)."""
    global _RIU2_LUT
    if _RIU2_LUT is None:
        lut = np.empty(256, dtype=np.uint8)
        for code in range(256):
            bits = [(code >> i) & 1 for i in range(LBP_P)]
            transitions = sum(bits[i] != bits[(i + 1) % LBP_P] for i in range(LBP_P))
            lut[code] = sum(bits) if transitions <= 2 else LBP_BINS - 1
        _RIU2_LUT = lut
    return _RIU2_LUT


def lbp_codes(gray, scale):
    """riu2 LBP class per interior pixel.

    Returns (classes, border) where classes has the shape of gray and only
    pixels at distance >= border from the edge are valid. Neighbors lie on a
    radius-`scale` circle (P=8), bilinearly sampled; bit = 1 iff
    neighbor >= center.
    """
    if scale not in (1, 2, 4):
        raise ArgumentError(f"LBP scale must be 1, 2 or 4, got {scale}")
    g = np.asarray(gray, dtype=np.float64)
    h, w = g.shape
    border = int(math.ceil(scale))
    if h <= 2 * scale + 1 or w <= 2 * scale + 1:
        raise ArgumentError(f"image {g.shape} too small for LBP scale {scale}")
    ih, iw = h - 2 * border, w - 2 * border
    center = g[border : border + ih, border : border + iw]
    code = np.zeros((ih, iw), dtype=np.uint8)
    for p in range(LBP_P):
        angle = 2.0 * np.pi * p / LBP_P
        # snap away floating-point dust (cos(pi/2) ~ 6e-17) so exact
        # integer offsets produce genuinely zero-weight corners
        dx = round(scale * np.cos(angle), 12)
        dy = round(-scale * np.sin(angle), 12)
        iy, ix = math.floor(dy), math.floor(dx)
        fy, fx = dy - iy, dx - ix
        y0 = border + iy
        x0 = border + ix

        def block(oy, ox):
            return g[y0 + oy : y0 + oy + ih, x0 + ox : x0 + ox + iw]

        # skip zero-weight corners so exact integer offsets stay in bounds
        nb = np.zeros((ih, iw))
        for oy, wy in ((0, 1 - fy), (1, fy)):
            if wy == 0:
                continue
            for ox, wx in ((0, 1 - fx), (1, fx)):
                if wx == 0:
                    continue
                nb += wy * wx * block(oy, ox)
        # tolerance absorbs bilinear weight-sum rounding (~1 ulp at 255),
        # so a constant image yields all-ones codes as the tie rule demands
        code |= ((nb >= center - 1e-6).astype(np.uint8)) << p
    return _riu2_lut()[code], border


def lbp_hist(gray, scale, mask=None):
    """10-bin riu2 histogram over interior pixels, L1-normalized."""
    classes, border = lbp_codes(gray, scale)
    if mask is not None:
        sel = mask.labels[border : border + classes.shape[0], border : border + classes.shape[1]]
        vals = classes[sel == 1]
    else:
        vals = classes.reshape(-1)
    hist = np.bincount(vals, minlength=LBP_BINS).astype(np.float64)
    total = hist.sum()
    if total > 0:
        hist /= total
    return hist
