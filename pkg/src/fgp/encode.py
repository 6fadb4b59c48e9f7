"""Fixed-length image encoding: k-means vocabularies, BoW quantization,
spatial-pyramid pooling, homogeneous kernel map expansion, concatenation."""

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, FormatError

VOCAB_MAGIC = b"VOCB"
FEAT_MAGIC = b"FEAT"

# Fixed concatenation order of the per-image feature blocks.
BLOCK_ORDER = ("sift_body", "color_names", "lbp_s1", "lbp_s2", "lbp_s4", "sift_head")


@dataclass
class Vocabulary:
    k: int
    dim: int
    centers: np.ndarray  # (k, dim) float64
    seed: int


@dataclass(frozen=True)
class PyramidSpec:
    """levels L; level l is a 2^l x 2^l grid of cells, l = 0..L-1."""

    levels: int

    @property
    def total_cells(self):
        return sum(4**l for l in range(self.levels))


@dataclass(frozen=True)
class KernelMapSpec:
    """order n, sampling period, homogeneity degree gamma."""

    order: int = 1
    period: float = 0.65
    gamma: float = 0.5

    def __post_init__(self):
        if self.order < 0 or self.period <= 0:
            raise ArgumentError(f"bad kernel map spec: {self}")

    @property
    def expansion(self):
        return 2 * self.order + 1


@dataclass
class FeatureVector:
    layout: list  # ordered (block name, offset, length)
    values: np.ndarray


def _sq_dists(points, centers):
    # ||x||^2 + ||c||^2 - 2 x.c; clip tiny negatives from cancellation
    d = (
        np.sum(points**2, axis=1)[:, None]
        + np.sum(centers**2, axis=1)[None, :]
        - 2.0 * points @ centers.T
    )
    return np.maximum(d, 0.0)


def _kmeans_pp_init(points, k, rng):
    n = len(points)
    centers = np.empty((k, points.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centers[0] = points[first]
    d2 = _sq_dists(points, centers[:1])[:, 0]
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            target = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(d2), target))
            idx = min(idx, n - 1)
        centers[j] = points[idx]
        d2 = np.minimum(d2, _sq_dists(points, centers[j : j + 1])[:, 0])
    return centers


def kmeans(samples, k, seed, max_iters=100):
    """Lloyd k-means with k-means++ seeding.

    Runs to assignment fixpoint or max_iters; empty clusters are re-seeded
    to the point farthest from its assigned center. Deterministic for a
    fixed seed.
    """
    points = np.ascontiguousarray(samples, dtype=np.float64)
    if points.ndim != 2:
        raise ArgumentError("samples must be a (n, dim) array")
    n = len(points)
    if k < 1 or n < k:
        raise ArgumentError(f"pool of {n} samples cannot support k={k}")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp_init(points, k, rng)
    assign = None
    for _ in range(max_iters):
        d = _sq_dists(points, centers)
        new_assign = np.argmin(d, axis=1)
        # Re-seed empty clusters to the globally farthest point.
        dmin = d[np.arange(n), new_assign]
        for j in range(k):
            if not np.any(new_assign == j):
                far = int(np.argmax(dmin))
                new_assign[far] = j
                dmin[far] = 0.0
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        sums = np.zeros((k, points.shape[1]), dtype=np.float64)
        np.add.at(sums, assign, points)
        counts = np.bincount(assign, minlength=k).astype(np.float64)
        centers = sums / counts[:, None]
    return Vocabulary(k=k, dim=points.shape[1], centers=centers, seed=int(seed))


def distortion(points, vocab):
    d = _sq_dists(np.asarray(points, dtype=np.float64), vocab.centers)
    return float(d.min(axis=1).sum())


def quantize(xs, ys, vectors, vocab):
    """Hard-assign descriptors to nearest centers; ties take the lowest id.

    Returns (xs, ys, word_ids).
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    if len(vectors) == 0:
        return np.asarray(xs), np.asarray(ys), np.empty(0, dtype=np.int64)
    if vectors.shape[1] != vocab.dim:
        raise ArgumentError(f"descriptor dim {vectors.shape[1]} != vocabulary dim {vocab.dim}")
    words = np.argmin(_sq_dists(vectors, vocab.centers), axis=1)
    return np.asarray(xs), np.asarray(ys), words


def pyramid_pool(xs, ys, bin_ids, n_bins, region_w, region_h, spec):
    """Spatial-pyramid histogram, L1-normalized over the whole vector.

    Output layout: levels, then cells (row-major), then bins.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    bin_ids = np.asarray(bin_ids, dtype=np.int64)
    if np.any(xs < 0) or np.any(ys < 0) or np.any(xs > region_w) or np.any(ys > region_h):
        raise ArgumentError("item outside pooling region")
    if len(bin_ids) and (bin_ids.min() < 0 or bin_ids.max() >= n_bins):
        raise ArgumentError("bin id out of range")
    parts = []
    for l in range(spec.levels):
        g = 2**l
        cx = np.minimum((xs * g / region_w).astype(np.int64), g - 1)
        cy = np.minimum((ys * g / region_h).astype(np.int64), g - 1)
        flat = (cy * g + cx) * n_bins + bin_ids
        parts.append(np.bincount(flat, minlength=g * g * n_bins).astype(np.float64))
    out = np.concatenate(parts)
    total = out.sum()
    if total > 0:
        out /= total
    return out


def hkm_expand(v, spec):
    """Homogeneous kernel map expansion approximating the chi-square kernel.

    Per nonnegative scalar x, emits 2n+1 values built from the spectrum
    kappa(w) = sech(pi w) sampled at multiples of the period, with
    amplitude x**(gamma/2); x = 0 emits zeros.
    """
    v = np.asarray(v, dtype=np.float64)
    if np.any(v < 0):
        raise ArgumentError("kernel map input must be nonnegative")
    n, L = spec.order, spec.period
    out = np.zeros((v.size, 2 * n + 1), dtype=np.float64)
    pos = v.reshape(-1) > 0
    x = v.reshape(-1)[pos]
    a = x ** (spec.gamma / 2.0)
    logx = np.log(x)
    out[pos, 0] = a * np.sqrt(L)  # kappa(0) = 1
    for j in range(1, n + 1):
        kj = 1.0 / np.cosh(np.pi * j * L)
        amp = a * np.sqrt(2.0 * L * kj)
        out[pos, 2 * j - 1] = amp * np.cos(j * L * logx)
        out[pos, 2 * j] = amp * np.sin(j * L * logx)
    return out.reshape(-1)


def chi2_kernel_target(x, y, gamma=0.5):
    """Closed form of the kernel the map approximates."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return (x * y) ** (gamma / 2.0) / np.cosh((np.log(y) - np.log(x)) / 2.0)


def assemble_feature(blocks, kernel_spec, order=BLOCK_ORDER):
    """Expand each named block through the kernel map and concatenate."""
    layout = []
    parts = []
    offset = 0
    for name in order:
        if name not in blocks:
            raise ArgumentError(f"missing feature block: {name}")
        expanded = hkm_expand(np.asarray(blocks[name], dtype=np.float64), kernel_spec)
        layout.append((name, offset, expanded.size))
        parts.append(expanded)
        offset += expanded.size
    return FeatureVector(layout=layout, values=np.concatenate(parts))


def save_vocabulary(vocab, path):
    with open(path, "wb") as f:
        f.write(VOCAB_MAGIC)
        f.write(struct.pack("<II", vocab.k, vocab.dim))
        f.write(vocab.centers.astype("<f4").tobytes())
        f.write(struct.pack("<q", vocab.seed))


def load_vocabulary(path):
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 12 or data[:4] != VOCAB_MAGIC:
        raise FormatError(f"not a vocabulary file: {path}")
    k, dim = struct.unpack_from("<II", data, 4)
    need = 12 + 4 * k * dim + 8
    if len(data) != need:
        raise FormatError(f"vocabulary file {path} truncated: {len(data)} != {need}")
    centers = np.frombuffer(data, dtype="<f4", count=k * dim, offset=12)
    (seed,) = struct.unpack_from("<q", data, 12 + 4 * k * dim)
    return Vocabulary(k=k, dim=dim, centers=centers.reshape(k, dim).astype(np.float64), seed=seed)


def save_feature(fv, path):
    with open(path, "wb") as f:
        f.write(FEAT_MAGIC)
        f.write(struct.pack("<I", len(fv.layout)))
        for name, offset, length in fv.layout:
            nb = name.encode()
            f.write(struct.pack("<H", len(nb)) + nb + struct.pack("<QQ", offset, length))
        f.write(fv.values.astype("<f4").tobytes())


def load_feature(path):
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 8 or data[:4] != FEAT_MAGIC:
        raise FormatError(f"not a feature file: {path}")
    (nblocks,) = struct.unpack_from("<I", data, 4)
    pos = 8
    layout = []
    try:
        for _ in range(nblocks):
            (nlen,) = struct.unpack_from("<H", data, pos)
            pos += 2
            name = data[pos : pos + nlen].decode()
            pos += nlen
            offset, length = struct.unpack_from("<QQ", data, pos)
            pos += 16
            layout.append((name, offset, length))
    except struct.error as e:
        raise FormatError(f"feature file {path} truncated: {e}") from e
    total = sum(length for _, _, length in layout)
    values = np.frombuffer(data, dtype="<f4", offset=pos)
    if values.size != total:
        raise FormatError(f"feature file {path}: {values.size} values, layout wants {total}")
    return FeatureVector(layout=layout, values=values.astype(np.float64))
