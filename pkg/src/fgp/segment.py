"""GrabCut foreground extraction seeded by the provided bounding box.

Alternates GMM color model estimation with exact min-cuts on the 8-connected
pixel grid; pixels outside the seed box are hard background.
"""

from dataclasses import dataclass, field

import numpy as np

from .encode import kmeans
from .errors import ArgumentError, NoBackgroundError
from .maxflow import FlowNetwork, max_flow

COV_EPS = 0.01  # added to covariance diagonals against flat regions
CAP_MAX = 1e8

FG = 1
BG = 0


@dataclass
class Gmm:
    weights: np.ndarray  # (K,)
    means: np.ndarray  # (K, 3)
    covs: np.ndarray  # (K, 3, 3), regularized SPD


@dataclass
class Mask:
    labels: np.ndarray  # (H, W) uint8, FG/BG
    hard: np.ndarray  # (H, W) bool, fixed by the bbox constraint
    degenerate: bool = False
    energies: list = field(default_factory=list)

    @property
    def width(self):
        return self.labels.shape[1]

    @property
    def height(self):
        return self.labels.shape[0]


def fit_gmm(pixels, K, seed):
    """Fit a K-component color GMM: seeded k-means, then one reassignment
    pass of means/covariances/weights. Covariances get +eps*I."""
    pixels = np.asarray(pixels, dtype=np.float64).reshape(-1, 3)
    if len(pixels) == 0:
        raise ArgumentError("cannot fit a GMM to an empty pixel set")
    if K < 1:
        raise ArgumentError(f"K must be >= 1, got {K}")
    K = min(K, len(np.unique(pixels, axis=0)))
    vocab = kmeans(pixels, K, seed=seed, max_iters=10)
    d = ((pixels[:, None, :] - vocab.centers[None, :, :]) ** 2).sum(axis=2)
    assign = _fill_empty(np.argmin(d, axis=1), d, K)
    gmm = _estimate(pixels, assign, K)
    # One EM-style reassignment under the fitted densities.
    logp = _component_log_density(gmm, pixels)
    assign = np.argmax(logp, axis=1)
    if len(np.unique(assign)) == K:
        gmm = _estimate(pixels, assign, K)
    return gmm


def _fill_empty(assign, d, K):
    """Give every component at least one pixel (the worst-fit one)."""
    dmin = d[np.arange(len(assign)), assign]
    for k in range(K):
        if not np.any(assign == k):
            far = int(np.argmax(dmin))
            assign[far] = k
            dmin[far] = -1.0
    return assign


def _estimate(pixels, assign, K):
    n = len(pixels)
    weights = np.empty(K)
    means = np.empty((K, 3))
    covs = np.empty((K, 3, 3))
    for k in range(K):
        sel = pixels[assign == k]
        weights[k] = len(sel) / n
        means[k] = sel.mean(axis=0)
        d = sel - means[k]
        covs[k] = (d.T @ d) / len(sel) + COV_EPS * np.eye(3)
    return Gmm(weights=weights, means=means, covs=covs)


def _component_log_density(gmm, pixels):
    """log(weight_k * N(x; mu_k, Sigma_k)) for every pixel and component."""
    K = len(gmm.weights)
    out = np.empty((len(pixels), K))
    for k in range(K):
        chol = np.linalg.cholesky(gmm.covs[k])
        sol = np.linalg.solve(chol, (pixels - gmm.means[k]).T)
        quad = np.sum(sol**2, axis=0)
        logdet = 2.0 * np.log(np.diag(chol)).sum()
        logw = np.log(gmm.weights[k]) if gmm.weights[k] > 0 else -np.inf
        out[:, k] = logw - 0.5 * (quad + logdet + 3.0 * np.log(2.0 * np.pi))
    return out


def gmm_neg_log_likelihood(gmm, pixels):
    """-log p(pixel | gmm), clamped to [0, CAP_MAX]."""
    pixels = np.asarray(pixels, dtype=np.float64).reshape(-1, 3)
    logp = _component_log_density(gmm, pixels)
    m = logp.max(axis=1)
    ll = m + np.log(np.sum(np.exp(logp - m[:, None]), axis=1))
    return np.clip(-ll, 0.0, CAP_MAX)


_NEIGHBOR_OFFSETS = ((0, 1, 1.0), (1, 0, 1.0), (1, 1, np.sqrt(2.0)), (1, -1, np.sqrt(2.0)))


def compute_beta(img):
    """1 / (2 * mean squared color difference over 8-neighbor pairs); 0 for
    constant images."""
    c = np.asarray(img, dtype=np.float64)
    total = 0.0
    count = 0
    for dy, dx, _ in _NEIGHBOR_OFFSETS:
        a = c[dy:, max(dx, 0) : c.shape[1] + min(dx, 0)]
        b = c[: c.shape[0] - dy, max(-dx, 0) : c.shape[1] + min(-dx, 0)]
        d = ((a - b) ** 2).sum(axis=2)
        total += d.sum()
        count += d.size
    mean = total / count
    return 0.0 if mean == 0.0 else 1.0 / (2.0 * mean)


def build_network(img, mask, fg, bg, lam, beta=None):
    """8-connected grid graph for the current models.

    Source arcs carry -log p(pixel | bg), sink arcs -log p(pixel | fg);
    hard background pixels are pinned with (0, CAP_MAX) terminal arcs.
    """
    img = np.asarray(img)
    h, w = img.shape[:2]
    if mask.labels.shape != (h, w):
        raise ArgumentError(f"mask {mask.labels.shape} does not match image {(h, w)}")
    if beta is None:
        beta = compute_beta(img)
    n = h * w
    source, sink = n, n + 1
    net = FlowNetwork(n + 2, source, sink)

    pixels = img.reshape(-1, 3).astype(np.float64)
    d_bg = gmm_neg_log_likelihood(bg, pixels)  # cost of labeling BG
    d_fg = gmm_neg_log_likelihood(fg, pixels)  # cost of labeling FG
    hard_bg = mask.hard.reshape(-1) & (mask.labels.reshape(-1) == BG)
    src_cap = np.where(hard_bg, 0.0, d_bg)
    snk_cap = np.where(hard_bg, CAP_MAX, d_fg)
    ids = np.arange(n, dtype=np.int64)
    net.add_edges(np.full(n, source), ids, src_cap, np.zeros(n))
    net.add_edges(ids, np.full(n, sink), snk_cap, np.zeros(n))

    c = img.astype(np.float64)
    idx = ids.reshape(h, w)
    for dy, dx, dist in _NEIGHBOR_OFFSETS:
        a_sl = (slice(dy, None), slice(max(dx, 0), w + min(dx, 0)))
        b_sl = (slice(0, h - dy), slice(max(-dx, 0), w + min(-dx, 0)))
        d2 = ((c[a_sl] - c[b_sl]) ** 2).sum(axis=2)
        wgt = lam * np.exp(-beta * d2) / dist
        net.add_edges(idx[a_sl].reshape(-1), idx[b_sl].reshape(-1), wgt.reshape(-1), wgt.reshape(-1))
    return net


def _energy(img, labels, hard, fg, bg, lam, beta):
    """Energy of a labeling under the given models (soft data terms +
    smoothness across cut pairs). Hard pixels contribute no data term."""
    pixels = np.asarray(img, dtype=np.float64).reshape(-1, 3)
    d_bg = gmm_neg_log_likelihood(bg, pixels)
    d_fg = gmm_neg_log_likelihood(fg, pixels)
    lab = labels.reshape(-1)
    soft = ~hard.reshape(-1)
    data = np.where(lab == FG, d_fg, d_bg)[soft].sum()
    c = np.asarray(img, dtype=np.float64)
    h, w = labels.shape
    smooth = 0.0
    for dy, dx, dist in _NEIGHBOR_OFFSETS:
        a_sl = (slice(dy, None), slice(max(dx, 0), w + min(dx, 0)))
        b_sl = (slice(0, h - dy), slice(max(-dx, 0), w + min(-dx, 0)))
        d2 = ((c[a_sl] - c[b_sl]) ** 2).sum(axis=2)
        wgt = lam * np.exp(-beta * d2) / dist
        cut = labels[a_sl] != labels[b_sl]
        smooth += wgt[cut].sum()
    return float(data + smooth)


def grabcut(img, seed_box, iterations=5, K=5, lam=50.0, seed=0):
    """Iterated graph cuts seeded by the bounding box."""
    img = np.asarray(img)
    h, w = img.shape[:2]
    seed_box.validate(w, h)
    if seed_box.w >= w and seed_box.h >= h:
        raise NoBackgroundError("seed box covers the whole image; no background pixels")

    labels = np.zeros((h, w), dtype=np.uint8)
    labels[seed_box.y : seed_box.y + seed_box.h, seed_box.x : seed_box.x + seed_box.w] = FG
    hard = np.ones((h, w), dtype=bool)
    hard[seed_box.y : seed_box.y + seed_box.h, seed_box.x : seed_box.x + seed_box.w] = False

    beta = compute_beta(img)
    pixels = img.reshape(-1, 3).astype(np.float64)
    mask = Mask(labels=labels, hard=hard)
    prev_models = None
    for it in range(iterations):
        fg_pixels = pixels[mask.labels.reshape(-1) == FG]
        bg_pixels = pixels[mask.labels.reshape(-1) == BG]
        if len(fg_pixels) == 0:
            mask.degenerate = True
            break
        fg = fit_gmm(fg_pixels, K, seed=_mix_seed(seed, 2 * it))
        bg = fit_gmm(bg_pixels, K, seed=_mix_seed(seed, 2 * it + 1))
        if prev_models is not None:
            # Keep whichever model pair scores the current labels lower, so
            # the tracked energy cannot increase at the refit step.
            e_new = _energy(img, mask.labels, hard, fg, bg, lam, beta)
            e_old = _energy(img, mask.labels, hard, *prev_models, lam, beta)
            if e_old < e_new:
                fg, bg = prev_models
        net = build_network(img, mask, fg, bg, lam, beta)
        _, source_side = max_flow(net)
        new_labels = np.zeros(h * w, dtype=np.uint8)
        in_src = np.zeros(h * w + 2, dtype=bool)
        in_src[list(source_side)] = True
        new_labels[in_src[: h * w]] = FG
        new_labels[hard.reshape(-1)] = BG
        new_labels = new_labels.reshape(h, w)
        if not np.any(new_labels[~hard] == FG):
            mask.degenerate = True
            break
        changed = not np.array_equal(new_labels, mask.labels)
        mask.labels = new_labels
        prev_models = (fg, bg)
        mask.energies.append(_energy(img, mask.labels, hard, fg, bg, lam, beta))
        if not changed:
            break
    return mask


def _mix_seed(seed, salt):
    return (int(seed) * 1000003 + salt) % (2**63)


def mask_to_bytes(mask):
    from .imgio import encode_pgm

    return encode_pgm(np.where(mask.labels == FG, 255, 0).astype(np.uint8))


def mask_from_bytes(data, seed_box=None):
    from .imgio import decode_pgm

    plane = decode_pgm(data)
    labels = (plane > 0).astype(np.uint8)
    hard = np.ones(labels.shape, dtype=bool)
    if seed_box is not None:
        hard[seed_box.y : seed_box.y + seed_box.h, seed_box.x : seed_box.x + seed_box.w] = False
    return Mask(labels=labels, hard=hard)
