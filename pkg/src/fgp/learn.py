"""One-vs-all linear SVM: dual coordinate descent on hinge loss, scoring,
model serialization."""

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, ConfigMismatchError, FormatError

MODEL_MAGIC = b"SVML"


@dataclass
class SvmModel:
    classes: list  # sorted unique class ids (str)
    weights: np.ndarray  # (K, d)
    biases: np.ndarray  # (K,)
    C: float
    fingerprint: bytes  # 32-byte hash of the encoding configuration


def train_binary(features, labels, C, tol=1e-3, max_outer_iters=1000, seed=0,
                 pos_weight=1.0):
    """L2-regularized L1-loss SVM via dual coordinate descent.

    The bias is an augmented constant-1 component (so it is slightly
    regularized). Positive examples get cost C * pos_weight. Stops when the
    largest projected-gradient violation drops below tol. Returns
    (weights, bias).
    """
    X = np.ascontiguousarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y):
        raise ArgumentError("features must be (n, d) with one label per row")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise ArgumentError("need at least one example of each sign")
    n, d = X.shape
    Xa = np.concatenate([X, np.ones((n, 1))], axis=1)
    qii = np.sum(Xa**2, axis=1)
    Ci = np.where(y > 0, C * pos_weight, C)
    alpha = np.zeros(n)
    w = np.zeros(d + 1)
    rng = np.random.default_rng(seed)
    for _ in range(max_outer_iters):
        violation = 0.0
        for i in rng.permutation(n):
            g = y[i] * (Xa[i] @ w) - 1.0
            if alpha[i] == 0.0:
                pg = min(g, 0.0)
            elif alpha[i] == Ci[i]:
                pg = max(g, 0.0)
            else:
                pg = g
            violation = max(violation, abs(pg))
            if pg != 0.0:
                a_new = min(max(alpha[i] - g / qii[i], 0.0), Ci[i])
                if a_new != alpha[i]:
                    w += (a_new - alpha[i]) * y[i] * Xa[i]
                    alpha[i] = a_new
        if violation < tol:
            break
    assert np.all((alpha >= 0.0) & (alpha <= Ci))
    return w[:-1], float(w[-1])


def primal_objective(X, y, w, b, C):
    """0.5 (||w||^2 + b^2) + C * sum hinge  (the augmented-bias objective)."""
    margins = 1.0 - np.asarray(y, dtype=np.float64) * (np.asarray(X) @ w + b)
    return 0.5 * (w @ w + b * b) + C * np.maximum(margins, 0.0).sum()


def _class_seed(seed, class_id):
    h = hashlib.sha256(f"{seed}:{class_id}".encode()).digest()
    return int.from_bytes(h[:8], "little")


def train_ova(features, class_labels, C, tol=1e-3, max_outer_iters=1000, seed=0,
              pos_weight=1.0, fingerprint=b"\x00" * 32):
    """One binary problem per class (class vs rest), trained independently."""
    X = np.ascontiguousarray(features, dtype=np.float64)
    labels = [str(c) for c in class_labels]
    classes = sorted(set(labels))
    if len(classes) < 2:
        raise ArgumentError("one-vs-all needs at least 2 classes")
    counts = {c: labels.count(c) for c in classes}
    degenerate = [c for c in classes if counts[c] == len(labels)]
    if degenerate:
        raise ArgumentError(f"classes with no negative examples: {degenerate}")
    W = np.empty((len(classes), X.shape[1]))
    b = np.empty(len(classes))
    for k, c in enumerate(classes):
        y = np.where(np.asarray(labels) == c, 1.0, -1.0)
        W[k], b[k] = train_binary(
            X, y, C, tol=tol, max_outer_iters=max_outer_iters,
            seed=_class_seed(seed, c), pos_weight=pos_weight,
        )
    return SvmModel(classes=classes, weights=W, biases=b, C=float(C), fingerprint=fingerprint)


def predict(model, feature):
    """Per-class scores and the argmax class (ties: lowest class id)."""
    x = np.asarray(feature, dtype=np.float64)
    if x.shape != (model.weights.shape[1],):
        raise ArgumentError(
            f"feature length {x.shape} does not match model ({model.weights.shape[1]},)"
        )
    scores = model.weights @ x + model.biases
    return scores, model.classes[int(np.argmax(scores))]


def save_model(model, path):
    with open(path, "wb") as f:
        f.write(MODEL_MAGIC)
        f.write(struct.pack("<IId", len(model.classes), model.weights.shape[1], model.C))
        for k, c in enumerate(model.classes):
            cb = c.encode()
            f.write(struct.pack("<H", len(cb)) + cb)
            f.write(struct.pack("<d", model.biases[k]))
            f.write(model.weights[k].astype("<f4").tobytes())
        f.write(model.fingerprint)


def load_model(path, expected_fingerprint=None):
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 20 or data[:4] != MODEL_MAGIC:
        raise FormatError(f"not a model file: {path}")
    try:
        nclasses, dim, C = struct.unpack_from("<IId", data, 4)
        pos = 20
        classes, biases, weights = [], [], []
        for _ in range(nclasses):
            (nlen,) = struct.unpack_from("<H", data, pos)
            pos += 2
            classes.append(data[pos : pos + nlen].decode())
            pos += nlen
            (bias,) = struct.unpack_from("<d", data, pos)
            pos += 8
            wrow = np.frombuffer(data, dtype="<f4", count=dim, offset=pos)
            if wrow.size != dim:
                raise FormatError(f"model file {path} truncated in weights")
            pos += 4 * dim
            biases.append(bias)
            weights.append(wrow.astype(np.float64))
    except (struct.error, ValueError) as e:
        raise FormatError(f"model file {path} truncated: {e}") from e
    fingerprint = data[pos : pos + 32]
    if len(fingerprint) != 32:
        raise FormatError(f"model file {path} missing fingerprint")
    if expected_fingerprint is not None and fingerprint != expected_fingerprint:
        raise ConfigMismatchError(
            "model was trained under a different encoding configuration; re-run training"
        )
    return SvmModel(
        classes=classes,
        weights=np.asarray(weights),
        biases=np.asarray(biases),
        C=C,
        fingerprint=fingerprint,
    )
