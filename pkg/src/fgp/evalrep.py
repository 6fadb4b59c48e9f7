"""Evaluation and reporting: VOC-style average precision, mAP, top-1
recognition rate, confusion matrix, class tables and heatmap rendering."""

import io
import logging
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError

log = logging.getLogger(__name__)


@dataclass
class EvalReport:
    classes: list
    ap: dict  # class id -> AP (classes without positives are absent)
    map: float
    recognition_rate: float
    confusion: np.ndarray  # (K, K) counts, row = true, column = predicted
    confused_pairs: list  # (true, predicted, count) sorted by count desc


def average_precision(scores, is_positive):
    """Area under the monotone precision envelope (VOC 2010+ convention).

    Ties are broken pessimistically: positives rank after negatives at equal
    score, so ties never inflate AP.
    """
    scores = np.asarray(scores, dtype=np.float64)
    pos = np.asarray(is_positive, dtype=bool)
    if len(scores) != len(pos):
        raise ArgumentError("scores and labels must have the same length")
    npos = int(pos.sum())
    if npos == 0:
        raise ArgumentError("average precision undefined without positives")
    # sort by score desc; at equal score negatives first
    order = np.lexsort((pos, -scores))
    ranked = pos[order]
    tp = np.cumsum(ranked)
    precision = tp / np.arange(1, len(ranked) + 1)
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    return float(envelope[ranked].sum() / npos)


def evaluate(predictions, truths, classes=None):
    """Build the full report from per-image score vectors and true classes.

    predictions: (n, K) array of per-class scores (column order = classes).
    """
    scores = np.asarray(predictions, dtype=np.float64)
    truths = [str(t) for t in truths]
    if scores.ndim != 2 or scores.shape[0] == 0:
        raise ArgumentError("empty prediction set")
    if classes is None:
        classes = sorted(set(truths))
    if scores.shape[1] != len(classes):
        raise ArgumentError(f"{scores.shape[1]} score columns for {len(classes)} classes")
    truth_arr = np.asarray(truths)
    ap = {}
    for k, c in enumerate(classes):
        positives = truth_arr == c
        if not positives.any():
            log.warning("class %s has no positives in this split; excluded from mAP", c)
            continue
        ap[c] = average_precision(scores[:, k], positives)
    if not ap:
        raise ArgumentError("no class has positive examples")
    pred_idx = np.argmax(scores, axis=1)
    class_index = {c: k for k, c in enumerate(classes)}
    correct = sum(int(classes[p] == t) for p, t in zip(pred_idx, truths))
    K = len(classes)
    confusion = np.zeros((K, K), dtype=np.int64)
    for p, t in zip(pred_idx, truths):
        confusion[class_index[t], p] += 1
    pairs = [
        (classes[i], classes[j], int(confusion[i, j]))
        for i in range(K)
        for j in range(K)
        if i != j and confusion[i, j] > 0
    ]
    pairs.sort(key=lambda e: (-e[2], e[0], e[1]))
    return EvalReport(
        classes=list(classes),
        ap=ap,
        map=float(np.mean(list(ap.values()))),
        recognition_rate=correct / len(truths),
        confusion=confusion,
        confused_pairs=pairs,
    )


def render_heatmap(confusion, out_size):
    """Row-normalized confusion matrix as a hot-ramp RGB image,
    nearest-neighbor upscaled to out_size x out_size."""
    conf = np.asarray(confusion, dtype=np.float64)
    K = conf.shape[0]
    row_sums = conf.sum(axis=1, keepdims=True)
    norm = np.divide(conf, row_sums, out=np.zeros_like(conf), where=row_sums > 0)
    # grayscale-to-hot ramp: black -> red -> yellow -> white
    r = np.clip(3.0 * norm, 0, 1)
    g = np.clip(3.0 * norm - 1.0, 0, 1)
    b = np.clip(3.0 * norm - 2.0, 0, 1)
    cells = np.stack([r, g, b], axis=-1)
    img = np.clip(np.rint(cells * 255.0), 0, 255).astype(np.uint8)
    idx = (np.arange(out_size) * K) // out_size
    return img[idx][:, idx]


def report_tables(report, k):
    """Top-k / bottom-k classes by AP and top-k confused pairs as CSV text."""
    if k > len(report.classes):
        raise ArgumentError(f"k={k} exceeds class count {len(report.classes)}")
    by_ap = sorted(report.ap.items(), key=lambda e: (-e[1], e[0]))

    def csv_classes(rows):
        out = io.StringIO()
        out.write("class,ap\n")
        for c, a in rows:
            out.write(f"{c},{a:.6f}\n")
        return out.getvalue()

    top = csv_classes(by_ap[:k])
    bottom = csv_classes(sorted(report.ap.items(), key=lambda e: (e[1], e[0]))[:k])
    out = io.StringIO()
    out.write("true,predicted,count\n")
    for t, p, c in report.confused_pairs[:k]:
        out.write(f"{t},{p},{c}\n")
    return {"top": top, "bottom": bottom, "confused": out.getvalue()}


def summary_lines(report):
    """Machine-readable key=value summary."""
    lines = [f"map={report.map:.9f}", f"recognition_rate={report.recognition_rate:.9f}"]
    for c in sorted(report.ap):
        lines.append(f"ap.{c}={report.ap[c]:.9f}")
    return "\n".join(lines) + "\n"
