"""Geometric dog-head detector: Hough circles for eyes and nose, then a
triangle constellation search yielding a head bounding box."""

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import ArgumentError
from .imgio import BBox

TOP_N_CIRCLES = 20

# Triangle constraints (eye-line geometry of a frontal face)
EYE_RADIUS_RATIO = (0.5, 2.0)
MAX_EYE_INCLINE_DEG = 30.0
NOSE_DROP = (0.3, 1.5)  # in units of eye distance, below the eye midpoint
MAX_NOSE_OFFSET = 0.35  # horizontal, in units of eye distance
NOSE_RADIUS_RATIO = (0.5, 2.5)  # vs mean eye radius


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    r: float
    score: float


@dataclass(frozen=True)
class FaceTriangle:
    eye_left: Circle
    eye_right: Circle
    nose: Circle
    quality: float


@dataclass(frozen=True)
class HeadBox:
    box: BBox
    detected: bool


def gradients(gray):
    """Sobel 3x3 responses; border pixels are zero."""
    g = np.asarray(gray, dtype=np.float64)
    if g.shape[0] < 3 or g.shape[1] < 3:
        raise ArgumentError(f"image {g.shape} too small for 3x3 gradients")
    gx = np.zeros_like(g)
    gy = np.zeros_like(g)
    c = g[1:-1, 1:-1]
    gx[1:-1, 1:-1] = (
        (g[:-2, 2:] + 2.0 * g[1:-1, 2:] + g[2:, 2:])
        - (g[:-2, :-2] + 2.0 * g[1:-1, :-2] + g[2:, :-2])
    )
    gy[1:-1, 1:-1] = (
        (g[2:, :-2] + 2.0 * g[2:, 1:-1] + g[2:, 2:])
        - (g[:-2, :-2] + 2.0 * g[:-2, 1:-1] + g[:-2, 2:])
    )
    mag = np.hypot(gx, gy)
    return gx, gy, mag


def hough_accumulator(gray, r_min, r_max, mag_threshold):
    """(r, cy, cx) vote accumulator from gradient-direction circle voting."""
    g = np.asarray(gray, dtype=np.float64)
    h, w = g.shape
    if not (1 <= r_min <= r_max <= min(w, h) / 2):
        raise ArgumentError(f"invalid radius range [{r_min}, {r_max}] for {w}x{h}")
    gx, gy, mag = gradients(g)
    py, px = np.nonzero(mag >= mag_threshold)
    acc = np.zeros((r_max - r_min + 1, h, w), dtype=np.int64)
    if len(px):
        m = mag[py, px]
        ux = gx[py, px] / m
        uy = gy[py, px] / m
        backend.hough_vote(
            px.astype(np.int64), py.astype(np.int64), ux, uy, int(r_min), int(r_max), acc
        )
    return acc


def hough_circles(gray, r_min, r_max, mag_threshold, peak_threshold, nms_radius):
    """Gradient-direction circle voting with an (cx, cy, r) accumulator.

    Peaks above peak_threshold * max survive center non-maximum suppression
    and come back sorted by score descending, ties by (cy, cx, r).
    """
    acc = hough_accumulator(gray, r_min, r_max, mag_threshold)
    maxv = int(acc.max())
    if maxv == 0:
        return []
    thresh = peak_threshold * maxv
    ri, cy, cx = np.nonzero(acc >= thresh)
    votes = acc[ri, cy, cx]
    order = np.lexsort((ri, cx, cy, -votes))
    kept = []
    for i in order:
        x, y = float(cx[i]), float(cy[i])
        if any((x - c.cx) ** 2 + (y - c.cy) ** 2 <= nms_radius**2 for c in kept):
            continue
        kept.append(Circle(cx=x, cy=y, r=float(ri[i] + r_min), score=votes[i] / maxv))
    return kept


def find_face(circles, img_w, img_h):
    """Best eyes+nose triangle among the top circles, or None."""
    top = circles[:TOP_N_CIRCLES]
    best = None
    for i, a in enumerate(top):
        for j, b in enumerate(top):
            if j <= i:
                continue
            if a.cx == b.cx:
                continue
            el, er = (a, b) if a.cx < b.cx else (b, a)
            for nk, nose in enumerate(top):
                if nk in (i, j):
                    continue
                tri = _check_triangle(el, er, nose)
                if tri is None:
                    continue
                if best is None or tri.quality > best.quality:
                    best = tri
    return best


def _check_triangle(el, er, nose):
    d = math.hypot(er.cx - el.cx, er.cy - el.cy)
    if d == 0:
        return None
    ratio = max(el.r, er.r) / min(el.r, er.r)
    if ratio > EYE_RADIUS_RATIO[1]:
        return None
    incline = abs(math.degrees(math.atan2(er.cy - el.cy, er.cx - el.cx)))
    if incline > MAX_EYE_INCLINE_DEG:
        return None
    mx = (el.cx + er.cx) / 2.0
    my = (el.cy + er.cy) / 2.0
    drop = nose.cy - my
    if not (NOSE_DROP[0] * d <= drop <= NOSE_DROP[1] * d):
        return None
    offset = abs(nose.cx - mx)
    if offset > MAX_NOSE_OFFSET * d:
        return None
    mean_eye_r = (el.r + er.r) / 2.0
    if not (NOSE_RADIUS_RATIO[0] * mean_eye_r <= nose.r <= NOSE_RADIUS_RATIO[1] * mean_eye_r):
        return None
    slacks = (
        (EYE_RADIUS_RATIO[1] - ratio) / (EYE_RADIUS_RATIO[1] - 1.0),
        (MAX_EYE_INCLINE_DEG - incline) / MAX_EYE_INCLINE_DEG,
        min(drop - NOSE_DROP[0] * d, NOSE_DROP[1] * d - drop) / (0.6 * d),
        (MAX_NOSE_OFFSET * d - offset) / (MAX_NOSE_OFFSET * d),
        min(nose.r - NOSE_RADIUS_RATIO[0] * mean_eye_r, NOSE_RADIUS_RATIO[1] * mean_eye_r - nose.r)
        / mean_eye_r,
    )
    slack = min(1.0, max(0.0, min(slacks)))
    quality = (el.score + er.score + nose.score) / 3.0 * slack
    return FaceTriangle(eye_left=el, eye_right=er, nose=nose, quality=quality)


def head_bbox(face, img_w, img_h, margin=3.0):
    """Square head crop centered on the triangle centroid, side margin * eye
    distance, clipped to the image."""
    d = math.hypot(face.eye_right.cx - face.eye_left.cx, face.eye_right.cy - face.eye_left.cy)
    cx = (face.eye_left.cx + face.eye_right.cx + face.nose.cx) / 3.0
    cy = (face.eye_left.cy + face.eye_right.cy + face.nose.cy) / 3.0
    side = margin * d
    x0 = int(round(cx - side / 2.0))
    y0 = int(round(cy - side / 2.0))
    x1 = int(round(cx + side / 2.0))
    y1 = int(round(cy + side / 2.0))
    x0 = max(0, x0)
    y0 = max(0, y0)
    x1 = min(img_w, x1)
    y1 = min(img_h, y1)
    return HeadBox(box=BBox(x=x0, y=y0, w=max(1, x1 - x0), h=max(1, y1 - y0)), detected=True)


def fallback_head(bbox):
    """Full object box as head region when no face was found, keeping the
    feature layout constant."""
    return HeadBox(box=bbox, detected=False)
