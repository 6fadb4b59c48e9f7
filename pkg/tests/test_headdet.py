import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fgp import headdet
from fgp.errors import ArgumentError
from fgp.headdet import Circle
from fgp.imgio import to_grayscale
from synth import render_face, render_noise


def disc_image(cx, cy, r, size=100, bg=255, fg=20):
    img = np.full((size, size), float(bg))
    yy, xx = np.mgrid[0:size, 0:size]
    img[(xx - cx) ** 2 + (yy - cy) ** 2 <= r * r] = fg
    return img


class TestGradients:
    def test_constant_zero(self):
        _, _, mag = headdet.gradients(np.full((5, 5), 9.0))
        assert np.all(mag == 0)

    def test_vertical_step(self):
        g = np.zeros((5, 6))
        g[:, 3:] = 255.0
        gx, gy, mag = headdet.gradients(g)
        col = np.argmax(np.abs(gx).sum(axis=0))
        assert col in (2, 3)
        assert np.all(gy[1:-1, col] == 0)

    def test_too_small(self):
        with pytest.raises(ArgumentError):
            headdet.gradients(np.zeros((2, 2)))


class TestHoughCircles:
    def test_single_disc(self):
        circles = headdet.hough_circles(disc_image(50, 50, 10), 5, 15, 100.0, 0.5, 5.0)
        assert circles
        top = circles[0]
        assert abs(top.cx - 50) <= 2 and abs(top.cy - 50) <= 2
        assert abs(top.r - 10) <= 2

    def test_blank_image(self):
        assert headdet.hough_circles(np.full((50, 50), 128.0), 3, 10, 100.0, 0.5, 5.0) == []

    def test_two_discs(self):
        img = np.minimum(disc_image(30, 30, 8), disc_image(70, 70, 8))
        circles = headdet.hough_circles(img, 4, 12, 100.0, 0.5, 5.0)
        found = {(round(c.cx / 10), round(c.cy / 10)) for c in circles[:4]}
        assert (3, 3) in found and (7, 7) in found

    def test_translation_equivariance(self):
        a = headdet.hough_circles(disc_image(40, 40, 9), 5, 12, 100.0, 0.5, 5.0)[0]
        b = headdet.hough_circles(disc_image(47, 45, 9), 5, 12, 100.0, 0.5, 5.0)[0]
        assert abs((b.cx - a.cx) - 7) <= 1
        assert abs((b.cy - a.cy) - 5) <= 1

    def test_invalid_radius_range(self):
        with pytest.raises(ArgumentError):
            headdet.hough_circles(np.zeros((20, 20)), 5, 15, 100.0, 0.5, 5.0)

    def test_scores_sorted_and_normalized(self):
        img = np.minimum(disc_image(30, 30, 8), disc_image(70, 70, 8))
        circles = headdet.hough_circles(img, 4, 12, 100.0, 0.3, 5.0)
        scores = [c.score for c in circles]
        assert scores == sorted(scores, reverse=True)
        assert scores[0] == 1.0
        assert all(0 < s <= 1 for s in scores)


class TestFindFace:
    def make(self, cx, cy, r, score=1.0):
        return Circle(cx=cx, cy=cy, r=r, score=score)

    def test_spec_triangle(self):
        circles = [
            self.make(40, 40, 5),
            self.make(60, 40, 5),
            self.make(50, 58, 6),
        ]
        face = headdet.find_face(circles, 100, 100)
        assert face is not None
        assert face.eye_left.cx == 40
        assert face.eye_right.cx == 60
        assert face.nose.cy == 58

    def test_collinear_rejected(self):
        circles = [self.make(40, 40, 5), self.make(50, 40, 5), self.make(60, 40, 5)]
        assert headdet.find_face(circles, 100, 100) is None

    def test_fewer_than_three(self):
        assert headdet.find_face([], 100, 100) is None
        assert headdet.find_face([self.make(10, 10, 3)] * 2, 100, 100) is None

    def test_deterministic(self):
        rng = np.random.default_rng(5)
        circles = [
            self.make(float(rng.integers(5, 95)), float(rng.integers(5, 95)),
                      float(rng.integers(3, 9)), float(rng.uniform(0.2, 1.0)))
            for _ in range(15)
        ]
        assert headdet.find_face(circles, 100, 100) == headdet.find_face(circles, 100, 100)

    @given(st.integers(0, 10**6))
    @settings(max_examples=40, deadline=None)
    def test_invariants_on_random_circles(self, seed):
        rng = np.random.default_rng(seed)
        circles = [
            self.make(float(rng.uniform(0, 99)), float(rng.uniform(0, 99)),
                      float(rng.uniform(2, 10)), float(rng.uniform(0.01, 1)))
            for _ in range(int(rng.integers(0, 12)))
        ]
        face = headdet.find_face(circles, 100, 100)
        if face is not None:
            assert face.eye_left.cx < face.eye_right.cx
            assert face.nose.cy > (face.eye_left.cy + face.eye_right.cy) / 2
            assert 0 <= face.quality <= 1


class TestHeadBbox:
    def triangle(self):
        c = lambda x, y, r: Circle(cx=x, cy=y, r=r, score=1.0)
        return headdet.FaceTriangle(
            eye_left=c(40, 40, 5), eye_right=c(60, 40, 5), nose=c(50, 58, 6), quality=1.0
        )

    def test_spec_box(self):
        hb = headdet.head_bbox(self.triangle(), 200, 200, margin=3.0)
        assert (hb.box.w, hb.box.h) == (60, 60)
        assert hb.box.x + hb.box.w // 2 == 50
        assert hb.box.y + hb.box.h // 2 == 46
        assert hb.detected

    def test_clipped_contains_centers(self):
        c = lambda x, y, r: Circle(cx=x, cy=y, r=r, score=1.0)
        tri = headdet.FaceTriangle(
            eye_left=c(5, 8, 4), eye_right=c(25, 8, 4), nose=c(15, 22, 5), quality=1.0
        )
        hb = headdet.head_bbox(tri, 60, 60, margin=3.0)
        hb.box.validate(60, 60)
        for cc in (tri.eye_left, tri.eye_right, tri.nose):
            assert hb.box.x <= cc.cx <= hb.box.x + hb.box.w
            assert hb.box.y <= cc.cy <= hb.box.y + hb.box.h

    def test_margin_one(self):
        hb = headdet.head_bbox(self.triangle(), 200, 200, margin=1.0)
        assert (hb.box.w, hb.box.h) == (20, 20)

    def test_fallback(self):
        from fgp.imgio import BBox

        hb = headdet.fallback_head(BBox(1, 2, 3, 4))
        assert not hb.detected
        assert hb.box == BBox(1, 2, 3, 4)


class TestSyntheticSuite:
    def test_detection_sample(self):
        rng = np.random.default_rng(11)
        hits = 0
        for _ in range(25):
            img, truth = render_face(rng)
            circles = headdet.hough_circles(to_grayscale(img), 2, 14, 260.0, 0.5, 8.0)
            face = headdet.find_face(circles, 96, 96)
            if face is None:
                continue
            err = 0.0
            for c, key in (
                (face.eye_left, "eye_left"),
                (face.eye_right, "eye_right"),
                (face.nose, "nose"),
            ):
                tx, ty, tr = truth[key]
                err = max(err, abs(c.cx - tx), abs(c.cy - ty))
            if err <= 3:
                hits += 1
        assert hits >= 24

    def test_no_detection_on_noise(self):
        rng = np.random.default_rng(12)
        for _ in range(10):
            img = render_noise(rng)
            assert headdet.hough_circles(to_grayscale(img), 2, 14, 260.0, 0.5, 8.0) == []
