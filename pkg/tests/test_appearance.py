from __future__ import annotations

import math

import numpy as np
import pytest

from crowdtrack.appearance import (
    HSV_BINS,
    HsvHistogram,
    bhattacharyya_distance,
    box_patch,
    extract_histogram,
    patch_from_bytes,
    rgb_to_hsv,
    rgb_to_hsv_array,
)
from crowdtrack.motdata import BoundingBox


def solid(rgb, h=4, w=4) -> np.ndarray:
    return np.tile(np.array(rgb, dtype=np.uint8), (h, w, 1))


class TestHsv:
    @pytest.mark.parametrize("rgb, hsv", [
        ((1, 0, 0), (0.0, 1.0, 1.0)),
        ((0.5, 0.5, 0.5), (0.0, 0.0, 0.5)),
        ((0, 1, 0), (120.0, 1.0, 1.0)),
        ((0, 0, 1), (240.0, 1.0, 1.0)),
        ((1, 0, 1), (300.0, 1.0, 1.0)),
    ])
    def test_reference_colours(self, rgb, hsv):
        assert rgb_to_hsv(*rgb) == pytest.approx(hsv)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            rgb_to_hsv(1.2, 0, 0)
        with pytest.raises(ValueError):
            rgb_to_hsv_array(np.array([[-0.1, 0, 0]]))

    def test_array_matches_scalar(self):
        rng = np.random.default_rng(1)
        px = rng.random((200, 3))
        vec = rgb_to_hsv_array(px)
        for p, v in zip(px, vec):
            assert v == pytest.approx(rgb_to_hsv(*p))

    def test_brightness_keeps_hue(self):
        rng = np.random.default_rng(4)
        px = rng.random((100, 3))
        dim = px * 0.37
        assert rgb_to_hsv_array(dim)[:, 0] == pytest.approx(rgb_to_hsv_array(px)[:, 0])


class TestHistogram:
    def test_solid_red_single_bin(self):
        h = extract_histogram(solid((255, 0, 0)))
        assert h.weights.shape == HSV_BINS
        assert np.count_nonzero(h.weights) == 1 and h.weights.max() == 1.0

    def test_red_green_halves(self):
        patch = np.concatenate([solid((255, 0, 0), 4, 2), solid((0, 255, 0), 4, 2)], axis=1)
        w = extract_histogram(patch).weights
        assert sorted(w[w > 0]) == [0.5, 0.5]

    def test_empty_patch_is_degenerate_uniform(self):
        h = extract_histogram(np.zeros((0, 0, 3), np.uint8))
        assert h.degenerate
        assert np.allclose(h.weights, 1.0 / np.prod(HSV_BINS))

    def test_pixel_order_irrelevant(self):
        rng = np.random.default_rng(0)
        patch = rng.integers(0, 256, (6, 5, 3), dtype=np.uint8)
        flat = patch.reshape(-1, 3)
        shuffled = flat[rng.permutation(len(flat))].reshape(patch.shape)
        assert np.array_equal(extract_histogram(patch).weights, extract_histogram(shuffled).weights)

    def test_from_bytes(self):
        data = bytes([255, 0, 0] * 6)
        patch = patch_from_bytes(data, 3, 2)
        assert patch.shape == (2, 3, 3) and patch[..., 0].min() == 1.0
        with pytest.raises(ValueError):
            patch_from_bytes(data[:-1], 3, 2)

    def test_bad_shape_rejected(self):
        with pytest.raises(ValueError):
            HsvHistogram(np.ones((4, 4, 4)))


class TestBoxPatch:
    def test_pixel_centres(self):
        img = np.arange(10 * 10 * 3, dtype=np.uint8).reshape(10, 10, 3)
        assert box_patch(img, BoundingBox(2, 3, 4, 2)).shape == (2, 4, 3)

    def test_central_crop(self):
        img = np.zeros((20, 20, 3), np.uint8)
        assert box_patch(img, BoundingBox(0, 0, 20, 20), crop=0.5).shape == (10, 10, 3)

    def test_outside_image_empty(self):
        img = np.zeros((5, 5, 3), np.uint8)
        assert box_patch(img, BoundingBox(50, 50, 4, 4)).size == 0


class TestBhattacharyya:
    def test_identical_zero(self):
        h = extract_histogram(solid((10, 200, 30)))
        assert bhattacharyya_distance(h, h) == 0.0

    def test_disjoint_one(self):
        a = extract_histogram(solid((255, 0, 0)))
        b = extract_histogram(solid((0, 0, 255)))
        assert bhattacharyya_distance(a, b) == 1.0

    def test_closed_form(self):
        p = np.zeros(HSV_BINS)
        q = np.zeros(HSV_BINS)
        p.flat[0] = p.flat[1] = 0.5
        q.flat[0] = 1.0
        expected = math.sqrt(1 - math.sqrt(0.5))
        assert bhattacharyya_distance(p, q) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.5412, abs=1e-4)

    def test_unnormalised_rejected(self):
        with pytest.raises(ValueError):
            bhattacharyya_distance(np.ones(HSV_BINS), np.ones(HSV_BINS))
