import numpy as np
import numpy.testing as npt
import pytest

from pramface import maskops


def iou_pixel_loop(a, b):
    """Naive per-pixel double loop; the reference for the fast path."""
    inter = union = 0
    for r in range(a.shape[0]):
        for c in range(a.shape[1]):
            if a[r, c] and b[r, c]:
                inter += 1
            if a[r, c] or b[r, c]:
                union += 1
    return inter / union if union else 0.0


def random_mask(rng, shape=(16, 16), p=0.4):
    return rng.random(shape) < p


class TestIou:
    def test_identical_nonempty(self):
        m = random_mask(np.random.default_rng(0))
        assert maskops.iou(m, m.copy()) == 1.0

    def test_disjoint(self):
        a = np.zeros((8, 8), dtype=bool)
        b = np.zeros((8, 8), dtype=bool)
        a[:4] = True
        b[4:] = True
        assert maskops.iou(a, b) == 0.0

    def test_half_overlap_bands(self):
        a = np.zeros((16, 16), dtype=bool)
        b = np.zeros((16, 16), dtype=bool)
        a[0:8] = True   # 128 px
        b[4:12] = True  # 128 px, overlap 64, union 192
        npt.assert_allclose(maskops.iou(a, b), 64 / 192)

    def test_empty_vs_empty_is_zero(self):
        z = np.zeros((5, 5), dtype=bool)
        assert maskops.iou(z, z) == 0.0

    def test_dimension_mismatch_raises(self):
        with pytest.raises(ValueError):
            maskops.iou(np.zeros((4, 4), bool), np.zeros((4, 5), bool))

    def test_matches_pixel_loop_oracle(self):
        rng = np.random.default_rng(42)
        empties = 0
        for trial in range(1000):
            if trial % 17 == 0:  # force a steady supply of empty-mask cases
                a = np.zeros((16, 16), dtype=bool)
            else:
                a = random_mask(rng)
            if trial % 19 == 0:
                b = np.zeros((16, 16), dtype=bool)
            else:
                b = random_mask(rng)
            if not a.any() or not b.any():
                empties += 1
            assert maskops.iou(a, b) == iou_pixel_loop(a, b)
        assert empties >= 50

    def test_symmetry_and_bounds(self):
        rng = np.random.default_rng(43)
        for _ in range(200):
            a = random_mask(rng, p=rng.random())
            b = random_mask(rng, p=rng.random())
            v = maskops.iou(a, b)
            assert v == maskops.iou(b, a)
            assert 0.0 <= v <= 1.0


class TestBoundingBox:
    def test_single_pixel(self):
        m = np.zeros((10, 10), dtype=bool)
        m[3, 5] = True
        assert maskops.bounding_box(m) == (3, 5, 3, 5)

    def test_full_mask(self):
        assert maskops.bounding_box(np.ones((6, 9), dtype=bool)) == (0, 0, 5, 8)

    def test_two_pixels(self):
        m = np.zeros((12, 12), dtype=bool)
        m[2, 2] = True
        m[9, 4] = True
        assert maskops.bounding_box(m) == (2, 2, 9, 4)

    def test_empty_mask_is_none(self):
        assert maskops.bounding_box(np.zeros((4, 4), dtype=bool)) is None

    def test_matches_min_max_scan(self):
        rng = np.random.default_rng(44)
        for _ in range(100):
            m = random_mask(rng, (12, 14), p=0.2)
            box = maskops.bounding_box(m)
            pts = np.argwhere(m)
            if pts.size == 0:
                assert box is None
            else:
                expected = (pts[:, 0].min(), pts[:, 1].min(), pts[:, 0].max(), pts[:, 1].max())
                assert box == tuple(int(v) for v in expected)


class TestCropPart:
    def test_full_mask_full_size_is_identity(self):
        img = np.random.default_rng(45).random((2, 8, 8))
        out = maskops.crop_part(img, np.ones((8, 8), dtype=bool), (8, 8))
        npt.assert_array_equal(out, img)

    def test_empty_mask_gives_zeros(self):
        img = np.ones((3, 8, 8))
        out = maskops.crop_part(img, np.zeros((8, 8), dtype=bool), (4, 5))
        assert out.shape == (3, 4, 5)
        assert not out.any()

    def test_center_floor_rounding(self):
        # box (2,2)-(3,3) -> center (2,2); 4x4 crop lands on rows/cols 0..3
        img = np.arange(64, dtype=float).reshape(1, 8, 8)
        mask = np.zeros((8, 8), dtype=bool)
        mask[2:4, 2:4] = True
        out = maskops.crop_part(img, mask, (4, 4))
        npt.assert_array_equal(out, img[:, 0:4, 0:4])

    def test_border_clamping_shifts_window(self):
        img = np.arange(64, dtype=float).reshape(1, 8, 8)
        mask = np.zeros((8, 8), dtype=bool)
        mask[7, 7] = True
        out = maskops.crop_part(img, mask, (4, 4))
        npt.assert_array_equal(out, img[:, 4:8, 4:8])

    def test_output_shape_always_requested(self):
        rng = np.random.default_rng(46)
        img = rng.random((1, 16, 16))
        for _ in range(100):
            mask = random_mask(rng, (16, 16), p=rng.random() * 0.3)
            out = maskops.crop_part(img, mask, (6, 7))
            assert out.shape == (1, 6, 7)

    def test_oversized_crop_raises(self):
        with pytest.raises(ValueError):
            maskops.crop_part(np.zeros((1, 4, 4)), np.ones((4, 4), bool), (8, 8))


class TestRandomCrop:
    def _sample(self, rng):
        img = rng.random((1, 144, 144))
        masks = rng.random((5, 144, 144)) < 0.3
        return img, masks

    def test_zero_offset_window(self):
        rng = np.random.default_rng(47)
        img, masks = self._sample(rng)

        class FixedRng:
            def integers(self, lo, hi):
                return 0

        out_img, out_masks = maskops.random_crop(img, masks, FixedRng())
        npt.assert_array_equal(out_img, img[:, :128, :128])
        npt.assert_array_equal(out_masks, masks[:, :128, :128])

    def test_corner_pixel_maps_under_max_offset(self):
        img = np.zeros((1, 144, 144))
        masks = np.zeros((1, 144, 144), dtype=bool)
        masks[0, 143, 143] = True

        class MaxRng:
            def integers(self, lo, hi):
                return hi - 1  # 16

        _, out_masks = maskops.random_crop(img, masks, MaxRng())
        assert out_masks[0, 127, 127]
        assert out_masks.sum() == 1

    def test_seeded_offsets_reproduce(self):
        rng = np.random.default_rng(48)
        img, masks = self._sample(rng)
        a = maskops.random_crop(img, masks, np.random.default_rng(7))
        b = maskops.random_crop(img, masks, np.random.default_rng(7))
        npt.assert_array_equal(a[0], b[0])
        npt.assert_array_equal(a[1], b[1])

    def test_shared_offset_across_masks(self):
        rng = np.random.default_rng(49)
        img, masks = self._sample(rng)
        crop_rng = np.random.default_rng(3)
        out_img, out_masks = maskops.random_crop(img, masks, crop_rng)
        # recover the offset by matching the image window
        found = None
        for dr in range(17):
            for dc in range(17):
                if (img[:, dr : dr + 128, dc : dc + 128] == out_img).all():
                    found = (dr, dc)
                    break
            if found:
                break
        assert found is not None
        dr, dc = found
        for m in range(5):
            npt.assert_array_equal(out_masks[m], masks[m, dr : dr + 128, dc : dc + 128])

    def test_wrong_source_size_raises(self):
        with pytest.raises(ValueError):
            maskops.random_crop(np.zeros((1, 100, 100)), np.zeros((5, 100, 100), bool),
                                np.random.default_rng(0))

    def test_center_crop_is_deterministic_center(self):
        rng = np.random.default_rng(50)
        img, masks = self._sample(rng)
        out_img, out_masks = maskops.center_crop(img, masks)
        npt.assert_array_equal(out_img, img[:, 8:136, 8:136])
        npt.assert_array_equal(out_masks, masks[:, 8:136, 8:136])


class TestFullMaskSynthesis:
    def test_union_of_components(self):
        comps = np.zeros((4, 6, 6), dtype=bool)
        comps[0, 1, 1] = True
        comps[3, 4, 4] = True
        full = maskops.synthesize_full_mask(comps)
        assert full[1, 1] and full[4, 4]
        assert full.sum() == 2

    def test_wrong_count_raises(self):
        with pytest.raises(ValueError):
            maskops.synthesize_full_mask(np.zeros((5, 4, 4), dtype=bool))


class TestAsMask:
    def test_threshold_at_128(self):
        arr = np.array([[0, 127], [128, 255]], dtype=np.uint8)
        npt.assert_array_equal(maskops.as_mask(arr), [[False, False], [True, True]])

    def test_bool_passthrough(self):
        m = np.array([[True, False]])
        assert maskops.as_mask(m) is m
