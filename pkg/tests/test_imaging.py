"""Frame decoding, patch extraction, resizing and window tests."""

import numpy as np
import pytest
from PIL import Image

from cftrack.imaging import (
    Patch,
    Rect,
    extract_patch,
    hann_window,
    load_frame,
    resize_bilinear,
    resize_patch,
    sample_window,
    sample_windows,
)


class TestLoadFrame:
    def test_pgm_endpoint_scaling(self, tmp_path):
        path = tmp_path / "two.pgm"
        path.write_bytes(b"P5 2 1 255\n" + bytes([0, 255]))
        img = load_frame(path)
        assert img.shape == (1, 2)
        np.testing.assert_array_equal(img, [[0.0, 1.0]])

    def test_rgb_luminance_weights(self, tmp_path):
        path = tmp_path / "red.png"
        Image.new("RGB", (1, 1), (255, 0, 0)).save(path)
        img = load_frame(path)
        assert img[0, 0] == pytest.approx(0.299, abs=1e-12)

    def test_green_blue_weights(self, tmp_path):
        for color, expected in (((0, 255, 0), 0.587), ((0, 0, 255), 0.114)):
            path = tmp_path / f"c{expected}.png"
            Image.new("RGB", (1, 1), color).save(path)
            assert load_frame(path)[0, 0] == pytest.approx(expected, abs=1e-12)

    def test_missing_file_is_io_error(self, tmp_path):
        with pytest.raises(OSError):
            load_frame(tmp_path / "nope.png")

    def test_non_image_is_format_error(self, tmp_path):
        path = tmp_path / "junk.png"
        path.write_bytes(b"this is not an image at all")
        with pytest.raises(ValueError):
            load_frame(path)


class TestRect:
    def test_corner_round_trip(self):
        r = Rect.from_corner(10.0, 20.0, 30.0, 40.0)
        assert (r.cx, r.cy) == (25.0, 40.0)
        assert r.corner() == (10.0, 20.0, 30.0, 40.0)

    def test_nonpositive_extent_rejected(self):
        with pytest.raises(ValueError):
            Rect(0, 0, 0.0, 5.0)


class TestExtractPatch:
    def test_interior_rect_is_exact_crop(self):
        rng = np.random.default_rng(7)
        img = rng.uniform(size=(10, 12))
        r = Rect.from_corner(3, 2, 4, 5)
        p = extract_patch(img, r)
        np.testing.assert_array_equal(p.pixels, img[2:7, 3:7])

    def test_origin_center_on_constant_image(self):
        img = np.full((6, 6), 0.3)
        p = extract_patch(img, Rect(0, 0, 5, 5))
        np.testing.assert_array_equal(p.pixels, np.full((5, 5), 0.3))

    def test_single_pixel_replicates_everywhere(self):
        img = np.array([[0.7]])
        p = extract_patch(img, Rect(50, -3, 9, 4))
        np.testing.assert_array_equal(p.pixels, np.full((4, 9), 0.7))

    def test_full_rect_idempotent(self):
        rng = np.random.default_rng(3)
        img = rng.uniform(size=(8, 5))
        first = extract_patch(img, Rect(4.0, 3.0, 5, 8)).pixels
        again = extract_patch(first, Rect(first.shape[1] / 2.0,
                                          first.shape[0] / 2.0,
                                          first.shape[1], first.shape[0])).pixels
        np.testing.assert_array_equal(first, again)

    def test_commutes_with_horizontal_flip(self):
        rng = np.random.default_rng(11)
        img = rng.uniform(size=(9, 14))
        for _ in range(20):
            w = int(rng.integers(1, 5))
            h = int(rng.integers(1, 5))
            x = int(rng.integers(0, 14 - w))
            y = int(rng.integers(0, 9 - h))
            r = Rect.from_corner(x, y, w, h)
            mirrored = Rect.from_corner(img.shape[1] - x - w, y, w, h)
            direct = extract_patch(img[:, ::-1], mirrored).pixels
            flipped = extract_patch(img, r).pixels[:, ::-1]
            np.testing.assert_array_equal(direct, flipped)


class TestResize:
    def test_constant_preserved_upsampling(self):
        p = Patch(np.full((4, 4), 0.5), Rect(2, 2, 4, 4))
        out = resize_patch(p, 8, 8)
        np.testing.assert_array_equal(out.pixels, np.full((8, 8), 0.5))

    def test_identity_size_is_exact(self):
        rng = np.random.default_rng(0)
        p = Patch(rng.uniform(size=(5, 7)), Rect(3.5, 2.5, 7, 5))
        out = resize_patch(p, 7, 5)
        np.testing.assert_array_equal(out.pixels, p.pixels)

    def test_monotone_interpolation(self):
        p = Patch(np.array([[0.0, 1.0]]), Rect(1, 0.5, 2, 1))
        out = resize_patch(p, 4, 1).pixels[0]
        assert np.all(np.diff(out) >= 0)
        assert out[0] == 0.0 and out[-1] == 1.0

    def test_down_up_constant_round_trip(self):
        arr = np.full((6, 10), 0.25)
        up = resize_bilinear(arr, 12, 20)
        back = resize_bilinear(up, 6, 10)
        np.testing.assert_array_equal(back, arr)


class TestSampleWindow:
    def test_aligned_window_matches_crop(self):
        rng = np.random.default_rng(5)
        img = rng.uniform(size=(12, 12))
        out = sample_window(img, 6.0, 5.0, 4, 6, 6, 4)
        np.testing.assert_allclose(out, img[2:8, 4:8], atol=1e-12)

    def test_batch_agrees_with_single(self):
        rng = np.random.default_rng(6)
        img = rng.uniform(size=(20, 30))
        centers = rng.uniform(3, 15, size=(5, 2))
        sizes = rng.uniform(2, 8, size=(5, 2))
        batch = sample_windows(img, centers, sizes, 7, 9)
        for k in range(5):
            single = sample_window(img, centers[k, 0], centers[k, 1],
                                   sizes[k, 0], sizes[k, 1], 7, 9)
            np.testing.assert_array_equal(batch[k], single)

    def test_constant_image_any_window(self):
        img = np.full((4, 4), 0.9)
        out = sample_window(img, -10.0, 40.0, 25.0, 3.0, 5, 5)
        np.testing.assert_array_equal(out, np.full((5, 5), 0.9))


class TestHannWindow:
    def test_degenerate_single_sample(self):
        np.testing.assert_array_equal(hann_window(1, 1), [[1.0]])

    def test_three_by_three_shape(self):
        w = hann_window(3, 3)
        assert w[1, 1] == 1.0
        assert w[0, 0] == w[0, 2] == w[2, 0] == w[2, 2] == 0.0

    def test_separability(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            wx = int(rng.integers(1, 12))
            wy = int(rng.integers(1, 12))
            w = hann_window(wx, wy)
            assert w.shape == (wy, wx)
            col = w[:, np.argmax(w.max(axis=0))]
            row = w[np.argmax(w.max(axis=1)), :]
            peak = w.max()
            if peak > 0:
                np.testing.assert_allclose(w, np.outer(col, row) / peak, atol=1e-12)

    def test_range(self):
        w = hann_window(8, 5)
        assert w.min() >= 0.0 and w.max() <= 1.0
