"""Pixel metric tests: grayscale conversion, similarity, sharpness, night flag.

Similarity and sharpness are cross-checked against independent
implementations (a per-window brute-force loop, scikit-image, and OpenCV)
so the fast vectorized code paths are never their own oracle.
"""

import math

import numpy as np
import pytest

from framesift.imageops import (
    GrayImage,
    blur_score,
    load_gray,
    night_flag,
    normalize_blur,
    ssim,
    to_gray,
)

from helpers import checkerboard, constant_image, noise_image, save_gray_png


class TestToGray:
    def test_white_uint8(self):
        img = np.full((4, 5, 3), 255, dtype=np.uint8)
        assert to_gray(img).pixels == pytest.approx(np.ones((4, 5)), abs=1e-12)

    def test_black(self):
        img = np.zeros((4, 5, 3), dtype=np.uint8)
        assert np.array_equal(to_gray(img).pixels, np.zeros((4, 5)))

    def test_pure_red_uses_first_luma_weight(self):
        img = np.zeros((2, 2, 3), dtype=np.uint8)
        img[..., 0] = 255
        assert to_gray(img).pixels[0, 0] == pytest.approx(0.299, abs=1e-12)

    def test_uint8_and_float_inputs_agree(self, rng):
        raw = rng.integers(0, 256, size=(6, 7, 3), dtype=np.uint8)
        as_float = raw.astype(np.float64) / 255.0
        assert to_gray(raw).pixels == pytest.approx(to_gray(as_float).pixels, abs=1e-12)

    def test_weights_are_normalized(self):
        img = np.full((2, 2, 3), 0.6)
        # Unnormalized weights summing to 2 must not push values past 0.6.
        gray = to_gray(img, weights=(1.0, 0.5, 0.5))
        assert gray.pixels == pytest.approx(np.full((2, 2), 0.6), abs=1e-12)

    @pytest.mark.parametrize("shape", [(4, 4), (4, 4, 4), (0, 3, 3), (3, 3, 1)])
    def test_bad_shapes_rejected(self, shape):
        with pytest.raises(ValueError, match="H, W, 3"):
            to_gray(np.zeros(shape))


class TestGrayImage:
    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError, match=r"\[0, 1\]"):
            GrayImage(np.full((3, 3), 1.5))
        with pytest.raises(ValueError, match=r"\[0, 1\]"):
            GrayImage(np.full((3, 3), -0.1))

    def test_rejects_non_2d(self):
        with pytest.raises(ValueError, match="2-D"):
            GrayImage(np.zeros(5))
        with pytest.raises(ValueError, match="2-D"):
            GrayImage(np.zeros((0, 4)))

    def test_pixels_read_only(self):
        img = constant_image(0.5)
        with pytest.raises(ValueError):
            img.pixels[0, 0] = 0.0


class TestLoadGray:
    def test_png_round_trip(self, tmp_path, rng):
        img = noise_image(rng, 9, 13)
        path = tmp_path / "frame.png"
        save_gray_png(img, path)
        loaded = load_gray(path)
        quantized = np.round(img.pixels * 255.0) / 255.0
        assert loaded.pixels == pytest.approx(quantized, abs=1e-12)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="image file not found"):
            load_gray(tmp_path / "nope.png")


def _naive_ssim(x: np.ndarray, y: np.ndarray, win: int, sigma: float = 1.5) -> float:
    """Brute-force windowed similarity, one window at a time."""
    half = win // 2
    offsets = np.arange(win) - (win - 1) / 2.0
    g = np.exp(-(offsets**2) / (2.0 * sigma**2))
    g = g / g.sum()
    weights = np.outer(g, g)
    c1, c2 = 0.01**2, 0.03**2
    values = []
    h, w = x.shape
    for i in range(half, h - half):
        for j in range(half, w - half):
            px = x[i - half : i + half + 1, j - half : j + half + 1]
            py = y[i - half : i + half + 1, j - half : j + half + 1]
            mx = float((weights * px).sum())
            my = float((weights * py).sum())
            vx = float((weights * px * px).sum()) - mx * mx
            vy = float((weights * py * py).sum()) - my * my
            cxy = float((weights * px * py).sum()) - mx * my
            values.append(
                ((2 * mx * my + c1) * (2 * cxy + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2))
            )
    return float(np.mean(values))


class TestSsim:
    def test_identical_images_score_exactly_one(self, rng):
        img = noise_image(rng, 24, 32)
        assert ssim(img, GrayImage(img.pixels.copy())) == 1.0

    def test_symmetry_is_exact(self, rng):
        a, b = noise_image(rng, 20, 20), noise_image(rng, 20, 20)
        assert ssim(a, b) == ssim(b, a)

    def test_constant_pair_closed_form_extremes(self):
        a, b = constant_image(0.0), constant_image(1.0)
        assert ssim(a, b) == pytest.approx(1e-4 / 1.0001, abs=1e-9)

    def test_constant_pair_closed_form_interior(self):
        a, b = constant_image(0.3), constant_image(0.7)
        assert ssim(a, b) == pytest.approx(0.4201 / 0.5801, abs=1e-9)

    def test_independent_noise_scores_low(self, rng):
        a, b = noise_image(rng, 64, 64), noise_image(rng, 64, 64)
        assert ssim(a, b) < 0.2

    @pytest.mark.parametrize("shape", [(32, 40), (11, 11), (64, 64)])
    def test_matches_scikit_image_reference(self, rng, shape):
        from skimage.metrics import structural_similarity

        a, b = noise_image(rng, *shape), noise_image(rng, *shape)
        expected = structural_similarity(
            a.pixels,
            b.pixels,
            gaussian_weights=True,
            sigma=1.5,
            use_sample_covariance=False,
            data_range=1.0,
        )
        assert abs(ssim(a, b) - expected) <= 1e-12

    @pytest.mark.parametrize("shape,win", [((7, 9), 7), ((11, 5), 5), ((3, 3), 3)])
    def test_small_images_match_per_window_loop(self, rng, shape, win):
        a, b = noise_image(rng, *shape), noise_image(rng, *shape)
        expected = _naive_ssim(a.pixels, b.pixels, win)
        assert ssim(a, b) == pytest.approx(expected, abs=1e-9)

    def test_large_images_match_per_window_loop(self, rng):
        a, b = noise_image(rng, 14, 15), noise_image(rng, 14, 15)
        assert ssim(a, b) == pytest.approx(_naive_ssim(a.pixels, b.pixels, 11), abs=1e-9)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError, match="dimensions differ"):
            ssim(constant_image(0.5, 8, 8), constant_image(0.5, 8, 9))


class TestBlurScore:
    def test_constant_image_scores_zero(self):
        assert blur_score(constant_image(0.7, 5, 5)) == 0.0

    def test_center_impulse_exact_value(self):
        pixels = np.zeros((5, 5))
        pixels[2, 2] = 1.0
        # Response is -4 once, +1 four times, 0 elsewhere: variance 20/25.
        assert blur_score(GrayImage(pixels)) == 0.8

    def test_interior_shift_invariance(self):
        a = np.zeros((9, 9))
        b = np.zeros((9, 9))
        a[2, 2] = 1.0
        b[5, 6] = 1.0
        assert blur_score(GrayImage(a)) == blur_score(GrayImage(b))

    def test_quadratic_in_contrast(self, rng):
        pixels = rng.random((12, 12))
        full = blur_score(GrayImage(pixels))
        halved = blur_score(GrayImage(0.5 * pixels))
        assert halved == pytest.approx(0.25 * full, rel=1e-12)

    def test_fine_checkerboard_sharper_than_coarse(self):
        fine = checkerboard(16, 16, period=1)
        coarse = checkerboard(16, 16, period=4)
        assert blur_score(fine) > blur_score(coarse)

    def test_matches_opencv_laplacian_variance(self, rng):
        import cv2

        pixels = rng.random((20, 24))
        expected = cv2.Laplacian(
            pixels, cv2.CV_64F, ksize=1, borderType=cv2.BORDER_REPLICATE
        ).var()
        assert blur_score(GrayImage(pixels)) == pytest.approx(expected, rel=1e-12)

    def test_too_small_rejected(self):
        with pytest.raises(ValueError, match="3x3"):
            blur_score(constant_image(0.5, 2, 4))


class TestNormalizeBlur:
    def test_linear_spread(self):
        assert normalize_blur([2.0, 4.0, 6.0]) == [0.0, 0.5, 1.0]

    def test_all_equal_maps_to_half(self):
        assert normalize_blur([5.0, 5.0, 5.0]) == [0.5, 0.5, 0.5]

    def test_singleton_maps_to_half(self):
        assert normalize_blur([3.7]) == [0.5]

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="nonempty"):
            normalize_blur([])

    def test_rank_preserving(self, rng):
        scores = list(rng.random(20))
        normalized = normalize_blur(scores)
        assert np.argsort(scores).tolist() == np.argsort(normalized).tolist()
        assert min(normalized) == 0.0 and max(normalized) == 1.0


class TestNightFlag:
    def test_dark_image_is_night(self):
        assert night_flag(constant_image(0.1)) == 1

    def test_bright_image_is_day(self):
        assert night_flag(constant_image(0.6)) == 0

    def test_threshold_is_strict(self):
        assert night_flag(constant_image(0.25)) == 0

    def test_custom_threshold(self):
        assert night_flag(constant_image(0.4), luminance_threshold=0.5) == 1
