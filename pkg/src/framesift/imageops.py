"""Pixel-level frame metrics.

Everything here is a pure function of image content: grayscale conversion,
the structural similarity index between two frames, the Laplacian-variance
sharpness score, and the mean-luminance night/day estimate. The night
estimate is a documented substitute for a detector-derived lighting signal;
mean luminance below a threshold is treated as night.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.ndimage import correlate1d

# ITU-R BT.601 luma weights.
DEFAULT_GRAY_WEIGHTS = (0.299, 0.587, 0.114)

DEFAULT_NIGHT_THRESHOLD = 0.25

_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


@dataclass(frozen=True, eq=False)
class GrayImage:
    """A grayscale image with pixel values in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.asarray(self.pixels, dtype=np.float64)
        if pixels.ndim != 2 or pixels.size == 0:
            raise ValueError("pixels must be a nonempty 2-D array")
        if pixels.min() < 0.0 or pixels.max() > 1.0:
            raise ValueError("pixel values must lie in [0, 1]")
        pixels.flags.writeable = False
        object.__setattr__(self, "pixels", pixels)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def to_gray(image: np.ndarray, weights=DEFAULT_GRAY_WEIGHTS) -> GrayImage:
    """Convert an RGB image to grayscale by a weighted channel sum.

    ``image`` is an (H, W, 3) array, either uint8 in [0, 255] or float in
    [0, 1]. The weighted sum is normalized by the weight total so output
    stays in [0, 1] for any positive weights.
    """
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"expected a nonempty (H, W, 3) image, got shape {arr.shape}")
    arr = arr.astype(np.float64)
    if np.issubdtype(np.asarray(image).dtype, np.integer):
        arr = arr / 255.0
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (3,) or w.sum() <= 0:
        raise ValueError("weights must be 3 reals with positive sum")
    gray = arr @ (w / w.sum())
    return GrayImage(np.clip(gray, 0.0, 1.0))


def load_gray(path, weights=DEFAULT_GRAY_WEIGHTS) -> GrayImage:
    """Load a PNG/JPEG frame from disk and convert it to grayscale."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"image file not found: {path}")
    with Image.open(path) as img:
        rgb = np.asarray(img.convert("RGB"))
    return to_gray(rgb, weights)


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    kernel = np.exp(-(offsets**2) / (2.0 * sigma**2))
    return kernel / kernel.sum()


def _filter_valid(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    # Separable correlation; borders are cropped so only fully-supported
    # windows contribute.
    out = correlate1d(img, kernel, axis=0, mode="constant")
    out = correlate1d(out, kernel, axis=1, mode="constant")
    pad = len(kernel) // 2
    h, w = img.shape
    return out[pad : h - pad, pad : w - pad]


def ssim(a: GrayImage, b: GrayImage) -> float:
    """Mean local structural similarity between two equal-size images.

    Local statistics use an 11x11 Gaussian window (sigma 1.5), shrunk to the
    largest odd size that fits when an image is smaller than 11 pixels on a
    side. Stabilizers are C1=(0.01*L)^2, C2=(0.03*L)^2 with L=1 for pixels
    in [0, 1]. The result is symmetric and exactly 1.0 for identical images.
    """
    if (a.height, a.width) != (b.height, b.width):
        raise ValueError(
            f"image dimensions differ: {(a.height, a.width)} vs {(b.height, b.width)}"
        )
    win = min(_SSIM_WINDOW, a.height, a.width)
    if win % 2 == 0:
        win -= 1
    kernel = _gaussian_kernel(win, _SSIM_SIGMA)

    x = a.pixels
    y = b.pixels
    mu_x = _filter_valid(x, kernel)
    mu_y = _filter_valid(y, kernel)
    # Weighted population moments within each window.
    var_x = _filter_valid(x * x, kernel) - mu_x * mu_x
    var_y = _filter_valid(y * y, kernel) - mu_y * mu_y
    cov_xy = _filter_valid(x * y, kernel) - mu_x * mu_y

    c1 = (_SSIM_K1 * 1.0) ** 2
    c2 = (_SSIM_K2 * 1.0) ** 2
    numerator = (2.0 * (mu_x * mu_y) + c1) * (2.0 * cov_xy + c2)
    denominator = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float(np.mean(numerator / denominator))


def blur_score(img: GrayImage) -> float:
    """Sharpness as the variance of the 3x3 Laplacian response.

    The 4-neighbor kernel [[0,1,0],[1,-4,1],[0,1,0]] is applied with
    replicate borders; the score is the population variance of the
    response. Larger means sharper; a constant image scores 0.
    """
    if img.height < 3 or img.width < 3:
        raise ValueError(
            f"image must be at least 3x3, got {img.height}x{img.width}"
        )
    p = np.pad(img.pixels, 1, mode="edge")
    response = (
        p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:] - 4.0 * p[1:-1, 1:-1]
    )
    return float(response.var())


def normalize_blur(scores) -> list[float]:
    """Min-max normalize a batch of sharpness scores to [0, 1].

    A degenerate batch (all scores equal, including a single element) maps
    to all 0.5. Normalization is order-preserving.
    """
    scores = [float(s) for s in scores]
    if not scores:
        raise ValueError("scores must be nonempty")
    lo = min(scores)
    hi = max(scores)
    if hi == lo:
        return [0.5] * len(scores)
    span = hi - lo
    return [(s - lo) / span for s in scores]


def night_flag(img: GrayImage, luminance_threshold: float = DEFAULT_NIGHT_THRESHOLD) -> int:
    """1 if the mean pixel luminance falls below the threshold, else 0."""
    return int(float(img.pixels.mean()) < luminance_threshold)
