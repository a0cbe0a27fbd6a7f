"""Synthetic-data helpers shared across test modules."""

from __future__ import annotations

import numpy as np
from PIL import Image

from framesift.imageops import GrayImage
from framesift.model import FrameRef, SceneTag

# Acceptance tests append (criterion, passed, detail) records here; the
# terminal-summary hook in conftest prints one PASS/FAIL line per criterion.
ACCEPTANCE_RECORDS: list[tuple[str, bool, str]] = []


def frame(seq: str, idx: int, image_path=None) -> FrameRef:
    return FrameRef(sequence_id=seq, frame_index=idx, image_path=image_path)


def tag(t: int, l: int, s: int) -> SceneTag:
    return SceneTag.from_codes(t, l, s)


def constant_image(value: float, h: int = 16, w: int = 16) -> GrayImage:
    return GrayImage(np.full((h, w), value, dtype=np.float64))


def noise_image(rng, h: int = 16, w: int = 16) -> GrayImage:
    return GrayImage(rng.random((h, w)))


def checkerboard(h: int = 16, w: int = 16, period: int = 2) -> GrayImage:
    rows = (np.arange(h) // period)[:, None]
    cols = (np.arange(w) // period)[None, :]
    return GrayImage(((rows + cols) % 2).astype(np.float64))


def save_gray_png(img: GrayImage, path) -> None:
    arr = np.round(img.pixels * 255.0).astype(np.uint8)
    Image.fromarray(arr, mode="L").convert("RGB").save(path)


def changepoint_corpus(
    seed: int, n: int = 50, block: int = 10, h: int = 24, w: int = 24, jitter: float = 0.1
) -> list[GrayImage]:
    """Frames in blocks of near-duplicates with abrupt changes between blocks.

    Each block shares a random mid-contrast base image; per-frame Gaussian
    jitter keeps within-block similarity high but below 1, so selection
    density responds smoothly to the similarity threshold.
    """
    rng = np.random.default_rng(seed)
    n_blocks = (n + block - 1) // block
    bases = [0.25 + 0.5 * rng.random((h, w)) for _ in range(n_blocks)]
    frames = []
    for i in range(n):
        noisy = bases[i // block] + jitter * rng.standard_normal((h, w))
        frames.append(GrayImage(np.clip(noisy, 0.0, 1.0)))
    return frames
