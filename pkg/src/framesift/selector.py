"""Structural frame selection and blur-quality filtering.

The structural selector walks a sequence comparing frames against a moving
reference: starting from the first frame, it probes ahead in fixed steps and
promotes the first frame whose SSIM to the reference drops below alpha to be
the new reference, collecting every reference along the way. Lower alpha
keeps fewer frames. The probe index is clamped to the final frame so the
walk always terminates cleanly at the sequence end.

Quality filtering then drops frames whose batch-normalized sharpness falls
below a threshold.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from framesift.imageops import GrayImage, blur_score, load_gray, normalize_blur, ssim
from framesift.model import FrameRef, SelectorConfig


@dataclass(frozen=True)
class SelectionResult:
    """An ordered frame subset plus the fraction of the input it retains.

    Frames are strictly increasing in frame_index within each sequence.
    For raw structural selection the first frame of the sequence is always
    present; quality filtering may drop it.
    """

    selected: tuple[FrameRef, ...]
    retained_fraction: float

    def __post_init__(self):
        object.__setattr__(self, "selected", tuple(self.selected))
        if not 0.0 <= self.retained_fraction <= 1.0:
            raise ValueError("retained_fraction must be in [0, 1]")
        by_seq: dict[str, int] = {}
        for ref in self.selected:
            prev = by_seq.get(ref.sequence_id)
            if prev is not None and ref.frame_index <= prev:
                raise ValueError(
                    f"selected frames must be strictly increasing, got "
                    f"{ref.frame_index} after {prev} in {ref.sequence_id!r}"
                )
            by_seq[ref.sequence_id] = ref.frame_index


def _resolve_images(
    frames: Sequence[FrameRef], images: Sequence[GrayImage] | None
) -> list[GrayImage]:
    if images is not None:
        if len(images) != len(frames):
            raise ValueError(
                f"got {len(images)} images for {len(frames)} frames"
            )
        return list(images)
    loaded = []
    for ref in frames:
        if ref.image_path is None:
            raise ValueError(
                f"frame {ref.key} has no image path and no image was supplied"
            )
        try:
            loaded.append(load_gray(ref.image_path))
        except FileNotFoundError as exc:
            raise FileNotFoundError(f"frame {ref.key}: {exc}") from exc
    return loaded


def select_structural(
    frames: Sequence[FrameRef],
    cfg: SelectorConfig,
    images: Sequence[GrayImage] | None = None,
) -> SelectionResult:
    """Select structurally dissimilar frames from one ordered sequence.

    ``images`` may supply pre-loaded grayscale frames aligned with
    ``frames``; otherwise each frame's image_path is loaded from disk.
    Returns the selected frames (always including the first) with their
    SSIM to the previous reference recorded by the caller via
    ``structural_scores``.
    """
    if not frames:
        raise ValueError("frames must be nonempty")
    imgs = _resolve_images(frames, images)

    last = len(frames) - 1
    selected = [0]
    ref = 0
    j = 0
    while j < last:
        # probe forward from the current reference
        found = None
        while True:
            j += cfg.step
            if j >= last:
                j = last
            s = ssim(imgs[ref], imgs[j])
            if s < cfg.alpha:
                found = j
                break
            if j == last:
                break
        if found is None:
            break
        ref = found
        selected.append(found)
    refs = tuple(frames[i] for i in selected)
    return SelectionResult(selected=refs, retained_fraction=len(selected) / len(frames))


def structural_scores(
    frames: Sequence[FrameRef],
    result: SelectionResult,
    images: Sequence[GrayImage] | None = None,
) -> list[float | None]:
    """SSIM of each selected frame to the previous reference (None for the first)."""
    imgs = _resolve_images(frames, images)
    index_of = {ref.key: i for i, ref in enumerate(frames)}
    scores: list[float | None] = []
    prev = None
    for ref in result.selected:
        i = index_of[ref.key]
        scores.append(None if prev is None else ssim(imgs[prev], imgs[i]))
        prev = i
    return scores


def filter_quality(
    frames: Sequence[FrameRef],
    blur_threshold: float,
    images: Sequence[GrayImage] | None = None,
) -> list[FrameRef]:
    """Keep frames whose batch-normalized sharpness is >= the threshold.

    Order is preserved; an empty input yields an empty output. Because the
    normalization is per batch, a batch of identical frames normalizes to
    0.5 everywhere and is kept in full for thresholds up to 0.5.
    """
    frames = list(frames)
    if not frames:
        return []
    imgs = _resolve_images(frames, images)
    normalized = normalize_blur([blur_score(im) for im in imgs])
    return [ref for ref, q in zip(frames, normalized) if q >= blur_threshold]


def quality_scores(
    frames: Sequence[FrameRef], images: Sequence[GrayImage] | None = None
) -> list[float]:
    """Batch-normalized sharpness of each frame."""
    frames = list(frames)
    if not frames:
        return []
    imgs = _resolve_images(frames, images)
    return normalize_blur([blur_score(im) for im in imgs])


def select_training_subset(
    sequences: Sequence[Sequence[FrameRef]],
    cfg: SelectorConfig,
    images: Sequence[Sequence[GrayImage]] | None = None,
) -> SelectionResult:
    """Structural selection followed by quality filtering, per sequence.

    Results are concatenated in input order; retained_fraction is measured
    against the total input frame count.
    """
    total = sum(len(seq) for seq in sequences)
    if total == 0:
        raise ValueError("sequences must contain at least one frame")
    kept: list[FrameRef] = []
    for i, seq in enumerate(sequences):
        seq = list(seq)
        seq_images = list(images[i]) if images is not None else None
        structural = select_structural(seq, cfg, images=seq_images)
        if seq_images is not None:
            index_of = {ref.key: k for k, ref in enumerate(seq)}
            sel_images = [seq_images[index_of[ref.key]] for ref in structural.selected]
        else:
            sel_images = None
        kept.extend(
            filter_quality(structural.selected, cfg.blur_threshold, images=sel_images)
        )
    return SelectionResult(selected=tuple(kept), retained_fraction=len(kept) / total)
