"""The two extraction operations: detections and embeddings.

Both walk the frames of a dataset manifest, run a registered model on each
image and write the pipeline's file formats. Inference is strictly
per-image (never padded into batches), so one frame's record can never
depend on which other frames are present; ``batch_size`` only sets how
often the optional progress callback fires. Torch is pinned to one thread
during extraction so repeated runs are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from framesift_extractors import formats
from framesift_extractors.manifest import FrameRecord, list_frames
from framesift_extractors.models import (
    ContrastiveEncoder,
    build_detector,
    build_embedder,
    class_name,
)

EMBEDDING_LAYERS = tuple(ContrastiveEncoder.LAYER_DIMS)


@dataclass(frozen=True)
class ExtractorJob:
    """One extraction task: which frames, which model, where to write."""

    manifest_path: Path
    model_id: str
    output_path: Path
    score_floor: float = 0.2
    batch_size: int = 8

    def __post_init__(self):
        object.__setattr__(self, "manifest_path", Path(self.manifest_path))
        object.__setattr__(self, "output_path", Path(self.output_path))
        if not 0.0 <= self.score_floor <= 1.0:
            raise ValueError(f"score_floor must be in [0, 1], got {self.score_floor}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be positive, got {self.batch_size}")

    @property
    def error_path(self) -> Path:
        return self.output_path.with_name(self.output_path.name + ".errors.jsonl")


@dataclass(frozen=True)
class ExtractionReport:
    """What an extraction run produced: record count and per-frame failures."""

    output_path: Path
    frames_written: int
    errors: tuple[tuple[str, int, str], ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.errors


def load_rgb_tensor(path) -> torch.Tensor:
    """Decode an image file to a float32 CHW tensor in [0, 1]."""
    with Image.open(path) as img:
        rgb = img.convert("RGB")
        array = np.asarray(rgb, dtype=np.float32) / 255.0
    return torch.from_numpy(array).permute(2, 0, 1).contiguous()


def _load_frame(record: FrameRecord) -> torch.Tensor:
    if record.image_path is None:
        raise FileNotFoundError("no image path in manifest")
    if not record.image_path.is_file():
        raise FileNotFoundError(f"image file not found: {record.image_path}")
    return load_rgb_tensor(record.image_path)


def _frame_detections(model, names, image: torch.Tensor, score_floor: float):
    with torch.inference_mode():
        output = model([image])[0]
    dets = []
    for box, label, score in zip(output["boxes"], output["labels"], output["scores"]):
        s = float(score)
        if s <= score_floor:
            continue
        x1, y1, x2, y2 = (float(v) for v in box)
        if not (x1 < x2 and y1 < y2):
            # degenerate boxes (clipped to zero extent) carry no usable region
            continue
        dets.append(
            formats.DetectionOut(
                class_name=class_name(int(label), names),
                score=s,
                bbox=(x1, y1, x2, y2),
            )
        )
    return dets


def extract_detections(job: ExtractorJob, progress=None) -> ExtractionReport:
    """Run the detector over every manifest frame; write detection JSON lines.

    Frames that fail to load produce an error entry in a ``.errors.jsonl``
    sidecar instead of a record; the main output stays valid either way.
    ``progress(done, total)`` is called after every ``batch_size`` frames.
    """
    torch.set_num_threads(1)
    frames = list_frames(job.manifest_path)
    model, names = build_detector(job.model_id)
    rows = []
    errors: list[tuple[str, int, str]] = []
    for done, record in enumerate(frames, start=1):
        try:
            image = _load_frame(record)
        except (OSError, ValueError) as exc:
            errors.append((record.sequence_id, record.frame_index, str(exc)))
        else:
            dets = _frame_detections(model, names, image, job.score_floor)
            rows.append((record.sequence_id, record.frame_index, dets))
        if progress is not None and done % job.batch_size == 0:
            progress(done, len(frames))
    formats.write_detection_file(rows, job.output_path)
    if errors:
        formats.write_error_sidecar(errors, job.error_path)
    return ExtractionReport(
        output_path=job.output_path, frames_written=len(rows), errors=tuple(errors)
    )


def extract_embeddings(
    job: ExtractorJob, layer: str = "last", progress=None
) -> ExtractionReport:
    """Embed every manifest frame with the selected feature layer.

    ``layer`` picks the flat feature tap: ``last`` (128), ``penultimate``
    (256) or ``backbone_2048`` (2048). An ``output_path`` ending in ``.bin``
    selects the binary embedding format, anything else JSON lines.
    """
    if layer not in EMBEDDING_LAYERS:
        raise ValueError(f"layer must be one of {EMBEDDING_LAYERS}, got {layer!r}")
    torch.set_num_threads(1)
    frames = list_frames(job.manifest_path)
    model = build_embedder(job.model_id)
    rows = []
    errors: list[tuple[str, int, str]] = []
    for done, record in enumerate(frames, start=1):
        try:
            image = _load_frame(record)
        except (OSError, ValueError) as exc:
            errors.append((record.sequence_id, record.frame_index, str(exc)))
        else:
            with torch.inference_mode():
                features = model.features(image.unsqueeze(0))[layer]
            vector = features.squeeze(0).double().numpy()
            rows.append((record.sequence_id, record.frame_index, vector))
        if progress is not None and done % job.batch_size == 0:
            progress(done, len(frames))
    if job.output_path.suffix == ".bin":
        formats.write_embedding_binary(rows, job.output_path)
    else:
        formats.write_embedding_file(rows, job.output_path)
    if errors:
        formats.write_error_sidecar(errors, job.error_path)
    return ExtractionReport(
        output_path=job.output_path, frames_written=len(rows), errors=tuple(errors)
    )
