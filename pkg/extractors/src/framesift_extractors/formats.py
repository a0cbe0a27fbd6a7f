"""Writers for the pipeline's detection and embedding file formats.

These mirror the formats the pipeline package reads:

* detections: JSON lines, one ``{"seq", "idx", "dets"}`` object per frame,
  keys sorted, each detection ``{"bbox": [x1, y1, x2, y2], "cls": str,
  "score": float}``;
* embeddings: JSON lines ``{"idx", "seq", "vec"}``, or binary with header
  ``magic b"FSE1", dim u32, count u32`` and records
  ``[seq_len u16][seq utf-8][idx u32][dim float32]``;
* extraction errors: a JSON-lines sidecar ``{"seq", "idx", "error"}``.

Floats serialize through ``json.dumps`` (shortest repr), so identical
inputs produce identical bytes.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

EMBEDDING_MAGIC = b"FSE1"


@dataclass(frozen=True)
class DetectionOut:
    class_name: str
    score: float
    bbox: tuple[float, float, float, float]

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")
        x1, y1, x2, y2 = self.bbox
        if not (x1 < x2 and y1 < y2):
            raise ValueError(f"bbox must have positive extent, got {self.bbox}")


def write_detection_file(rows, path) -> None:
    """``rows`` holds (seq, idx, [DetectionOut, ...]) triples, one per frame."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for seq, idx, dets in rows:
            record = {
                "seq": seq,
                "idx": idx,
                "dets": [
                    {
                        "cls": d.class_name,
                        "score": float(d.score),
                        "bbox": [float(v) for v in d.bbox],
                    }
                    for d in dets
                ],
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def write_embedding_file(rows, path) -> None:
    """``rows`` holds (seq, idx, vector) triples; JSON-lines output."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for seq, idx, vec in rows:
            record = {
                "seq": seq,
                "idx": idx,
                "vec": [float(v) for v in vec],
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def write_embedding_binary(rows, path) -> None:
    rows = list(rows)
    dim = len(rows[0][2]) if rows else 0
    with open(path, "wb") as fh:
        fh.write(EMBEDDING_MAGIC)
        fh.write(struct.pack("<II", dim, len(rows)))
        for seq, idx, vec in rows:
            if len(vec) != dim:
                raise ValueError(f"dim mismatch: expected {dim}, got {len(vec)}")
            encoded = seq.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", idx))
            fh.write(np.asarray(vec, dtype="<f4").tobytes())


def write_error_sidecar(errors, path) -> None:
    """``errors`` holds (seq, idx, message) triples; written next to the output."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for seq, idx, message in errors:
            fh.write(
                json.dumps({"seq": seq, "idx": idx, "error": message}, sort_keys=True)
                + "\n"
            )
