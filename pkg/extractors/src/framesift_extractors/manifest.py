"""Minimal reader for the dataset-manifest YAML consumed by the pipeline.

Schema (the subset extraction needs)::

    sequences:
      - id: seq-a
        frames:                 # explicit frame list ...
          - {idx: 0, image: frames/000.png}
        frames_dir: frames/     # ... or a directory of numbered images

Relative image paths resolve against the manifest's directory. When
``frames_dir`` is given, images are indexed by their numeric filename stem,
falling back to directory order. Split/tag annotations are ignored here;
extraction covers every listed frame.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import yaml

_IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


@dataclass(frozen=True)
class FrameRecord:
    sequence_id: str
    frame_index: int
    image_path: Path | None

    def __post_init__(self):
        if self.frame_index < 0:
            raise ValueError(f"frame_index must be >= 0, got {self.frame_index}")

    @property
    def key(self) -> tuple[str, int]:
        return (self.sequence_id, self.frame_index)


def _frames_from_dir(seq_id: str, directory: Path) -> list[FrameRecord]:
    paths = sorted(
        p for p in directory.iterdir() if p.suffix.lower() in _IMAGE_SUFFIXES
    )
    frames = []
    for position, p in enumerate(paths):
        idx = int(p.stem) if p.stem.isdigit() else position
        frames.append(FrameRecord(seq_id, idx, p))
    frames.sort(key=lambda f: f.frame_index)
    return frames


def list_frames(manifest_path) -> list[FrameRecord]:
    """All frames of all sequences, in manifest order."""
    manifest_path = Path(manifest_path)
    with open(manifest_path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict) or "sequences" not in raw:
        raise ValueError(f"{manifest_path}: manifest must contain a 'sequences' list")
    base = manifest_path.parent
    frames: list[FrameRecord] = []
    seen: set[tuple[str, int]] = set()
    for item in raw["sequences"]:
        seq_id = str(item["id"])
        if "frames" in item:
            listed = []
            for fr in item["frames"]:
                image = fr.get("image")
                listed.append(
                    FrameRecord(
                        seq_id,
                        int(fr["idx"]),
                        (base / image) if image else None,
                    )
                )
            listed.sort(key=lambda f: f.frame_index)
        elif "frames_dir" in item:
            listed = _frames_from_dir(seq_id, base / item["frames_dir"])
        else:
            listed = []
        for record in listed:
            if record.key in seen:
                raise ValueError(f"{manifest_path}: duplicate frame {record.key}")
            seen.add(record.key)
        frames.extend(listed)
    return frames
