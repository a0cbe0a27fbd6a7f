"""Readers and writers for every on-disk format.

Formats (all little-endian, all UTF-8 text unless noted):

* detections: JSON lines, one object per frame,
  ``{"seq": str, "idx": int, "dets": [{"cls": str, "score": float,
  "bbox": [x_min, y_min, x_max, y_max]}]}``
* embeddings: JSON lines ``{"seq": str, "idx": int, "vec": [floats]}``, or a
  flat binary variant: header ``magic b"FSE1", dim u32, count u32`` followed
  by ``count`` records of ``[seq_len u16][seq utf-8][idx u32][dim float32]``
* tags: CSV with header ``seq,idx,time_of_day,lighting,scene,P,V,B,U,U_bar``
  (summary columns blank for the spreading path)
* selection / key-frame manifests: CSV ``seq,idx,ssim_to_prev_ref,blur_norm``
  (metric columns blank where not applicable)
* per-run label matrix: CSV ``seq,idx,run_0..run_{n-1}`` with composite
  labels serialized as ``time-lighting-scene`` code triples
* dataset manifest: YAML (or JSON) mapping sequences to frames, annotation
  triples and train/test split membership

Floats are serialized with ``repr`` so text round-trips are exact.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from framesift.model import (
    ContentSummary,
    DataFormatError,
    Detection,
    EmbeddingVector,
    FrameDetections,
    FrameRef,
    SceneTag,
)

SCORE_FLOOR = 0.2

EMBEDDING_MAGIC = b"FSE1"
PCA_MAGIC = b"FSPC"

TAGS_HEADER = ["seq", "idx", "time_of_day", "lighting", "scene", "P", "V", "B", "U", "U_bar"]
KEYFRAME_HEADER = ["seq", "idx", "ssim_to_prev_ref", "blur_norm"]


def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


# ---------------------------------------------------------------------------
# detections
# ---------------------------------------------------------------------------

def read_detections(path, score_floor: float = SCORE_FLOOR) -> list[FrameDetections]:
    """Read a detection JSON-lines file.

    Detections with score <= ``score_floor`` are dropped at ingestion.
    Frames are returned sorted by (sequence_id, frame_index); duplicate
    frame keys are an error.
    """
    path = Path(path)
    frames: list[FrameDetections] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"malformed JSON: {exc.msg}", path=path, line=lineno) from exc
            try:
                seq = record["seq"]
                idx = record["idx"]
                raw_dets = record.get("dets", [])
            except (KeyError, TypeError) as exc:
                raise DataFormatError(f"missing field: {exc}", path=path, line=lineno) from exc
            dets = []
            for d in raw_dets:
                try:
                    det = Detection(
                        class_name=d["cls"],
                        score=float(d["score"]),
                        bbox=tuple(float(v) for v in d["bbox"]),
                    )
                except (KeyError, TypeError) as exc:
                    raise DataFormatError(f"malformed detection: {exc}", path=path, line=lineno) from exc
                except ValueError as exc:
                    raise DataFormatError(str(exc), path=path, line=lineno) from exc
                if det.score > score_floor:
                    dets.append(det)
            try:
                frame = FrameRef(sequence_id=str(seq), frame_index=int(idx))
            except ValueError as exc:
                raise DataFormatError(str(exc), path=path, line=lineno) from exc
            frames.append(FrameDetections(frame=frame, detections=tuple(dets)))
    frames.sort(key=lambda f: f.frame.key)
    for a, b in zip(frames, frames[1:]):
        if a.frame.key == b.frame.key:
            raise DataFormatError(f"duplicate frame {a.frame.key}", path=path)
    return frames


def write_detections(frames, path) -> None:
    """Write frames of detections as JSON lines (inverse of read_detections)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for fd in frames:
            record = {
                "seq": fd.frame.sequence_id,
                "idx": fd.frame.frame_index,
                "dets": [
                    {"cls": d.class_name, "score": d.score, "bbox": list(d.bbox)}
                    for d in fd.detections
                ],
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# embeddings
# ---------------------------------------------------------------------------

def read_embeddings(path) -> list[EmbeddingVector]:
    """Read an embedding JSON-lines file, in file order.

    All rows must share one dimensionality and contain only finite values.
    """
    path = Path(path)
    vectors: list[EmbeddingVector] = []
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                seq = record["seq"]
                idx = record["idx"]
                vec = record["vec"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataFormatError(f"malformed row: {exc}", path=path, line=lineno) from exc
            values = np.asarray(vec, dtype=np.float64)
            if dim is None:
                dim = values.size
            elif values.size != dim:
                raise DataFormatError(
                    f"dim mismatch: expected {dim}, got {values.size}", path=path, line=lineno
                )
            try:
                vectors.append(
                    EmbeddingVector(frame=FrameRef(str(seq), int(idx)), values=values)
                )
            except ValueError as exc:
                raise DataFormatError(str(exc), path=path, line=lineno) from exc
    return vectors


def write_embeddings(vectors, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ev in vectors:
            record = {
                "seq": ev.frame.sequence_id,
                "idx": ev.frame.frame_index,
                "vec": [float(v) for v in ev.values],
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def write_embeddings_binary(vectors, path) -> None:
    """Write the flat binary embedding variant (float32 values)."""
    vectors = list(vectors)
    dim = vectors[0].dim if vectors else 0
    with open(path, "wb") as fh:
        fh.write(EMBEDDING_MAGIC)
        fh.write(struct.pack("<II", dim, len(vectors)))
        for ev in vectors:
            if ev.dim != dim:
                raise DataFormatError(f"dim mismatch: expected {dim}, got {ev.dim}", path=path)
            seq = ev.frame.sequence_id.encode("utf-8")
            fh.write(struct.pack("<H", len(seq)))
            fh.write(seq)
            fh.write(struct.pack("<I", ev.frame.frame_index))
            fh.write(np.asarray(ev.values, dtype="<f4").tobytes())


def read_embeddings_binary(path) -> list[EmbeddingVector]:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != EMBEDDING_MAGIC:
            raise DataFormatError(f"bad magic {magic!r}", path=path)
        dim, count = struct.unpack("<II", fh.read(8))
        vectors = []
        for _ in range(count):
            (seq_len,) = struct.unpack("<H", fh.read(2))
            seq = fh.read(seq_len).decode("utf-8")
            (idx,) = struct.unpack("<I", fh.read(4))
            raw = fh.read(4 * dim)
            if len(raw) != 4 * dim:
                raise DataFormatError("truncated record", path=path)
            values = np.frombuffer(raw, dtype="<f4").astype(np.float64)
            vectors.append(EmbeddingVector(frame=FrameRef(seq, idx), values=values))
    return vectors


# ---------------------------------------------------------------------------
# tags
# ---------------------------------------------------------------------------

def write_tags(tags, path) -> None:
    """Write per-frame metadata rows.

    ``tags`` holds (FrameRef, SceneTag, ContentSummary | None) triples; the
    summary columns are left blank when no summary is given (spreading path).
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TAGS_HEADER)
        for frame, tag, summary in tags:
            t, l, s = tag.codes
            if summary is None:
                row = [frame.sequence_id, frame.frame_index, t, l, s, "", "", "", "", ""]
            else:
                row = [
                    frame.sequence_id,
                    frame.frame_index,
                    t,
                    l,
                    s,
                    summary.P,
                    summary.V,
                    summary.B,
                    _fmt(summary.U),
                    _fmt(summary.U_bar),
                ]
            writer.writerow(row)


def read_tags(path) -> list[tuple[FrameRef, SceneTag, ContentSummary | None]]:
    path = Path(path)
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("missing header", path=path) from None
        if header != TAGS_HEADER:
            raise DataFormatError(f"unexpected header {header}", path=path)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(TAGS_HEADER):
                raise DataFormatError(f"expected {len(TAGS_HEADER)} columns, got {len(row)}", path=path, line=lineno)
            try:
                frame = FrameRef(row[0], int(row[1]))
                tag = SceneTag.from_codes(int(row[2]), int(row[3]), int(row[4]))
                if row[5] == "":
                    summary = None
                else:
                    summary = ContentSummary(
                        frame=frame,
                        P=int(row[5]),
                        V=int(row[6]),
                        B=int(row[7]),
                        U=float(row[8]),
                        U_bar=float(row[9]) if row[9] != "" else None,
                    )
            except ValueError as exc:
                raise DataFormatError(str(exc), path=path, line=lineno) from exc
            out.append((frame, tag, summary))
    return out


# ---------------------------------------------------------------------------
# key-frame / selection manifests
# ---------------------------------------------------------------------------

def write_keyframes(rows, path) -> None:
    """Write a selection or key-frame manifest.

    ``rows`` holds (FrameRef, ssim_to_prev_ref | None, blur_norm | None).
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(KEYFRAME_HEADER)
        for frame, ssim_val, blur_val in rows:
            writer.writerow(
                [frame.sequence_id, frame.frame_index, _fmt(ssim_val), _fmt(blur_val)]
            )


def read_keyframes(path) -> list[tuple[FrameRef, float | None, float | None]]:
    path = Path(path)
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != KEYFRAME_HEADER:
            raise DataFormatError(f"unexpected header {header}", path=path)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                frame = FrameRef(row[0], int(row[1]))
                ssim_val = float(row[2]) if row[2] != "" else None
                blur_val = float(row[3]) if row[3] != "" else None
            except (ValueError, IndexError) as exc:
                raise DataFormatError(str(exc), path=path, line=lineno) from exc
            out.append((frame, ssim_val, blur_val))
    return out


# ---------------------------------------------------------------------------
# per-run label matrix
# ---------------------------------------------------------------------------

def write_run_labels(frames, runs, path) -> None:
    """Write the per-run label matrix: one row per frame, one column per run.

    ``runs[r][i]`` is the SceneTag run ``r`` assigned to ``frames[i]``,
    serialized as a ``time-lighting-scene`` code triple.
    """
    n_runs = len(runs)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["seq", "idx"] + [f"run_{r}" for r in range(n_runs)])
        for i, frame in enumerate(frames):
            cells = ["-".join(str(c) for c in runs[r][i].codes) for r in range(n_runs)]
            writer.writerow([frame.sequence_id, frame.frame_index] + cells)


# ---------------------------------------------------------------------------
# night flags
# ---------------------------------------------------------------------------

def read_night_flags(path) -> dict[tuple[str, int], int]:
    """Read a ``seq,idx,night`` CSV into a frame-key -> flag mapping."""
    path = Path(path)
    flags: dict[tuple[str, int], int] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["seq", "idx", "night"]:
            raise DataFormatError(f"unexpected header {header}", path=path)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                flag = int(row[2])
                if flag not in (0, 1):
                    raise ValueError(f"night flag must be 0 or 1, got {flag}")
                flags[(row[0], int(row[1]))] = flag
            except (ValueError, IndexError) as exc:
                raise DataFormatError(str(exc), path=path, line=lineno) from exc
    return flags


def write_night_flags(flags: dict[tuple[str, int], int], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["seq", "idx", "night"])
        for (seq, idx), flag in sorted(flags.items()):
            writer.writerow([seq, idx, flag])


# ---------------------------------------------------------------------------
# dataset manifest
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SequenceEntry:
    """One video sequence: its frames, split membership and annotation."""

    sequence_id: str
    split: str
    frames: tuple[FrameRef, ...] = ()
    tag: SceneTag | None = None

    def __post_init__(self):
        if self.split not in ("train", "test"):
            raise ValueError(f"split must be 'train' or 'test', got {self.split!r}")
        object.__setattr__(self, "frames", tuple(self.frames))


@dataclass(frozen=True)
class Manifest:
    sequences: tuple[SequenceEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "sequences", tuple(self.sequences))
        seen = set()
        for entry in self.sequences:
            if entry.sequence_id in seen:
                raise ValueError(f"duplicate sequence {entry.sequence_id!r}")
            seen.add(entry.sequence_id)

    def split(self, name: str) -> list[SequenceEntry]:
        return [s for s in self.sequences if s.split == name]

    def entry(self, sequence_id: str) -> SequenceEntry:
        for s in self.sequences:
            if s.sequence_id == sequence_id:
                return s
        raise KeyError(sequence_id)


_IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


def _frames_from_dir(sequence_id: str, directory: Path) -> list[FrameRef]:
    paths = sorted(
        p for p in directory.iterdir() if p.suffix.lower() in _IMAGE_SUFFIXES
    )
    frames = []
    for position, p in enumerate(paths):
        stem = p.stem
        idx = int(stem) if stem.isdigit() else position
        frames.append(FrameRef(sequence_id, idx, image_path=p))
    frames.sort(key=lambda f: f.frame_index)
    return frames


def load_manifest(path) -> Manifest:
    """Load a dataset manifest (YAML or JSON).

    Schema::

        sequences:
          - id: seq-a
            split: train            # or test
            tag: {time_of_day: 0, lighting: 0, scene: 0}   # optional
            frames:                 # optional, explicit frame list
              - {idx: 0, image: frames/000.png}            # image optional
            frames_dir: frames/     # optional, alternative to frames

    Relative image paths resolve against the manifest's directory. When
    ``frames_dir`` is given, images are indexed by their numeric filename
    stem (falling back to directory order).
    """
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise DataFormatError(f"malformed manifest: {exc}", path=path) from exc
    if not isinstance(raw, dict) or "sequences" not in raw:
        raise DataFormatError("manifest must contain a 'sequences' list", path=path)
    base = path.parent
    entries = []
    for item in raw["sequences"]:
        try:
            seq_id = str(item["id"])
            split = item.get("split", "test")
            tag = None
            if item.get("tag") is not None:
                t = item["tag"]
                tag = SceneTag.from_codes(
                    int(t["time_of_day"]), int(t["lighting"]), int(t["scene"])
                )
            if "frames" in item:
                frames = []
                for fr in item["frames"]:
                    image = fr.get("image")
                    frames.append(
                        FrameRef(
                            seq_id,
                            int(fr["idx"]),
                            image_path=(base / image) if image else None,
                        )
                    )
                frames.sort(key=lambda f: f.frame_index)
            elif "frames_dir" in item:
                frames = _frames_from_dir(seq_id, base / item["frames_dir"])
            else:
                frames = []
            entries.append(
                SequenceEntry(sequence_id=seq_id, split=str(split), frames=frames, tag=tag)
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataFormatError(f"malformed sequence entry: {exc}", path=path) from exc
    try:
        return Manifest(sequences=tuple(entries))
    except ValueError as exc:
        raise DataFormatError(str(exc), path=path) from exc


def dump_manifest(manifest: Manifest, path) -> None:
    """Write a manifest back out as YAML (image paths kept as given)."""
    doc = {"sequences": []}
    for entry in manifest.sequences:
        item: dict = {"id": entry.sequence_id, "split": entry.split}
        if entry.tag is not None:
            t, l, s = entry.tag.codes
            item["tag"] = {"time_of_day": t, "lighting": l, "scene": s}
        if entry.frames:
            item["frames"] = [
                {"idx": f.frame_index}
                | ({"image": str(f.image_path)} if f.image_path else {})
                for f in entry.frames
            ]
        doc["sequences"].append(item)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)
