"""Command-line orchestration of the full pipeline.

Subcommands::

    select           structural frame selection plus blur filtering
    classify-rule    tag frames from detection statistics, peak key-frames
    classify-spread  tag test frames by label spreading, boundary key-frames
    fit-params       cross-validated grid search for the rule thresholds
    keyframes        peak key-frames from an existing tags file
    evaluate         compare predicted tags against ground truth

Every option may come from a YAML config file (``--config``, or the
``FRAMESIFT_CONFIG`` environment variable) whose keys match the option
names with underscores; explicit flags win. All results are written as
files under ``--output-dir`` so commands compose; stdout carries a short
human summary only. Re-running any command on identical inputs rewrites
identical bytes.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import yaml

from framesift import fileio
from framesift.evaluation import keyframe_overlap, score
from framesift.fileio import (
    EMBEDDING_MAGIC,
    Manifest,
    load_manifest,
    read_detections,
    read_embeddings,
    read_embeddings_binary,
    read_night_flags,
    read_tags,
    write_keyframes,
    write_run_labels,
    write_tags,
)
from framesift.imageops import load_gray, night_flag
from framesift.model import (
    BoundaryConfig,
    DataFormatError,
    FrameRef,
    RuleParams,
    Scene,
    SelectorConfig,
    SpreadConfig,
)
from framesift.rules import (
    COCO_VOCABULARY,
    ClassVocabulary,
    RuleOutcome,
    classify_sequence,
    fit_rule_params,
    keyframes_by_peaks,
    summarize_frame,
)
from framesift.selector import (
    quality_scores,
    select_structural,
    structural_scores,
)
from framesift.spreading import (
    fit_pca,
    keyframes_by_instability,
    save_pca,
    spread_batched,
)

CONFIG_ENV_VAR = "FRAMESIFT_CONFIG"

_DEF_SELECTOR = SelectorConfig()
_DEF_RULES = RuleParams()
_DEF_SPREAD = SpreadConfig()
_DEF_BOUNDARY = BoundaryConfig()


@dataclass(frozen=True)
class PipelineConfig:
    """Resolved settings for one command run.

    Input paths are validated at construction, before any processing.
    """

    output_dir: Path
    manifest_path: Path | None = None
    detections_path: Path | None = None
    embeddings_path: Path | None = None
    selector: SelectorConfig = _DEF_SELECTOR
    rules: RuleParams = _DEF_RULES
    spread: SpreadConfig = _DEF_SPREAD
    boundary: BoundaryConfig = _DEF_BOUNDARY
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")
        for label, path in (
            ("manifest", self.manifest_path),
            ("detections", self.detections_path),
            ("embeddings", self.embeddings_path),
        ):
            if path is not None and not Path(path).is_file():
                raise ValueError(f"{label} file not found: {path}")


# ---------------------------------------------------------------------------
# option resolution
# ---------------------------------------------------------------------------

def _config_mapping(args) -> dict:
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV_VAR)
    if not path:
        return {}
    path = Path(path)
    if not path.is_file():
        raise ValueError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ValueError(f"config file must hold a mapping: {path}")
    return raw


def _resolver(args) -> Callable:
    file_cfg = _config_mapping(args)

    def get(name: str, default=None):
        value = getattr(args, name, None)
        if value is None:
            value = file_cfg.get(name, default)
        return value

    return get


def _pipeline_config(args, get) -> PipelineConfig:
    output_dir = get("output_dir")
    if output_dir is None:
        raise ValueError("--output-dir is required (flag or config file)")

    def path_or_none(name):
        value = get(name)
        return Path(value) if value is not None else None

    selector = SelectorConfig(
        alpha=float(get("alpha", _DEF_SELECTOR.alpha)),
        step=int(get("step", _DEF_SELECTOR.step)),
        blur_threshold=float(get("blur_threshold", _DEF_SELECTOR.blur_threshold)),
    )
    rules = RuleParams(
        beta=float(get("beta", _DEF_RULES.beta)),
        delta=float(get("delta", _DEF_RULES.delta)),
        eta=float(get("eta", _DEF_RULES.eta)),
        vehicle_city_threshold=int(
            get("vehicle_city_threshold", _DEF_RULES.vehicle_city_threshold)
        ),
    )
    spread = SpreadConfig(
        gamma=float(get("gamma", _DEF_SPREAD.gamma)),
        nu=float(get("nu", _DEF_SPREAD.nu)),
        max_steps=int(get("max_steps", _DEF_SPREAD.max_steps)),
        convergence_tol=float(get("convergence_tol", _DEF_SPREAD.convergence_tol)),
        kernel=str(get("kernel", _DEF_SPREAD.kernel)),
        knn_k=int(get("knn_k", _DEF_SPREAD.knn_k)),
        batch_limit=int(get("batch_limit", _DEF_SPREAD.batch_limit)),
        pca_dims=int(get("pca_dims", _DEF_SPREAD.pca_dims)),
    )
    boundary = BoundaryConfig(
        n_runs=int(get("n_runs", _DEF_BOUNDARY.n_runs)),
        gamma_grid=tuple(
            float(g) for g in get("gamma_grid", _DEF_BOUNDARY.gamma_grid)
        ),
        nu_grid=tuple(float(v) for v in get("nu_grid", _DEF_BOUNDARY.nu_grid)),
    )
    return PipelineConfig(
        output_dir=Path(output_dir),
        manifest_path=path_or_none("manifest"),
        detections_path=path_or_none("detections"),
        embeddings_path=path_or_none("embeddings"),
        selector=selector,
        rules=rules,
        spread=spread,
        boundary=boundary,
        seed=int(get("seed", 0)),
        threads=int(get("threads", 1)),
    )


def _prepare_output_dir(pc: PipelineConfig) -> Path:
    pc.output_dir.mkdir(parents=True, exist_ok=True)
    return pc.output_dir


def _map_sequences(pc: PipelineConfig, work: Callable, items: Sequence) -> list:
    """Run per-sequence work, optionally across a thread pool, order kept."""
    if pc.threads == 1 or len(items) <= 1:
        return [work(item) for item in items]
    with ThreadPoolExecutor(max_workers=pc.threads) as pool:
        return list(pool.map(work, items))


# ---------------------------------------------------------------------------
# shared input plumbing
# ---------------------------------------------------------------------------

def _require_manifest(pc: PipelineConfig) -> Manifest:
    if pc.manifest_path is None:
        raise ValueError("--manifest is required (flag or config file)")
    return load_manifest(pc.manifest_path)


def _manifest_image_map(manifest: Manifest) -> dict[tuple[str, int], Path]:
    return {
        frame.key: frame.image_path
        for entry in manifest.sequences
        for frame in entry.frames
        if frame.image_path is not None
    }


def _check_frame_images(frames: Sequence[FrameRef]) -> None:
    for frame in frames:
        if frame.image_path is None:
            raise ValueError(
                f"frame {frame.sequence_id}/{frame.frame_index} has no image path"
            )
        if not Path(frame.image_path).is_file():
            raise ValueError(f"missing image file: {frame.image_path}")


def _night_flags_for(
    frames: Sequence[FrameRef],
    night_csv: Path | None,
    image_map: dict[tuple[str, int], Path] | None,
) -> list[int]:
    """Night flag per frame, from a CSV if given, else from frame images."""
    if night_csv is not None:
        flags = read_night_flags(night_csv)
        for frame in frames:
            if frame.key not in flags:
                raise ValueError(
                    f"night flags file lacks frame "
                    f"{frame.sequence_id}/{frame.frame_index}"
                )
        return [flags[frame.key] for frame in frames]
    if image_map:
        paths = []
        for frame in frames:
            path = image_map.get(frame.key)
            if path is None:
                raise ValueError(
                    f"no image for frame {frame.sequence_id}/{frame.frame_index}; "
                    "supply --night-flags instead"
                )
            if not path.is_file():
                raise ValueError(f"missing image file: {path}")
            paths.append(path)
        return [night_flag(load_gray(p)) for p in paths]
    raise ValueError(
        "no source of night flags: pass --night-flags CSV, or a --manifest "
        "whose frames list image files"
    )


def _group_by_sequence(frame_detections) -> dict[str, list]:
    groups: dict[str, list] = {}
    for fd in frame_detections:
        groups.setdefault(fd.frame.sequence_id, []).append(fd)
    return groups


def _read_embeddings_any(path):
    with open(path, "rb") as fh:
        magic = fh.read(len(EMBEDDING_MAGIC))
    if magic == EMBEDDING_MAGIC:
        return read_embeddings_binary(path)
    return read_embeddings(path)


def _vocabulary(args) -> ClassVocabulary:
    path = getattr(args, "vocabulary", None)
    if path is None:
        return COCO_VOCABULARY
    return ClassVocabulary.from_file(path)


# ---------------------------------------------------------------------------
# select
# ---------------------------------------------------------------------------

def _select_one_sequence(entry, cfg: SelectorConfig):
    """Select and quality-filter one sequence; returns (rows, total, n_structural)."""
    frames = list(entry.frames)
    images = [load_gray(f.image_path) for f in frames]
    structural = select_structural(frames, cfg, images=images)
    ssims = structural_scores(frames, structural, images=images)
    index_of = {f.key: i for i, f in enumerate(frames)}
    selected_images = [images[index_of[f.key]] for f in structural.selected]
    blurs = quality_scores(structural.selected, images=selected_images)
    rows = [
        (frame, ssim_val, blur_val)
        for frame, ssim_val, blur_val in zip(structural.selected, ssims, blurs)
        if blur_val >= cfg.blur_threshold
    ]
    return rows, len(frames), len(structural.selected)


def cmd_select(args) -> int:
    get = _resolver(args)
    pc = _pipeline_config(args, get)
    manifest = _require_manifest(pc)
    split = get("split", "all")
    entries = list(manifest.sequences) if split == "all" else manifest.split(split)
    entries = [e for e in entries if e.frames]
    if not entries:
        raise ValueError("manifest holds no frames for the requested split")
    for entry in entries:
        _check_frame_images(entry.frames)
    out_dir = _prepare_output_dir(pc)

    sweep = get("alpha_sweep")
    alphas = [pc.selector.alpha] if not sweep else [float(a) for a in sweep]
    summary_rows = []
    for alpha in alphas:
        cfg = replace(pc.selector, alpha=alpha)
        per_seq = _map_sequences(pc, lambda e: _select_one_sequence(e, cfg), entries)
        rows = [row for seq_rows, _, _ in per_seq for row in seq_rows]
        total = sum(n for _, n, _ in per_seq)
        n_structural = sum(n for _, _, n in per_seq)
        n_quality = len(rows)
        if sweep:
            out_path = out_dir / f"selection_alpha_{alpha:g}.csv"
        else:
            out_path = out_dir / "selection.csv"
        write_keyframes(rows, out_path)
        summary_rows.append((alpha, total, n_structural, n_quality))
        print(f"alpha={alpha:g}: structural selection kept {n_structural}/{total} frames")
        print(f"alpha={alpha:g}: quality filter kept {n_quality}/{total} frames")
        print(f"wrote {out_path}")
    if sweep:
        summary_path = out_dir / "selection_sweep.csv"
        with open(summary_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                ["alpha", "total_frames", "structural_count", "quality_count",
                 "retained_fraction"]
            )
            for alpha, total, n_structural, n_quality in summary_rows:
                writer.writerow(
                    [repr(float(alpha)), total, n_structural, n_quality,
                     repr(n_quality / total)]
                )
        print(f"wrote {summary_path}")
    return 0


# ---------------------------------------------------------------------------
# classify-rule
# ---------------------------------------------------------------------------

def _attach_images(outcomes, image_map):
    if not image_map:
        return outcomes
    return [
        replace(
            o, frame=replace(o.frame, image_path=image_map.get(o.frame.key))
        )
        for o in outcomes
    ]


def cmd_classify_rule(args) -> int:
    get = _resolver(args)
    pc = _pipeline_config(args, get)
    if pc.detections_path is None:
        raise ValueError("--detections is required (flag or config file)")
    night_csv = get("night_flags")
    night_csv = Path(night_csv) if night_csv is not None else None
    if night_csv is not None and not night_csv.is_file():
        raise ValueError(f"night flags file not found: {night_csv}")
    image_map = None
    if pc.manifest_path is not None:
        image_map = _manifest_image_map(_require_manifest(pc))
    vocab = _vocabulary(args)
    out_dir = _prepare_output_dir(pc)

    detections = read_detections(pc.detections_path)
    groups = _group_by_sequence(detections)

    def classify_one(item):
        _, fds = item
        frames = [fd.frame for fd in fds]
        flags = _night_flags_for(frames, night_csv, image_map)
        outcomes = classify_sequence(fds, flags, pc.rules, vocab)
        outcomes = _attach_images(outcomes, image_map)
        peaks = keyframes_by_peaks(outcomes, pc.rules.eta, pc.selector)
        return outcomes, peaks

    results = _map_sequences(pc, classify_one, list(groups.items()))
    tag_rows = [
        (o.frame, o.tag, o.summary) for outcomes, _ in results for o in outcomes
    ]
    keyframe_rows = [(f, None, None) for _, peaks in results for f in peaks]

    tags_path = out_dir / "tags.csv"
    keyframes_path = out_dir / "keyframes.csv"
    write_tags(tag_rows, tags_path)
    write_keyframes(keyframe_rows, keyframes_path)
    print(f"tagged {len(tag_rows)} frames across {len(groups)} sequences")
    print(f"flagged {len(keyframe_rows)} peak key-frames")
    print(f"wrote {tags_path}")
    print(f"wrote {keyframes_path}")
    return 0


# ---------------------------------------------------------------------------
# classify-spread
# ---------------------------------------------------------------------------

def cmd_classify_spread(args) -> int:
    get = _resolver(args)
    pc = _pipeline_config(args, get)
    if pc.embeddings_path is None:
        raise ValueError("--embeddings is required (flag or config file)")
    manifest = _require_manifest(pc)
    out_dir = _prepare_output_dir(pc)

    embeddings = _read_embeddings_any(pc.embeddings_path)
    split_of = {e.sequence_id: e.split for e in manifest.sequences}
    tag_of = {e.sequence_id: e.tag for e in manifest.sequences}
    train, test = [], []
    for ev in embeddings:
        seq = ev.frame.sequence_id
        if seq not in split_of:
            raise ValueError(f"sequence {seq!r} is not in the manifest")
        if split_of[seq] == "train":
            tag = tag_of[seq]
            if tag is None:
                raise ValueError(f"training sequence {seq!r} has no tag annotation")
            train.append((ev, tag))
        else:
            test.append(ev)
    if not train:
        raise ValueError("no training embeddings: manifest needs tagged train sequences")

    cfg = pc.spread
    pca = None
    if train[0][0].dim > cfg.pca_dims:
        pca = fit_pca([ev for ev, _ in train], cfg.pca_dims)
        pca_path = out_dir / "pca.bin"
        save_pca(pca, pca_path)
        print(f"wrote {pca_path}")

    predicted = spread_batched(train, test, cfg, pca=pca)
    flagged, run_labels = keyframes_by_instability(
        train, test, pc.boundary, cfg, pca=pca
    )

    tags_path = out_dir / "tags.csv"
    runs_path = out_dir / "run_labels.csv"
    keyframes_path = out_dir / "keyframes.csv"
    write_tags([(ev.frame, tag, None) for ev, tag in zip(test, predicted)], tags_path)
    write_run_labels([ev.frame for ev in test], run_labels, runs_path)
    write_keyframes([(f, None, None) for f in flagged], keyframes_path)
    print(
        f"spread labels from {len(train)} train to {len(test)} test frames; "
        f"flagged {len(flagged)} boundary key-frames"
    )
    for path in (tags_path, runs_path, keyframes_path):
        print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# fit-params
# ---------------------------------------------------------------------------

def cmd_fit_params(args) -> int:
    get = _resolver(args)
    pc = _pipeline_config(args, get)
    if pc.detections_path is None:
        raise ValueError("--detections is required (flag or config file)")
    manifest = _require_manifest(pc)
    night_csv = get("night_flags")
    night_csv = Path(night_csv) if night_csv is not None else None
    if night_csv is not None and not night_csv.is_file():
        raise ValueError(f"night flags file not found: {night_csv}")
    image_map = _manifest_image_map(manifest)
    vocab = _vocabulary(args)
    out_dir = _prepare_output_dir(pc)

    groups = _group_by_sequence(read_detections(pc.detections_path))
    train_pairs = []
    for entry in manifest.split("train"):
        fds = groups.get(entry.sequence_id)
        if not fds:
            raise ValueError(
                f"training sequence {entry.sequence_id!r} has no detections"
            )
        if entry.tag is None:
            raise ValueError(
                f"training sequence {entry.sequence_id!r} has no tag annotation"
            )
        frames = [fd.frame for fd in fds]
        flags = _night_flags_for(frames, night_csv, image_map)
        summaries = [
            summarize_frame(fd, b, vocab) for fd, b in zip(fds, flags)
        ]
        train_pairs.append((summaries, [entry.tag] * len(summaries)))
    if not train_pairs:
        raise ValueError("manifest has no train-split sequences")

    grid_points = int(get("grid_points", 21))
    if grid_points < 2:
        raise ValueError(f"grid_points must be >= 2, got {grid_points}")
    grid = [float(v) for v in np.linspace(0.0, 1.0, grid_points)]
    folds = int(get("folds", 5))
    fitted = fit_rule_params(
        train_pairs, grid=grid, folds=folds, seed=pc.seed, base=pc.rules
    )

    params_path = out_dir / "params.yaml"
    with open(params_path, "w", encoding="utf-8", newline="\n") as fh:
        yaml.safe_dump(
            {
                "beta": fitted.beta,
                "delta": fitted.delta,
                "eta": fitted.eta,
                "vehicle_city_threshold": fitted.vehicle_city_threshold,
            },
            fh,
            sort_keys=True,
        )
    print(f"fitted beta={fitted.beta!r} delta={fitted.delta!r}")
    print(f"wrote {params_path}")
    return 0


# ---------------------------------------------------------------------------
# keyframes
# ---------------------------------------------------------------------------

def cmd_keyframes(args) -> int:
    get = _resolver(args)
    pc = _pipeline_config(args, get)
    tags_file = get("tags")
    if tags_file is None:
        raise ValueError("--tags is required (flag or config file)")
    tags_file = Path(tags_file)
    if not tags_file.is_file():
        raise ValueError(f"tags file not found: {tags_file}")
    image_map = None
    if pc.manifest_path is not None:
        image_map = _manifest_image_map(_require_manifest(pc))
    out_dir = _prepare_output_dir(pc)

    rows = read_tags(tags_file)
    groups: dict[str, list] = {}
    for frame, tag, summary in rows:
        if summary is None:
            raise ValueError(
                f"tags file {tags_file} has no detection summaries; peak "
                "key-frames need the statistics columns"
            )
        groups.setdefault(frame.sequence_id, []).append((frame, tag, summary))

    def peaks_one(item):
        _, seq_rows = item
        # The originating rule index is not stored in the file; any
        # placeholder consistent with the tag satisfies the outcome type.
        outcomes = [
            RuleOutcome(
                frame=frame,
                tag=tag,
                summary=summary,
                matched_rule=-1 if tag.scene == Scene.OTHER else 0,
            )
            for frame, tag, summary in seq_rows
        ]
        outcomes = _attach_images(outcomes, image_map)
        return keyframes_by_peaks(outcomes, pc.rules.eta, pc.selector)

    results = _map_sequences(pc, peaks_one, list(groups.items()))
    keyframe_rows = [(f, None, None) for peaks in results for f in peaks]
    out_path = out_dir / "keyframes.csv"
    write_keyframes(keyframe_rows, out_path)
    print(f"flagged {len(keyframe_rows)} peak key-frames")
    print(f"wrote {out_path}")
    return 0


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def cmd_evaluate(args) -> int:
    get = _resolver(args)
    pc = _pipeline_config(args, get)
    predicted_file = get("predicted")
    truth_file = get("truth")
    if predicted_file is None or truth_file is None:
        raise ValueError("--predicted and --truth are required (flag or config file)")
    predicted_file, truth_file = Path(predicted_file), Path(truth_file)
    for path in (predicted_file, truth_file):
        if not path.is_file():
            raise ValueError(f"tags file not found: {path}")
    out_dir = _prepare_output_dir(pc)

    predicted_rows = read_tags(predicted_file)
    truth_rows = read_tags(truth_file)
    predicted_by_key = {frame.key: tag for frame, tag, _ in predicted_rows}
    if len(predicted_by_key) != len(predicted_rows):
        raise ValueError(f"duplicate frames in {predicted_file}")
    for frame, _, _ in truth_rows:
        if frame.key not in predicted_by_key:
            raise ValueError(
                f"prediction missing for frame {frame.sequence_id}/{frame.frame_index}"
            )
    if len(predicted_rows) != len(truth_rows):
        raise ValueError(
            f"{predicted_file} has {len(predicted_rows)} frames but "
            f"{truth_file} has {len(truth_rows)}"
        )
    predicted = [predicted_by_key[frame.key] for frame, _, _ in truth_rows]
    truth = [tag for _, tag, _ in truth_rows]
    report = score(predicted, truth)

    metrics_json = out_dir / "metrics.json"
    metrics_txt = out_dir / "metrics.txt"
    confusion_csv = out_dir / "confusion.csv"
    report.write_json(metrics_json)
    with open(metrics_txt, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_text() + "\n")
    report.write_confusion_csv(confusion_csv)
    print(report.to_text())
    for path in (metrics_json, metrics_txt, confusion_csv):
        print(f"wrote {path}")

    kf_a, kf_b = get("predicted_keyframes"), get("truth_keyframes")
    if (kf_a is None) != (kf_b is None):
        raise ValueError(
            "--predicted-keyframes and --truth-keyframes must be given together"
        )
    if kf_a is not None:
        kf_a, kf_b = Path(kf_a), Path(kf_b)
        for path in (kf_a, kf_b):
            if not path.is_file():
                raise ValueError(f"key-frame file not found: {path}")
        frames_a = [frame for frame, _, _ in fileio.read_keyframes(kf_a)]
        frames_b = [frame for frame, _, _ in fileio.read_keyframes(kf_b)]
        total = int(get("total_frames", len(truth_rows)))
        overlap = keyframe_overlap(frames_a, frames_b, total)
        overlap_path = out_dir / "overlap.json"
        with open(overlap_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(overlap.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote {overlap_path}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML config file supplying any option")
    parser.add_argument("--output-dir", help="directory receiving all outputs")
    parser.add_argument("--threads", type=int, help="worker-pool cap (default 1)")
    parser.add_argument("--seed", type=int, help="seed for stochastic choices")


def _add_selector_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float, help="structural novelty threshold")
    parser.add_argument("--step", type=int, help="probe stride through each sequence")
    parser.add_argument(
        "--blur-threshold", type=float, help="normalized sharpness floor"
    )


def _add_rule_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--beta", type=float, help="smoothed-uncertainty threshold")
    parser.add_argument("--delta", type=float, help="raw-uncertainty threshold")
    parser.add_argument("--eta", type=float, help="key-frame peak threshold")
    parser.add_argument(
        "--vehicle-city-threshold", type=int, help="vehicle count bounding city scenes"
    )
    parser.add_argument(
        "--vocabulary", help="YAML/JSON mapping of person/vehicle class names"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="framesift",
        description="Frame tagging, key-frame filtering and evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("select", help="structural selection plus blur filtering")
    _add_common(p)
    _add_selector_flags(p)
    p.add_argument("--manifest", help="dataset manifest with frame images")
    p.add_argument("--split", choices=("train", "test", "all"), help="subset to select")
    p.add_argument(
        "--alpha-sweep", nargs="+", type=float, metavar="ALPHA",
        help="run once per alpha and write a sweep summary",
    )
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("classify-rule", help="tag frames from detection statistics")
    _add_common(p)
    _add_selector_flags(p)
    _add_rule_flags(p)
    p.add_argument("--detections", help="detection JSON-lines file")
    p.add_argument("--manifest", help="dataset manifest (for frame images)")
    p.add_argument("--night-flags", help="CSV of per-frame night flags")
    p.set_defaults(func=cmd_classify_rule)

    p = sub.add_parser("classify-spread", help="tag test frames by label spreading")
    _add_common(p)
    p.add_argument("--embeddings", help="embedding file (JSON lines or binary)")
    p.add_argument("--manifest", help="dataset manifest with splits and tags")
    p.add_argument("--gamma", type=float, help="rbf kernel width")
    p.add_argument("--nu", type=float, help="spreading retention factor")
    p.add_argument("--kernel", choices=("rbf", "knn"), help="affinity kernel")
    p.add_argument("--knn-k", type=int, help="neighbor count for the knn kernel")
    p.add_argument("--batch-limit", type=int, help="max graph size per batch")
    p.add_argument("--pca-dims", type=int, help="reduced dimensionality")
    p.add_argument("--max-steps", type=int, help="spreading iteration cap")
    p.add_argument("--convergence-tol", type=float, help="spreading stop tolerance")
    p.add_argument(
        "--runs", dest="n_runs", type=int, help="perturbed runs for boundary flags"
    )
    p.set_defaults(func=cmd_classify_spread)

    p = sub.add_parser("fit-params", help="cross-validated rule threshold search")
    _add_common(p)
    _add_rule_flags(p)
    p.add_argument("--detections", help="detection JSON-lines file")
    p.add_argument("--manifest", help="dataset manifest with train tags")
    p.add_argument("--night-flags", help="CSV of per-frame night flags")
    p.add_argument("--folds", type=int, help="cross-validation folds (default 5)")
    p.add_argument(
        "--grid-points", type=int, help="grid resolution over [0, 1] (default 21)"
    )
    p.set_defaults(func=cmd_fit_params)

    p = sub.add_parser("keyframes", help="peak key-frames from an existing tags file")
    _add_common(p)
    _add_selector_flags(p)
    p.add_argument("--tags", help="tags CSV from the rule route")
    p.add_argument("--eta", type=float, help="key-frame peak threshold")
    p.add_argument("--manifest", help="dataset manifest (for frame images)")
    p.set_defaults(func=cmd_keyframes)

    p = sub.add_parser("evaluate", help="compare predicted tags against truth")
    _add_common(p)
    p.add_argument("--predicted", help="predicted tags CSV")
    p.add_argument("--truth", help="ground-truth tags CSV")
    p.add_argument("--predicted-keyframes", help="predicted key-frame CSV")
    p.add_argument("--truth-keyframes", help="reference key-frame CSV")
    p.add_argument(
        "--total-frames", type=int, help="denominator for overlap percentages"
    )
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
