"""Command-line entry point: ``extract-dets`` and ``extract-emb``.

Both subcommands take a dataset manifest, a registered model id and an
output path, and exit nonzero when any frame fails (the failures are
listed in a ``.errors.jsonl`` sidecar next to the output).
"""

from __future__ import annotations

import argparse
import sys

from framesift_extractors.extract import (
    EMBEDDING_LAYERS,
    ExtractorJob,
    extract_detections,
    extract_embeddings,
)


def _add_common(parser: argparse.ArgumentParser, default_model: str) -> None:
    parser.add_argument("--manifest", required=True, help="dataset manifest YAML")
    parser.add_argument(
        "--model", default=default_model, help="registered model identifier"
    )
    parser.add_argument("--output", required=True, help="output file path")
    parser.add_argument(
        "--batch-size", type=int, default=8, help="frames per progress group"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="framesift-extract",
        description="run offline models over manifest frames and emit pipeline files",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-dets", help="object detections as JSON lines")
    _add_common(p, default_model="frcnn-mobilenet")
    p.add_argument(
        "--score-floor",
        type=float,
        default=0.2,
        help="keep detections with score strictly above this",
    )

    p = sub.add_parser("extract-emb", help="frame embeddings (JSON lines or .bin)")
    _add_common(p, default_model="resnet50-contrastive")
    p.add_argument(
        "--layer",
        choices=EMBEDDING_LAYERS,
        default="last",
        help="feature tap to export",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "extract-dets":
            job = ExtractorJob(
                manifest_path=args.manifest,
                model_id=args.model,
                output_path=args.output,
                score_floor=args.score_floor,
                batch_size=args.batch_size,
            )
            report = extract_detections(job)
        else:
            job = ExtractorJob(
                manifest_path=args.manifest,
                model_id=args.model,
                output_path=args.output,
                batch_size=args.batch_size,
            )
            report = extract_embeddings(job, layer=args.layer)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {report.frames_written} frame records to {report.output_path}")
    if report.errors:
        for seq, idx, message in report.errors:
            print(f"error: frame {seq}/{idx}: {message}", file=sys.stderr)
        print(
            f"{len(report.errors)} frames failed; see {job.error_path}",
            file=sys.stderr,
        )
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
