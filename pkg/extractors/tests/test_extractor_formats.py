"""Writer outputs, checked byte-for-byte and through the pipeline's readers."""

import numpy as np
import pytest

from framesift.fileio import (
    read_detections,
    read_embeddings,
    read_embeddings_binary,
)
from framesift_extractors.formats import (
    DetectionOut,
    write_detection_file,
    write_embedding_binary,
    write_embedding_file,
    write_error_sidecar,
)


def test_detection_line_bytes(tmp_path):
    rows = [
        ("s", 0, [DetectionOut("person", 0.5, (1.0, 2.0, 3.0, 4.0))]),
        ("s", 1, []),
    ]
    path = tmp_path / "d.jsonl"
    write_detection_file(rows, path)
    assert path.read_text() == (
        '{"dets": [{"bbox": [1.0, 2.0, 3.0, 4.0], "cls": "person", "score": 0.5}],'
        ' "idx": 0, "seq": "s"}\n'
        '{"dets": [], "idx": 1, "seq": "s"}\n'
    )


def test_detection_file_parses_with_pipeline_reader(tmp_path):
    rows = [
        ("s", 0, [DetectionOut("car", 0.9, (0.0, 0.0, 5.0, 5.0))]),
        ("t", 3, []),
    ]
    path = tmp_path / "d.jsonl"
    write_detection_file(rows, path)
    frames = read_detections(path)
    assert [(f.frame.key, len(f.detections)) for f in frames] == [
        (("s", 0), 1),
        (("t", 3), 0),
    ]
    assert frames[0].detections[0].class_name == "car"


def test_detection_out_validation():
    with pytest.raises(ValueError, match="score"):
        DetectionOut("x", 1.5, (0.0, 0.0, 1.0, 1.0))
    with pytest.raises(ValueError, match="extent"):
        DetectionOut("x", 0.5, (5.0, 5.0, 5.0, 9.0))


def test_embedding_line_bytes(tmp_path):
    path = tmp_path / "e.jsonl"
    write_embedding_file([("s", 0, [0.5, -1.0])], path)
    assert path.read_text() == '{"idx": 0, "seq": "s", "vec": [0.5, -1.0]}\n'


def test_embedding_file_parses_with_pipeline_reader(tmp_path):
    path = tmp_path / "e.jsonl"
    write_embedding_file([("s", 0, [0.25, 0.75]), ("s", 1, [1.0, 2.0])], path)
    vectors = read_embeddings(path)
    assert [v.frame.key for v in vectors] == [("s", 0), ("s", 1)]
    assert vectors[0].values.tolist() == [0.25, 0.75]


def test_embedding_binary_round_trips_through_pipeline_reader(tmp_path):
    values = np.array([0.1, 0.2, 0.3])
    path = tmp_path / "e.bin"
    write_embedding_binary([("cam", 7, values)], path)
    (vector,) = read_embeddings_binary(path)
    assert vector.frame.key == ("cam", 7)
    # binary payload is float32; expect that quantization and nothing else
    assert vector.values.tolist() == values.astype(np.float32).astype(np.float64).tolist()


def test_embedding_binary_dim_mismatch(tmp_path):
    with pytest.raises(ValueError, match="dim mismatch"):
        write_embedding_binary(
            [("s", 0, [1.0, 2.0]), ("s", 1, [1.0])], tmp_path / "e.bin"
        )


def test_error_sidecar_lines(tmp_path):
    path = tmp_path / "errors.jsonl"
    write_error_sidecar([("s", 4, "image file not found: x.png")], path)
    assert path.read_text() == (
        '{"error": "image file not found: x.png", "idx": 4, "seq": "s"}\n'
    )
