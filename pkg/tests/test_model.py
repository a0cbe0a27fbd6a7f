"""Domain-type validation, immutability and the stable enum encoding."""

import json
from pathlib import Path

import numpy as np
import pytest

from framesift.model import (
    BoundaryConfig,
    ContentSummary,
    Detection,
    EmbeddingVector,
    FrameDetections,
    FrameRef,
    Lighting,
    RuleParams,
    Scene,
    SceneTag,
    SelectorConfig,
    SpreadConfig,
    TimeOfDay,
)

GOLDEN_CODES = Path(__file__).parent / "data" / "enum_codes.json"


def test_enum_codes_match_golden_file():
    golden = json.loads(GOLDEN_CODES.read_text())
    assert {m.name.lower(): int(m) for m in TimeOfDay} == golden["time_of_day"]
    assert {m.name.lower(): int(m) for m in Lighting} == golden["lighting"]
    assert {m.name.lower(): int(m) for m in Scene} == golden["scene"]


def test_frame_ref_key_and_ordering():
    a = FrameRef("seq-a", 3)
    b = FrameRef("seq-a", 10)
    c = FrameRef("seq-b", 0)
    assert a.key == ("seq-a", 3)
    assert sorted([c, b, a]) == [a, b, c]


def test_frame_ref_negative_index_rejected():
    with pytest.raises(ValueError, match="frame_index"):
        FrameRef("s", -1)


def test_frame_ref_image_path_excluded_from_equality():
    bare = FrameRef("s", 0)
    with_path = FrameRef("s", 0, image_path=Path("/tmp/img.png"))
    assert bare == with_path
    assert hash(bare) == hash(with_path)


def test_detection_score_bounds():
    bbox = (0.0, 0.0, 10.0, 10.0)
    Detection("car", 0.0, bbox)
    Detection("car", 1.0, bbox)
    for bad in (-0.1, 1.3):
        with pytest.raises(ValueError, match="score"):
            Detection("car", bad, bbox)


def test_detection_bbox_validation():
    with pytest.raises(ValueError, match="x_min"):
        Detection("car", 0.5, (5.0, 0.0, 5.0, 10.0))
    with pytest.raises(ValueError, match="y_min"):
        Detection("car", 0.5, (0.0, 9.0, 10.0, 2.0))
    with pytest.raises(ValueError, match="4"):
        Detection("car", 0.5, (0.0, 1.0, 2.0))


def test_frame_detections_coerces_to_tuple():
    fd = FrameDetections(
        frame=FrameRef("s", 0),
        detections=[Detection("car", 0.9, (0, 0, 1, 1))],
    )
    assert isinstance(fd.detections, tuple)


def test_embedding_vector_validation():
    f = FrameRef("s", 0)
    with pytest.raises(ValueError):
        EmbeddingVector(frame=f, values=np.zeros((2, 2)))
    with pytest.raises(ValueError):
        EmbeddingVector(frame=f, values=np.array([]))
    with pytest.raises(ValueError, match="finite"):
        EmbeddingVector(frame=f, values=np.array([1.0, np.nan]))
    with pytest.raises(ValueError, match="finite"):
        EmbeddingVector(frame=f, values=np.array([np.inf, 0.0]))


def test_embedding_vector_immutable_and_comparable():
    f = FrameRef("s", 0)
    ev = EmbeddingVector(frame=f, values=np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        ev.values[0] = 9.0
    same = EmbeddingVector(frame=f, values=np.array([1.0, 2.0]))
    other = EmbeddingVector(frame=f, values=np.array([1.0, 2.5]))
    assert ev == same and hash(ev) == hash(same)
    assert ev != other
    assert ev.dim == 2


def test_scene_tag_codes_round_trip():
    for t in (0, 1):
        for l in (0, 1):
            for s in range(5):
                assert SceneTag.from_codes(t, l, s).codes == (t, l, s)


def test_scene_tag_label_and_validation():
    assert SceneTag.from_codes(0, 0, 0).label == "day_good_city"
    assert SceneTag.from_codes(1, 1, 3).label == "night_poor_parked_cars"
    with pytest.raises(ValueError):
        SceneTag.from_codes(2, 0, 0)
    with pytest.raises(ValueError):
        SceneTag.from_codes(0, 0, 5)


def test_scene_tag_ordering_follows_codes():
    tags = [SceneTag.from_codes(1, 0, 0), SceneTag.from_codes(0, 1, 4),
            SceneTag.from_codes(0, 0, 2)]
    assert [t.codes for t in sorted(tags)] == [(0, 0, 2), (0, 1, 4), (1, 0, 0)]


def test_content_summary_validation():
    f = FrameRef("s", 0)
    ContentSummary(frame=f, P=0, V=0, B=0, U=0.0)
    with pytest.raises(ValueError):
        ContentSummary(frame=f, P=-1, V=0, B=0, U=0.0)
    with pytest.raises(ValueError, match="B"):
        ContentSummary(frame=f, P=0, V=0, B=2, U=0.0)
    with pytest.raises(ValueError, match="U"):
        ContentSummary(frame=f, P=0, V=0, B=0, U=-0.5)
    with pytest.raises(ValueError, match="U_bar"):
        ContentSummary(frame=f, P=0, V=0, B=0, U=0.0, U_bar=-0.1)


def test_rule_params_bounds():
    RuleParams(beta=0.0, delta=1.0, eta=0.5)
    RuleParams(eta=1.0)
    with pytest.raises(ValueError, match="beta"):
        RuleParams(beta=1.5)
    with pytest.raises(ValueError, match="delta"):
        RuleParams(delta=-0.2)
    with pytest.raises(ValueError, match="eta"):
        RuleParams(eta=0.4)
    with pytest.raises(ValueError):
        RuleParams(vehicle_city_threshold=0)


def test_spread_config_bounds():
    SpreadConfig(kernel="knn", nu=0.0)
    SpreadConfig(nu=1.0)
    with pytest.raises(ValueError, match="gamma"):
        SpreadConfig(gamma=0.0)
    with pytest.raises(ValueError, match="nu"):
        SpreadConfig(nu=1.2)
    with pytest.raises(ValueError, match="kernel"):
        SpreadConfig(kernel="cosine")
    with pytest.raises(ValueError):
        SpreadConfig(max_steps=0)
    with pytest.raises(ValueError):
        SpreadConfig(batch_limit=0)
    with pytest.raises(ValueError):
        SpreadConfig(pca_dims=0)


def test_selector_config_bounds():
    SelectorConfig(alpha=0.0, blur_threshold=1.0)
    with pytest.raises(ValueError, match="alpha"):
        SelectorConfig(alpha=1.1)
    with pytest.raises(ValueError, match="step"):
        SelectorConfig(step=0)
    with pytest.raises(ValueError, match="blur_threshold"):
        SelectorConfig(blur_threshold=-0.1)


def test_boundary_config_cycles_parameter_grid():
    cfg = BoundaryConfig(n_runs=5, gamma_grid=(1.0, 2.0), nu_grid=(0.6,))
    assert cfg.run_parameters() == [
        (1.0, 0.6), (2.0, 0.6), (1.0, 0.6), (2.0, 0.6), (1.0, 0.6)
    ]


def test_boundary_config_defaults():
    cfg = BoundaryConfig()
    pairs = cfg.run_parameters()
    assert len(pairs) == 20
    assert len(cfg.gamma_grid) == 10
    assert cfg.gamma_grid[0] == pytest.approx(0.1)
    assert cfg.gamma_grid[-1] == pytest.approx(20.0)
    assert cfg.nu_grid == (0.6, 0.99)
    # 10 x 2 grid cycled over 20 runs covers the product exactly once.
    assert sorted(set(pairs)) == sorted(
        (g, v) for g in cfg.gamma_grid for v in cfg.nu_grid
    )


def test_boundary_config_validation():
    with pytest.raises(ValueError):
        BoundaryConfig(n_runs=0)
    with pytest.raises(ValueError):
        BoundaryConfig(gamma_grid=())
    with pytest.raises(ValueError):
        BoundaryConfig(gamma_grid=(0.0,))
    with pytest.raises(ValueError):
        BoundaryConfig(nu_grid=(1.5,))
