"""Rule-based scene classification from object-detection statistics.

Per frame, detections are reduced to counts of person-like (P) and
vehicle-like (V) objects, a night flag (B), and the coefficient of
variation of the relevant detection scores (U = std / median). U is
smoothed over each frame's neighborhood (5 previous and 5 subsequent
frames) into U_bar, and a fixed ordered rule table maps the tuple
(P, V, B, U, U_bar) to a scene tag. Frames matching no rule fall into the
Other category. Key-frames are the structurally novel frames among the
strict local maxima of the U series.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
import yaml

from framesift.evaluation import kfold_split, score
from framesift.model import (
    ContentSummary,
    FrameDetections,
    FrameRef,
    Lighting,
    RuleParams,
    Scene,
    SceneTag,
    SelectorConfig,
    TimeOfDay,
)
from framesift.selector import filter_quality, select_structural

UNCERTAINTY_WINDOW = 5  # neighbors on each side feeding U_bar


@dataclass(frozen=True)
class ClassVocabulary:
    """Detector class names that count as person-like or vehicle-like."""

    person_classes: frozenset[str]
    vehicle_classes: frozenset[str]

    @classmethod
    def from_file(cls, path) -> "ClassVocabulary":
        """Load a vocabulary mapping from YAML/JSON:
        ``{person: [names...], vehicle: [names...]}``."""
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
        return cls(
            person_classes=frozenset(raw["person"]),
            vehicle_classes=frozenset(raw["vehicle"]),
        )


# MS-COCO names for the default detector.
COCO_VOCABULARY = ClassVocabulary(
    person_classes=frozenset({"person", "bicycle"}),
    vehicle_classes=frozenset({"car", "truck", "bus", "airplane", "motorcycle"}),
)


@dataclass(frozen=True)
class RuleOutcome:
    """Classification of one frame: tag, summary, and which rule fired.

    matched_rule is the 0-based index into the rule table, or -1 when no
    rule matched and the Other category was assigned.
    """

    frame: FrameRef
    tag: SceneTag
    summary: ContentSummary
    matched_rule: int

    def __post_init__(self):
        if (self.matched_rule == -1) != (self.tag.scene == Scene.OTHER):
            raise ValueError("matched_rule == -1 exactly when scene is Other")


def summarize_frame(
    dets: FrameDetections, night: int, vocab: ClassVocabulary = COCO_VOCABULARY
) -> ContentSummary:
    """Aggregate one frame's detections into a ContentSummary (U_bar unset).

    U is the coefficient of variation (population std over median) of the
    scores of relevant detections, defined as 0 when fewer than two
    relevant detections exist.
    """
    relevant_scores = []
    p_count = 0
    v_count = 0
    for det in dets.detections:
        if det.class_name in vocab.person_classes:
            p_count += 1
            relevant_scores.append(det.score)
        elif det.class_name in vocab.vehicle_classes:
            v_count += 1
            relevant_scores.append(det.score)
    if len(relevant_scores) < 2:
        uncertainty = 0.0
    else:
        sigma = statistics.pstdev(relevant_scores)
        median = statistics.median(relevant_scores)
        uncertainty = sigma / median
    return ContentSummary(
        frame=dets.frame, P=p_count, V=v_count, B=int(night), U=uncertainty
    )


def windowed_uncertainty(summaries: Sequence[ContentSummary]) -> list[ContentSummary]:
    """Fill U_bar as the mean U of up to 5 previous and 5 subsequent frames.

    The center frame is excluded and the window truncates at sequence
    boundaries; the divisor is the actual neighbor count. A single-frame
    sequence gets U_bar = 0.
    """
    summaries = list(summaries)
    n = len(summaries)
    values = [s.U for s in summaries]
    out = []
    for i, summary in enumerate(summaries):
        lo = max(0, i - UNCERTAINTY_WINDOW)
        hi = min(n, i + UNCERTAINTY_WINDOW + 1)
        neighbors = values[lo:i] + values[i + 1 : hi]
        u_bar = sum(neighbors) / len(neighbors) if neighbors else 0.0
        out.append(replace(summary, U_bar=u_bar))
    return out


def _tag(time_of_day: TimeOfDay, lighting: Lighting, scene: Scene) -> SceneTag:
    return SceneTag(time_of_day, lighting, scene)


# The ordered rule table. Each entry is (predicate(P, V, B, U, U_bar, params),
# tag); the first matching entry wins. Overlapping predicates (the city rules
# subsume the earlier ones' domains) are intentional: ordered evaluation is
# what makes every rule reachable.
_RULES: list[tuple[Callable[..., bool], SceneTag]] = [
    (
        lambda P, V, B, U, Ub, prm: P > V and V < prm.vehicle_city_threshold and B == 1,
        _tag(TimeOfDay.NIGHT, Lighting.GOOD, Scene.PEDESTRIANS),
    ),
    (
        lambda P, V, B, U, Ub, prm: P > V
        and V < prm.vehicle_city_threshold
        and B == 0
        and Ub <= prm.beta,
        _tag(TimeOfDay.DAY, Lighting.GOOD, Scene.PEDESTRIANS),
    ),
    (
        lambda P, V, B, U, Ub, prm: P > V
        and V < prm.vehicle_city_threshold
        and B == 0
        and Ub > prm.beta,
        _tag(TimeOfDay.DAY, Lighting.POOR, Scene.PEDESTRIANS),
    ),
    (
        lambda P, V, B, U, Ub, prm: P == 0 and V > 0 and B == 1,
        _tag(TimeOfDay.NIGHT, Lighting.GOOD, Scene.FREEWAY),
    ),
    (
        lambda P, V, B, U, Ub, prm: P == 0
        and V > 0
        and B == 0
        and U > prm.delta
        and Ub <= prm.beta,
        _tag(TimeOfDay.DAY, Lighting.GOOD, Scene.FREEWAY),
    ),
    (
        lambda P, V, B, U, Ub, prm: P == 0
        and V > 0
        and B == 0
        and U > prm.delta
        and Ub > prm.beta,
        _tag(TimeOfDay.DAY, Lighting.POOR, Scene.FREEWAY),
    ),
    (
        lambda P, V, B, U, Ub, prm: P == 0
        and V > 0
        and B == 0
        and U < prm.delta
        and Ub < prm.beta,
        _tag(TimeOfDay.DAY, Lighting.POOR, Scene.PARKED_CARS),
    ),
    (
        lambda P, V, B, U, Ub, prm: P >= 0 and V >= 0 and B == 1,
        _tag(TimeOfDay.NIGHT, Lighting.GOOD, Scene.CITY),
    ),
    (
        lambda P, V, B, U, Ub, prm: P >= 0 and V >= 0 and B == 0 and Ub <= prm.beta,
        _tag(TimeOfDay.DAY, Lighting.GOOD, Scene.CITY),
    ),
    (
        lambda P, V, B, U, Ub, prm: P > 0 and V >= 0 and B == 0 and Ub > prm.beta,
        _tag(TimeOfDay.DAY, Lighting.POOR, Scene.CITY),
    ),
]


def _other_tag(night: int) -> SceneTag:
    # Every reachable Other combination is a daytime frame with U_bar above
    # beta, so poor lighting is the consistent reading; time of day still
    # follows the observed flag.
    time = TimeOfDay.NIGHT if night else TimeOfDay.DAY
    return SceneTag(time, Lighting.POOR, Scene.OTHER)


def classify_frame(summary: ContentSummary, params: RuleParams) -> RuleOutcome:
    """Classify one frame with the ordered rule table; first match wins.

    Total: any (P, V, B, U, U_bar) combination yields exactly one tag,
    falling back to the Other category when no rule matches. Requires
    U_bar to be populated.
    """
    if summary.U_bar is None:
        raise ValueError("U_bar must be populated before classification")
    args = (summary.P, summary.V, summary.B, summary.U, summary.U_bar, params)
    for index, (predicate, tag) in enumerate(_RULES):
        if predicate(*args):
            return RuleOutcome(
                frame=summary.frame, tag=tag, summary=summary, matched_rule=index
            )
    return RuleOutcome(
        frame=summary.frame,
        tag=_other_tag(summary.B),
        summary=summary,
        matched_rule=-1,
    )


def classify_sequence(
    dets: Sequence[FrameDetections],
    night_flags: Sequence[int],
    params: RuleParams,
    vocab: ClassVocabulary = COCO_VOCABULARY,
) -> list[RuleOutcome]:
    """Summarize, smooth and classify every frame of one ordered sequence."""
    if len(dets) != len(night_flags):
        raise ValueError(
            f"got {len(night_flags)} night flags for {len(dets)} frames"
        )
    summaries = [summarize_frame(fd, b, vocab) for fd, b in zip(dets, night_flags)]
    summaries = windowed_uncertainty(summaries)
    return [classify_frame(s, params) for s in summaries]


def peak_candidates(values: Sequence[float], eta: float) -> list[int]:
    """Indices that are strict local maxima above eta.

    Boundary frames are excluded; plateaus (equal neighbors) are not peaks.
    """
    out = []
    for i in range(1, len(values) - 1):
        if values[i] > values[i - 1] and values[i] > values[i + 1] and values[i] > eta:
            out.append(i)
    return out


def keyframes_by_peaks(
    outcomes: Sequence[RuleOutcome],
    eta: float,
    selector_cfg: SelectorConfig,
    images=None,
) -> list[FrameRef]:
    """Filter key-frames at uncertainty peaks of one classified sequence.

    Candidates are the strict local maxima of the U series exceeding eta.
    When images are available (preloaded via ``images`` or through the
    frames' image paths) the candidates are additionally passed through the
    structural selector and quality filter; otherwise the raw candidates
    are returned.
    """
    u_series = [o.summary.U for o in outcomes]
    candidate_idx = peak_candidates(u_series, eta)
    candidates = [outcomes[i].frame for i in candidate_idx]
    if not candidates:
        return []
    if images is not None:
        candidate_images = [images[i] for i in candidate_idx]
    elif all(f.image_path is not None for f in candidates):
        candidate_images = None  # loaded from disk by the selector
    else:
        return candidates
    structural = select_structural(candidates, selector_cfg, images=candidate_images)
    if candidate_images is not None:
        index_of = {f.key: i for i, f in enumerate(candidates)}
        sel_images = [candidate_images[index_of[f.key]] for f in structural.selected]
    else:
        sel_images = None
    return filter_quality(
        structural.selected, selector_cfg.blur_threshold, images=sel_images
    )


def fit_rule_params(
    train: Sequence[tuple[Sequence[ContentSummary], Sequence[SceneTag]]],
    grid: Sequence[float] | None = None,
    folds: int = 5,
    seed: int = 0,
    base: RuleParams = RuleParams(),
) -> RuleParams:
    """Grid-search (beta, delta) by k-fold cross validation over sequences.

    ``train`` pairs each sequence's content summaries with its ground-truth
    tags. Every (beta, delta) grid point is scored by the mean accuracy
    over the validation folds (folds split whole sequences, never frames);
    ties prefer smaller beta, then smaller delta.
    """
    if grid is None:
        grid = [float(v) for v in np.linspace(0.0, 1.0, 21)]
    sequences = [
        (windowed_uncertainty(summaries), list(tags)) for summaries, tags in train
    ]
    for summaries, tags in sequences:
        if len(summaries) != len(tags):
            raise ValueError("each sequence needs one truth tag per summary")
    fold_splits = kfold_split(list(range(len(sequences))), folds, seed)

    best: tuple[float, float] | None = None
    best_accuracy = -1.0
    for beta in grid:
        for delta in grid:
            params = replace(base, beta=beta, delta=delta)
            fold_accuracies = []
            for _, val_ids in fold_splits:
                predicted: list[SceneTag] = []
                truth: list[SceneTag] = []
                for seq_id in val_ids:
                    summaries, tags = sequences[seq_id]
                    predicted.extend(
                        classify_frame(s, params).tag for s in summaries
                    )
                    truth.extend(tags)
                fold_accuracies.append(score(predicted, truth).accuracy)
            mean_accuracy = sum(fold_accuracies) / len(fold_accuracies)
            if mean_accuracy > best_accuracy:
                best_accuracy = mean_accuracy
                best = (beta, delta)
    assert best is not None
    return replace(base, beta=best[0], delta=best[1])
