"""Domain types shared by every pipeline stage.

All types are immutable after construction and validate their invariants in
``__post_init__``, so a constructed value is always a legal one. Enum codes
are part of the on-disk formats and must never change.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np


class DataFormatError(ValueError):
    """A file did not conform to one of the documented formats."""

    def __init__(self, message: str, *, path=None, line: int | None = None):
        prefix = ""
        if path is not None:
            prefix += f"{path}: "
        if line is not None:
            prefix += f"line {line}: "
        super().__init__(prefix + message)
        self.path = path
        self.line = line


class TimeOfDay(IntEnum):
    DAY = 0
    NIGHT = 1


class Lighting(IntEnum):
    GOOD = 0
    POOR = 1


class Scene(IntEnum):
    CITY = 0
    PEDESTRIANS = 1
    FREEWAY = 2
    PARKED_CARS = 3
    OTHER = 4


@dataclass(frozen=True, order=True)
class FrameRef:
    """A single frame of a video sequence.

    Ordering and equality use (sequence_id, frame_index) only; the image
    path is carry-along metadata and may be absent (the label-spreading
    pipeline needs embeddings, not pixels).
    """

    sequence_id: str
    frame_index: int
    image_path: Path | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.frame_index < 0:
            raise ValueError(f"frame_index must be >= 0, got {self.frame_index}")

    @property
    def key(self) -> tuple[str, int]:
        return (self.sequence_id, self.frame_index)


@dataclass(frozen=True)
class Detection:
    """One detected object: class name, objectness score, pixel bbox."""

    class_name: str
    score: float
    bbox: tuple[float, float, float, float]

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")
        if len(self.bbox) != 4:
            raise ValueError(f"bbox must have 4 coordinates, got {len(self.bbox)}")
        object.__setattr__(self, "score", float(self.score))
        object.__setattr__(self, "bbox", tuple(float(v) for v in self.bbox))
        x_min, y_min, x_max, y_max = self.bbox
        if not x_min < x_max:
            raise ValueError(f"bbox x_min must be < x_max, got {x_min} >= {x_max}")
        if not y_min < y_max:
            raise ValueError(f"bbox y_min must be < y_max, got {y_min} >= {y_max}")


@dataclass(frozen=True)
class FrameDetections:
    """All retained detections of one frame."""

    frame: FrameRef
    detections: tuple[Detection, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "detections", tuple(self.detections))


@dataclass(frozen=True, eq=False)
class EmbeddingVector:
    """A per-frame deep representation, raw or PCA-reduced."""

    frame: FrameRef
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("values must be a nonempty 1-D vector")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite (no NaN/Inf)")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    def __eq__(self, other):
        if not isinstance(other, EmbeddingVector):
            return NotImplemented
        return self.frame == other.frame and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.frame, self.values.tobytes()))


_TIME_NAMES = {TimeOfDay.DAY: "day", TimeOfDay.NIGHT: "night"}
_LIGHT_NAMES = {Lighting.GOOD: "good", Lighting.POOR: "poor"}
_SCENE_NAMES = {
    Scene.CITY: "city",
    Scene.PEDESTRIANS: "pedestrians",
    Scene.FREEWAY: "freeway",
    Scene.PARKED_CARS: "parked_cars",
    Scene.OTHER: "other",
}


@dataclass(frozen=True, order=True)
class SceneTag:
    """Predicted or annotated {time-of-day, lighting, scene} triple.

    The composite class used throughout evaluation is the full triple; the
    integer codes are fixed and serialized as-is.
    """

    time_of_day: TimeOfDay
    lighting: Lighting
    scene: Scene

    def __post_init__(self):
        object.__setattr__(self, "time_of_day", TimeOfDay(self.time_of_day))
        object.__setattr__(self, "lighting", Lighting(self.lighting))
        object.__setattr__(self, "scene", Scene(self.scene))

    @classmethod
    def from_codes(cls, time_of_day: int, lighting: int, scene: int) -> "SceneTag":
        return cls(TimeOfDay(time_of_day), Lighting(lighting), Scene(scene))

    @property
    def codes(self) -> tuple[int, int, int]:
        return (int(self.time_of_day), int(self.lighting), int(self.scene))

    @property
    def label(self) -> str:
        """Human-readable composite name, e.g. ``day_good_city``."""
        return "_".join(
            (
                _TIME_NAMES[self.time_of_day],
                _LIGHT_NAMES[self.lighting],
                _SCENE_NAMES[self.scene],
            )
        )


@dataclass(frozen=True)
class ContentSummary:
    """Per-frame detection aggregates feeding the rule table.

    P counts person-like detections, V vehicle-like ones, B is the night
    flag, U the coefficient of variation of the relevant detection scores
    (0 when fewer than two relevant detections) and U_bar the windowed
    neighborhood mean of U, filled in by ``rules.windowed_uncertainty``.
    """

    frame: FrameRef
    P: int
    V: int
    B: int
    U: float
    U_bar: float | None = None

    def __post_init__(self):
        if self.P < 0 or self.V < 0:
            raise ValueError("P and V must be non-negative")
        if self.B not in (0, 1):
            raise ValueError(f"B must be 0 or 1, got {self.B}")
        if self.U < 0:
            raise ValueError(f"U must be non-negative, got {self.U}")
        if self.U_bar is not None and self.U_bar < 0:
            raise ValueError(f"U_bar must be non-negative, got {self.U_bar}")


@dataclass(frozen=True)
class RuleParams:
    """Tunables of the rule-based classifier."""

    beta: float = 0.5
    delta: float = 0.5
    eta: float = 0.5
    vehicle_city_threshold: int = 3

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must be in [0, 1], got {self.beta}")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"delta must be in [0, 1], got {self.delta}")
        if not 0.5 <= self.eta <= 1.0:
            raise ValueError(f"eta must be in [0.5, 1], got {self.eta}")
        if self.vehicle_city_threshold < 1:
            raise ValueError("vehicle_city_threshold must be >= 1")


_KERNELS = ("rbf", "knn")


@dataclass(frozen=True)
class SpreadConfig:
    """Tunables of the label-spreading classifier."""

    gamma: float = 1.0
    nu: float = 0.9
    max_steps: int = 30
    convergence_tol: float = 1e-6
    kernel: str = "rbf"
    knn_k: int = 7
    batch_limit: int = 10_000
    pca_dims: int = 10

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not 0.0 <= self.nu <= 1.0:
            raise ValueError(f"nu must be in [0, 1], got {self.nu}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")
        if self.convergence_tol <= 0:
            raise ValueError("convergence_tol must be positive")
        if self.kernel not in _KERNELS:
            raise ValueError(f"kernel must be one of {_KERNELS}, got {self.kernel!r}")
        if self.knn_k < 1:
            raise ValueError("knn_k must be positive")
        if self.batch_limit < 1:
            raise ValueError("batch_limit must be positive")
        if self.pca_dims < 1:
            raise ValueError("pca_dims must be positive")


@dataclass(frozen=True)
class SelectorConfig:
    """Tunables of the structural frame selector and quality filter."""

    alpha: float = 0.6
    step: int = 2
    blur_threshold: float = 0.4

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.step < 1:
            raise ValueError("step must be positive")
        if not 0.0 <= self.blur_threshold <= 1.0:
            raise ValueError(
                f"blur_threshold must be in [0, 1], got {self.blur_threshold}"
            )


def _default_gamma_grid() -> tuple[float, ...]:
    return tuple(float(g) for g in np.geomspace(0.1, 20.0, 10))


@dataclass(frozen=True)
class BoundaryConfig:
    """Multi-run configuration for cluster-boundary key-frame filtering.

    The (gamma, nu) product grid is cycled to produce exactly ``n_runs``
    parameter pairs.
    """

    n_runs: int = 20
    gamma_grid: tuple[float, ...] = field(default_factory=_default_gamma_grid)
    nu_grid: tuple[float, ...] = (0.6, 0.99)

    def __post_init__(self):
        object.__setattr__(self, "gamma_grid", tuple(self.gamma_grid))
        object.__setattr__(self, "nu_grid", tuple(self.nu_grid))
        if self.n_runs < 1:
            raise ValueError("n_runs must be positive")
        if not self.gamma_grid or any(g <= 0 for g in self.gamma_grid):
            raise ValueError("gamma_grid must be nonempty positive reals")
        if not self.nu_grid or any(not 0.0 <= v <= 1.0 for v in self.nu_grid):
            raise ValueError("nu_grid must be nonempty reals in [0, 1]")

    def run_parameters(self) -> list[tuple[float, float]]:
        """The exact (gamma, nu) pair used by each run, grid cycled."""
        product = [(g, v) for g in self.gamma_grid for v in self.nu_grid]
        return [product[i % len(product)] for i in range(self.n_runs)]
