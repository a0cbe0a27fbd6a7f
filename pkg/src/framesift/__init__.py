"""Per-frame scene tagging and key-frame filtering for video sequences.

Two pipelines over the same frame corpus:

* a rule-based one that aggregates object-detector output into per-frame
  content summaries and classifies scenes with a fixed rule table, filtering
  key-frames at uncertainty peaks;
* a semi-supervised one that reduces frame embeddings with PCA, spreads the
  few known labels over an affinity graph, and filters key-frames whose
  predicted label is unstable across perturbed spreading runs.
"""

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

__all__ = [
    "BoundaryConfig",
    "ContentSummary",
    "Detection",
    "EmbeddingVector",
    "FrameDetections",
    "FrameRef",
    "Lighting",
    "RuleParams",
    "Scene",
    "SceneTag",
    "SelectorConfig",
    "SpreadConfig",
    "TimeOfDay",
]

__version__ = "0.1.0"
