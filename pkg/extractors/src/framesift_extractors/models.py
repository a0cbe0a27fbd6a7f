"""Model registry: seeded builders for the detector and the embedding encoder.

Model identifiers are configuration, not code: anything producing class
names + scores + boxes can back the detection extractor, and anything with
flat feature layers can back the embedding extractor. The built-in entries
construct torchvision architectures with ``weights=None`` and a fixed RNG
seed, so extraction is fully offline and bit-reproducible; swap in real
checkpoints by registering a builder that loads them.
"""

from __future__ import annotations

import functools

import torch
from torch import nn
from torchvision.models import resnet50
from torchvision.models.detection import fasterrcnn_mobilenet_v3_large_fpn

WEIGHT_SEED = 20240811

# The 91-slot class list of COCO-trained torchvision detectors; index 0 is
# background and "N/A" marks ids unused by the dataset.
COCO_CATEGORIES = (
    "__background__", "person", "bicycle", "car", "motorcycle", "airplane",
    "bus", "train", "truck", "boat", "traffic light", "fire hydrant", "N/A",
    "stop sign", "parking meter", "bench", "bird", "cat", "dog", "horse",
    "sheep", "cow", "elephant", "bear", "zebra", "giraffe", "N/A", "backpack",
    "umbrella", "N/A", "N/A", "handbag", "tie", "suitcase", "frisbee", "skis",
    "snowboard", "sports ball", "kite", "baseball bat", "baseball glove",
    "skateboard", "surfboard", "tennis racket", "bottle", "N/A", "wine glass",
    "cup", "fork", "knife", "spoon", "bowl", "banana", "apple", "sandwich",
    "orange", "broccoli", "carrot", "hot dog", "pizza", "donut", "cake",
    "chair", "couch", "potted plant", "bed", "N/A", "dining table", "N/A",
    "N/A", "toilet", "N/A", "tv", "laptop", "mouse", "remote", "keyboard",
    "cell phone", "microwave", "oven", "toaster", "sink", "refrigerator",
    "N/A", "book", "clock", "vase", "scissors", "teddy bear", "hair drier",
    "toothbrush",
)


def class_name(label: int, names=COCO_CATEGORIES) -> str:
    return names[label] if 0 <= label < len(names) else f"class_{label}"


def _build_frcnn_mobilenet():
    torch.manual_seed(WEIGHT_SEED)
    model = fasterrcnn_mobilenet_v3_large_fpn(
        weights=None,
        weights_backbone=None,
        num_classes=len(COCO_CATEGORIES),
        box_score_thresh=0.0,
    )
    model.eval()
    return model, COCO_CATEGORIES


_DETECTORS = {
    "frcnn-mobilenet": _build_frcnn_mobilenet,
}


class ContrastiveEncoder(nn.Module):
    """ResNet-50 trunk with a two-layer contrastive projection head.

    Exposes the three flat feature layers the pipeline can consume:
    the 2048-wide pooled trunk output, the 256-wide head hidden layer and
    the 128-wide projection output.
    """

    LAYER_DIMS = {"backbone_2048": 2048, "penultimate": 256, "last": 128}

    def __init__(self):
        super().__init__()
        trunk = resnet50(weights=None)
        trunk.fc = nn.Identity()
        self.trunk = trunk
        self.hidden = nn.Linear(2048, 256)
        self.projection = nn.Linear(256, 128)

    def features(self, batch: torch.Tensor) -> dict[str, torch.Tensor]:
        pooled = self.trunk(batch)
        hidden = torch.relu(self.hidden(pooled))
        projected = self.projection(hidden)
        return {
            "backbone_2048": pooled,
            "penultimate": hidden,
            "last": projected,
        }

    def forward(self, batch: torch.Tensor) -> torch.Tensor:
        return self.features(batch)["last"]


def _build_resnet50_contrastive():
    torch.manual_seed(WEIGHT_SEED)
    model = ContrastiveEncoder()
    model.eval()
    return model


_EMBEDDERS = {
    "resnet50-contrastive": _build_resnet50_contrastive,
}


@functools.lru_cache(maxsize=4)
def build_detector(model_id: str):
    """Return (model, class_names) for a registered detector id."""
    try:
        builder = _DETECTORS[model_id]
    except KeyError:
        raise ValueError(
            f"unknown detector {model_id!r}; known: {sorted(_DETECTORS)}"
        ) from None
    return builder()


@functools.lru_cache(maxsize=4)
def build_embedder(model_id: str) -> ContrastiveEncoder:
    try:
        builder = _EMBEDDERS[model_id]
    except KeyError:
        raise ValueError(
            f"unknown embedder {model_id!r}; known: {sorted(_EMBEDDERS)}"
        ) from None
    return builder()
