"""Semi-supervised scene labeling by graph label spreading.

Frame embeddings are reduced with PCA, connected by an affinity graph (an
rbf kernel over pairwise distances, or a symmetrized k-nearest-neighbor
graph), and normalized into S = D^(-1/2) W D^(-1/2). Known labels are then
diffused iteratively:

    Y(t+1) = nu * S @ Y(t) + (1 - nu) * Y(0)

until the update stalls or the step budget runs out. With nu < 1 the
iteration is a contraction with fixed point (1 - nu) (I - nu S)^(-1) Y(0).
Unlabeled rows of Y(0) start as all zeros; labeled rows are one-hot.

Cluster-boundary key-frames are the test frames whose predicted label is
not identical across repeated spreading runs with perturbed (gamma, nu).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from framesift.model import (
    BoundaryConfig,
    DataFormatError,
    EmbeddingVector,
    FrameRef,
    SceneTag,
    SpreadConfig,
)


@dataclass(frozen=True, eq=False)
class PcaModel:
    """Mean vector plus orthonormal principal axes of the training data.

    ``components`` rows are ordered by descending explained variance
    (population convention: singular_value^2 / n_samples) with the sign of
    each row fixed so its largest-magnitude coefficient is positive.
    """

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        components = np.asarray(self.components, dtype=np.float64)
        explained = np.asarray(self.explained_variance, dtype=np.float64)
        if components.ndim != 2 or mean.ndim != 1:
            raise ValueError("components must be 2-D and mean 1-D")
        if components.shape[1] != mean.shape[0]:
            raise ValueError("components and mean disagree on input dim")
        if explained.shape != (components.shape[0],):
            raise ValueError("explained_variance must have one entry per component")
        gram = components @ components.T
        if not np.allclose(gram, np.eye(components.shape[0]), atol=1e-6):
            raise ValueError("components must be orthonormal")
        for arr in (mean, components, explained):
            arr.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "components", components)
        object.__setattr__(self, "explained_variance", explained)

    @property
    def input_dim(self) -> int:
        return int(self.mean.shape[0])

    @property
    def output_dim(self) -> int:
        return int(self.components.shape[0])


def fit_pca(train_embeddings: Sequence[EmbeddingVector], dims: int) -> PcaModel:
    """Fit a PCA reduction on training embeddings.

    Requires at least dims + 1 vectors and centered data of rank >= dims;
    a rank-deficient sample raises with the achievable rank.
    """
    if dims < 1:
        raise ValueError("dims must be positive")
    vectors = list(train_embeddings)
    if len(vectors) < dims + 1:
        raise ValueError(
            f"need at least {dims + 1} training vectors for {dims} dimensions, "
            f"got {len(vectors)}"
        )
    matrix = np.stack([ev.values for ev in vectors])
    input_dim = matrix.shape[1]
    if input_dim < dims:
        raise ValueError(f"input dim {input_dim} is below requested {dims}")
    mean = matrix.mean(axis=0)
    centered = matrix - mean
    _, singular_values, vt = np.linalg.svd(centered, full_matrices=False)
    tol = singular_values[0] * max(centered.shape) * np.finfo(np.float64).eps
    rank = int(np.sum(singular_values > tol)) if singular_values.size else 0
    if rank < dims:
        raise ValueError(
            f"training data has rank {rank}, below the requested {dims} dimensions"
        )
    components = vt[:dims].copy()
    # Deterministic sign: largest-magnitude coefficient of each axis positive.
    for row in components:
        pivot = np.argmax(np.abs(row))
        if row[pivot] < 0:
            row *= -1.0
    explained = (singular_values[:dims] ** 2) / matrix.shape[0]
    return PcaModel(mean=mean, components=components, explained_variance=explained)


def transform(model: PcaModel, vector: EmbeddingVector) -> EmbeddingVector:
    """Project one embedding onto the principal axes."""
    if vector.dim != model.input_dim:
        raise ValueError(
            f"embedding dim {vector.dim} does not match model input dim {model.input_dim}"
        )
    projected = model.components @ (vector.values - model.mean)
    return EmbeddingVector(frame=vector.frame, values=projected)


def transform_matrix(model: PcaModel, matrix: np.ndarray) -> np.ndarray:
    """Project an (n, input_dim) matrix onto the principal axes."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape[1] != model.input_dim:
        raise ValueError(
            f"matrix dim {matrix.shape[1]} does not match model input dim {model.input_dim}"
        )
    return (matrix - model.mean) @ model.components.T


def save_pca(model: PcaModel, path) -> None:
    """Serialize the model: magic b"FSPC", u32 output_dim, u32 input_dim,
    then mean, components (row-major) and explained variance as
    little-endian float32."""
    with open(path, "wb") as fh:
        fh.write(b"FSPC")
        fh.write(struct.pack("<II", model.output_dim, model.input_dim))
        fh.write(np.asarray(model.mean, dtype="<f4").tobytes())
        fh.write(np.asarray(model.components, dtype="<f4").tobytes())
        fh.write(np.asarray(model.explained_variance, dtype="<f4").tobytes())


def load_pca(path) -> PcaModel:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != b"FSPC":
            raise DataFormatError(f"bad magic {magic!r}", path=path)
        out_dim, in_dim = struct.unpack("<II", fh.read(8))
        mean = np.frombuffer(fh.read(4 * in_dim), dtype="<f4").astype(np.float64)
        components = (
            np.frombuffer(fh.read(4 * out_dim * in_dim), dtype="<f4")
            .astype(np.float64)
            .reshape(out_dim, in_dim)
        )
        explained = np.frombuffer(fh.read(4 * out_dim), dtype="<f4").astype(np.float64)
    # float32 storage perturbs orthonormality; re-orthonormalize rows.
    norms = np.linalg.norm(components, axis=1, keepdims=True)
    return PcaModel(mean=mean, components=components / norms, explained_variance=explained)


def _pairwise_sq_distances(points: np.ndarray) -> np.ndarray:
    sq_norms = np.einsum("ij,ij->i", points, points)
    gram = points @ points.T
    d2 = sq_norms[:, None] + sq_norms[None, :] - 2.0 * gram
    np.maximum(d2, 0.0, out=d2)
    return d2


def affinity_rbf(points: np.ndarray, gamma: float) -> np.ndarray:
    """W[j, k] = exp(-gamma * ||x_j - x_k||^2) with a zeroed diagonal."""
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    points = np.asarray(points, dtype=np.float64)
    weights = np.exp(-gamma * _pairwise_sq_distances(points))
    weights = 0.5 * (weights + weights.T)
    np.fill_diagonal(weights, 0.0)
    return weights


def affinity_knn(points: np.ndarray, k: int) -> np.ndarray:
    """Symmetrized k-nearest-neighbor graph (Euclidean), 0/1 weights.

    An edge exists when either endpoint counts the other among its k
    nearest; distance ties break toward the lower sample index. Diagonal
    is zero.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n, got k={k}, n={n}")
    d2 = _pairwise_sq_distances(points)
    np.fill_diagonal(d2, np.inf)
    weights = np.zeros((n, n))
    for row in range(n):
        nearest = np.argsort(d2[row], kind="stable")[:k]
        weights[row, nearest] = 1.0
    return np.maximum(weights, weights.T)


def normalize_laplacian(weights: np.ndarray) -> np.ndarray:
    """S = D^(-1/2) W D^(-1/2); zero-degree rows stay all zero."""
    weights = np.asarray(weights, dtype=np.float64)
    degrees = weights.sum(axis=1)
    inv_sqrt = np.zeros_like(degrees)
    positive = degrees > 0
    inv_sqrt[positive] = 1.0 / np.sqrt(degrees[positive])
    s = weights * inv_sqrt[:, None] * inv_sqrt[None, :]
    return 0.5 * (s + s.T)


@dataclass(frozen=True, eq=False)
class SpreadState:
    """Result of the spreading iteration: final label matrix and stopping info."""

    Y: np.ndarray
    step: int
    converged: bool

    def predictions(self) -> np.ndarray:
        """Predicted class column per row; argmax with ties to the lowest index."""
        return np.argmax(self.Y, axis=1)


def spread_labels(S: np.ndarray, Y0: np.ndarray, cfg: SpreadConfig) -> SpreadState:
    """Iterate Y(t+1) = nu S Y(t) + (1 - nu) Y(0) from Y(0).

    Stops when the largest entry change falls below cfg.convergence_tol or
    after cfg.max_steps steps, whichever comes first.
    """
    S = np.asarray(S, dtype=np.float64)
    Y0 = np.asarray(Y0, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"S must be square, got {S.shape}")
    if Y0.ndim != 2 or Y0.shape[0] != S.shape[0]:
        raise ValueError(
            f"Y0 rows ({Y0.shape[0]}) must match S size ({S.shape[0]})"
        )
    nu = cfg.nu
    Y = Y0.copy()
    converged = False
    step = 0
    for step in range(1, cfg.max_steps + 1):
        Y_next = nu * (S @ Y) + (1.0 - nu) * Y0
        delta = float(np.max(np.abs(Y_next - Y))) if Y.size else 0.0
        Y = Y_next
        if delta < cfg.convergence_tol:
            converged = True
            break
    return SpreadState(Y=Y, step=step, converged=converged)


def one_hot(labels: Sequence[int], n_classes: int) -> np.ndarray:
    out = np.zeros((len(labels), n_classes))
    for row, label in enumerate(labels):
        out[row, label] = 1.0
    return out


def _class_universe(train: Sequence[tuple[EmbeddingVector, SceneTag]]) -> list[SceneTag]:
    return sorted({tag for _, tag in train})


def _build_affinity(points: np.ndarray, cfg: SpreadConfig) -> np.ndarray:
    if cfg.kernel == "rbf":
        return affinity_rbf(points, cfg.gamma)
    return affinity_knn(points, cfg.knn_k)


def _maybe_fit_pca(
    train: Sequence[tuple[EmbeddingVector, SceneTag]], cfg: SpreadConfig
) -> PcaModel | None:
    input_dim = train[0][0].dim
    if input_dim <= cfg.pca_dims:
        return None
    return fit_pca([ev for ev, _ in train], cfg.pca_dims)


def spread_batched(
    train: Sequence[tuple[EmbeddingVector, SceneTag]],
    test: Sequence[EmbeddingVector],
    cfg: SpreadConfig,
    pca: PcaModel | None = None,
) -> list[SceneTag]:
    """Label test embeddings by spreading from the labeled training set.

    The test set is split into consecutive chunks (deterministic, in input
    order) so every train + chunk graph stays within cfg.batch_limit
    samples. A PCA model is fit on the training embeddings when their dim
    exceeds cfg.pca_dims and none is supplied.
    """
    train = list(train)
    test = list(test)
    if not train:
        raise ValueError("train must be nonempty")
    if len(train) > cfg.batch_limit:
        raise ValueError(
            f"training set ({len(train)}) exceeds batch_limit ({cfg.batch_limit})"
        )
    if not test:
        return []
    chunk_size = cfg.batch_limit - len(train)
    if chunk_size < 1:
        raise ValueError(
            f"batch_limit {cfg.batch_limit} leaves no room for test frames "
            f"beside {len(train)} training frames"
        )
    dims = {ev.dim for ev, _ in train} | {ev.dim for ev in test}
    if len(dims) != 1:
        raise ValueError(f"mixed embedding dims {sorted(dims)}")

    if pca is None:
        pca = _maybe_fit_pca(train, cfg)
    train_matrix = np.stack([ev.values for ev, _ in train])
    if pca is not None:
        train_matrix = transform_matrix(pca, train_matrix)

    classes = _class_universe(train)
    class_index = {tag: i for i, tag in enumerate(classes)}
    train_labels = [class_index[tag] for _, tag in train]
    y_train = one_hot(train_labels, len(classes))

    predictions: list[SceneTag] = []
    for start in range(0, len(test), chunk_size):
        chunk = test[start : start + chunk_size]
        chunk_matrix = np.stack([ev.values for ev in chunk])
        if pca is not None:
            chunk_matrix = transform_matrix(pca, chunk_matrix)
        points = np.vstack([train_matrix, chunk_matrix])
        S = normalize_laplacian(_build_affinity(points, cfg))
        Y0 = np.vstack([y_train, np.zeros((len(chunk), len(classes)))])
        state = spread_labels(S, Y0, cfg)
        chunk_pred = state.predictions()[len(train) :]
        predictions.extend(classes[c] for c in chunk_pred)
    return predictions


def keyframes_by_instability(
    train: Sequence[tuple[EmbeddingVector, SceneTag]],
    test: Sequence[EmbeddingVector],
    bcfg: BoundaryConfig,
    cfg: SpreadConfig,
    pca: PcaModel | None = None,
) -> tuple[list[FrameRef], list[list[SceneTag]]]:
    """Flag test frames whose label changes across perturbed spreading runs.

    One spreading run per (gamma, nu) pair from bcfg; a frame is a
    key-frame iff its predicted composite class is not identical across
    all runs. Returns the flagged frames (in test order) and the full
    per-run label lists. Within a single batch the flagged set does not
    depend on test ordering.
    """
    train = list(train)
    test = list(test)
    if pca is None:
        pca = _maybe_fit_pca(train, cfg)
    run_labels: list[list[SceneTag]] = []
    for gamma, nu in bcfg.run_parameters():
        run_cfg = replace(cfg, gamma=gamma, nu=nu)
        run_labels.append(spread_batched(train, test, run_cfg, pca=pca))
    flagged = []
    for i, ev in enumerate(test):
        labels = {labels_for_run[i] for labels_for_run in run_labels}
        if len(labels) > 1:
            flagged.append(ev.frame)
    return flagged, run_labels
