"""PCA subspaces of spectrogram images and principal-angle similarity."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from mdgesture import kernels
from mdgesture.errors import BadDim, DegenerateRank, DimMismatch, EmptyTraining
from mdgesture.signal import GrayImage

DEFAULT_GROUP_DIM = 10
DEFAULT_TAU = 0.85
DEFAULT_PCA_DIM = 30


@dataclass(frozen=True)
class ImageStack:
    """Column-stacked vectorized images, one column per sample."""

    X: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] < 1:
            raise BadDim("ImageStack needs a 2-D matrix with at least one column")
        labels = np.asarray(self.labels)
        if labels.size != X.shape[1]:
            raise BadDim("one label per column required")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_images(cls, images, labels) -> "ImageStack":
        vecs = [im.vector if isinstance(im, GrayImage) else np.ravel(im) for im in images]
        return cls(np.column_stack(vecs), np.asarray(labels))

    @property
    def M(self) -> int:
        return self.X.shape[1]

    def subset(self, label) -> "ImageStack":
        mask = self.labels == label
        return ImageStack(self.X[:, mask], self.labels[mask])


@dataclass(frozen=True)
class SubspaceModel:
    basis: np.ndarray
    mean: np.ndarray
    eigenvalues: np.ndarray

    @property
    def d(self) -> int:
        return self.basis.shape[1]


@dataclass(frozen=True)
class CanonicalResult:
    lambdas: np.ndarray

    @property
    def min_angle_cos(self) -> float:
        return float(self.lambdas[0])


def pca_basis(stack: ImageStack, d: int) -> SubspaceModel:
    """Top-``d`` principal directions of the mean-centered columns."""
    n, M = stack.X.shape
    if not 1 <= d <= min(M, n):
        raise BadDim(f"d={d} outside [1, {min(M, n)}]")
    mean = stack.X.mean(axis=1)
    centered = stack.X - mean[:, None]
    U, s, _ = np.linalg.svd(centered, full_matrices=False)
    tol = (s[0] if s.size else 0.0) * max(n, M) * np.finfo(float).eps
    rank = int(np.sum(s > tol)) if s.size and s[0] > 0 else 0
    if rank < d:
        raise DegenerateRank(f"centered stack has rank {rank} < d={d}")
    eig = s[:d] ** 2 / (M - 1) if M > 1 else np.zeros(d)
    return SubspaceModel(U[:, :d], mean, eig)


def canonical_coeffs(A: SubspaceModel, B: SubspaceModel) -> CanonicalResult:
    if A.d != B.d:
        raise DimMismatch(f"subspace dimensions differ: {A.d} vs {B.d}")
    if A.basis.shape[0] != B.basis.shape[0]:
        raise DimMismatch("subspaces live in different ambient spaces")
    lam = np.linalg.svd(A.basis.T @ B.basis, compute_uv=False)
    return CanonicalResult(np.clip(np.sort(lam)[::-1], 0.0, 1.0))


def similarity_matrix(models: list[SubspaceModel]) -> np.ndarray:
    if len(models) < 2:
        raise BadDim("need at least two subspace models")
    n = len(models)
    sim = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            sim[i, j] = sim[j, i] = canonical_coeffs(models[i], models[j]).min_angle_cos
    return sim


def group_classes(sim: np.ndarray, tau: float = DEFAULT_TAU) -> list[list[int]]:
    """Connected components of the graph linking pairs with similarity >= tau.

    Groups hold sorted indices and are ordered by their smallest member.
    """
    sim = np.asarray(sim, dtype=np.float64)
    adj = sim >= tau
    np.fill_diagonal(adj, True)
    adj = adj | adj.T
    _, comp = connected_components(adj.astype(np.int8), directed=False)
    groups: dict[int, list[int]] = {}
    for idx, c in enumerate(comp):
        groups.setdefault(int(c), []).append(idx)
    return sorted(groups.values(), key=lambda g: g[0])


def class_subspaces(stack: ImageStack, d: int = DEFAULT_GROUP_DIM) -> tuple[list, list[SubspaceModel]]:
    ids = sorted(np.unique(stack.labels).tolist())
    models = []
    for gid in ids:
        sub = stack.subset(gid)
        models.append(pca_basis(sub, min(d, sub.M - 1) if sub.M > 1 else 1))
    dims = {m.d for m in models}
    if len(dims) > 1:
        k = min(dims)
        models = [SubspaceModel(m.basis[:, :k], m.mean, m.eigenvalues[:k]) for m in models]
    return ids, models


@dataclass(frozen=True)
class PcaClassifierModel:
    subspace: SubspaceModel
    train_coords: np.ndarray
    train_labels: np.ndarray

    def project(self, vectors: np.ndarray) -> np.ndarray:
        vectors = np.atleast_2d(vectors)
        return (vectors - self.subspace.mean) @ self.subspace.basis


def pca_train(train: ImageStack, d: int = DEFAULT_PCA_DIM) -> PcaClassifierModel:
    if train.M < 1:
        raise EmptyTraining("no training images")
    if d > train.M:
        raise BadDim(f"d={d} exceeds training size {train.M}")
    sub = pca_basis(train, d)
    coords = (train.X - sub.mean[:, None]).T @ sub.basis
    return PcaClassifierModel(sub, coords, train.labels.copy())


def pca_predict_many(model: PcaClassifierModel, vectors: np.ndarray) -> np.ndarray:
    dist = kernels.pairwise_l2(model.project(vectors), model.train_coords)
    return model.train_labels[np.argmin(dist, axis=1)]


def pca_predict(model: PcaClassifierModel, image) -> object:
    vec = image.vector if isinstance(image, GrayImage) else np.ravel(image)
    return pca_predict_many(model, vec[None, :])[0]


def write_similarity_csv(path, ids, sim: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id"] + [str(i) for i in ids])
        for gid, row in zip(ids, sim):
            w.writerow([str(gid)] + [f"{v:.6f}" for v in row])


def write_partition(path, ids, groups: list[list[int]]) -> None:
    lines = [",".join(str(ids[i]) for i in g) for g in groups]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
