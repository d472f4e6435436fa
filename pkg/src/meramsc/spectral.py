"""Normalized spectral clustering of an affinity matrix."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .tensor import check_symmetric, sym_eig_smallest


@dataclass(frozen=True)
class SpectralConfig:
    k: int
    kmeans_restarts: int = 30
    kmeans_max_iters: int = 300
    seed: int = 0
    degree_floor: float = 1e-12

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.kmeans_restarts < 1:
            raise ValueError("kmeans_restarts must be >= 1")


def normalized_laplacian(s, degree_floor: float = 1e-12) -> np.ndarray:
    """``I - D^{-1/2} S D^{-1/2}`` with degrees floored at ``degree_floor``."""
    s = check_symmetric(s)
    if s.size and np.min(s) < 0:
        raise ValueError("affinity has negative entries")
    deg = np.maximum(s.sum(axis=1), degree_floor)
    inv_sqrt = 1.0 / np.sqrt(deg)
    lap = np.eye(s.shape[0]) - inv_sqrt[:, None] * s * inv_sqrt[None, :]
    return 0.5 * (lap + lap.T)


def normalize_rows(v: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(v, axis=1)
    out = np.zeros_like(v)
    nz = norms > 0
    out[nz] = v[nz] / norms[nz, None]
    return out


def spectral_embedding(s, k: int, degree_floor: float = 1e-12) -> np.ndarray:
    """Row-normalized eigenvectors for the ``k`` smallest Laplacian eigenvalues."""
    n = np.asarray(s).shape[0]
    if k > n:
        raise ValueError(f"k={k} exceeds the number of samples {n}")
    _, vecs = sym_eig_smallest(normalized_laplacian(s, degree_floor), k)
    return normalize_rows(vecs)


def _plusplus(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    _, d2 = kernels.kmeans_assign(x, centers[:1])
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        else:
            idx = int(rng.integers(n))
        centers[j] = x[idx]
        _, d2 = kernels.kmeans_assign(x, centers[: j + 1])
    return centers


def lloyd(x: np.ndarray, centers: np.ndarray, max_iters: int):
    """Lloyd iterations from ``centers``.

    Returns ``(labels, inertia, history)`` where ``history`` holds the
    objective after every assignment step.
    """
    k = centers.shape[0]
    labels, d2 = kernels.kmeans_assign(x, centers)
    history = [float(d2.sum())]
    for _ in range(max_iters):
        sums, counts = kernels.kmeans_update(x, labels, k)
        centers = centers.copy()
        filled = counts > 0
        centers[filled] = sums[filled] / counts[filled, None]
        empty = np.flatnonzero(~filled)
        if empty.size:
            _, d2 = kernels.kmeans_assign(x, centers[filled])
            for j in empty:
                far = int(np.argmax(d2))
                centers[j] = x[far]
                d2[far] = 0.0
        new_labels, d2 = kernels.kmeans_assign(x, centers)
        history.append(float(d2.sum()))
        if np.array_equal(new_labels, labels) and not empty.size:
            break
        labels = new_labels
    return labels, float(d2.sum()), history


def kmeans(points, k: int, restarts: int = 30, max_iters: int = 300, seed: int = 0) -> np.ndarray:
    """Best-of-``restarts`` k-means++ / Lloyd clustering by within-cluster SS."""
    x = np.ascontiguousarray(points, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("points must be an N x d matrix")
    n = x.shape[0]
    if n < k:
        raise ValueError(f"need at least k={k} points, got {n}")
    best_labels, best_cost = None, np.inf
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        labels, cost, _ = lloyd(x, _plusplus(x, k, rng), max_iters)
        if cost < best_cost:
            best_labels, best_cost = labels, cost
    return best_labels


def cluster(s, cfg: SpectralConfig) -> np.ndarray:
    emb = spectral_embedding(s, cfg.k, cfg.degree_floor)
    return kmeans(emb, cfg.k, cfg.kmeans_restarts, cfg.kmeans_max_iters, cfg.seed)
