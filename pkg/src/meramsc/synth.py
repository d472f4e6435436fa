"""Synthetic multi-view datasets with known cluster labels."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .msc import MultiViewDataset


def synth_multiview(
    k: int,
    n_per_cluster: int,
    subspace_dim: int,
    ambient_dims: Sequence[int],
    noise_sigma: float = 0.0,
    seed: int = 0,
    orthogonal: bool = False,
) -> MultiViewDataset:
    """Union-of-subspaces data.

    Every cluster owns a random ``subspace_dim``-dimensional subspace in
    each view; samples are Gaussian combinations of its basis plus
    isotropic noise. The subspaces are drawn independently, or mutually
    orthogonal when ``orthogonal`` is set (needs ``k * subspace_dim`` not
    above any ambient dimension). Sample order is shuffled identically
    across views.
    """
    if min(k, n_per_cluster, subspace_dim) < 1 or not ambient_dims:
        raise ValueError("k, n_per_cluster, subspace_dim and ambient_dims must be positive")
    for d in ambient_dims:
        if subspace_dim > d:
            raise ValueError(f"subspace_dim {subspace_dim} exceeds ambient dimension {d}")
        if orthogonal and k * subspace_dim > d:
            raise ValueError(f"{k} orthogonal {subspace_dim}-dim subspaces do not fit in dimension {d}")
    rng = np.random.default_rng(seed)
    n = k * n_per_cluster
    labels = np.repeat(np.arange(k), n_per_cluster)
    order = rng.permutation(n)
    labels = labels[order]
    views = []
    for d in ambient_dims:
        x = np.empty((d, n))
        if orthogonal:
            joint, _ = np.linalg.qr(rng.standard_normal((d, k * subspace_dim)))
        for c in range(k):
            if orthogonal:
                basis = joint[:, c * subspace_dim:(c + 1) * subspace_dim]
            else:
                basis, _ = np.linalg.qr(rng.standard_normal((d, subspace_dim)))
            idx = np.flatnonzero(labels == c)
            x[:, idx] = basis @ rng.standard_normal((subspace_dim, idx.size))
        if noise_sigma > 0:
            x += noise_sigma * rng.standard_normal(x.shape)
        views.append(x)
    return MultiViewDataset(views=views, labels=labels, num_clusters=k)


def synth_planted(
    k: int,
    n_per_cluster: int,
    ambient_dims: Sequence[int],
    separation: float = 3.0,
    noise_sigma: float = 1.0,
    seed: int = 0,
) -> MultiViewDataset:
    """Planted-partition blobs.

    Per view, cluster centers are Gaussian with expected pairwise distance
    ``separation``; samples add isotropic noise of expected norm
    ``noise_sigma``.
    """
    if min(k, n_per_cluster) < 1 or not ambient_dims:
        raise ValueError("k, n_per_cluster and ambient_dims must be positive")
    rng = np.random.default_rng(seed)
    n = k * n_per_cluster
    labels = rng.permutation(np.repeat(np.arange(k), n_per_cluster))
    views = []
    for d in ambient_dims:
        centers = separation * rng.standard_normal((d, k)) / np.sqrt(2.0 * d)
        views.append(centers[:, labels] + noise_sigma * rng.standard_normal((d, n)) / np.sqrt(d))
    return MultiViewDataset(views=views, labels=labels, num_clusters=k)
