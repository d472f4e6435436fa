"""Scalable anchor-graph variant: ``X_v = A_v C_v + E_v`` with ``A_v^T A_v = I``.

Each view is summarized by an ``M x N`` anchor graph ``C_v``. The stack of
anchor graphs, reshaped to ``[m1, m2, A, Q, V]``, carries the MERA
low-rank constraint. Nothing here allocates an ``N x N`` array, so one
iteration costs ``O(V N M^2)`` plus the MERA fit on ``M N V`` entries.
"""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import kernels, mera
from . import tensor as tc
from .msc import DegenerateSplitWarning, MultiViewDataset, balanced_split, check_rank
from .spectral import kmeans, normalize_rows


@dataclass(frozen=True)
class AnchorConfig:
    num_anchors: int
    rank: int
    lam: float = 0.01
    mu1_init: float = 1e-4
    mu2_init: float = 5e-4
    eta: float = 2.0
    mu_max: float = 1e10
    epsilon: float = 1e-6
    max_iters: int = 50
    mera_sweeps: int = 10
    anchor_init: Literal["sampled", "random"] = "sampled"
    seed: int = 0
    split_override: tuple[int, int] | None = None
    anchor_split_override: tuple[int, int] | None = None
    warm_start: bool = True
    kmeans_restarts: int = 30
    consensus: Literal["mean", "stacked"] = "mean"

    def __post_init__(self):
        if self.num_anchors < 1:
            raise ValueError("num_anchors must be >= 1")
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.eta <= 1 or self.epsilon <= 0 or self.max_iters < 1:
            raise ValueError("need eta > 1, epsilon > 0 and max_iters >= 1")
        if self.anchor_init not in ("sampled", "random"):
            raise ValueError(f"unknown anchor_init {self.anchor_init!r}")


@dataclass
class AnchorState:
    A: list[np.ndarray]
    C: list[np.ndarray]
    E: list[np.ndarray]
    Lambda: list[np.ndarray]
    Y: np.ndarray
    Gamma: np.ndarray
    mu1: float
    mu2: float
    shape: tuple[int, int, int, int, int]
    iter: int = 0
    net: mera.Mera5Network | None = None


@dataclass
class AnchorOutput:
    C_final: list[np.ndarray]
    A_final: list[np.ndarray]
    labels: np.ndarray
    residual_trace: list[tuple[float, float]]
    converged: bool
    iterations: int
    iter_times: list[float] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)


def _orthonormalize(m: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(m)
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


def init_anchors(dataset: MultiViewDataset, cfg: AnchorConfig) -> list[np.ndarray]:
    """Orthonormal ``D_v x M`` anchor matrices.

    ``sampled`` orthonormalizes the same ``M`` randomly chosen samples in
    every view; ``random`` takes the leading columns of a random
    orthogonal matrix.
    """
    m = cfg.num_anchors
    dmin = min(x.shape[0] for x in dataset.views)
    if m > dmin:
        raise ValueError(f"num_anchors {m} exceeds the smallest view dimension {dmin}")
    if cfg.anchor_init == "sampled" and m > dataset.n_samples:
        raise ValueError(f"num_anchors {m} exceeds the sample count {dataset.n_samples}")
    rng = np.random.default_rng(cfg.seed)
    if cfg.anchor_init == "sampled":
        idx = np.sort(rng.choice(dataset.n_samples, size=m, replace=False))
        out = []
        for x in dataset.views:
            cols = x[:, idx]
            # rank-deficient samples: fill the gap with random directions
            if np.linalg.matrix_rank(cols) < m:
                cols = cols + 1e-8 * np.linalg.norm(cols) * rng.standard_normal(cols.shape)
            out.append(_orthonormalize(cols))
        return out
    return [_orthonormalize(rng.standard_normal((x.shape[0], x.shape[0])))[:, :m] for x in dataset.views]


def anchor_split(m: int, n: int, cfg: AnchorConfig | None = None) -> tuple[int, int, int, int]:
    """``(m1, m2, A, Q)`` from balanced splits of ``M`` and ``N`` unless overridden."""
    if m == 1:
        warnings.warn("a single anchor gives a degenerate 1 x 1 anchor split", DegenerateSplitWarning, stacklevel=2)
    m1m2 = cfg.anchor_split_override if cfg and cfg.anchor_split_override else balanced_split(m)
    aq = cfg.split_override if cfg and cfg.split_override else balanced_split(n)
    if m1m2[0] * m1m2[1] != m or aq[0] * aq[1] != n:
        raise ValueError(f"split overrides {m1m2}, {aq} do not factor M={m}, N={n}")
    return (*m1m2, *aq)


def anchor_reshape(C, a: int, q: int, m1: int, m2: int) -> np.ndarray:
    """Stack ``V`` anchor graphs (M x N) and reshape to ``[m1, m2, A, Q, V]``."""
    m, n = C[0].shape
    if m1 * m2 != m or a * q != n:
        raise ValueError(f"({m1}, {m2}, {a}, {q}) does not factor an {m}x{n} anchor graph")
    for c in C:
        if c.shape != (m, n):
            raise ValueError(f"expected {m}x{n} anchor graphs, got {c.shape}")
    return np.stack(C, axis=2).reshape((m1, m2, a, q, len(C)), order="F")


def anchor_unstack(t: np.ndarray) -> list[np.ndarray]:
    m1, m2, a, q, v = t.shape
    cube = t.reshape((m1 * m2, a * q, v), order="F")
    return [cube[:, :, i] for i in range(v)]


def _slice(t: np.ndarray, v: int) -> np.ndarray:
    m1, m2, a, q, _ = t.shape
    return t[..., v].reshape((m1 * m2, a * q), order="F")


def init_state(dataset: MultiViewDataset, cfg: AnchorConfig) -> AnchorState:
    m1, m2, a, q = anchor_split(cfg.num_anchors, dataset.n_samples, cfg)
    shape = (m1, m2, a, q, dataset.n_views)
    n, m = dataset.n_samples, cfg.num_anchors
    return AnchorState(
        A=init_anchors(dataset, cfg),
        C=[np.zeros((m, n)) for _ in dataset.views],
        E=[np.zeros_like(x) for x in dataset.views],
        Lambda=[np.zeros_like(x) for x in dataset.views],
        Y=np.zeros(shape),
        Gamma=np.zeros(shape),
        mu1=cfg.mu1_init,
        mu2=cfg.mu2_init,
        shape=shape,
    )


def update_c(v, state: AnchorState, dataset: MultiViewDataset) -> np.ndarray:
    x, a = dataset.views[v], state.A[v]
    mu1, mu2 = state.mu1, state.mu2
    rhs = a.T @ (state.Lambda[v] + mu2 * (x - state.E[v])) + mu1 * _slice(state.Y, v) - _slice(state.Gamma, v)
    return rhs / (mu1 + mu2)


def update_a(v, state: AnchorState, dataset: MultiViewDataset) -> np.ndarray:
    x = dataset.views[v]
    target = x - state.E[v] + state.Lambda[v] / state.mu2
    return tc.procrustes_max(target @ state.C[v].T)


def update_e(v, state: AnchorState, dataset: MultiViewDataset, lam: float) -> np.ndarray:
    x = dataset.views[v]
    d = x - state.A[v] @ state.C[v] + state.Lambda[v] / state.mu2
    return kernels.l21_shrink(d, lam / state.mu2)


def labels_from_anchor_graphs(C, k: int, seed: int = 0, restarts: int = 30, consensus: str = "mean") -> np.ndarray:
    """Cluster samples from their anchor graphs without an N x N graph.

    The embedding is the top-``k`` right singular subspace of the
    consensus graph ``mean_v C_v`` (``consensus="mean"``) or of the
    vertically stacked graphs (``consensus="stacked"``); the latter equals
    the leading eigenvectors of ``sum_v C_v^T C_v`` and ignores per-view
    rotations of the anchor basis. Rows are normalized before k-means.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    C = [np.asarray(c, dtype=np.float64) for c in C]
    if consensus == "mean":
        g = sum(C) / len(C)
    elif consensus == "stacked":
        g = np.vstack(C) / np.sqrt(len(C))
    else:
        raise ValueError(f"unknown consensus {consensus!r}")
    n = g.shape[1]
    if k > n:
        raise ValueError(f"k={k} exceeds the number of samples {n}")
    right = tc.svd(g).right
    emb = right[:, :k]
    if emb.shape[1] < k:
        emb = np.hstack([emb, np.zeros((n, k - emb.shape[1]))])
    return kmeans(normalize_rows(emb), k, restarts=restarts, seed=seed)


def residuals(state: AnchorState, dataset: MultiViewDataset) -> tuple[float, float]:
    re = max(tc.norms(x - a @ c - e)[1] for x, a, c, e in zip(dataset.views, state.A, state.C, state.E))
    me = max(tc.norms(c - _slice(state.Y, v))[1] for v, c in enumerate(state.C))
    return re, me


def solve_anchor(dataset: MultiViewDataset, cfg: AnchorConfig) -> AnchorOutput:
    if dataset.num_clusters is None:
        raise ValueError("dataset.num_clusters must be set")
    state = init_state(dataset, cfg)
    check_rank(state.shape, cfg.rank)
    m1, m2, a, q, _ = state.shape

    trace, iter_times = [], []
    converged = False
    for it in range(1, cfg.max_iters + 1):
        t_it = time.perf_counter()
        for v, x in enumerate(dataset.views):
            state.C[v] = update_c(v, state, dataset)
            state.A[v] = update_a(v, state, dataset)
            state.E[v] = update_e(v, state, dataset, cfg.lam)
            state.Lambda[v] = state.Lambda[v] + state.mu2 * (x - state.A[v] @ state.C[v] - state.E[v])
        chat = anchor_reshape(state.C, a, q, m1, m2)
        if cfg.warm_start and state.net is not None:
            mcfg = mera.MeraConfig(rank=cfg.rank, sweeps=cfg.mera_sweeps, init="warm", warm_start=state.net)
        else:
            mcfg = mera.MeraConfig(rank=cfg.rank, sweeps=cfg.mera_sweeps, seed=cfg.seed)
        state.net, state.Y, _ = mera.approximate(chat + state.Gamma / state.mu1, mcfg)
        state.Gamma = state.Gamma + state.mu1 * (chat - state.Y)
        state.mu1 = min(cfg.eta * state.mu1, cfg.mu_max)
        state.mu2 = min(cfg.eta * state.mu2, cfg.mu_max)
        state.iter = it
        re, me = residuals(state, dataset)
        trace.append((re, me))
        iter_times.append(time.perf_counter() - t_it)
        if re <= cfg.epsilon and me <= cfg.epsilon:
            converged = True
            break

    t1 = time.perf_counter()
    labels = labels_from_anchor_graphs(state.C, dataset.num_clusters, cfg.seed, cfg.kmeans_restarts, cfg.consensus)
    timings = {"admm": sum(iter_times), "labels": time.perf_counter() - t1}
    return AnchorOutput(
        C_final=state.C, A_final=state.A, labels=labels, residual_trace=trace,
        converged=converged, iterations=state.iter, iter_times=iter_times, timings=timings,
    )
