"""MERA-regularized multi-view subspace clustering solved by ADMM.

Model per view: ``X_v = X_v Z_v + E_v`` with an l2,1 penalty on ``E_v``;
the stacked self-representations, reshaped to a 5th-order tensor, are
tied to an auxiliary tensor ``Y`` that is kept on the low-rank MERA
manifold. All iterates start at zero and both penalties grow
geometrically up to ``mu_max``.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels, mera
from . import tensor as tc
from .spectral import SpectralConfig, cluster


class DegenerateSplitWarning(UserWarning):
    """A sample count has no factorization better than ``1 x n``."""


@dataclass
class MultiViewDataset:
    views: list[np.ndarray]
    labels: np.ndarray | None = None
    num_clusters: int | None = None

    def __post_init__(self):
        if not self.views:
            raise ValueError("dataset needs at least one view")
        self.views = [np.asarray(x, dtype=np.float64) for x in self.views]
        n = self.views[0].shape[1]
        for v, x in enumerate(self.views):
            if x.ndim != 2 or x.shape[1] != n:
                raise ValueError(f"view {v} has shape {x.shape}; expected D_v x {n}")
            if not np.all(np.isfinite(x)):
                raise ValueError(f"view {v} contains non-finite values")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (n,):
                raise ValueError(f"labels have shape {self.labels.shape}, expected ({n},)")
            k = len(np.unique(self.labels))
            if self.num_clusters is None:
                self.num_clusters = k
            elif self.num_clusters != k:
                raise ValueError(f"labels have {k} distinct values but num_clusters={self.num_clusters}")

    @property
    def n_samples(self) -> int:
        return self.views[0].shape[1]

    @property
    def n_views(self) -> int:
        return len(self.views)


@dataclass(frozen=True)
class MscConfig:
    rank: int
    lam: float = 0.01
    mu1_init: float = 1e-4
    mu2_init: float = 5e-4
    eta: float = 2.0
    mu_max: float = 1e10
    epsilon: float = 1e-6
    max_iters: int = 50
    mera_sweeps: int = 10
    seed: int = 0
    split_override: tuple[int, int] | None = None
    warm_start: bool = True
    kmeans_restarts: int = 30

    def __post_init__(self):
        if self.eta <= 1:
            raise ValueError("eta must exceed 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.rank < 1:
            raise ValueError("rank must be >= 1")


@dataclass
class MscState:
    Z: list[np.ndarray]
    E: list[np.ndarray]
    Lambda: list[np.ndarray]
    Y: np.ndarray
    Gamma: np.ndarray
    mu1: float
    mu2: float
    split: tuple[int, int]
    iter: int = 0
    net: mera.Mera5Network | None = None


@dataclass
class MscOutput:
    Z_final: list[np.ndarray]
    affinity: np.ndarray
    labels: np.ndarray
    residual_trace: list[tuple[float, float]]
    converged: bool
    iterations: int
    iter_times: list[float] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)


def balanced_split(n: int) -> tuple[int, int]:
    """Divisor pair ``(A, Q)`` with ``A <= Q``, ``A * Q = n`` and ``Q - A`` minimal."""
    if n < 1:
        raise ValueError("n must be >= 1")
    a = math.isqrt(n)
    while n % a:
        a -= 1
    if a == 1 and n > 1:
        warnings.warn(f"{n} only factors as 1 x {n}; the reshape degenerates", DegenerateSplitWarning, stacklevel=2)
    return a, n // a


def stack_reshape(Z, a: int, q: int) -> np.ndarray:
    """Stack ``V`` N x N matrices along a third mode and reshape to ``[A, Q, A, Q, V]``."""
    n = Z[0].shape[0]
    if a * q != n:
        raise ValueError(f"A*Q = {a * q} does not match N = {n}")
    for z in Z:
        if z.shape != (n, n):
            raise ValueError(f"expected {n}x{n} matrices, got {z.shape}")
    return np.stack(Z, axis=2).reshape((a, q, a, q, len(Z)), order="F")


def unstack(t: np.ndarray) -> list[np.ndarray]:
    """Inverse of :func:`stack_reshape`."""
    a, q, _, _, v = t.shape
    cube = t.reshape((a * q, a * q, v), order="F")
    return [cube[:, :, i] for i in range(v)]


def view_slice(t: np.ndarray, v: int) -> np.ndarray:
    a, q = t.shape[0], t.shape[1]
    return t[..., v].reshape((a * q, a * q), order="F")


def resolve_split(n: int, cfg: MscConfig) -> tuple[int, int]:
    if cfg.split_override is not None:
        a, q = cfg.split_override
        if a * q != n:
            raise ValueError(f"split override {a}x{q} does not match N = {n}")
        return int(a), int(q)
    return balanced_split(n)


def init_state(dataset: MultiViewDataset, cfg: MscConfig) -> MscState:
    n, v = dataset.n_samples, dataset.n_views
    a, q = resolve_split(n, cfg)
    shape = (a, q, a, q, v)
    return MscState(
        Z=[np.zeros((n, n)) for _ in range(v)],
        E=[np.zeros_like(x) for x in dataset.views],
        Lambda=[np.zeros_like(x) for x in dataset.views],
        Y=np.zeros(shape),
        Gamma=np.zeros(shape),
        mu1=cfg.mu1_init,
        mu2=cfg.mu2_init,
        split=(a, q),
    )


def update_z(v, state: MscState, dataset: MultiViewDataset, Y=None, Gamma=None, solver=None) -> np.ndarray:
    x = dataset.views[v]
    Y = state.Y if Y is None else Y
    Gamma = state.Gamma if Gamma is None else Gamma
    mu1, mu2 = state.mu1, state.mu2
    rhs = x.T @ (state.Lambda[v] + mu2 * (x - state.E[v])) + view_slice(mu1 * Y - Gamma, v)
    return tc.regularized_gram_solve(x, mu1, mu2, rhs, solver=solver)


def update_e(v, state: MscState, dataset: MultiViewDataset, lam: float) -> np.ndarray:
    x = dataset.views[v]
    d = x - x @ state.Z[v] + state.Lambda[v] / state.mu2
    return kernels.l21_shrink(d, lam / state.mu2)


def check_rank(shape, rank: int) -> None:
    i0, i1, i2, i3, i4 = shape
    if rank > i0 * i1 or rank > i2 * i3 * i4:
        raise ValueError(
            f"rank {rank} infeasible for tensor legs {tuple(shape)}: "
            f"needs rank <= {i0 * i1} and <= {i2 * i3 * i4}"
        )


def update_y(state: MscState, rank: int, sweeps: int = 10, seed: int = 0, warm_start: bool = True, target=None):
    """MERA approximation of ``Zhat + Gamma / mu1``.

    Returns ``(Y, network)``; the previous network in ``state.net`` seeds
    the fit when ``warm_start`` is set.
    """
    if target is None:
        a, q = state.split
        target = stack_reshape(state.Z, a, q) + state.Gamma / state.mu1
    check_rank(target.shape, rank)
    if warm_start and state.net is not None:
        cfg = mera.MeraConfig(rank=rank, sweeps=sweeps, init="warm", warm_start=state.net)
    else:
        cfg = mera.MeraConfig(rank=rank, sweeps=sweeps, seed=seed)
    net, y, _ = mera.approximate(target, cfg)
    return y, net


def update_multipliers_and_penalties(state: MscState, dataset: MultiViewDataset, eta: float, mu_max: float) -> MscState:
    a, q = state.split
    zhat = stack_reshape(state.Z, a, q)
    gamma = state.Gamma + state.mu1 * (zhat - state.Y)
    lam = [
        lv + state.mu2 * (x - x @ z - e)
        for lv, x, z, e in zip(state.Lambda, dataset.views, state.Z, state.E)
    ]
    return MscState(
        Z=state.Z, E=state.E, Lambda=lam, Y=state.Y, Gamma=gamma,
        mu1=min(eta * state.mu1, mu_max), mu2=min(eta * state.mu2, mu_max),
        split=state.split, iter=state.iter, net=state.net,
    )


def residuals(state: MscState, dataset: MultiViewDataset) -> tuple[float, float]:
    """``RE = max_v |X_v - X_v Z_v - E_v|_inf`` and ``ME = max_v |Z_v - Y_v|_inf``."""
    re = max(tc.norms(x - x @ z - e)[1] for x, z, e in zip(dataset.views, state.Z, state.E))
    me = max(tc.norms(z - view_slice(state.Y, v))[1] for v, z in enumerate(state.Z))
    return re, me


def build_affinity(Z) -> np.ndarray:
    """``(1/V) * sum_v (|Z_v| + |Z_v^T|)``."""
    n = Z[0].shape[0]
    s = np.zeros((n, n))
    for z in Z:
        if z.shape != (n, n):
            raise ValueError(f"expected {n}x{n} matrices, got {z.shape}")
        az = np.abs(z)
        s += az + az.T
    return s / len(Z)


def solve(dataset: MultiViewDataset, cfg: MscConfig) -> MscOutput:
    if dataset.num_clusters is None:
        raise ValueError("dataset.num_clusters must be set")
    state = init_state(dataset, cfg)
    a, q = state.split
    check_rank((a, q, a, q, dataset.n_views), cfg.rank)

    t0 = time.perf_counter()
    solvers = [tc.GramSolver(x) for x in dataset.views]
    timings = {"factorize": time.perf_counter() - t0}
    trace, iter_times = [], []
    converged = False
    for it in range(1, cfg.max_iters + 1):
        t_it = time.perf_counter()
        for v in range(dataset.n_views):
            state.Z[v] = update_z(v, state, dataset, solver=solvers[v])
            state.E[v] = update_e(v, state, dataset, cfg.lam)
        state.Y, state.net = update_y(state, cfg.rank, cfg.mera_sweeps, cfg.seed, cfg.warm_start)
        state = update_multipliers_and_penalties(state, dataset, cfg.eta, cfg.mu_max)
        state.iter = it
        re, me = residuals(state, dataset)
        trace.append((re, me))
        iter_times.append(time.perf_counter() - t_it)
        if re <= cfg.epsilon and me <= cfg.epsilon:
            converged = True
            break
    timings["admm"] = sum(iter_times)

    t1 = time.perf_counter()
    affinity = build_affinity(state.Z)
    labels = cluster(affinity, SpectralConfig(k=dataset.num_clusters, seed=cfg.seed, kmeans_restarts=cfg.kmeans_restarts))
    timings["spectral"] = time.perf_counter() - t1
    return MscOutput(
        Z_final=state.Z, affinity=affinity, labels=labels, residual_trace=trace,
        converged=converged, iterations=state.iter, iter_times=iter_times, timings=timings,
    )
