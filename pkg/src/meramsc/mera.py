"""Single-layer MERA network for 5th-order tensors and its ALS fit.

Topology (0-based legs ``I0..I4``): a disentangler ``u1`` acts on legs 1
and 2, isometry ``w1`` coarse-grains legs (0, 1') into ``R``, isometry
``w2`` coarse-grains legs (2', 3, 4) into ``R``, and the top core ``b``
(R x R) joins the two isometries.

In matrix form, with ``W1 = unfold(w1)`` of shape ``(I0*I1, R)`` and
``W2`` of shape ``(I2*I3*I4, R)``, the network before the disentangler is
the ``(I0*I1) x (I2*I3*I4)`` matrix ``W1 @ b @ W2.T`` and the full
reconstruction applies ``U`` to the mode-{1,2} unfolding of that tensor.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from . import tensor as tc


@dataclass(frozen=True)
class Mera5Network:
    leg_dims: tuple[int, int, int, int, int]
    rank: int
    u1: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    b: np.ndarray

    @property
    def U(self) -> np.ndarray:
        i = self.leg_dims
        return self.u1.reshape(i[1] * i[2], i[1] * i[2], order="F")

    @property
    def W1(self) -> np.ndarray:
        i = self.leg_dims
        return self.w1.reshape(i[0] * i[1], self.rank, order="F")

    @property
    def W2(self) -> np.ndarray:
        i = self.leg_dims
        return self.w2.reshape(i[2] * i[3] * i[4], self.rank, order="F")

    def orthogonality_errors(self) -> tuple[float, float, float]:
        """Frobenius deviations of U^T U, W1^T W1, W2^T W2 from identity."""
        U, W1, W2 = self.U, self.W1, self.W2
        return (
            float(np.linalg.norm(U.T @ U - np.eye(U.shape[1]))),
            float(np.linalg.norm(W1.T @ W1 - np.eye(self.rank))),
            float(np.linalg.norm(W2.T @ W2 - np.eye(self.rank))),
        )


@dataclass(frozen=True)
class MeraConfig:
    rank: int
    sweeps: int = 10
    seed: int = 0
    init: Literal["random", "warm"] = "random"
    warm_start: Mera5Network | None = None

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if self.init == "warm" and self.warm_start is None:
            raise ValueError("init='warm' requires a warm_start network")


@dataclass
class MeraTrace:
    errors: list[float] = field(default_factory=list)


def _check_legs(leg_dims, rank: int) -> tuple[int, int, int, int, int]:
    leg_dims = tuple(int(d) for d in leg_dims)
    if len(leg_dims) != 5 or any(d < 1 for d in leg_dims):
        raise ValueError(f"need five positive leg dimensions, got {leg_dims}")
    i0, i1, i2, i3, i4 = leg_dims
    if rank < 1:
        raise ValueError("rank must be >= 1")
    if rank > i0 * i1:
        raise ValueError(f"rank {rank} exceeds I0*I1 = {i0 * i1}")
    if rank > i2 * i3 * i4:
        raise ValueError(f"rank {rank} exceeds I2*I3*I4 = {i2 * i3 * i4}")
    return leg_dims


def _random_orthogonal(rng: np.random.Generator, n: int, k: int | None = None) -> np.ndarray:
    """Haar-distributed ``n x k`` matrix with orthonormal columns (square by default)."""
    q, r = np.linalg.qr(rng.standard_normal((n, n if k is None else k)))
    # fix column signs so the draw is Haar distributed
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


def from_matrices(leg_dims, U, W1, W2, b) -> Mera5Network:
    i0, i1, i2, i3, i4 = leg_dims
    rank = b.shape[0]
    return Mera5Network(
        leg_dims=tuple(leg_dims),
        rank=rank,
        u1=np.asarray(U).reshape((i1, i2, i1, i2), order="F"),
        w1=np.asarray(W1).reshape((i0, i1, rank), order="F"),
        w2=np.asarray(W2).reshape((i2, i3, i4, rank), order="F"),
        b=np.asarray(b, dtype=np.float64),
    )


def init_network(leg_dims, rank: int, seed: int = 0) -> Mera5Network:
    """Seeded random network satisfying every orthogonality constraint."""
    leg_dims = _check_legs(leg_dims, rank)
    i0, i1, i2, i3, i4 = leg_dims
    rng = np.random.default_rng(seed)
    U = _random_orthogonal(rng, i1 * i2)
    W1 = _random_orthogonal(rng, i0 * i1, rank)
    W2 = _random_orthogonal(rng, i2 * i3 * i4, rank)
    b = rng.standard_normal((rank, rank))
    return from_matrices(leg_dims, U, W1, W2, b)


def svd_init(y, rank: int) -> Mera5Network:
    """Deterministic starting network: identity disentangler and truncated SVD.

    ``W1`` and ``W2`` are the leading ``rank`` singular vectors of the
    mode-{0,1} matricization of ``y`` and ``b`` holds the singular values,
    i.e. the best rank-``rank`` fit with ``U = I``.
    """
    y = np.asarray(y, dtype=np.float64)
    leg_dims = _check_legs(y.shape, rank)
    i0, i1, i2, i3, i4 = leg_dims
    f = tc.svd(y.reshape(i0 * i1, -1, order="F"))
    return from_matrices(
        leg_dims, np.eye(i1 * i2), f.left[:, :rank], f.right[:, :rank], np.diag(f.singular_values[:rank])
    )


def _core_matrix(net: Mera5Network) -> np.ndarray:
    # W1 b W2^T, i.e. the mode-{0,1} unfolding of M_u
    return net.W1 @ net.b @ net.W2.T


def reconstruct(net: Mera5Network) -> np.ndarray:
    shape = net.leg_dims
    m_u = _core_matrix(net).reshape(shape, order="F")
    return tc.fold(net.U @ tc.unfold(m_u, 1, 2), 1, 2, shape)


def _check_y(y, net: Mera5Network) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.shape != tuple(net.leg_dims):
        raise ValueError(f"tensor shape {y.shape} does not match network legs {net.leg_dims}")
    return y


def _rotated(y: np.ndarray, net: Mera5Network) -> np.ndarray:
    """Data moved into the disentangled frame, as an (I0 I1) x (I2 I3 I4) matrix."""
    shape = net.leg_dims
    y_t = tc.fold(net.U.T @ tc.unfold(y, 1, 2), 1, 2, shape)
    return y_t.reshape(shape[0] * shape[1], -1, order="F")


def update_disentangler(y, net: Mera5Network) -> Mera5Network:
    y = _check_y(y, net)
    shape = net.leg_dims
    m_u = _core_matrix(net).reshape(shape, order="F")
    g = tc.unfold(y, 1, 2) @ tc.unfold(m_u, 1, 2).T
    U = tc.procrustes_max(g)
    i1, i2 = shape[1], shape[2]
    return replace(net, u1=U.reshape((i1, i2, i1, i2), order="F"))


def update_isometry(y, net: Mera5Network, which: int) -> Mera5Network:
    y = _check_y(y, net)
    i0, i1, i2, i3, i4 = net.leg_dims
    y_rot = _rotated(y, net)
    return _update_isometry_rotated(y_rot, net, which)


def _update_isometry_rotated(y_rot: np.ndarray, net: Mera5Network, which: int) -> Mera5Network:
    i0, i1, i2, i3, i4 = net.leg_dims
    r = net.rank
    if which == 1:
        W1 = tc.procrustes_max(y_rot @ (net.W2 @ net.b.T))
        return replace(net, w1=W1.reshape((i0, i1, r), order="F"))
    if which == 2:
        W2 = tc.procrustes_max(y_rot.T @ (net.W1 @ net.b))
        return replace(net, w2=W2.reshape((i2, i3, i4, r), order="F"))
    raise ValueError(f"which must be 1 or 2, got {which}")


def update_top_core(y, net: Mera5Network) -> Mera5Network:
    y = _check_y(y, net)
    y_rot = _rotated(y, net)
    return replace(net, b=net.W1.T @ y_rot @ net.W2)


def fit_error(y, net: Mera5Network) -> float:
    return float(np.linalg.norm((np.asarray(y) - reconstruct(net)).ravel()))


def approximate(y, cfg: MeraConfig) -> tuple[Mera5Network, np.ndarray, MeraTrace]:
    """Low-rank MERA approximation by alternating block updates.

    Each sweep updates the disentangler, then ``w1``, ``w2`` and finally
    the top core; every block is solved to global optimality given the
    others, so the recorded fit errors never increase.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 5:
        raise ValueError(f"expected a 5th-order tensor, got ndim={y.ndim}")
    leg_dims = _check_legs(y.shape, cfg.rank)
    if cfg.init == "warm":
        net = cfg.warm_start
        if tuple(net.leg_dims) != leg_dims or net.rank != cfg.rank:
            raise ValueError("warm-start network does not match tensor shape or rank")
    else:
        net = init_network(leg_dims, cfg.rank, cfg.seed)

    i0, i1, i2, i3, i4 = leg_dims
    y23 = tc.unfold(y, 1, 2)
    trace = MeraTrace()
    for _ in range(cfg.sweeps):
        m_u = _core_matrix(net).reshape(leg_dims, order="F")
        U = tc.procrustes_max(y23 @ tc.unfold(m_u, 1, 2).T)
        net = replace(net, u1=U.reshape((i1, i2, i1, i2), order="F"))
        y_rot = tc.fold(U.T @ y23, 1, 2, leg_dims).reshape(i0 * i1, -1, order="F")
        net = _update_isometry_rotated(y_rot, net, 1)
        net = _update_isometry_rotated(y_rot, net, 2)
        net = replace(net, b=net.W1.T @ y_rot @ net.W2)
        # U is orthogonal, so the residual norm is the same in the rotated frame
        trace.errors.append(float(np.linalg.norm(y_rot - _core_matrix(net))))
    return net, reconstruct(net), trace
