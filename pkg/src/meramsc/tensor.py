"""Dense tensor primitives shared by every other module.

All tensors are plain ``numpy.ndarray`` objects interpreted in the
canonical first-index-fastest (Fortran) layout. Mode indices are 0-based.
Unfoldings, reshapes and folds all go through ``order="F"`` so that the
mode-pair matricizations used by the MERA updates stay mutually
consistent.
"""
from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg


class SvdFactors(NamedTuple):
    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray


def dense_tensor(data, shape: Sequence[int] | None = None) -> np.ndarray:
    """Validate ``data`` as a finite float64 tensor.

    If ``shape`` is given, ``data`` is read as a flat sequence in
    canonical layout and reshaped accordingly.
    """
    arr = np.asarray(data, dtype=np.float64)
    if shape is not None:
        shape = tuple(int(s) for s in shape)
        if any(s < 1 for s in shape):
            raise ValueError(f"dimensions must be positive, got {shape}")
        if arr.size != int(np.prod(shape)):
            raise ValueError(
                f"data has {arr.size} entries but shape {shape} needs {int(np.prod(shape))}"
            )
        arr = arr.reshape(shape, order="F")
    if not np.all(np.isfinite(arr)):
        raise ValueError("tensor contains non-finite entries")
    return arr


def _check_pair(ndim: int, d1: int, d2: int) -> None:
    if not (0 <= d1 < d2 < ndim):
        raise ValueError(f"need 0 <= d1 < d2 < {ndim}, got d1={d1}, d2={d2}")


def unfold(t: np.ndarray, d1: int, d2: int) -> np.ndarray:
    """Mode-{d1, d2} unfolding.

    Rows enumerate ``(i_d1, i_d2)`` with ``i_d1`` fastest; columns
    enumerate the remaining modes in ascending order, earliest fastest.
    """
    t = np.asarray(t)
    _check_pair(t.ndim, d1, d2)
    rest = [e for e in range(t.ndim) if e not in (d1, d2)]
    moved = np.transpose(t, [d1, d2] + rest)
    return moved.reshape(t.shape[d1] * t.shape[d2], -1, order="F")


def fold(m: np.ndarray, d1: int, d2: int, shape: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`unfold` for a tensor of the given ``shape``."""
    shape = tuple(int(s) for s in shape)
    _check_pair(len(shape), d1, d2)
    m = np.asarray(m)
    rest = [e for e in range(len(shape)) if e not in (d1, d2)]
    rows = shape[d1] * shape[d2]
    cols = int(np.prod([shape[e] for e in rest]))
    if m.shape != (rows, cols):
        raise ValueError(f"matrix shape {m.shape} does not match unfolding {(rows, cols)}")
    perm = [d1, d2] + rest
    moved = m.reshape([shape[e] for e in perm], order="F")
    return np.transpose(moved, np.argsort(perm))


def reshape(t: np.ndarray, new_shape: Sequence[int]) -> np.ndarray:
    """Reinterpret the canonical data sequence of ``t`` under ``new_shape``."""
    t = np.asarray(t)
    new_shape = tuple(int(s) for s in new_shape)
    if int(np.prod(new_shape)) != t.size:
        raise ValueError(f"cannot reshape {t.shape} ({t.size} entries) to {new_shape}")
    return t.reshape(new_shape, order="F")


def contract(a: np.ndarray, a_modes: Sequence[int], b: np.ndarray, b_modes: Sequence[int]) -> np.ndarray:
    """Sum over paired modes of ``a`` and ``b``.

    Output modes are the free modes of ``a`` in ascending order followed
    by the free modes of ``b``.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    a_modes = list(a_modes)
    b_modes = list(b_modes)
    if len(a_modes) != len(b_modes):
        raise ValueError("a_modes and b_modes must have equal length")
    for i, j in zip(a_modes, b_modes):
        if a.shape[i] != b.shape[j]:
            raise ValueError(f"mode {i} of a has size {a.shape[i]}, mode {j} of b has size {b.shape[j]}")
    return np.tensordot(a, b, axes=(a_modes, b_modes))


def svd(m: np.ndarray) -> SvdFactors:
    """Thin SVD with a deterministic sign convention.

    In each left singular vector the entry of largest magnitude (lowest
    index on ties) is made nonnegative; the matching right vector is
    flipped with it.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("svd expects a matrix")
    if not np.all(np.isfinite(m)):
        raise FloatingPointError("svd input contains non-finite entries")
    u, s, vt = scipy.linalg.svd(m, full_matrices=False, check_finite=False)
    if u.size:
        pivot = np.argmax(np.abs(u), axis=0)
        signs = np.where(u[pivot, np.arange(u.shape[1])] < 0, -1.0, 1.0)
        u = u * signs
        vt = vt * signs[:, None]
    return SvdFactors(u, s, vt.T)


def check_symmetric(m: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if m.size and float(np.max(np.abs(m - m.T))) > tol * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    return m


def sym_eig_smallest(m: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """The ``k`` smallest eigenpairs of a symmetric matrix, ascending."""
    m = check_symmetric(m)
    n = m.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= {n}, got k={k}")
    # symmetrize to drop rounding-level asymmetry before LAPACK reads one triangle
    m = 0.5 * (m + m.T)
    vals, vecs = scipy.linalg.eigh(m, subset_by_index=[0, k - 1], check_finite=False)
    return vals, vecs


def procrustes_max(g: np.ndarray) -> np.ndarray:
    """Semi-orthogonal ``Q`` maximizing ``trace(Q.T @ g)``.

    ``Q = S @ D.T`` from the thin SVD ``g = S diag(sigma) D.T``.
    """
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 2:
        raise ValueError("procrustes_max expects a matrix")
    p, q = g.shape
    if p < q:
        raise ValueError(f"procrustes_max needs rows >= cols, got {p}x{q}")
    f = svd(g)
    return f.left @ f.right.T


class GramSolver:
    """Solves ``(mu1 I + mu2 X^T X) Z = rhs`` for varying penalties.

    The thin SVD of ``x`` is computed once; every solve afterwards costs
    a few matrix products. With ``x = U S V^T`` the inverse splits into a
    part on ``range(V)`` and the complement, where it is ``1/mu1``. One
    step of iterative refinement brings the residual down to what a dense
    LU solve attains.
    """

    def __init__(self, x: np.ndarray):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2:
            raise ValueError("x must be a D x N matrix")
        self.x = x
        self.n = x.shape[1]
        _, s, vt = scipy.linalg.svd(x, full_matrices=False, check_finite=False)
        self.v = vt.T
        self.eig = s**2
        self.full = self.v.shape[1] == self.n

    def _apply_inverse(self, mu1: float, mu2: float, rhs: np.ndarray) -> np.ndarray:
        proj = self.v.T @ rhs
        inner = self.v @ (proj / (mu1 + mu2 * self.eig)[:, None])
        if self.full:
            return inner
        return inner + (rhs - self.v @ proj) / mu1

    def solve(self, mu1: float, mu2: float, rhs: np.ndarray, refine: bool = True) -> np.ndarray:
        if mu1 <= 0:
            raise ValueError(f"mu1 must be positive, got {mu1}")
        rhs = np.asarray(rhs, dtype=np.float64)
        if rhs.shape[0] != self.n:
            raise ValueError(f"rhs has {rhs.shape[0]} rows, expected {self.n}")
        z = self._apply_inverse(mu1, mu2, rhs)
        if refine:
            resid = rhs - mu1 * z - mu2 * (self.x.T @ (self.x @ z))
            z += self._apply_inverse(mu1, mu2, resid)
        return z


def regularized_gram_solve(x, mu1: float, mu2: float, rhs, solver: GramSolver | None = None) -> np.ndarray:
    """``(mu1 I + mu2 x^T x)^{-1} rhs``; pass ``solver`` to reuse a factorization."""
    if mu1 <= 0:
        raise ValueError(f"mu1 must be positive, got {mu1}")
    if solver is None:
        solver = GramSolver(x)
    return solver.solve(mu1, mu2, rhs)


def norms(t) -> tuple[float, float]:
    """Frobenius norm and max-abs entry (both 0 for empty input)."""
    t = np.asarray(t, dtype=np.float64)
    if t.size == 0:
        return 0.0, 0.0
    return float(np.linalg.norm(t.ravel())), float(np.max(np.abs(t)))
