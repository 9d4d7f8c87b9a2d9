"""Dense complex linear algebra used by the superoperator machinery.

Vectorization is row-major: ``vec_row(rho)[i*n + j] == rho[i, j]``.  With this
ordering ``vec_row(A @ X @ B) == kron(A, B.T) @ vec_row(X)``.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

RESIDUAL_ATOL = 1e-12


class LinAlgError(ValueError):
    """Base class for solver failures."""


class AmbiguousSteadyState(LinAlgError):
    """The matrix has a kernel of dimension larger than one."""


class NoSolution(LinAlgError):
    """The bordered system is singular or the kernel is empty."""


class RankDeficient(LinAlgError):
    """Least-squares matrix is numerically rank deficient."""

    def __init__(self, msg, rank, null_direction=None):
        super().__init__(msg)
        self.rank = rank
        self.null_direction = null_direction


def kron(a, b):
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def _square(m, what="matrix"):
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{what} must be square, got shape {m.shape}")
    return m


def vec_row(rho):
    rho = _square(rho, "density matrix")
    return np.array(rho, dtype=complex).reshape(-1)


def unvec_row(v, n=None):
    v = np.asarray(v, dtype=complex)
    if n is None:
        n = int(round(np.sqrt(v.size)))
    if n * n != v.size:
        raise ValueError(f"vector of length {v.size} is not a vectorized square matrix")
    return v.reshape(n, n).copy()


def trace_row(n):
    """Row functional <<I| such that ``trace_row(n) @ vec_row(rho) == tr(rho)``."""
    return vec_row(np.eye(n))


def nullity(m, rtol=1e-10):
    """Number of singular values below ``rtol * s_max``."""
    s = np.linalg.svd(np.asarray(m, dtype=complex), compute_uv=False)
    if s[0] == 0:
        return m.shape[1]
    return int(np.sum(s < rtol * s[0]))


def solve_bordered_nullvector(m, constraint_row, constraint_value=1.0, rtol=1e-10):
    """Return the unique ``v`` with ``m @ v = 0`` and ``constraint_row @ v = constraint_value``.

    The trace row is appended to ``m`` and the overdetermined (n+1)-row system
    is solved in the least-squares sense.  When that fails to produce a small
    residual (near-singular generators) the right singular vector with the
    smallest singular value is used instead.
    """
    m = _square(np.asarray(m, dtype=complex), "superoperator")
    c = np.asarray(constraint_row, dtype=complex).reshape(-1)
    k = nullity(m, rtol)
    if k == 0:
        raise NoSolution("matrix has an empty kernel; no steady state")
    if k > 1:
        raise AmbiguousSteadyState(f"kernel dimension is {k}; steady state is not unique")
    scale = max(np.linalg.norm(m), 1.0)
    bordered = np.vstack([m, c[None, :]])
    rhs = np.zeros(m.shape[0] + 1, dtype=complex)
    rhs[-1] = constraint_value
    v, *_ = np.linalg.lstsq(bordered, rhs, rcond=None)
    if np.linalg.norm(m @ v) > 1e3 * RESIDUAL_ATOL * scale:
        _, _, vh = np.linalg.svd(m)
        w = vh[-1].conj()
        norm = c @ w
        if abs(norm) < 1e-14:
            raise NoSolution("kernel vector is annihilated by the constraint row")
        v = w * (constraint_value / norm)
    return v


class LstsqResult(NamedTuple):
    solution: np.ndarray
    residual_norm: float
    rank: int


def least_squares(a, b, rcond=1e-12, check_rank=True):
    """Minimize ``||a x - b||``.

    Raises :class:`RankDeficient` when the effective rank is below the number of
    columns; the exception carries the rank and the right singular vector of
    the smallest singular value.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[0] < a.shape[1]:
        raise ValueError("least_squares needs at least as many rows as columns")
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    tol = rcond * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    if check_rank and rank < a.shape[1]:
        raise RankDeficient(
            f"effective rank {rank} < {a.shape[1]} unknowns", rank, vh[-1].conj()
        )
    uhb = u.conj().T @ b
    x = vh[:rank].conj().T @ (uhb[:rank] / s[:rank])
    res = float(np.linalg.norm(a @ x - b))
    return LstsqResult(x, res, rank)


def hermitian_defect(rho):
    rho = np.asarray(rho)
    return float(np.linalg.norm(rho - rho.conj().T))


def least_squares_extended(a, b, rcond=1e-12, check_rank=True):
    """:func:`least_squares` with the solve carried out in ``np.longdouble``.

    Rank is decided in double precision; the Householder QR and back
    substitution run in extended precision.  Useful when unknowns of very
    different magnitude share one system (the small ones inherit the rounding
    error of the large ones).  ``a`` and ``b`` must be real.
    """
    a64 = np.asarray(a, dtype=float)
    if a64.shape[0] < a64.shape[1]:
        raise ValueError("least_squares needs at least as many rows as columns")
    s = np.linalg.svd(a64, compute_uv=False)
    tol = rcond * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    if check_rank and rank < a64.shape[1]:
        _, _, vh = np.linalg.svd(a64, full_matrices=False)
        raise RankDeficient(f"effective rank {rank} < {a64.shape[1]} unknowns", rank, vh[-1])
    r = np.array(a, dtype=np.longdouble)
    y = np.array(b, dtype=np.longdouble)
    m, n = r.shape
    for k in range(n):
        col = r[k:, k]
        alpha = np.sqrt(np.sum(col * col))
        if alpha == 0:
            continue
        if col[0] > 0:
            alpha = -alpha
        v = col.copy()
        v[0] -= alpha
        vnorm2 = np.sum(v * v)
        if vnorm2 == 0:
            continue
        r[k:, k:] -= np.outer(v, (2 / vnorm2) * (v @ r[k:, k:]))
        y[k:] -= v * ((2 / vnorm2) * (v @ y[k:]))
    x = np.zeros(n, dtype=np.longdouble)
    for k in range(n - 1, -1, -1):
        x[k] = (y[k] - r[k, k + 1:] @ x[k + 1:]) / r[k, k]
    res = np.array(a, dtype=np.longdouble) @ x - np.array(b, dtype=np.longdouble)
    return LstsqResult(x, float(np.sqrt(np.sum(res * res))), rank)
