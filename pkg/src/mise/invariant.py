"""Rank-one dynamical invariants and the diagnostics that certify a protocol.

A trajectory is any callable ``t -> (r, dr)`` returning a generalized Bloch
vector and its time derivative (see :mod:`mise.blochsu`); objects that also
expose ``state(t)`` supply the density matrix directly.  For a trajectory
``rho(t)`` with unit trace the superoperator

    I(t) = lambda_s |rho(t)>> <<1|

is a dynamical invariant of ``L(t)`` exactly when ``d rho/dt = L(t) rho``:
since ``<<1| L = 0`` the commutator reduces to ``lambda_s |L rho>> <<1|``.
"""
from __future__ import annotations

import warnings
from typing import Callable, Sequence

import numpy as np

from . import qlinalg
from .blochsu import from_bloch

Trajectory = Callable[[float], tuple]


class InvariantError(ValueError):
    pass


class BoundaryFallbackWarning(UserWarning):
    pass


def _state(traj, t):
    if hasattr(traj, "state"):
        return np.asarray(traj.state(t), dtype=complex)
    r, _ = traj(t)
    return from_bloch(r, check=False)


def rank_one_invariant(traj: Trajectory, lambda_s: float, t: float) -> np.ndarray:
    """``lambda_s * vec(rho(t)) <<1|`` as an ``N^2 x N^2`` matrix."""
    if lambda_s == 0:
        raise InvariantError("lambda_s must be nonzero")
    rho = _state(traj, t)
    n = rho.shape[0]
    return lambda_s * np.outer(qlinalg.vec_row(rho), qlinalg.trace_row(n))


def _fd_invariant_derivative(traj, lambda_s, t, h, domain):
    lo, hi = domain
    if t - h >= lo and t + h <= hi:
        return (rank_one_invariant(traj, lambda_s, t + h)
                - rank_one_invariant(traj, lambda_s, t - h)) / (2 * h)
    warnings.warn(f"t={t:.6g} is within one step of the domain edge; using a one-sided "
                  "second-order difference", BoundaryFallbackWarning, stacklevel=3)
    s = 1.0 if t - h < lo else -1.0
    f0 = rank_one_invariant(traj, lambda_s, t)
    f1 = rank_one_invariant(traj, lambda_s, t + s * h)
    f2 = rank_one_invariant(traj, lambda_s, t + 2 * s * h)
    return s * (-3 * f0 + 4 * f1 - f2) / (2 * h)


def invariant_residual(liouvillian_fn: Callable[[float], np.ndarray], traj: Trajectory,
                       lambda_s: float, t: float, fd_step: float | None = None,
                       domain: tuple[float, float] | None = None) -> float:
    """Relative defect ``||dI/dt - [L, I]|| / (||I|| ||L||)`` (Frobenius norms).

    ``dI/dt`` is a central difference with step ``fd_step`` (default
    ``t_f / 1e5`` where ``domain = (0, t_f)``).  The extra ``||L||`` factor
    makes the number dimensionless: it compares the defect with the size of
    the commutator term it is meant to cancel.
    """
    if domain is None:
        domain = (0.0, getattr(traj, "t_f", np.inf))
    if fd_step is None:
        span = domain[1] - domain[0]
        if not np.isfinite(span):
            raise InvariantError("fd_step required when the trajectory has no finite domain")
        fd_step = span / 1e5
    inv = rank_one_invariant(traj, lambda_s, t)
    lv = np.asarray(liouvillian_fn(t))
    dinv = _fd_invariant_derivative(traj, lambda_s, t, fd_step, domain)
    defect = dinv - (lv @ inv - inv @ lv)
    scale = np.linalg.norm(inv) * max(np.linalg.norm(lv), np.finfo(float).tiny)
    return float(np.linalg.norm(defect) / scale)


def commutator_defect(lv: np.ndarray, inv: np.ndarray) -> float:
    """``||[L, I]|| / (||L|| ||I||)``; zero when I is built on a steady state of L."""
    return float(np.linalg.norm(lv @ inv - inv @ lv)
                 / (np.linalg.norm(lv) * np.linalg.norm(inv)))


def eigenvalue_constancy_check(liouvillian_fn, traj: Trajectory, lambda_s: float,
                               sample_times: Sequence[float]) -> float:
    """Max over samples of ``|mu(t) - lambda_s|`` for the nonzero eigenvalue ``mu`` of I(t).

    I(t) has rank one, so its only nonzero eigenvalue is ``<<1|I|rho>>`` =
    ``lambda_s tr rho(t)``; computed here as the trace of the matrix.
    ``liouvillian_fn`` is accepted for interface symmetry and not evaluated.
    """
    sample_times = list(sample_times)
    if len(sample_times) < 2:
        raise InvariantError("need at least two sample times")
    drift = 0.0
    for t in sample_times:
        mu = np.trace(rank_one_invariant(traj, lambda_s, t))
        drift = max(drift, abs(mu - lambda_s))
    return float(drift)
