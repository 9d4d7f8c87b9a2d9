"""Shared pieces of control synthesis.

Every model here is affine in its controls, ``L(c) = L_fixed + sum_k c_k G_k``,
so requiring a trajectory ``rho(t)`` to solve the master equation,

    L(c) vec(rho) = vec(d rho / dt),

is a linear system for ``c`` at each instant (this is the projection of the
invariant equation for the rank-one invariant built on ``rho``).  It is
solved in least squares over the real and imaginary parts; a residual at
round-off level certifies that the trajectory is reachable with these controls.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .. import qlinalg
from ..blochsu import from_bloch, from_bloch_derivative
from ..lindblad import LindbladModel, assemble_liouvillian
from .schedule import ControlSchedule

RESIDUAL_RTOL = 1e-9
NULL_COLUMN_RTOL = 1e-12


class SynthesisError(ValueError):
    pass


class IncompatibleTrajectory(SynthesisError):
    """The trajectory cannot be tracked with the given control ansatz."""


class SingularTrajectory(SynthesisError):
    """A closed-form control formula hits a vanishing denominator."""


class InfeasibleTrajectory(SynthesisError):
    pass


class InfeasibleFinalTime(SynthesisError):
    pass


class BoundaryMismatch(SynthesisError):
    pass


@dataclass
class BlochTrajectory:
    """Callable ``t -> (r, dr)`` on ``[0, t_f]``."""

    fn: Callable[[float], tuple]
    t_f: float
    dim: int

    def __call__(self, t):
        r, dr = self.fn(float(t))
        return np.asarray(r, dtype=float), np.asarray(dr, dtype=float)

    def state(self, t):
        return from_bloch(self(t)[0], check=False)

    def state_derivative(self, t):
        return from_bloch_derivative(self(t)[1])


@dataclass
class AffineSolution:
    controls: dict
    extras: dict
    residual: float
    scale: float
    rank: int


def affine_solve(model: LindbladModel, rho, drho, unknowns: Sequence[str] | None = None,
                 known: Mapping[str, float] | None = None,
                 extra_columns: Mapping[str, np.ndarray] | None = None,
                 rtol: float = RESIDUAL_RTOL, check: bool = True,
                 extended: bool = False,
                 prior: Mapping[str, float] | None = None,
                 magnitudes: Mapping[str, float] | None = None) -> AffineSolution:
    """Solve ``L(c) vec(rho) = vec(drho)`` for the ``unknowns`` controls.

    ``known`` fixes the remaining controls.  ``extra_columns`` adds unknowns
    that enter the right-hand side linearly: a column ``v`` named ``a`` means
    ``vec(drho)`` is really ``vec(drho) + a * v`` with ``a`` to be solved for
    (the caller passes ``-v`` accordingly).  Raises
    :class:`IncompatibleTrajectory` when the residual exceeds
    ``rtol * scale``, where ``scale`` is the largest term magnitude of the
    equation, and :class:`~mise.qlinalg.RankDeficient` (with the null
    direction labelled) when the unknowns are not determined.

    ``extended=True`` assembles and solves the system in ``np.longdouble``;
    worth it when some controls are many orders of magnitude smaller than
    others in their effect (e.g. excitation numbers near zero).

    ``prior`` resolves rank deficiency: instead of raising, the unknowns are
    taken as the prior values plus the minimum-norm (in column-scaled
    coordinates) correction.  Directions the trajectory cannot see then stay
    at the prior, e.g. the field amplitude on an exactly dark state.

    ``magnitudes`` gives a typical size per unknown (default 1).  A column
    counts as invisible when its effect at that size is at round-off level
    relative to the largest one.
    """
    known = dict(known or {})
    unknowns = list(model.controls if unknowns is None else unknowns)
    extra_columns = dict(extra_columns or {})
    missing = [n for n in model.controls if n not in unknowns and n not in known]
    if missing:
        raise SynthesisError(f"controls neither solved for nor given: {missing}")
    fixed, gens = model.affine
    ctype = np.clongdouble if extended else complex
    if extended:
        fixed, gens = fixed.astype(ctype), gens.astype(ctype)
    index = {n: k for k, n in enumerate(model.controls)}
    x = qlinalg.vec_row(np.asarray(rho, dtype=complex)).astype(ctype)
    b = qlinalg.vec_row(np.asarray(drho, dtype=complex)).astype(ctype) - fixed @ x
    terms = [np.linalg.norm((fixed @ x).astype(complex)), np.linalg.norm(qlinalg.vec_row(drho))]
    for n, v in known.items():
        col = gens[index[n]] @ x
        b = b - v * col
        terms.append(abs(v) * np.linalg.norm(col.astype(complex)))
    cols = [gens[index[n]] @ x for n in unknowns] + [np.asarray(v).astype(ctype)
                                                    for v in extra_columns.values()]
    a = np.stack(cols, axis=1)
    ar = np.vstack([a.real, a.imag])
    br = np.concatenate([b.real, b.imag])
    colscale = np.sqrt(np.sum(ar * ar, axis=0))
    # a column at round-off level is a control the state cannot see
    labels = unknowns + list(extra_columns)
    # compare effects, not raw columns: controls differ in units by many decades
    magnitudes = magnitudes or {}
    weight = np.array([float(magnitudes.get(lab, 1.0)) for lab in labels])
    effect = colscale * weight
    invisible = effect <= NULL_COLUMN_RTOL * effect.max()
    ar_full = ar.copy()
    ar[:, invisible] = 0
    colscale[invisible] = 1.0
    solver = qlinalg.least_squares_extended if extended else qlinalg.least_squares
    try:
        res = solver(ar / colscale, br, check_rank=True)
        sol = res.solution / colscale
    except qlinalg.RankDeficient as exc:
        d = exc.null_direction
        direction = {lab: float(np.real(v)) for lab, v in zip(labels, d)}
        if prior is None:
            raise qlinalg.RankDeficient(
                f"{exc}; undetermined combination {direction}", exc.rank, direction) from None
        x0 = np.array([float(prior.get(lab, 0.0)) for lab in labels])
        a64 = (ar / colscale).astype(float)
        # invisible columns still carry their prior value
        b64 = br.astype(float) - ar_full.astype(float) @ x0
        res = qlinalg.least_squares(a64, b64, check_rank=False)
        sol = x0 + res.solution / colscale.astype(float)
    terms.extend(np.abs(sol) * colscale)
    terms = [float(v) for v in terms]
    scale = max(terms) if terms else 1.0
    scale = max(scale, np.finfo(float).tiny)
    if check and res.residual_norm > rtol * scale:
        raise IncompatibleTrajectory(
            f"least-squares residual {res.residual_norm:.3g} exceeds {rtol:g} x scale {scale:.3g}")
    ctrl = {n: float(v) for n, v in zip(unknowns, sol[:len(unknowns)])}
    ctrl.update(known)
    extras = {n: float(v) for n, v in zip(extra_columns, sol[len(unknowns):])}
    return AffineSolution(ctrl, extras, res.residual_norm, scale, res.rank)


def tracking_defect(model: LindbladModel, controls, rho, drho) -> float:
    """``||L(c) vec(rho) - vec(drho)||`` relative to the larger of its two terms."""
    lv = assemble_liouvillian(model, controls)
    x = qlinalg.vec_row(rho)
    lhs = lv @ x
    rhs = qlinalg.vec_row(drho)
    return float(np.linalg.norm(lhs - rhs) / max(np.linalg.norm(lhs), np.linalg.norm(rhs),
                                                   np.finfo(float).tiny))


def sample_grid(t_f: float, n: int, regular_start: bool = True, regular_end: bool = True,
                eps_rel: float = 1e-4) -> np.ndarray:
    """Uniform sample grid on ``[0, t_f]``; singular ends are pulled in by ``eps_rel * t_f``."""
    lo = 0.0 if regular_start else eps_rel * t_f
    hi = t_f if regular_end else t_f - eps_rel * t_f
    return np.linspace(lo, hi, n)


@dataclass
class Protocol:
    """Everything needed to run and check one synthesized protocol.

    ``synthesis_model`` is the Liouvillian the controls were solved for;
    ``model`` is the one used for propagation (it may carry extra noise
    channels the design ignores).
    """

    name: str
    model: LindbladModel
    synthesis_model: LindbladModel
    schedule: ControlSchedule
    trajectory: BlochTrajectory
    rho0: np.ndarray
    target: np.ndarray
    t_f: float
    reference: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def liouvillian_fn(self, model: LindbladModel | None = None):
        m = self.synthesis_model if model is None else model
        sched = self.schedule
        return lambda t: assemble_liouvillian(m, sched.vector_at(t, m.controls))
