"""Liouvillian assembly, steady states, propagation and state scores.

Units: hbar = 1, all rates and couplings are angular frequencies.  A model is
affine in its named controls: every Hamiltonian term carries a real
coefficient and every thermal channel an excitation number, so

    L(controls) = L_fixed + sum_k controls[k] * G_k

which is what both the propagator and the control synthesis rely on.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from . import qlinalg
from .integrate import dopri5, rk4_fixed

HERMITIAN_ATOL = 1e-12
NEGATIVITY_TOL = 1e-9
TRACE_TOL = 1e-9


class ModelError(ValueError):
    pass


class PropagationError(RuntimeError):
    pass


def hamiltonian_superop(h):
    """Matrix of ``rho -> -i[h, rho]`` in row-major vectorization."""
    h = np.asarray(h, dtype=complex)
    eye = np.eye(h.shape[0])
    return -1j * (np.kron(h, eye) - np.kron(eye, h.T))


def dissipator_superop(l):
    """Matrix of ``D[l](rho) = l rho l^+ - {l^+ l, rho}/2``."""
    l = np.asarray(l, dtype=complex)
    eye = np.eye(l.shape[0])
    ldl = l.conj().T @ l
    return np.kron(l, l.conj()) - 0.5 * (np.kron(ldl, eye) + np.kron(eye, ldl.T))


Excitation = Union[None, float, str]


@dataclass(frozen=True)
class DissipationChannel:
    """One jump operator with rate ``rate``.

    ``excitation`` selects the channel type:
      * ``None``: plain channel ``rate * D[L]`` (e.g. dephasing);
      * a number N: thermal pair ``rate*((N+1) D[L] + N D[L^+])``;
      * a string: thermal pair whose N is the control of that name.
    """

    jump: np.ndarray
    rate: float
    excitation: Excitation = None
    label: str = ""

    def __post_init__(self):
        if not np.isfinite(self.rate) or self.rate < 0:
            raise ModelError(f"channel {self.label or '?'}: rate must be >= 0, got {self.rate}")


@dataclass
class LindbladModel:
    """Hamiltonian ``h_fixed + sum_k c_k H_k`` plus dissipation channels.

    ``controls`` lists the control names in a fixed order; each is either the
    key of a Hamiltonian term or the ``excitation`` name of a thermal channel.
    """

    dim: int
    hamiltonian_terms: Mapping[str, np.ndarray] = field(default_factory=dict)
    channels: Sequence[DissipationChannel] = ()
    h_fixed: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        for key, h in self.hamiltonian_terms.items():
            h = np.asarray(h)
            if h.shape != (self.dim, self.dim):
                raise ModelError(f"Hamiltonian term {key!r} has shape {h.shape}")
            if qlinalg.hermitian_defect(h) > HERMITIAN_ATOL * max(1.0, np.abs(h).max()):
                raise ModelError(f"Hamiltonian term {key!r} is not Hermitian")
        if self.h_fixed is not None and qlinalg.hermitian_defect(self.h_fixed) > HERMITIAN_ATOL:
            raise ModelError("fixed Hamiltonian is not Hermitian")
        for ch in self.channels:
            if not isinstance(ch, DissipationChannel):
                raise ModelError("channels must be DissipationChannel instances")
            if ch.excitation is not None and not isinstance(ch.excitation, str) and ch.excitation < 0:
                raise ModelError(f"channel {ch.label}: negative excitation number")

    @cached_property
    def controls(self) -> tuple[str, ...]:
        names = list(self.hamiltonian_terms)
        for ch in self.channels:
            if isinstance(ch.excitation, str) and ch.excitation not in names:
                names.append(ch.excitation)
        return tuple(names)

    @cached_property
    def affine(self) -> tuple[np.ndarray, np.ndarray]:
        """``(L_fixed, G)`` with ``G[k]`` the generator multiplying control k."""
        n2 = self.dim * self.dim
        fixed = np.zeros((n2, n2), dtype=complex)
        gens = np.zeros((len(self.controls), n2, n2), dtype=complex)
        index = {name: k for k, name in enumerate(self.controls)}
        if self.h_fixed is not None:
            fixed += hamiltonian_superop(self.h_fixed)
        for key, h in self.hamiltonian_terms.items():
            gens[index[key]] += hamiltonian_superop(h)
        for ch in self.channels:
            d = dissipator_superop(ch.jump)
            if ch.excitation is None:
                fixed += ch.rate * d
                continue
            both = d + dissipator_superop(np.asarray(ch.jump).conj().T)
            fixed += ch.rate * d
            if isinstance(ch.excitation, str):
                gens[index[ch.excitation]] += ch.rate * both
            else:
                fixed += ch.rate * float(ch.excitation) * both
        return fixed, gens

    def control_vector(self, controls: Mapping[str, float] | Sequence[float]) -> np.ndarray:
        if isinstance(controls, Mapping):
            missing = [k for k in self.controls if k not in controls]
            if missing:
                raise ModelError(f"missing controls: {missing}")
            vals = [controls[k] for k in self.controls]
        else:
            vals = list(controls)
            if len(vals) != len(self.controls):
                raise ModelError(f"expected {len(self.controls)} controls, got {len(vals)}")
        arr = np.asarray(vals)
        if np.iscomplexobj(arr) and np.abs(arr.imag).max(initial=0) > 0:
            raise ModelError("controls must be real (complex coefficient makes H non-Hermitian)")
        return arr.real.astype(float)

    def hamiltonian(self, controls) -> np.ndarray:
        c = self.control_vector(controls)
        h = np.zeros((self.dim, self.dim), dtype=complex)
        if self.h_fixed is not None:
            h += self.h_fixed
        for k, key in enumerate(self.controls):
            if key in self.hamiltonian_terms:
                h += c[k] * np.asarray(self.hamiltonian_terms[key])
        return h

    def with_channels(self, extra: Sequence[DissipationChannel]) -> "LindbladModel":
        return LindbladModel(self.dim, dict(self.hamiltonian_terms),
                             tuple(self.channels) + tuple(extra), self.h_fixed, self.name)


def assemble_liouvillian(model: LindbladModel, controls, t: float | None = None) -> np.ndarray:
    """Superoperator of ``model`` at the given control values.

    ``controls`` may be a mapping, a sequence in ``model.controls`` order, or a
    callable ``t -> controls`` (then ``t`` is required).
    """
    if callable(controls):
        if t is None:
            raise ModelError("time needed to evaluate a control callable")
        controls = controls(t)
    c = model.control_vector(controls)
    fixed, gens = model.affine
    if len(c) == 0:
        return fixed.copy()
    return fixed + np.tensordot(c, gens, axes=1)


def steady_state(sup: np.ndarray) -> np.ndarray:
    """Unique trace-one density matrix in the kernel of ``sup``."""
    sup = np.asarray(sup, dtype=complex)
    n = int(round(np.sqrt(sup.shape[0])))
    v = qlinalg.solve_bordered_nullvector(sup, qlinalg.trace_row(n), 1.0)
    rho = qlinalg.unvec_row(v, n)
    return 0.5 * (rho + rho.conj().T)


def steady_state_derivative(sup: np.ndarray, dsup: np.ndarray, rho0: np.ndarray) -> np.ndarray:
    """Derivative of the steady state along a direction where ``L`` changes by ``dsup``.

    Solves ``L drho = -dL rho0`` with ``tr drho = 0``.
    """
    n = rho0.shape[0]
    rhs = -(dsup @ qlinalg.vec_row(rho0))
    bordered = np.vstack([sup, qlinalg.trace_row(n)[None, :]])
    v, *_ = np.linalg.lstsq(bordered, np.append(rhs, 0.0), rcond=None)
    d = qlinalg.unvec_row(v, n)
    return 0.5 * (d + d.conj().T)


def _psd_sqrt(rho):
    w, u = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    return (u * np.sqrt(np.clip(w, 0, None))) @ u.conj().T


def uhlmann_fidelity(rho, sigma, tol=NEGATIVITY_TOL) -> float:
    """``(tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``, clipped to [0, 1]."""
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    for m in (rho, sigma):
        if np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min() < -tol:
            raise ValueError("fidelity needs positive semidefinite inputs")
    s = _psd_sqrt(rho)
    w = np.linalg.eigvalsh(s @ sigma @ s)
    f = float(np.sum(np.sqrt(np.clip(w, 0, None))) ** 2)
    return min(max(f, 0.0), 1.0)


def populations(rho, index=None):
    p = np.real(np.diag(np.asarray(rho)))
    return p if index is None else float(p[index])


def trace_distance(rho, sigma) -> float:
    d = np.asarray(rho) - np.asarray(sigma)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T)))))


@dataclass
class PropagationResult:
    times: np.ndarray
    states: np.ndarray  # (len(times), n, n)
    trace_drift: float
    min_eigenvalue: float
    hermiticity_defect: float
    n_accepted: int
    n_rejected: int
    n_evals: int

    def population(self, index):
        return np.real(self.states[:, index, index])

    @property
    def final(self):
        return self.states[-1]


ControlSource = Union[Callable[[float], np.ndarray], "object"]


def _control_fn(model: LindbladModel, schedule) -> Callable[[float], np.ndarray]:
    if schedule is None:
        return lambda t: np.zeros(0)
    if hasattr(schedule, "vector_at"):
        return lambda t: schedule.vector_at(t, model.controls)
    if callable(schedule):
        return lambda t: model.control_vector(schedule(t))
    c = model.control_vector(schedule)
    return lambda t: c


def propagate(model: LindbladModel, schedule, rho0, t_span, rtol=1e-8, atol=1e-10,
              t_eval=None, method="dopri5", n_steps=None, h_min=None,
              max_steps=2_000_000, check=True) -> PropagationResult:
    """Integrate ``d vec(rho)/dt = L(t) vec(rho)``.

    ``schedule`` is a :class:`~mise.synth.schedule.ControlSchedule`, a callable
    ``t -> controls``, a constant control record, or ``None`` for models
    without controls.  ``method='rk4'`` uses ``n_steps`` fixed steps.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    n = model.dim
    if rho0.shape != (n, n):
        raise ModelError(f"initial state has shape {rho0.shape}, model dim is {n}")
    if abs(np.trace(rho0) - 1) > TRACE_TOL or np.linalg.eigvalsh(
            0.5 * (rho0 + rho0.conj().T)).min() < -NEGATIVITY_TOL:
        raise ModelError("initial state is not a valid density matrix")
    t0, t1 = map(float, t_span)
    if hasattr(schedule, "covers") and not schedule.covers(t0, t1):
        raise PropagationError(f"control schedule does not cover [{t0}, {t1}]")
    fixed, gens = model.affine
    cfun = _control_fn(model, schedule)

    def rhs(t, y):
        c = cfun(t)
        if len(c):
            return (fixed + np.tensordot(c, gens, axes=1)) @ y
        return fixed @ y

    if t_eval is None:
        t_eval = np.array([t0, t1])
    t_eval = np.asarray(t_eval, dtype=float)
    y0 = qlinalg.vec_row(rho0)
    if method == "dopri5":
        sol = dopri5(rhs, t0, y0, t1, rtol=rtol, atol=atol, t_eval=t_eval,
                     h_min=h_min, max_steps=max_steps)
    elif method == "rk4":
        sol = rk4_fixed(rhs, t0, y0, t1, n_steps or 10_000, t_eval=t_eval)
    else:
        raise ValueError(f"unknown method {method!r}")
    if sol.failed:
        raise PropagationError(sol.message)
    states = sol.ys.reshape(len(sol.ts), n, n)
    traces = np.einsum("kii->k", states)
    herm = np.abs(states - states.conj().transpose(0, 2, 1)).max(axis=(1, 2))
    hs = 0.5 * (states + states.conj().transpose(0, 2, 1))
    mins = np.linalg.eigvalsh(hs).min(axis=1)
    res = PropagationResult(sol.ts, states, float(np.abs(traces - 1).max()), float(mins.min()),
                            float(herm.max()), sol.n_accepted, sol.n_rejected, sol.n_evals)
    if check and res.min_eigenvalue < -NEGATIVITY_TOL:
        k = int(np.argmin(mins))
        raise PropagationError(
            f"state lost positivity at t={sol.ts[k]:.6g} (min eigenvalue {mins[k]:.3g})")
    return res
