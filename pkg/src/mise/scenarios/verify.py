"""Self-check suite behind ``mise verify``.

Every check returns a measured defect that passes when ``<= tolerance``.
``tight=True`` reruns each check against ``min(tolerance, 1e-10)`` and marks
the ones that only pass at their default tolerance as tolerance limited.
``inject`` applies a deliberate fault first (mutation probe) so that one can
see the suite catch it.
"""
from __future__ import annotations

import contextlib
import warnings
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .. import blochsu, lindblad, qlinalg
from ..invariant import eigenvalue_constancy_check, invariant_residual
from ..synth import lam, threequbit, twolevel
from ..synth.models import lambda_model, three_qubit_model, two_level_model
from ..synth.shapes import mixing_angle

TIGHT_TOL = 1e-10
MUTATIONS = ("dissipator-sign", "hamiltonian-sign")


@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool
    tight_passed: bool | None = None

    @property
    def tolerance_limited(self) -> bool:
        return self.passed and self.tight_passed is False

    def as_dict(self):
        d = asdict(self)
        d["tolerance_limited"] = self.tolerance_limited
        return d


CHECKS: list[tuple[str, float, Callable[[], float]]] = []


def check(name, tol):
    def deco(fn):
        CHECKS.append((name, tol, fn))
        return fn
    return deco


def _rng():
    return np.random.default_rng(20240611)


def _models():
    return [two_level_model(0.7), lambda_model(1.3, 0.8, 0.4, 0.2), three_qubit_model(0.6)]


@check("qlinalg.vec_roundtrip", 0.0)
def _vec_roundtrip():
    m = _rng().normal(size=(5, 5)) + 1j * _rng().normal(size=(5, 5))
    return float(np.abs(qlinalg.unvec_row(qlinalg.vec_row(m)) - m).max())


@check("qlinalg.kron_vec_identity", 1e-13)
def _kron_identity():
    rng = _rng()
    worst = 0.0
    for n in range(2, 9):
        a, x, b = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) for _ in range(3))
        lhs = qlinalg.vec_row(a @ x @ b)
        rhs = qlinalg.kron(a, b.T) @ qlinalg.vec_row(x)
        worst = max(worst, np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs))
    return float(worst)


@check("lindblad.trace_preservation", 1e-12)
def _trace_preservation():
    rng = _rng()
    worst = 0.0
    for m in _models():
        for _ in range(5):
            c = rng.uniform(0, 2, size=len(m.controls))
            lv = lindblad.assemble_liouvillian(m, c)
            row = qlinalg.trace_row(m.dim)
            worst = max(worst, np.abs(row @ lv).max() / max(1.0, np.abs(lv).max()))
    return float(worst)


@check("lindblad.hermiticity_preservation", 1e-12)
def _hermiticity():
    rng = _rng()
    worst = 0.0
    for m in _models():
        c = rng.uniform(0, 2, size=len(m.controls))
        lv = lindblad.assemble_liouvillian(m, c)
        a = rng.normal(size=(m.dim, m.dim)) + 1j * rng.normal(size=(m.dim, m.dim))
        rho = a @ a.conj().T
        out = qlinalg.unvec_row(lv @ qlinalg.vec_row(rho))
        worst = max(worst, qlinalg.hermitian_defect(out) / np.linalg.norm(out))
    return float(worst)


@check("blochsu.roundtrip", 1e-14)
def _bloch_roundtrip():
    rng = _rng()
    worst = 0.0
    for n in (2, 3, 8):
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        rho = a @ a.conj().T
        rho /= np.trace(rho)
        worst = max(worst, np.abs(blochsu.from_bloch(blochsu.to_bloch(rho)) - rho).max())
    return float(worst)


@check("steady_state.two_level_closed_form", 1e-10)
def _ss_two_level():
    rng = _rng()
    worst = 0.0
    for w, g, n in rng.uniform([0, 0.1, 0], [3, 3, 2], size=(30, 3)):
        lv = lindblad.assemble_liouvillian(two_level_model(g), [w, 0.0, n])
        r = blochsu.to_bloch(lindblad.steady_state(lv))
        worst = max(worst, np.abs(r - blochsu.two_level_steady_bloch(w, g, n)).max())
    return float(worst)


@check("steady_state.lambda_closed_form", 1e-10)
def _ss_lambda():
    rng = _rng()
    worst = 0.0
    for wp, ws, g, n in rng.uniform([0, 0, 0.1, 0], [3, 3, 3, 2], size=(30, 4)):
        lv = lindblad.assemble_liouvillian(lambda_model(g), [wp, ws, 0.0, n, n])
        r = blochsu.to_bloch(lindblad.steady_state(lv))
        worst = max(worst, np.abs(r - blochsu.lambda_steady_bloch(wp, ws, g, n)).max())
    return float(worst)


@check("synth.transitionless_equivalence", 1e-8)
def _transitionless():
    worst = 0.0
    for theta in ("linear", "sine2"):
        p = lam.lambda_adiabatic_protocol(1.0, 10.0, 1.0, n=0.2, theta=theta, n_samples=100)
        shape = mixing_angle(theta, 10.0)
        for t, row in zip(p.schedule.times, p.schedule.values):
            ref = lam.transitionless_controls(1.0, shape, 0.2, t)
            for j, c in enumerate(lam.LAMBDA_CONTROLS):
                scale = 1.0 if c.startswith("omega") else 0.2
                worst = max(worst, abs(row[j] - ref[c]) / scale)
    return float(worst)


def _certified_protocols():
    return [
        twolevel.two_level_adiabatic_protocol(0.5, 1.0, 0.0, 2.0),
        lam.lambda_adiabatic_protocol(1.0, 10.0, 1.0, n=0.1),
        lam.lambda_nocoupling_schedule(2 * np.pi * 18.1e3, 20e-6, 1.5e6, lam.N_ROOM).protocol,
        threequbit.three_qubit_protocol(2.0, 1.0, 5.0),
    ]


@check("invariant.residual", 1e-6)
def _invariant_residual():
    worst = 0.0
    for p in _certified_protocols():
        lf = p.liouvillian_fn()
        for t in np.linspace(0, p.t_f, 22)[1:-1]:
            worst = max(worst, invariant_residual(lf, p.trajectory, 1.0, t, domain=(0, p.t_f)))
    return float(worst)


@check("invariant.eigenvalue_constancy", 1e-12)
def _eigen_constancy():
    worst = 0.0
    for p in _certified_protocols():
        ts = np.linspace(0, p.t_f, 20)
        worst = max(worst, eigenvalue_constancy_check(p.liouvillian_fn(), p.trajectory, 1.0, ts))
    return float(worst)


@check("synth.boundary_matching", 1e-9)
def _boundary():
    worst = 0.0
    for p in _certified_protocols():
        worst = max(worst, p.schedule.boundary_defect(p.reference))
    return float(worst)


@check("propagate.cptp_sanity", 1e-9)
def _cptp():
    p = twolevel.two_level_adiabatic_protocol(0.5, 1.0, 0.0, 2.0)
    res = lindblad.propagate(p.model, p.schedule, p.rho0, (0, p.t_f), rtol=1e-12, atol=1e-14,
                             t_eval=np.linspace(0, p.t_f, 50), check=False)
    return float(max(res.trace_drift, -res.min_eigenvalue, res.hermiticity_defect))


@check("propagate.tracking", 1e-6)
def _tracking():
    p = twolevel.two_level_adiabatic_protocol(0.5, 1.0, 0.0, 2.0)
    ts = np.linspace(0, p.t_f, 50)
    res = lindblad.propagate(p.model, p.schedule, p.rho0, (0, p.t_f), rtol=1e-12, atol=1e-14,
                             t_eval=ts, check=False)
    return float(max(lindblad.trace_distance(r, p.trajectory.state(t))
                     for t, r in zip(ts, res.states)))


@contextlib.contextmanager
def mutation(kind: str | None):
    """Temporarily corrupt a building block of the Liouvillian."""
    if kind is None:
        yield
        return
    if kind not in MUTATIONS:
        raise ValueError(f"unknown mutation {kind!r}; known: {MUTATIONS}")
    name = "dissipator_superop" if kind == "dissipator-sign" else "hamiltonian_superop"
    original = getattr(lindblad, name)
    if kind == "dissipator-sign":
        def broken(l):
            l = np.asarray(l, dtype=complex)
            eye = np.eye(l.shape[0])
            ldl = l.conj().T @ l
            return np.kron(l, l.conj()) + 0.5 * (np.kron(ldl, eye) + np.kron(eye, ldl.T))
    else:
        def broken(h):
            return -1j * (np.kron(h, np.eye(h.shape[0])) + np.kron(np.eye(h.shape[0]), h.T))
    setattr(lindblad, name, broken)
    try:
        yield
    finally:
        setattr(lindblad, name, original)


def run_checks(tight: bool = False, inject: str | None = None,
               only: list[str] | None = None) -> list[CheckResult]:
    results = []
    with mutation(inject), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for name, tol, fn in CHECKS:
            if only and name not in only:
                continue
            try:
                value = fn()
            except Exception:  # a crash under a mutation is a failed check
                value = float("inf")
            if not np.isfinite(value):
                value = float("inf")
            r = CheckResult(name, value, tol, value <= tol)
            if tight:
                r.tight_passed = value <= min(tol, TIGHT_TOL)
            results.append(r)
    return results
