"""Three-qubit chain: product-state trajectory and its closed-form controls.

Each qubit follows the same Bloch vector

    r_x = r_x0 sin^3(pi t / tau),  r_{y,z} = (1 - f) r_{y,z}^i + f r_{y,z}^f

with ``f`` the cubic smoothstep, from the single-qubit steady state at field
``A0`` to the ground state.  With ``D = r_x^2 + r_y^2 + 2 r_z^2`` the controls
of :func:`mise.synth.models.three_qubit_model` are

    A = -((r_z' + 2g)(r_x^2 + r_y^2) - (r_x^2 + r_y^2)' r_z) / (2 r_y D)
    B = (r_y' r_x r_y - r_x' (2 r_z^2 + r_y^2) + (r_z' + 2g) r_x r_z) / (2 r_y D)
    C = -B
    N = -((r^2)' + 2g (r_x^2 + r_y^2 + 2 r_z (1 + r_z))) / (4 g D)

``C = -B`` because the nearest-neighbour Heisenberg coupling ``XX + YY + ZZ``
commutes with every symmetric product state, so only the combination that
survives, ``B (-Z)``, acts on the trajectory.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from ..blochsu import PAULI, to_bloch
from .core import Protocol, SingularTrajectory, affine_solve, sample_grid
from .models import THREE_QUBIT_CONTROLS, three_qubit_model
from .schedule import ControlSchedule
from .shapes import SineCubed, smoothstep, smoothstep_deriv

DENOM_TOL = 1e-12


def qubit_state(r):
    return 0.5 * (np.eye(2) + sum(c * p for c, p in zip(r, PAULI)))


def product_state(r, n_sites=3):
    q = qubit_state(r)
    return reduce(np.kron, [q] * n_sites)


def initial_bloch(a0, gamma):
    d = 2 * a0 ** 2 + gamma ** 2
    return np.array([0.0, -2 * a0 * gamma / d, -gamma ** 2 / d])


FINAL_BLOCH = np.array([0.0, 0.0, -1.0])


@dataclass
class QubitTrajectory:
    a0: float
    gamma: float
    tau: float
    rx0: float

    def __post_init__(self):
        self.start = initial_bloch(self.a0, self.gamma)
        self.end = FINAL_BLOCH
        self.rx = SineCubed(self.rx0, self.tau)

    def __call__(self, t):
        f, df = smoothstep(t, self.tau), smoothstep_deriv(t, self.tau)
        r = (1 - f) * self.start + f * self.end
        dr = df * (self.end - self.start)
        r[0] = self.rx.value(t)
        dr[0] = self.rx.deriv(t)
        return r, dr


def closed_form_controls(r, dr, gamma):
    """``(a, b, c, n)`` for one per-qubit Bloch vector and its derivative."""
    rx, ry, rz = r
    dx, dy, dz = dr
    d = rx * rx + ry * ry + 2 * rz * rz
    den = 2 * ry * d
    if abs(den) < DENOM_TOL:
        raise SingularTrajectory(f"denominator r_y (r_x^2 + r_y^2 + 2 r_z^2) = {den:.3g}")
    g2 = 2 * gamma
    rxy2 = rx * rx + ry * ry
    drxy2 = 2 * (rx * dx + ry * dy)
    a = -((dz + g2) * rxy2 - drxy2 * rz) / den
    b = (dy * rx * ry - dx * (2 * rz * rz + ry * ry) + (dz + g2) * rx * rz) / den
    dr2 = drxy2 + 2 * rz * dz
    n = -(dr2 + g2 * (rxy2 + 2 * rz * (1 + rz))) / (4 * gamma * d)
    return np.array([a, b, -b, n])


@dataclass
class ProductTrajectory:
    qubit: QubitTrajectory
    t_f: float
    dim: int = 8

    def state(self, t):
        return product_state(self.qubit(t)[0])

    def state_derivative(self, t):
        r, dr = self.qubit(t)
        q, dq = qubit_state(r), 0.5 * sum(c * p for c, p in zip(dr, PAULI))
        return (np.kron(np.kron(dq, q), q) + np.kron(np.kron(q, dq), q)
                + np.kron(np.kron(q, q), dq))

    def __call__(self, t):
        return to_bloch(self.state(t)), to_bloch(self.state_derivative(t))


def three_qubit_protocol(a0: float, gamma: float, tau: float, rx0: float = -0.1,
                         n_samples: int = 801, certify: bool = True) -> Protocol:
    """Drive three qubits from the steady state at field ``a0`` to all-ground.

    The final end is singular (``r_y -> 0``) and is sampled ``1e-4 tau``
    inside.  With ``certify`` every sample is checked against the generic
    affine solve on the full 64-dimensional Liouvillian.
    """
    if gamma <= 0 or tau <= 0:
        raise ValueError("gamma and tau must be positive")
    q = QubitTrajectory(a0, gamma, tau, rx0)
    traj = ProductTrajectory(q, tau)
    model = three_qubit_model(gamma)
    grid = sample_grid(tau, n_samples, regular_start=True, regular_end=False)
    vals = np.array([closed_form_controls(*q(t), gamma) for t in grid])
    worst = 0.0
    if certify:
        for t, v in zip(grid[:: max(1, n_samples // 50)], vals[:: max(1, n_samples // 50)]):
            sol = affine_solve(model, traj.state(t), traj.state_derivative(t))
            ref = np.array([sol.controls[c] for c in THREE_QUBIT_CONTROLS])
            worst = max(worst, float(np.abs(ref - v).max() / max(1.0, np.abs(ref).max())))
    boundary = {0.0: dict(zip(THREE_QUBIT_CONTROLS, (float(a0), 0.0, 0.0, 0.0))),
                "t_f": dict(zip(THREE_QUBIT_CONTROLS, (0.0, 0.0, 0.0, 0.0)))}
    unphysical = np.zeros(vals.shape, dtype=bool)
    unphysical[:, 3] = vals[:, 3] < 0
    sched = ControlSchedule(THREE_QUBIT_CONTROLS, grid, vals, tau, boundary, unphysical=unphysical,
                            meta={"protocol": "three-qubit", "closed_form_vs_solve": worst,
                                  "regular_ends": (True, False)})
    return Protocol("three-qubit", model, model, sched, traj, traj.state(0.0),
                    product_state(FINAL_BLOCH), tau, reference=boundary)
