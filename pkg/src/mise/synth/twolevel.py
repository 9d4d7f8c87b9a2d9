"""Two-level inverse engineering: adiabatic trajectory and coherent protocols I, II.

Conventions follow :func:`mise.synth.models.two_level_model`.  With
``kappa = gamma (2N + 1)`` the Bloch equations read

    r_x' = -delta r_y - kappa r_x / 2
    r_y' =  delta r_x - omega r_z - kappa r_y / 2
    r_z' =  omega r_y - kappa r_z - gamma

which are linear in ``(omega, delta, kappa)``.  Solving them for a prescribed
``r(t)`` gives

    N     = -1/2 - r_z / (r^2 + r_z^2) - (r^2)' / (2 gamma (r^2 + r_z^2))
    omega = (r_z' + kappa r_z + gamma) / r_y
    delta = -(r_x' + kappa r_x / 2) / r_y

Keeping ``N = N0`` fixed instead turns the first relation into a linear ODE
for ``r_x^2`` (protocol I, ``r_y``, ``r_z`` prescribed) or ``r_y^2``
(protocol II, ``r_x = 0``, ``r_z`` prescribed):

    (r_x^2)' + kappa r_x^2 = -Lam,   Lam  = kappa r_y^2 + 2 gamma r_z (kappa r_z / gamma + 1) + (r_y^2 + r_z^2)'
    (r_y^2)' + kappa r_y^2 = -Lam',  Lam' = 2 gamma r_z (kappa r_z / gamma + 1) + (r_z^2)'

Both are integrated here by exponential Gauss-Legendre quadrature.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from ..blochsu import from_bloch, two_level_steady_bloch
from ..integrate import dopri5
from .core import (BlochTrajectory, InfeasibleFinalTime, InfeasibleTrajectory, Protocol,
                   SingularTrajectory, sample_grid)
from .models import TWO_LEVEL_CONTROLS, two_level_model
from .schedule import ControlSchedule
from .shapes import CubicRamp, Shape, smoothstep, smoothstep_deriv

RY_SINGULAR = 1e-12
NEG_TOL = 1e-10
FINAL_TOL = 1e-8


def ground_state():
    return from_bloch([0.0, 0.0, -1.0])


def controls_from_trajectory(r, dr, gamma):
    """``(omega, delta, n)`` that make ``r(t)`` an exact solution; vectorized over rows."""
    r = np.atleast_2d(np.asarray(r, dtype=float))
    dr = np.atleast_2d(np.asarray(dr, dtype=float))
    rx, ry, rz = r.T
    dx, dy, dz = dr.T
    if np.any(np.abs(ry) < RY_SINGULAR):
        k = int(np.argmin(np.abs(ry)))
        raise SingularTrajectory(f"r_y = {ry[k]:.3g} vanishes; control formulas are singular")
    r2 = rx * rx + ry * ry + rz * rz
    dr2 = 2 * (rx * dx + ry * dy + rz * dz)
    denom = r2 + rz * rz
    n = -0.5 - rz / denom - dr2 / (2 * gamma * denom)
    kappa = gamma * (2 * n + 1)
    omega = (dz + kappa * rz + gamma) / ry
    delta = -(dx + 0.5 * kappa * rx) / ry
    return np.stack([omega, delta, n], axis=1)


def _record(omega, delta, n):
    return dict(zip(TWO_LEVEL_CONTROLS, (float(omega), float(delta), float(n))))


@dataclass
class AdiabaticTrajectory:
    """Instantaneous steady state of ``H = Omega0(t) sigma_x / 2`` at fixed ``N0``."""

    ramp: Shape
    gamma: float
    n0: float

    def __call__(self, t):
        w = float(self.ramp.value(t))
        dw = float(self.ramp.deriv(t))
        x = w / self.gamma
        a = 2 * self.n0 + 1
        p = a * a + 2 * x * x
        r = np.array([0.0, 2 * x / p, -a / p])
        dp = 4 * x * dw / self.gamma
        dr = np.array([0.0, 2 * dw / self.gamma / p - 2 * x * dp / p ** 2, a * dp / p ** 2])
        return r, dr


def two_level_adiabatic_protocol(omega_c: float, gamma: float, n0: float, t_f: float,
                                 ramp: Shape | None = None, n_samples: int = 2001) -> Protocol:
    """Track the adiabatic trajectory while the field ramps from ``omega_c`` to 0.

    The ramp must have zero slope at both ends so that the endpoint states
    are reference steady states with zero velocity.  Where ``Omega0`` vanishes
    at an end, ``r_y`` vanishes too and the formulas are 0/0; that end is
    sampled ``1e-4 t_f`` inside and the boundary record is the reference one.
    """
    if gamma <= 0 or t_f <= 0:
        raise ValueError("gamma and t_f must be positive")
    ramp = ramp or CubicRamp(omega_c, 0.0, t_f)
    for end in (0.0, t_f):
        if abs(float(ramp.deriv(end))) > 1e-12 * max(1.0, abs(omega_c)) / t_f:
            raise ValueError("ramp must have zero slope at both ends")
    traj = AdiabaticTrajectory(ramp, gamma, n0)
    w0, w1 = float(ramp.value(0.0)), float(ramp.value(t_f))
    grid = sample_grid(t_f, n_samples, regular_start=w0 != 0, regular_end=w1 != 0)
    rs, drs = zip(*(traj(t) for t in grid))
    vals = controls_from_trajectory(rs, drs, gamma)
    vals[:, 1] = 0.0  # r_x = r_x' = 0 makes the detuning vanish identically
    boundary = {0.0: _record(w0, 0.0, n0), "t_f": _record(w1, 0.0, n0)}
    sched = ControlSchedule(TWO_LEVEL_CONTROLS, grid, vals, t_f, boundary,
                            unphysical=np.broadcast_to(vals[:, 2:3] < 0, vals.shape).copy(),
                            meta={"protocol": "two-level adiabatic", "regular_ends": (w0 != 0, w1 != 0)})
    model = two_level_model(gamma)
    return Protocol("two-level adiabatic", model, model, sched,
                    BlochTrajectory(traj, t_f, 2), from_bloch(traj(0.0)[0]),
                    from_bloch(traj(t_f)[0]), t_f,
                    reference={0.0: boundary[0.0], "t_f": boundary["t_f"]})


def two_level_reference_schedule(omega_c: float, gamma: float, n0: float, t_f: float,
                                 ramp: Shape | None = None, n_samples: int = 401) -> ControlSchedule:
    """The plain adiabatic-engineering controls: ``Omega0(t)``, no detuning, ``N0``."""
    ramp = ramp or CubicRamp(omega_c, 0.0, t_f)
    grid = np.linspace(0.0, t_f, n_samples)
    vals = np.stack([ramp.value(grid), np.zeros_like(grid), np.full_like(grid, n0)], axis=1)
    return ControlSchedule(TWO_LEVEL_CONTROLS, grid, vals, t_f,
                           {0.0: _record(vals[0, 0], 0, n0), "t_f": _record(vals[-1, 0], 0, n0)},
                           meta={"protocol": "two-level reference"})


# --- coherent protocols ---------------------------------------------------

def _gl_nodes(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1), 0.5 * w


def exp_quadrature(source, kappa, grid, y0=0.0, order=12):
    """Solve ``y' = -kappa y - source(t)`` on ``grid`` exactly up to quadrature error.

    Per interval ``y(b) = e^{-kappa h} y(a) - int_a^b source(s) e^{-kappa (b - s)} ds``
    with Gauss-Legendre nodes; the weight is smooth so the rule is spectrally accurate.
    """
    x, w = _gl_nodes(order)
    grid = np.asarray(grid, dtype=float)
    y = np.empty_like(grid)
    y[0] = y0
    for j in range(len(grid) - 1):
        a, b = grid[j], grid[j + 1]
        h = b - a
        s = a + h * x
        integral = h * np.sum(w * source(s) * np.exp(-kappa * (b - s)))
        y[j + 1] = np.exp(-kappa * h) * y[j] - integral
    return y


def exp_ode(source, kappa, grid, y0=0.0, rtol=1e-12, atol=1e-15):
    """Same equation through the adaptive stepper; the independent oracle for the quadrature."""
    sol = dopri5(lambda t, y: -kappa * y - source(t), grid[0], np.array([y0 + 0j]), grid[-1],
                 rtol=rtol, atol=atol, t_eval=grid)
    return sol.ys[:, 0].real


@dataclass
class SmoothstepComponents:
    """``r_i(t) = r_i(0) + (r_i(t_f) - r_i(0)) f(t)`` for the listed components."""

    start: np.ndarray
    end: np.ndarray
    t_f: float

    def value(self, t):
        f = smoothstep(t, self.t_f)
        return self.start[:, None] + np.outer(self.end - self.start, np.atleast_1d(f))

    def deriv(self, t):
        f = smoothstep_deriv(t, self.t_f)
        return np.outer(self.end - self.start, np.atleast_1d(f))


def _endpoints(omega0, gamma, n0, omega_end=0.0):
    return two_level_steady_bloch(omega0, gamma, n0), two_level_steady_bloch(omega_end, gamma, n0)


def protocol_one_lambda(omega0, gamma, n0, t_f):
    """``(Lam(t), kappa, yz-shape)`` for protocol I."""
    r0, r1 = _endpoints(omega0, gamma, n0)
    yz = SmoothstepComponents(r0[1:], r1[1:], t_f)
    kappa = gamma * (2 * n0 + 1)

    def lam(t):
        (ry, rz), (dy, dz) = yz.value(t), yz.deriv(t)
        return kappa * ry ** 2 + 2 * gamma * rz * (kappa / gamma * rz + 1) + 2 * (ry * dy + rz * dz)

    return lam, kappa, yz


def protocol_one_rx2(omega0, gamma, n0, t_f, grid=None, n=4001, method="quadrature"):
    """``r_x^2`` on ``grid`` from the quadrature (or direct-ODE oracle)."""
    lam, kappa, _ = protocol_one_lambda(omega0, gamma, n0, t_f)
    grid = np.linspace(0, t_f, n) if grid is None else np.asarray(grid)
    if method == "quadrature":
        return grid, exp_quadrature(lam, kappa, grid)
    return grid, exp_ode(lambda t: lam(np.array([t]))[0], kappa, grid)


def final_rx2(omega0, gamma, n0, t_f):
    """``r_x^2(t_f)``; protocol I closes exactly when this vanishes."""
    grid = np.linspace(0, t_f, 801)
    return float(protocol_one_rx2(omega0, gamma, n0, t_f, grid)[1][-1])


def scan_final_time(omega0, gamma, n0, t_grid):
    """``r_x^2(t_f)`` over ``t_grid`` and every bracketed root refined by Brent's method."""
    t_grid = np.asarray(t_grid, dtype=float)
    vals = np.array([final_rx2(omega0, gamma, n0, t) for t in t_grid])
    roots = []
    for a, b, fa, fb in zip(t_grid[:-1], t_grid[1:], vals[:-1], vals[1:]):
        if fa == 0:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(brentq(lambda t: final_rx2(omega0, gamma, n0, t), a, b, xtol=1e-12))
    return vals, roots


def _handover_index(values, bound, feasible_mask):
    bad = ~feasible_mask | np.any(np.abs(values) > bound, axis=1)
    return int(np.argmax(bad)) if bad.any() else None


def _coherent_schedule(name, grid, vals, t_f, w0, gamma, n0, mode, bound, feasible_mask, meta):
    start = _record(w0, 0.0, n0)
    final = _record(0.0, 0.0, n0)
    boundary = {0.0: start, "t_f": final}
    tail = None
    if mode == "handover":
        k = _handover_index(vals, bound, feasible_mask)
        if k is not None:
            if k < 4:
                raise InfeasibleTrajectory(f"{name}: trajectory unusable from t={grid[k]:.4g}")
            tail = (float(grid[k]), final)
            meta["handover_time"] = float(grid[k])
            grid, vals = grid[:k], vals[:k]
    meta["mode"] = mode
    return ControlSchedule(TWO_LEVEL_CONTROLS, grid, vals, t_f, boundary, tail=tail, meta=meta)


def _check_mode(mode):
    if mode not in ("strict", "handover"):
        raise ValueError("mode must be 'strict' or 'handover'")


def coherent_protocol_I(omega0: float, gamma: float, n0: float, t_f: float,
                        mode: str = "strict", sign: float = 1.0, n_samples: int = 4001,
                        control_bound: float | None = None) -> Protocol:
    """Purely coherent protocol using ``r_x``; ``N`` stays at ``n0``.

    ``r_y``, ``r_z`` follow the cubic smoothstep between the reference steady
    states; ``r_x = sign * sqrt(r_x^2)`` with ``r_x^2`` from the quadrature.
    ``mode='strict'`` raises when ``r_x^2`` turns negative or does not vanish at
    ``t_f``.  ``mode='handover'`` follows the trajectory while it is feasible
    and the controls stay below ``control_bound`` (default
    ``20 max(omega0, gamma)``), then holds the final reference controls.
    """
    _check_mode(mode)
    lam, kappa, yz = protocol_one_lambda(omega0, gamma, n0, t_f)
    grid = np.linspace(0.0, t_f, n_samples)
    rx2 = exp_quadrature(lam, kappa, grid)
    feasible = rx2 >= -NEG_TOL
    if mode == "strict":
        if not feasible.all():
            k = int(np.argmax(~feasible))
            raise InfeasibleTrajectory(f"r_x^2 = {rx2[k]:.3g} < 0 at t = {grid[k]:.6g}")
        if abs(rx2[-1]) > FINAL_TOL:
            raise InfeasibleFinalTime(f"r_x^2(t_f) = {rx2[-1]:.3g}; choose another t_f "
                                      "(see scan_final_time)")
    rx2_c = np.clip(rx2, 0.0, None)
    ryz, dyz = yz.value(grid), yz.deriv(grid)
    drx2 = -kappa * rx2 - lam(grid)
    rx = sign * np.sqrt(rx2_c)
    with np.errstate(divide="ignore", invalid="ignore"):
        drx = np.where(rx != 0, drx2 / (2 * np.where(rx != 0, rx, 1)), 0.0)
    r = np.stack([rx, ryz[0], ryz[1]], axis=1)
    dr = np.stack([drx, dyz[0], dyz[1]], axis=1)
    # t = 0 is skipped: r_x ~ t there, so delta jumps from 0 to a finite
    # one-sided limit that the spline extrapolation reproduces
    w0 = omega0
    vals = np.full((n_samples, 3), np.nan)
    vals[1:-1] = controls_from_trajectory(r[1:-1], dr[1:-1], gamma)
    vals[:, 2] = n0
    bound = control_bound or 20 * max(abs(omega0), gamma)
    meta = {"protocol": "coherent I", "rx2_final": float(rx2[-1]), "rx2_min": float(rx2.min()),
            "regular_ends": (True, False)}
    sched = _coherent_schedule("protocol I", grid[1:-1], vals[1:-1], t_f, w0, gamma, n0, mode,
                               bound, feasible[1:-1], meta)
    rx2_spline = CubicSpline(grid, rx2)

    def traj_fn(t):
        ryz_t, dyz_t = yz.value(t)[:, 0], yz.deriv(t)[:, 0]
        v = max(float(rx2_spline(t)), 0.0)
        x = sign * np.sqrt(v)
        dv = float(rx2_spline(t, 1))
        dx = dv / (2 * x) if x != 0 else 0.0
        return np.array([x, ryz_t[0], ryz_t[1]]), np.array([dx, dyz_t[0], dyz_t[1]])

    model = two_level_model(gamma)
    r0, r1 = _endpoints(omega0, gamma, n0)
    return Protocol("coherent protocol I", model, model, sched, BlochTrajectory(traj_fn, t_f, 2),
                    from_bloch(r0), from_bloch(r1), t_f,
                    reference={0.0: sched.boundary[0.0], "t_f": sched.boundary["t_f"]},
                    meta={"rx2": (grid, rx2)})


def coherent_protocol_II(omega0: float, gamma: float, n0: float, t_f: float,
                         mode: str = "strict", n_samples: int = 4001,
                         control_bound: float | None = None) -> Protocol:
    """Coherent protocol with ``r_x = 0``: only ``omega`` acts, ``delta = 0`` exactly."""
    _check_mode(mode)
    r0, r1 = _endpoints(omega0, gamma, n0)
    z = SmoothstepComponents(r0[2:], r1[2:], t_f)
    kappa = gamma * (2 * n0 + 1)

    def lam_p(t):
        rz, dz = z.value(t)[0], z.deriv(t)[0]
        return 2 * gamma * rz * (kappa / gamma * rz + 1) + 2 * rz * dz

    grid = np.linspace(0.0, t_f, n_samples)
    ry2 = exp_quadrature(lam_p, kappa, grid, y0=r0[1] ** 2)
    feasible = ry2 > NEG_TOL
    if mode == "strict":
        if np.any(ry2[:-1] < -NEG_TOL):
            k = int(np.argmax(ry2 < -NEG_TOL))
            raise InfeasibleTrajectory(f"r_y^2 = {ry2[k]:.3g} < 0 at t = {grid[k]:.6g}")
        if abs(ry2[-1] - r1[1] ** 2) > FINAL_TOL:
            raise InfeasibleFinalTime(f"r_y^2(t_f) = {ry2[-1]:.3g} misses the target "
                                      f"{r1[1] ** 2:.3g}")
    rz, dz = z.value(grid)[0], z.deriv(grid)[0]
    ry = np.sign(r0[1] or 1.0) * np.sqrt(np.clip(ry2, 0, None))
    vals = np.zeros((n_samples, 3))
    vals[:, 2] = n0
    with np.errstate(divide="ignore", invalid="ignore"):
        vals[:, 0] = (dz + kappa * rz + gamma) / ry
    vals[0, 0] = omega0
    bound = control_bound or 20 * max(abs(omega0), gamma)
    meta = {"protocol": "coherent II", "ry2_final": float(ry2[-1]), "ry2_min": float(ry2.min()),
            "regular_ends": (True, False)}
    sched = _coherent_schedule("protocol II", grid[:-1], vals[:-1], t_f, omega0, gamma, n0, mode,
                               bound, feasible[:-1], meta)
    ry2_spline = CubicSpline(grid, ry2)
    sgn = np.sign(r0[1] or 1.0)

    def traj_fn(t):
        v = max(float(ry2_spline(t)), 0.0)
        y = sgn * np.sqrt(v)
        dy = float(ry2_spline(t, 1)) / (2 * y) if y != 0 else 0.0
        return (np.array([0.0, y, z.value(t)[0, 0]]), np.array([0.0, dy, z.deriv(t)[0, 0]]))

    model = two_level_model(gamma)
    return Protocol("coherent protocol II", model, model, sched, BlochTrajectory(traj_fn, t_f, 2),
                    from_bloch(r0), from_bloch(r1), t_f,
                    reference={0.0: sched.boundary[0.0], "t_f": sched.boundary["t_f"]},
                    meta={"ry2": (grid, ry2)})


def reference_state(protocol: Protocol, t: float):
    """``(I + r_y sigma_y + r_z sigma_z) / 2`` from the designed ``r_y``, ``r_z``."""
    r, _ = protocol.trajectory(t)
    return from_bloch([0.0, r[1], r[2]], check=False)
