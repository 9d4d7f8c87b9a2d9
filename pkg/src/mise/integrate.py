"""Explicit Runge-Kutta integrators for complex linear (and mildly nonlinear) ODEs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# difference between 5th and embedded 4th order weights
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# continuous extension (Shampine), y(t+s h) = y + h * K^T (P @ [s, s^2, s^3, s^4])
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


@dataclass
class OdeSolution:
    ts: np.ndarray
    ys: np.ndarray
    n_accepted: int
    n_rejected: int
    n_evals: int
    failed: bool = False
    message: str = ""


def _err_norm(err, y, y_new, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))


def _initial_step(f, t0, y0, f0, t_end, rtol, atol):
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean(np.abs(y0 / scale) ** 2))
    d1 = np.sqrt(np.mean(np.abs(f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, abs(t_end - t0))
    f1 = f(t0 + h0, y0 + h0 * f0)
    d2 = np.sqrt(np.mean(np.abs((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, abs(t_end - t0))


def dopri5(f, t0, y0, t1, rtol=1e-8, atol=1e-10, t_eval=None, h0=None, h_min=None,
           h_max=None, max_steps=2_000_000) -> OdeSolution:
    """Adaptive Dormand-Prince 5(4) from ``t0`` to ``t1`` (``t1 > t0``).

    Values at ``t_eval`` come from the 4th-order continuous extension; the
    endpoint ``t1`` is always hit exactly by a step.  Step-size underflow
    (below ``h_min``, default ``1e-13 * |t1 - t0|``) is reported as a failure
    carrying the time stamp.
    """
    y = np.array(y0, dtype=complex)
    t = float(t0)
    t1 = float(t1)
    if t_eval is None:
        t_eval = np.array([t0, t1])
    t_eval = np.asarray(t_eval, dtype=float)
    out = np.empty((len(t_eval), y.size), dtype=complex)
    k_out = 0
    while k_out < len(t_eval) and t_eval[k_out] <= t:
        out[k_out] = y
        k_out += 1
    span = t1 - t
    if h_min is None:
        h_min = 1e-13 * max(span, 1e-300)
    if h_max is None:
        h_max = span
    fy = f(t, y)
    n_evals = 1
    h = h0 if h0 is not None else _initial_step(f, t, y, fy, t1, rtol, atol)
    n_evals += 1
    acc = rej = 0
    K = np.empty((7, y.size), dtype=complex)
    while t < t1:
        if acc + rej > max_steps:
            return OdeSolution(t_eval[:k_out], out[:k_out], acc, rej, n_evals, True,
                               f"step budget exhausted at t={t:.6g}")
        h = min(h, h_max)
        last = t + h >= t1 - 1e-14 * span
        if last:
            h = t1 - t
        K[0] = fy
        with np.errstate(over="ignore", invalid="ignore"):
            for s in range(1, 7):
                K[s] = f(t + _C[s] * h, y + h * (np.asarray(_A[s]) @ K[:s]))
            y_new = y + h * (_B[:6] @ K[:6])
            err = h * (_E @ K)
            en = _err_norm(err, y, y_new, rtol, atol)
        n_evals += 6
        if not np.isfinite(en):  # overflow in a trial step: shrink hard
            en = np.inf
        if en <= 1.0:
            t_new = t1 if last else t + h
            while k_out < len(t_eval) and t_eval[k_out] <= t_new:
                s = (t_eval[k_out] - t) / h
                q = _P @ np.array([s, s * s, s ** 3, s ** 4])
                out[k_out] = y + h * (q @ K)
                k_out += 1
            t, y, fy = t_new, y_new, K[6]
            acc += 1
            fac = MAX_FACTOR if en == 0 else min(MAX_FACTOR, SAFETY * en ** -0.2)
            h = h * fac
        else:
            rej += 1
            h = h * max(MIN_FACTOR, SAFETY * en ** -0.2) if np.isfinite(en) else h * MIN_FACTOR
            if h < h_min:
                return OdeSolution(t_eval[:k_out], out[:k_out], acc, rej, n_evals, True,
                                   f"step size underflow (h={h:.3g}) at t={t:.9g}; problem is stiff or singular")
    while k_out < len(t_eval):
        out[k_out] = y
        k_out += 1
    return OdeSolution(t_eval, out, acc, rej, n_evals)


def rk4_fixed(f, t0, y0, t1, n_steps, t_eval=None) -> OdeSolution:
    """Classic fixed-step RK4; outputs at ``t_eval`` by cubic Hermite interpolation."""
    ts = np.linspace(t0, t1, n_steps + 1)
    h = ts[1] - ts[0]
    y = np.array(y0, dtype=complex)
    ys = np.empty((n_steps + 1, y.size), dtype=complex)
    fs = np.empty_like(ys)
    ys[0] = y
    fs[0] = f(ts[0], y)
    for i in range(n_steps):
        t = ts[i]
        k1 = fs[i]
        k2 = f(t + h / 2, y + h / 2 * k1)
        k3 = f(t + h / 2, y + h / 2 * k2)
        k4 = f(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        ys[i + 1] = y
        fs[i + 1] = f(ts[i + 1], y)
    if t_eval is None:
        return OdeSolution(ts, ys, n_steps, 0, 5 * n_steps + 1)
    t_eval = np.asarray(t_eval, dtype=float)
    idx = np.clip(np.searchsorted(ts, t_eval, side="right") - 1, 0, n_steps - 1)
    s = ((t_eval - ts[idx]) / h)[:, None]
    h00 = 2 * s ** 3 - 3 * s ** 2 + 1
    h10 = s ** 3 - 2 * s ** 2 + s
    h01 = -2 * s ** 3 + 3 * s ** 2
    h11 = s ** 3 - s ** 2
    out = h00 * ys[idx] + h10 * h * fs[idx] + h01 * ys[idx + 1] + h11 * h * fs[idx + 1]
    return OdeSolution(t_eval, out, n_steps, 0, 5 * n_steps + 1)
