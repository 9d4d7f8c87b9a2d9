"""Model builders for the three worked systems.

All Hamiltonians use the ``hbar/2`` convention, ``H = (Omega/2)(|a><b| + h.c.)``.

Two-level: basis ``|0>`` excited, ``|1>`` ground; ``sigma_z = diag(1, -1)``
so the ground state has ``r_z = -1``.  Controls ``omega``, ``delta``, ``n``
with ``H = (omega sigma_x + delta sigma_z) / 2`` and a thermal channel of rate
``gamma`` on ``sigma_- = |1><0|``.

Lambda: basis ``|0>`` initial ground, ``|1>`` excited, ``|2>`` final ground.
Controls ``omega_p`` (0-1), ``omega_s`` (1-2), ``omega_c`` (0-2, coupling
``i|0><2| - i|2><0|``), ``n_m`` and ``n_p`` (excitation numbers of the decay
channels into |0> and |2>).  Excited-state dephasing ``gamma_d`` acts through
the projector ``|1><1|``; ground dephasing ``gamma_dg`` through ``|2><2|``.

Three qubits: ``H = -(a X + b (-Z - Z1Z2 - Z2Z3) + c (X1X2 + Y1Y2 + X2X3 + Y2Y3))``
with ``X = sum_i X_i`` etc., and per-qubit thermal decay on ``|1><0|`` at
rate ``2 gamma``.  The overall sign and the doubled rate are the convention
under which the closed-form three-qubit controls hold.
"""
from __future__ import annotations

from functools import reduce

import numpy as np

from ..blochsu import SIGMA_X, SIGMA_Y, SIGMA_Z
from ..lindblad import DissipationChannel, LindbladModel, ModelError

SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)

TWO_LEVEL_CONTROLS = ("omega", "delta", "n")
LAMBDA_CONTROLS = ("omega_p", "omega_s", "omega_c", "n_m", "n_p")
THREE_QUBIT_CONTROLS = ("a", "b", "c", "n")


def _proj(i, j, n):
    m = np.zeros((n, n), dtype=complex)
    m[i, j] = 1
    return m


def _check_rate(name, value):
    if not np.isfinite(value) or value < 0:
        raise ModelError(f"{name} must be a finite rate >= 0, got {value}")


def two_level_model(gamma: float) -> LindbladModel:
    _check_rate("gamma", gamma)
    return LindbladModel(
        2,
        {"omega": 0.5 * SIGMA_X, "delta": 0.5 * SIGMA_Z},
        (DissipationChannel(SIGMA_MINUS, gamma, "n", "decay"),),
        name="two-level",
    )


def lambda_model(gamma_m: float, gamma_p: float | None = None, gamma_d: float = 0.0,
                 gamma_dg: float = 0.0) -> LindbladModel:
    if gamma_p is None:
        gamma_p = gamma_m
    for nm, v in (("gamma_m", gamma_m), ("gamma_p", gamma_p), ("gamma_d", gamma_d),
                  ("gamma_dg", gamma_dg)):
        _check_rate(nm, v)
    p = lambda i, j: _proj(i, j, 3)
    terms = {
        "omega_p": 0.5 * (p(0, 1) + p(1, 0)),
        "omega_s": 0.5 * (p(1, 2) + p(2, 1)),
        "omega_c": 0.5 * (1j * p(0, 2) - 1j * p(2, 0)),
    }
    channels = [
        DissipationChannel(p(0, 1), gamma_m, "n_m", "decay to |0>"),
        DissipationChannel(p(2, 1), gamma_p, "n_p", "decay to |2>"),
    ]
    if gamma_d > 0:
        channels.append(DissipationChannel(p(1, 1), gamma_d, None, "excited dephasing"))
    if gamma_dg > 0:
        channels.append(DissipationChannel(p(2, 2), gamma_dg, None, "ground dephasing"))
    return LindbladModel(3, terms, tuple(channels), name="lambda")


def _embed(op, site, n_sites=3):
    mats = [np.eye(2, dtype=complex)] * n_sites
    mats = list(mats)
    mats[site] = op
    return reduce(np.kron, mats)


def three_qubit_operators():
    """Return ``(X, Z, ZZ, XY)`` sums used by the three-qubit Hamiltonian."""
    x = sum(_embed(SIGMA_X, i) for i in range(3))
    z = sum(_embed(SIGMA_Z, i) for i in range(3))
    zz = sum(_embed(SIGMA_Z, i) @ _embed(SIGMA_Z, i + 1) for i in range(2))
    xy = sum(_embed(s, i) @ _embed(s, i + 1) for i in range(2) for s in (SIGMA_X, SIGMA_Y))
    return x, z, zz, xy


def three_qubit_model(gamma: float) -> LindbladModel:
    _check_rate("gamma", gamma)
    x, z, zz, xy = three_qubit_operators()
    terms = {"a": -x, "b": z + zz, "c": -xy}
    channels = tuple(DissipationChannel(_embed(SIGMA_MINUS, i), 2 * gamma, "n", f"decay q{i + 1}")
                     for i in range(3))
    return LindbladModel(8, terms, channels, name="three-qubit")
