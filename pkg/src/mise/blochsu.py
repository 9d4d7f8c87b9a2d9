"""SU(N) generator bases and generalized Bloch vectors.

Every basis is normalized to ``tr(T_mu T_nu) = 2 delta_mu_nu`` and a state is

    rho = (I + sqrt(N (N-1) / 2) * sum_mu r_mu T_mu) / N

so pure states have ``|r| = 1`` in any dimension.

Index table for N = 3 (0-based array index -> Gell-Mann label, basis |0>,|1>,|2>)::

    0 T1  real  (0,1)        4 T5  imag  (0,2)
    1 T2  imag  (0,1)        5 T6  real  (1,2)
    2 T3  diag(1,-1,0)       6 T7  imag  (1,2)
    3 T4  real  (0,2)        7 T8  diag(1,1,-2)/sqrt(3)

so the conventional labels r2, r3, r4, r7, r8 live at indices 1, 2, 3, 6, 7.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

UNPHYSICAL_TOL = 1e-9

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)


class UnphysicalBloch(ValueError):
    pass


def _gellmann3():
    s3 = np.sqrt(3.0)
    m = np.zeros((8, 3, 3), dtype=complex)
    m[0][0, 1] = m[0][1, 0] = 1
    m[1][0, 1], m[1][1, 0] = -1j, 1j
    m[2] = np.diag([1, -1, 0])
    m[3][0, 2] = m[3][2, 0] = 1
    m[4][0, 2], m[4][2, 0] = -1j, 1j
    m[5][1, 2] = m[5][2, 1] = 1
    m[6][1, 2], m[6][2, 1] = -1j, 1j
    m[7] = np.diag([1, 1, -2]) / s3
    return m


def _pauli_strings(k):
    one = (np.eye(2, dtype=complex),) + PAULI
    mats = []
    for labels in itertools.product(range(4), repeat=k):
        if not any(labels):
            continue
        m = np.array([[1.0 + 0j]])
        for lab in labels:
            m = np.kron(m, one[lab])
        mats.append(m)
    n = 2 ** k
    return np.array(mats) * np.sqrt(2.0 / n)


@lru_cache(maxsize=None)
def _generators(n):
    if n == 2:
        g = np.array(PAULI)
    elif n == 3:
        g = _gellmann3()
    elif n > 2 and n & (n - 1) == 0:
        g = _pauli_strings(int(np.log2(n)))
    else:
        raise ValueError(f"no built-in SU({n}) basis; supported: 2, 3 and powers of two")
    g.setflags(write=False)
    return g


def su_generators(n: int) -> np.ndarray:
    """Array of shape ``(n*n - 1, n, n)``.

    n = 2: Pauli matrices; n = 3: Gell-Mann matrices in the usual T1..T8 order;
    n = 2**k: normalized Pauli strings in lexicographic (I, X, Y, Z) order,
    leftmost factor is qubit 1.
    """
    return _generators(int(n))


def _coef(n):
    return np.sqrt(n * (n - 1) / 2.0)


def from_bloch(r, check=True) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    n = int(round(np.sqrt(r.size + 1)))
    if n * n - 1 != r.size:
        raise ValueError(f"Bloch vector length {r.size} is not N^2 - 1")
    g = su_generators(n)
    rho = (np.eye(n) + _coef(n) * np.tensordot(r, g, axes=1)) / n
    if check:
        w = np.linalg.eigvalsh(rho).min()
        if w < -UNPHYSICAL_TOL:
            raise UnphysicalBloch(f"Bloch vector gives negative eigenvalue {w:.3g}")
    return rho


def to_bloch(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    n = rho.shape[0]
    g = su_generators(n)
    return np.real(np.einsum("kij,ji->k", g, rho)) * n / (2 * _coef(n))


def from_bloch_derivative(dr) -> np.ndarray:
    """Time derivative of rho given the derivative of its Bloch vector."""
    dr = np.asarray(dr, dtype=float)
    n = int(round(np.sqrt(dr.size + 1)))
    return _coef(n) * np.tensordot(dr, su_generators(n), axes=1) / n


def lambda_steady_bloch(omega_p, omega_s, gamma, n_exc) -> np.ndarray:
    """Closed-form steady state of the equal-rate Lambda system.

    Basis |0>, |1>, |2> = initial ground, excited, final ground, with
    ``H = (omega_p |0><1| + omega_s |1><2| + h.c.) / 2`` and both ground levels
    coupled to the excited level by thermal channels of rate ``gamma`` and
    occupation ``n_exc``.  Only the ratios omega/gamma matter.  Valid without
    excited-state dephasing; dephasing damps the O(n_exc) excited-ground
    coherences (indices 1 and 6).
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    om2 = omega_p ** 2 + omega_s ** 2
    z = (3 * n_exc + 1) * om2 + n_exc * gamma ** 2 * (3 * n_exc + 2) ** 2
    if z == 0:
        raise ValueError("all-zero parameters: steady state undefined")
    s3 = np.sqrt(3.0)
    a = (3 * n_exc ** 2 + 2 * n_exc) * gamma ** 2
    r = np.zeros(8)
    r[1] = -s3 * n_exc * gamma * omega_p / z
    r[2] = s3 * (a + omega_s ** 2) / (2 * z)
    r[3] = -s3 * omega_p * omega_s / z
    r[6] = s3 * n_exc * gamma * omega_s / z
    r[7] = -(a + 2 * omega_p ** 2 - omega_s ** 2) / (2 * z)
    return r


def two_level_steady_bloch(omega0, gamma, n0) -> np.ndarray:
    """Steady state of ``H = omega0/2 sigma_x`` with thermal decay into |1>."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    x = omega0 / gamma
    p = (2 * n0 + 1) ** 2 + 2 * x ** 2
    return np.array([0.0, 2 * x / p, -(2 * n0 + 1) / p])
