import numpy as np
import pytest
from hypothesis import given, strategies as st

from mise import qlinalg
from mise.lindblad import assemble_liouvillian, dissipator_superop
from mise.synth.models import lambda_model, two_level_model

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)
SY = np.array([[0, -1j], [1j, 0]])


def test_kron_identity_cases():
    assert np.array_equal(qlinalg.kron(np.eye(2), np.eye(2)), np.eye(4))
    assert np.array_equal(qlinalg.kron(SZ, np.eye(2)), np.diag([1, 1, -1, -1]))
    xx = qlinalg.kron(SX, SX)
    assert np.allclose(xx @ xx, np.eye(4))


def test_vec_row_order():
    assert list(qlinalg.vec_row(np.array([[1, 2], [3, 4]]))) == [1, 2, 3, 4]
    rho = np.arange(9).reshape(3, 3)
    assert list(qlinalg.vec_row(rho)) == list(range(9))


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_vec_roundtrip_is_exact(n, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    assert np.array_equal(qlinalg.unvec_row(qlinalg.vec_row(m)), m)


@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_kron_vec_identity(n, seed):
    rng = np.random.default_rng(seed)
    a, x, b = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) for _ in range(3))
    lhs = qlinalg.vec_row(a @ x @ b)
    rhs = qlinalg.kron(a, b.T) @ qlinalg.vec_row(x)
    assert np.linalg.norm(lhs - rhs) <= 1e-13 * np.linalg.norm(lhs)


def test_trace_row():
    rho = np.array([[0.3, 0.1j], [-0.1j, 0.7]])
    assert qlinalg.trace_row(2) @ qlinalg.vec_row(rho) == pytest.approx(1.0)


def test_bordered_two_level_decay():
    lv = assemble_liouvillian(two_level_model(1.0), [0.0, 0.0, 0.0])
    v = qlinalg.solve_bordered_nullvector(lv, qlinalg.trace_row(2))
    assert np.allclose(v, [0, 0, 0, 1], atol=1e-14)


def test_bordered_maximally_mixed():
    # depolarizing generator: kernel spanned by vec(I/2)
    m = sum(dissipator_superop(s) for s in (SX, SY, SZ))
    v = qlinalg.solve_bordered_nullvector(m, qlinalg.trace_row(2))
    assert np.allclose(v, [0.5, 0, 0, 0.5])


def test_bordered_errors(rng):
    with pytest.raises(qlinalg.NoSolution):
        qlinalg.solve_bordered_nullvector(rng.normal(size=(4, 4)), qlinalg.trace_row(2))
    with pytest.raises(qlinalg.AmbiguousSteadyState):
        qlinalg.solve_bordered_nullvector(np.zeros((4, 4)), qlinalg.trace_row(2))


@given(st.floats(0.05, 3), st.floats(0.05, 3), st.floats(0.1, 3), st.floats(0, 2))
def test_bordered_solution_is_hermitian(wp, ws, g, n):
    lv = assemble_liouvillian(lambda_model(g), [wp, ws, 0.0, n, n])
    rho = qlinalg.unvec_row(qlinalg.solve_bordered_nullvector(lv, qlinalg.trace_row(3)))
    assert qlinalg.hermitian_defect(rho) <= 1e-12


def test_least_squares_square_and_overdetermined(rng):
    a = rng.normal(size=(5, 5))
    x = rng.normal(size=5)
    res = qlinalg.least_squares(a, a @ x)
    assert res.residual_norm <= 1e-12 and np.allclose(res.solution, x)
    a = rng.normal(size=(9, 4))
    x = rng.normal(size=4)
    res = qlinalg.least_squares(a, a @ x)
    assert res.residual_norm <= 1e-10


def test_least_squares_inconsistent_residual_is_projection(rng):
    a = rng.normal(size=(8, 3))
    b = rng.normal(size=8)
    q, _ = np.linalg.qr(a)
    expected = np.linalg.norm(b - q @ (q.T @ b))
    assert qlinalg.least_squares(a, b).residual_norm == pytest.approx(expected, rel=1e-12)


def test_least_squares_rank_deficient(rng):
    a = rng.normal(size=(6, 2))
    a = np.column_stack([a, a[:, 0] + a[:, 1]])
    with pytest.raises(qlinalg.RankDeficient) as info:
        qlinalg.least_squares(a, rng.normal(size=6))
    assert info.value.rank == 2


def test_extended_matches_double(rng):
    a = rng.normal(size=(10, 4))
    b = rng.normal(size=10)
    r1 = qlinalg.least_squares(a, b)
    r2 = qlinalg.least_squares_extended(a, b)
    assert np.allclose(np.asarray(r2.solution, dtype=float), r1.solution, atol=1e-12)
