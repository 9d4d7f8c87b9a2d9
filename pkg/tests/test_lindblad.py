import numpy as np
import pytest
from hypothesis import given, strategies as st

from mise import lindblad, qlinalg
from mise.blochsu import from_bloch, lambda_steady_bloch, to_bloch, two_level_steady_bloch
from mise.lindblad import (DissipationChannel, LindbladModel, ModelError, PropagationError,
                           assemble_liouvillian, propagate, steady_state, uhlmann_fidelity)
from mise.synth.models import lambda_model, three_qubit_model, two_level_model

from conftest import random_density

controls = st.floats(-3, 3)
nonneg = st.floats(0, 2)


@given(controls, controls, nonneg, st.floats(0.05, 3))
def test_trace_preservation_two_level(w, d, n, g):
    lv = assemble_liouvillian(two_level_model(g), [w, d, n])
    assert np.abs(qlinalg.trace_row(2) @ lv).max() <= 1e-12 * max(1, np.abs(lv).max())


@given(controls, controls, controls, nonneg, nonneg, st.floats(0.05, 3), st.floats(0, 2),
       st.floats(0, 2))
def test_trace_preservation_lambda(wp, ws, wc, nm, np_, g, gd, gdg):
    lv = assemble_liouvillian(lambda_model(g, 0.7 * g, gd, gdg), [wp, ws, wc, nm, np_])
    assert np.abs(qlinalg.trace_row(3) @ lv).max() <= 1e-12 * max(1, np.abs(lv).max())


def test_trace_preservation_three_qubit():
    m = three_qubit_model(0.8)
    lv = assemble_liouvillian(m, {"a": 1.2, "b": -0.4, "c": 0.4, "n": 0.3})
    assert np.abs(qlinalg.trace_row(8) @ lv).max() <= 1e-12 * np.abs(lv).max()


def test_pure_decay_population_block():
    lv = assemble_liouvillian(two_level_model(1.3), [0.0, 0.0, 0.0])
    pops = [0, 3]
    block = lv[np.ix_(pops, pops)]
    assert np.allclose(block.sum(axis=0), 0)
    assert np.allclose(lv[np.ix_(pops, [1, 2])], 0)


def test_affine_decomposition_matches_direct_build(rng):
    m = lambda_model(1.1, 0.6, 0.3, 0.2)
    c = rng.uniform(-1, 1, size=5)
    c[3:] = np.abs(c[3:])
    h = m.hamiltonian(c)
    direct = lindblad.hamiltonian_superop(h)
    for ch in m.channels:
        n = {"n_m": c[3], "n_p": c[4]}.get(ch.excitation, 0.0)
        direct = direct + ch.rate * (n + 1) * lindblad.dissipator_superop(ch.jump)
        if ch.excitation is not None:
            direct = direct + ch.rate * n * lindblad.dissipator_superop(ch.jump.conj().T)
    assert np.allclose(assemble_liouvillian(m, c), direct, atol=1e-13)


def test_superop_acts_like_commutator(rng):
    h = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    h = h + h.conj().T
    l = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    rho = random_density(rng, 3)
    out = qlinalg.unvec_row(lindblad.hamiltonian_superop(h) @ qlinalg.vec_row(rho))
    assert np.allclose(out, -1j * (h @ rho - rho @ h))
    out = qlinalg.unvec_row(lindblad.dissipator_superop(l) @ qlinalg.vec_row(rho))
    ldl = l.conj().T @ l
    assert np.allclose(out, l @ rho @ l.conj().T - 0.5 * (ldl @ rho + rho @ ldl))


def test_model_validation():
    with pytest.raises(ModelError):
        LindbladModel(2, {"x": np.array([[0, 1], [0, 0]])})
    with pytest.raises(ModelError):
        DissipationChannel(np.eye(2), -1.0)
    with pytest.raises(ModelError):
        two_level_model(-1.0)
    m = two_level_model(1.0)
    with pytest.raises(ModelError):
        m.control_vector([1.0, 2.0])
    with pytest.raises(ModelError):
        m.control_vector([1.0 + 1j, 0.0, 0.0])
    with pytest.raises(ModelError):
        m.control_vector({"omega": 1.0})


def test_steady_state_examples():
    rho = steady_state(assemble_liouvillian(two_level_model(1.0), [1.0, 0.0, 0.0]))
    assert np.allclose(rho, [[1 / 3, -1j / 3], [1j / 3, 2 / 3]], atol=1e-12)
    rho = steady_state(assemble_liouvillian(two_level_model(1.0), [0.0, 0.0, 0.0]))
    assert np.allclose(rho, np.diag([0, 1]), atol=1e-12)
    th = 0.4
    rho = steady_state(assemble_liouvillian(lambda_model(1.0), [np.sin(th), np.cos(th), 0, 0, 0]))
    assert np.allclose(np.diag(rho).real, [np.cos(th) ** 2, 0, np.sin(th) ** 2], atol=1e-10)
    dark = np.array([np.cos(th), 0, -np.sin(th)])
    assert np.allclose(rho, np.outer(dark, dark), atol=1e-10)


@given(st.floats(0.05, 3), st.floats(0.05, 3), st.floats(0.1, 3), st.floats(0, 2))
def test_steady_state_lambda_matches_closed_form(wp, ws, g, n):
    rho = steady_state(assemble_liouvillian(lambda_model(g), [wp, ws, 0, n, n]))
    assert np.abs(to_bloch(rho) - lambda_steady_bloch(wp, ws, g, n)).max() <= 1e-10


@given(st.floats(-3, 3), st.floats(0.1, 3), st.floats(0, 2))
def test_steady_state_two_level_matches_closed_form(w, g, n):
    rho = steady_state(assemble_liouvillian(two_level_model(g), [w, 0, n]))
    assert np.abs(to_bloch(rho) - two_level_steady_bloch(w, g, n)).max() <= 1e-10


def test_steady_state_derivative_fd():
    m = lambda_model(1.0)
    c0 = np.array([0.5, 0.8, 0.0, 0.1, 0.1])
    dc = np.array([0.3, -0.2, 0.0, 0.0, 0.0])
    l0 = assemble_liouvillian(m, c0)
    dl = assemble_liouvillian(m, c0 + dc) - l0
    rho0 = steady_state(l0)
    h = 1e-6
    fd = (steady_state(assemble_liouvillian(m, c0 + h * dc)) - steady_state(
        assemble_liouvillian(m, c0 - h * dc))) / (2 * h)
    assert np.allclose(lindblad.steady_state_derivative(l0, dl, rho0), fd, atol=1e-7)


def test_fidelity_cases():
    p0, p1 = np.diag([1.0, 0]), np.diag([0, 1.0])
    assert uhlmann_fidelity(p0, p0) == pytest.approx(1.0)
    assert uhlmann_fidelity(p0, p1) == pytest.approx(0.0, abs=1e-15)
    assert uhlmann_fidelity(np.eye(2) / 2, p0) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        uhlmann_fidelity(np.diag([1.5, -0.5]), p0)


@given(st.integers(0, 2**32 - 1))
def test_fidelity_symmetric_and_bounded(seed):
    rng = np.random.default_rng(seed)
    a, b = random_density(rng, 3), random_density(rng, 3)
    f = uhlmann_fidelity(a, b)
    assert 0 <= f <= 1
    assert f == pytest.approx(uhlmann_fidelity(b, a), abs=1e-9)


def test_steady_state_is_fixed_point():
    m = lambda_model(1.0, gamma_d=0.5)
    c = [0.7, 0.4, 0.0, 0.2, 0.2]
    rho0 = steady_state(assemble_liouvillian(m, c))
    # an error-free flat solution lets the step grow to the stability edge;
    # the excursion that follows is bounded by the tolerance, so ask for 1e-10
    res = propagate(m, c, rho0, (0, 20), rtol=1e-10, atol=1e-12,
                    t_eval=np.linspace(0, 20, 101))
    assert np.abs(res.states - rho0).max() <= 1e-9


def test_propagation_keeps_hermiticity_and_trace(rng):
    m = lambda_model(1.0, 0.5, 0.3, 0.1)
    rho0 = random_density(rng, 3)
    sched = lambda t: [np.sin(t), np.cos(t), 0.2, 0.1 + 0.05 * t, 0.3]
    res = propagate(m, sched, rho0, (0, 5), rtol=1e-10, atol=1e-12,
                    t_eval=np.linspace(0, 5, 50))
    assert res.hermiticity_defect <= 1e-9
    assert res.trace_drift <= 1e-9
    assert res.min_eigenvalue >= -1e-9


def test_halving_tolerance_convergence():
    m = two_level_model(1.0)
    rho0 = from_bloch([0, 0, -1])
    sched = lambda t: [2 * np.sin(t) ** 2, 0.3, 0.1]
    finals = [propagate(m, sched, rho0, (0, 4), rtol=r, atol=r * 1e-2).final
              for r in (1e-8, 5e-9)]
    assert np.abs(np.diag(finals[0] - finals[1])).max() <= 1e-7


def test_propagate_matches_matrix_exponential():
    from scipy.linalg import expm
    m = two_level_model(0.7)
    c = [1.3, -0.4, 0.2]
    rho0 = from_bloch([0.2, 0.1, -0.9])
    res = propagate(m, c, rho0, (0, 3), rtol=1e-12, atol=1e-14)
    exact = qlinalg.unvec_row(expm(3 * assemble_liouvillian(m, c)) @ qlinalg.vec_row(rho0))
    assert np.abs(res.final - exact).max() <= 1e-10
    rk = propagate(m, c, rho0, (0, 3), method="rk4", n_steps=2000)
    assert np.abs(rk.final - exact).max() <= 1e-10


def test_propagate_errors():
    m = two_level_model(1.0)
    with pytest.raises(ModelError):
        propagate(m, [0, 0, 0], np.eye(3) / 3, (0, 1))
    with pytest.raises(ModelError):
        propagate(m, [0, 0, 0], np.diag([2.0, -1.0]), (0, 1))
    with pytest.raises(ValueError):
        propagate(m, [0, 0, 0], np.eye(2) / 2, (0, 1), method="euler")


def test_negative_excitation_loses_positivity():
    m = two_level_model(1.0)
    with pytest.raises(PropagationError, match="positivity"):
        propagate(m, [0.0, 0.0, -0.9], from_bloch([0, 0, -1]), (0, 5))
