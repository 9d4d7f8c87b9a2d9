import numpy as np
import pytest

from mise.blochsu import lambda_steady_bloch
from mise.lindblad import propagate, trace_distance
from mise.synth import lam
from mise.synth.core import BoundaryMismatch, SingularTrajectory
from mise.synth.models import LAMBDA_CONTROLS
from mise.synth.shapes import CubicRamp, SineSquared, mixing_angle

TWO_PI = 2 * np.pi


def test_static_point_reproduces_reference():
    th = 0.6
    r = lambda_steady_bloch(np.sin(th), np.cos(th), 1.0, 0.2)
    sol = lam.lambda_synthesize_controls(r, np.zeros(8), 1.0)
    ref = lam.reference_record(1.0, th, 0.2)
    for c in LAMBDA_CONTROLS:
        assert sol.controls[c] == pytest.approx(ref[c], abs=1e-9)


@pytest.mark.parametrize("theta", ["linear", "sine2"])
def test_transitionless_equivalence(theta):
    p = lam.lambda_adiabatic_protocol(1.0, 10.0, 1.0, n=0.2, theta=theta, n_samples=100)
    shape = mixing_angle(theta, 10.0)
    for t, row in zip(p.schedule.times, p.schedule.values):
        ref = lam.transitionless_controls(1.0, shape, 0.2, t)
        for j, c in enumerate(LAMBDA_CONTROLS):
            assert row[j] == pytest.approx(ref[c], abs=1e-8 * (1.0 if c[0] == "o" else 0.2))


def test_equal_rate_degenerate_instant_is_dropped():
    p = lam.lambda_adiabatic_protocol(1.0, 10.0, 1.0, n=0.2, n_samples=101)
    dropped = p.schedule.meta["dropped_samples"]
    assert dropped == [pytest.approx(5.0)]
    assert p.schedule.vector_at(5.0)[0] == pytest.approx(np.sin(np.pi / 4), abs=1e-6)


def test_unequal_rates_pole_is_reported():
    with pytest.raises(SingularTrajectory, match="t=5.1"):
        lam.lambda_adiabatic_protocol(1.0, 10.0, 1.0, gamma_p=0.6, n=0.1)


def test_adiabatic_tracking_and_boundary():
    p = lam.lambda_adiabatic_protocol(1.0, 10.0, 1.0, n=0.1)
    assert p.schedule.boundary_defect(p.reference) <= 1e-9
    ts = np.linspace(0, 10, 30)
    res = propagate(p.synthesis_model, p.schedule, p.rho0, (0, 10), rtol=1e-11, atol=1e-13,
                    t_eval=ts)
    assert max(trace_distance(r, p.trajectory.state(t)) for t, r in zip(ts, res.states)) <= 1e-6


def test_dark_limit_keeps_amplitude():
    omega = TWO_PI * 122e6
    p = lam.lambda_adiabatic_protocol(omega, 16.8e-9, TWO_PI * 4.3e6, TWO_PI * 8.4e6, n=1.9e-33,
                                      theta="linear", n_samples=101)
    v = p.schedule.values
    amp = np.hypot(v[:, 0], v[:, 1])
    assert np.allclose(amp, omega, rtol=1e-8)
    assert np.all(v[:, 3] == 1.9e-33) and np.all(v[:, 4] == 1.9e-33)
    assert np.allclose(v[:, 2], 2 * (np.pi / 2) / 16.8e-9, rtol=1e-8)
    assert p.schedule.meta["boundary_exempt"]


def test_phi_zero_is_equal_rate_steady_state():
    for th in (0.1, 0.7, 1.3):
        r2, r3, r7, r8 = lam.phi_modified_components(1.3, 1.0, 0.2, th, 0.0)
        ref = lambda_steady_bloch(1.3 * np.sin(th), 1.3 * np.cos(th), 1.0, 0.2)
        assert np.allclose([r2, r3, r7, r8], ref[[1, 2, 6, 7]], atol=1e-14)


@pytest.fixture(scope="module")
def fig1():
    return lam.lambda_nocoupling_schedule(TWO_PI * 18.1e3, 20e-6, 1.5e6, lam.N_ROOM,
                                          gamma_d=TWO_PI * 8.8e6)


def test_nocoupling_has_no_coupling(fig1):
    s = fig1.protocol.schedule
    assert np.abs(s.column("omega_c")).max() <= 1e-10 * TWO_PI * 18.1e3
    assert s.boundary_defect(fig1.protocol.reference) <= 1e-9
    r4_0 = lambda_steady_bloch(0.0, TWO_PI * 18.1e3, 1.5e6, lam.N_ROOM)[3]
    assert fig1.r4[0] == r4_0


def test_nocoupling_tracks_design(fig1):
    p = fig1.protocol
    ts = np.linspace(0, p.t_f, 40)
    res = propagate(p.synthesis_model, p.schedule, p.rho0, (0, p.t_f), rtol=1e-11, atol=1e-13,
                    t_eval=ts)
    assert max(trace_distance(r, p.trajectory.state(t)) for t, r in zip(ts, res.states)) <= 1e-6


def test_phi_zero_rejected():
    with pytest.raises(lam.DegenerateTrajectory):
        lam.lambda_nocoupling_schedule(1e5, 20e-6, 1.5e6, lam.N_ROOM, phi=SineSquared(0.0, 20e-6))


def test_boundary_mismatch_rejected():
    with pytest.raises(BoundaryMismatch):
        lam.lambda_nocoupling_schedule(1e5, 20e-6, 1.5e6, lam.N_ROOM,
                                       phi=CubicRamp(0.3, 0.3, 20e-6))


def test_short_pulse_with_cutoff_fails_to_transfer():
    res = lam.lambda_nocoupling_schedule(154e3, 0.5e-6, 1.5e6, lam.N_ROOM, n_min=lam.N_ROOM,
                                         gamma_d=TWO_PI * 8.8e6)
    p = res.protocol
    assert res.protocol.schedule.clamp_fraction > 0
    assert np.all(p.schedule.values[:, 3:] >= lam.N_ROOM)
    out = propagate(p.model, p.schedule, p.rho0, (0, p.t_f), rtol=1e-10, atol=1e-12)
    assert out.final[2, 2].real < 0.5


def test_nocoupling_field_on_weakly_populated_levels():
    # Stokes at t = 0 acts only on levels populated at O(n^2); it must not be dropped
    res = lam.lambda_nocoupling_schedule(1.5e6, 5e-6, 1.5e6, lam.N_ROOM, n_min=lam.N_ROOM,
                                         n_samples=201)
    assert res.protocol.schedule.values[0, 1] == pytest.approx(1.5e6, rel=1e-6)
