import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vvlab.errors import DegenerateSpectrum, NonRealSpectrum, UnknownSystem
from vvlab.spectral import eigensystem
from vvlab.systems import (
    BUILTIN_NAMES,
    builtin_system,
    check_hypotheses,
    constant_system,
    directional_fd,
    fd_jacobian,
    scalar_system,
    scaled_viscosity,
    shared_frame_system,
)

SAMPLES = {1: 10_000, 2: 100, 3: 22}


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_builtins_pass_hypotheses(name):
    model = builtin_system(name)
    report = check_hypotheses(model, SAMPLES[model.n])
    assert report.samples >= 10_000
    assert report.passed, report.lines()
    assert report.max_commutator <= 1e-10


def test_unknown_system():
    with pytest.raises(UnknownSystem):
        builtin_system("no-such-system")


def test_degenerate_constant_system_fails_gap():
    model = constant_system("twin", np.eye(2), np.eye(2))
    report = check_hypotheses(model, 5)
    assert not report.gap_ok
    with pytest.raises(DegenerateSpectrum):
        eigensystem(model, np.zeros(2))


def test_non_commuting_pair_fails_commutation():
    model = constant_system("jordan", [[0.0, 1.0], [0.0, 0.0]], np.diag([1.0, 2.0]))
    report = check_hypotheses(model, 5)
    assert not report.commutation_ok
    assert "commutation" in report.failures


def test_rotation_drift_has_complex_spectrum():
    model = constant_system("rotation", [[0.0, -1.0], [1.0, 0.0]], np.eye(2))
    with pytest.raises(NonRealSpectrum):
        check_hypotheses(model, 3)


def test_wrong_claimed_gap_is_reported():
    model = shared_frame_system("tight", np.eye(2), [[0.0, 1.0], [1.0]], [[1.0], [1.0]],
                                state_box=[[-0.5, 0.5], [-0.5, 0.5]], c0_claimed=0.9, c1_claimed=1.0)
    report = check_hypotheses(model, 11)
    assert report.min_gap == pytest.approx(0.5)
    assert not report.gap_ok


def test_cubic_flux_jacobian_is_second_order():
    # central differences are exact for quadratic fluxes, so use a cubic one
    flux = lambda u: u**3
    u = np.array([[0.7]])
    exact = 3 * 0.7**2
    errors = [abs(fd_jacobian(flux, u, h)[0, 0, 0] - exact) for h in (1e-2, 5e-3, 2.5e-3)]
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(orders >= 1.9)


@pytest.mark.parametrize("name", ["rotating2", "shared_frame2", "shared_frame3"])
def test_analytic_viscosity_derivative_matches_fd(name, rng):
    model = builtin_system(name)
    lo, hi = model.state_box.T
    u = lo + (hi - lo) * rng.uniform(size=(20, model.n))
    d = rng.normal(size=(20, model.n))
    np.testing.assert_allclose(model.dB(u, d), directional_fd(model.B, u, d), atol=1e-8)


@given(st.lists(st.floats(-0.2, 0.2), min_size=2, max_size=2))
def test_shared_frame_commutes_exactly(state):
    model = builtin_system("shared_frame2")
    u = np.array(state)
    A, B = model.A(u), model.B(u)
    assert np.abs(A @ B - B @ A).max() <= 1e-14


def test_scaled_viscosity_scales_B_only():
    model = builtin_system("rotating2")
    scaled = scaled_viscosity(model, 0.25)
    u = np.array([0.1, -0.05])
    np.testing.assert_allclose(scaled.B(u), 0.25 * model.B(u))
    np.testing.assert_allclose(scaled.A(u), model.A(u))
    np.testing.assert_allclose(scaled.dB(u, u), 0.25 * model.dB(u, u))
    assert scaled.c1_claimed == pytest.approx(0.25 * model.c1_claimed)


def test_scalar_system_flux_and_speed():
    model = scalar_system("cubic", lambda u: u**3, lambda u: 3 * u**2)
    u = np.array([[2.0]])
    assert model.flux(u)[0, 0] == 8.0
    assert model.A(u)[0, 0, 0] == 12.0
    assert model.conservative


def test_contains_respects_inflation():
    model = builtin_system("decoupled2")
    assert model.contains(np.array([0.25, -0.25]))
    assert not model.contains(np.array([0.3, 0.0]))
    assert model.contains(np.array([0.3, 0.0]), inflate=0.2)
