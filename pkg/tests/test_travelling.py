import numpy as np
import pytest

from vvlab.errors import NoConnection, NoFlux
from vvlab.solver import GridField, SolverConfig, simulate
from vvlab.spectral import eigensystem
from vvlab.systems import builtin_system, scalar_system
from vvlab.travelling import (
    burgers_profile,
    estimate_shift,
    oleinik_admissible,
    profile_conservative,
    profile_ode_rhs,
    rh_residual,
    rh_speed,
    verify_profile,
)


def cubic_system():
    return scalar_system("cubic", lambda u: u**3, lambda u: 3 * u**2, state_box=(-3.0, 3.0))


@pytest.fixture(scope="module")
def burgers():
    return builtin_system("burgers")


@pytest.mark.parametrize("um, up, speed", [(1.0, -1.0, 0.0), (2.0, 0.0, 1.0), (0.5, -0.1, 0.2)])
def test_rh_speed_burgers(burgers, um, up, speed):
    assert rh_speed(burgers, um, up) == pytest.approx(speed, abs=1e-15)
    assert rh_residual(burgers, um, up, speed) < 1e-14


def test_rh_speed_cubic():
    assert rh_speed(cubic_system(), 2.0, 1.0) == pytest.approx(7.0)


def test_rh_speed_needs_flux_and_distinct_states(burgers):
    with pytest.raises(NoFlux):
        rh_speed(builtin_system("rotating2"), [0, 0], [0.1, 0.1])
    with pytest.raises(ValueError):
        rh_speed(burgers, 1.0, 1.0)


@pytest.fixture(scope="module")
def burgers_shock(burgers):
    return profile_conservative(burgers, 1.0, -1.0, xi_span=(-20.0, 20.0), M=20001)


def test_burgers_profile_matches_closed_form(burgers_shock):
    assert burgers_shock.sigma == 0.0
    err = np.abs(burgers_shock.U[:, 0] - burgers_profile(burgers_shock.xi)).max()
    assert err <= 1e-6
    np.testing.assert_allclose(burgers_profile(np.array([0.0, 40.0])), [0.0, -1.0])


def test_burgers_profile_residuals(burgers, burgers_shock):
    report = verify_profile(burgers, burgers_shock)
    assert report.ode_residual <= 1e-6
    assert report.identity_residual <= 1e-6
    assert max(report.endpoint_residual) <= 1e-6
    assert len(report.lines()) == 3


def test_ode_residual_is_second_order(burgers):
    res = [verify_profile(burgers, profile_conservative(burgers, 1.0, -1.0, xi_span=(-20, 20), M=M)).ode_residual
           for M in (401, 801, 1601)]
    assert res[0] / res[1] == pytest.approx(4.0, rel=0.1)
    assert res[1] / res[2] == pytest.approx(4.0, rel=0.1)


def test_constant_profile(burgers):
    p = profile_conservative(burgers, 0.3, 0.3, M=11)
    assert p.sigma == pytest.approx(0.3)
    np.testing.assert_array_equal(p.U, 0.3)
    np.testing.assert_array_equal(p.Uprime, 0.0)


def test_expansive_pair_has_no_profile(burgers):
    with pytest.raises(NoConnection):
        profile_conservative(burgers, -1.0, 1.0)


def test_wrong_speed_rejected(burgers):
    with pytest.raises(NoConnection):
        profile_conservative(burgers, 1.0, -1.0, sigma=0.3)


def test_profile_ode_rhs_vanishes_at_rest(rng):
    model = builtin_system("shared_frame2")
    u = rng.uniform(-0.05, 0.05, size=(20, 2))
    du, dv, ds = profile_ode_rhs(model, u, np.zeros_like(u), np.zeros(20))
    for part in (du, dv, ds):
        np.testing.assert_array_equal(part, 0.0)


def test_profile_ode_rhs_matches_direct_evaluation(rng):
    model = builtin_system("rotating2")
    u = rng.uniform(-0.1, 0.1, size=(30, 2))
    v = rng.normal(size=(30, 2))
    sigma = rng.normal(size=30)
    _, vdot, _ = profile_ode_rhs(model, u, v, sigma)
    for p in range(30):
        A, B = model.A(u[p]), model.B(u[p])
        # directional derivative of B along v by central differences of the exact Jacobian action
        step = 1e-6
        dB = (model.B(u[p] + step * v[p]) - model.B(u[p] - step * v[p])) / (2 * step)
        expected = np.linalg.solve(B, (A - sigma[p] * np.eye(2)) @ v[p] - dB @ v[p])
        np.testing.assert_allclose(vdot[p], expected, rtol=1e-7, atol=1e-9)
        exact = np.linalg.solve(B, (A - sigma[p] * np.eye(2)) @ v[p] - model.dB(u[p], v[p]) @ v[p])
        np.testing.assert_allclose(vdot[p], exact, rtol=1e-14, atol=1e-14)


@pytest.mark.parametrize("um, up, expected", [(1.0, -1.0, True), (-1.0, 1.0, False), (0.5, 0.5, True),
                                              (0.2, 0.1, True)])
def test_oleinik_burgers(um, up, expected):
    assert oleinik_admissible(lambda u: 0.5 * u * u, um, up) is expected


@pytest.mark.parametrize("um, up, expected", [(1.0, -0.5, True), (1.0, -1.0, False), (1.0, -1.5, False),
                                              (-1.0, 1.0, False), (-1.0, 0.3, True)])
def test_oleinik_cubic(um, up, expected):
    assert oleinik_admissible(lambda u: u**3, um, up) is expected


def test_admissibility_matches_profile_existence():
    rng = np.random.default_rng(99)
    cubic = cubic_system()
    cases = 0
    while cases < 20:
        um, up = np.round(rng.uniform(-1.5, 1.5, 2), 2)
        if abs(um - up) < 0.2:
            continue
        admissible = oleinik_admissible(lambda u: u**3, um, up)
        # skip the sonic boundary where the profile decays only algebraically
        if abs(up + 0.5 * um) < 0.1:
            continue
        cases += 1
        if admissible:
            p = profile_conservative(cubic, um, up, M=20001)
            assert verify_profile(cubic, p).ode_residual < 1e-4
        else:
            with pytest.raises(NoConnection):
                profile_conservative(cubic, um, up)


def test_profile_is_travelling_wave_of_solver(burgers):
    # the viscous shock (2, 0) moves at speed 1 without changing shape
    f = GridField.from_function(lambda x: burgers_profile(x, 2.0, 0.0), -20, 20, 800)
    snaps = simulate(burgers, f, SolverConfig(t_end=2.0), snapshot_times=(0.0, 2.0))
    shift = estimate_shift(snaps[0].values[:, 0], snaps[-1].values[:, 0], f.h)
    assert abs(shift - 2.0) <= 2 * f.h / 2.0


def test_system_profile_follows_family():
    model = builtin_system("decoupled2")
    # second family: u2 jumps from 0.2 to -0.2 at speed 1 with viscosity 2
    p = profile_conservative(model, [0.0, 0.2], [0.0, -0.2], xi_span=(-300, 300), M=40001)
    assert p.sigma == pytest.approx(1.0)
    np.testing.assert_array_equal(p.U[:, 0], 0.0)
    np.testing.assert_allclose(p.U[:, 1], -0.2 * np.tanh(0.05 * p.xi), atol=1e-6)
    report = verify_profile(model, p)
    assert report.family == 1
    assert report.ode_residual < 1e-6
    assert report.identity_residual < 1e-6
