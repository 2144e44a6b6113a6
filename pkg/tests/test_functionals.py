import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vvlab.cutoffs import CutoffParams
from vvlab.decomposition import decompose_field, diagonal_residuals, effective_fluxes
from vvlab.errors import GapViolated, GridTooLarge, ViscosityFloorViolated
from vvlab.functionals import (
    MAX_PAIR_GRID,
    area_dissipation_check,
    area_functional,
    energy_functionals,
    kernel_constants,
    kernel_value,
    length_functional,
    rescale_coordinates,
    smoothing_bound,
    smoothing_exponents,
    transversal_dissipation_check,
    transversal_q,
    tv,
)
from vvlab.solver import GridField, SolverConfig, compute_ut, simulate
from vvlab.systems import builtin_system, constant_system


def brute_q(z, zs, c, c1, h):
    x = h * np.arange(len(z))
    total = []
    for j in range(len(z)):
        for k in range(len(z)):
            s = x[j] - x[k]
            weight = 1.0 / c if s >= 0 else math.exp(c * s / (2 * c1)) / c
            total.append(weight * abs(z[j]) * abs(zs[k]))
    return h * h * math.fsum(total)


def brute_area(z1, z2, h):
    terms = [abs(z1[j] * z2[k] - z1[k] * z2[j]) for j in range(len(z1)) for k in range(j + 1, len(z1))]
    return 0.5 * h * h * math.fsum(terms)


def test_pair_functionals_match_brute_force(backend):
    rng = np.random.default_rng(2024)
    for _ in range(100):
        z, zs = rng.normal(size=(2, 128))
        c, c1, h = rng.uniform(0.2, 2.0, size=3)
        assert transversal_q(z, zs, c, c1, h, backend=backend) == pytest.approx(brute_q(z, zs, c, c1, h), rel=1e-14)
        assert area_functional(z, zs, h, backend=backend) == pytest.approx(brute_area(z, zs, h), rel=1e-14)


@given(c=st.floats(1e-3, 1e3), c1=st.floats(1e-3, 1e3))
def test_kernel_at_zero_is_inverse_gap(c, c1):
    assert kernel_value(0.0, c, c1) == 1.0 / c


def test_kernel_shape():
    s = np.array([-2.0, -1.0, 0.5, 3.0])
    k = kernel_value(s, 2.0, 1.0)
    np.testing.assert_allclose(k, [np.exp(-2.0) / 2, np.exp(-1.0) / 2, 0.5, 0.5])


def test_q_uses_positions():
    z = np.array([1.0, 0, 0, 0, 0, 0, 0, 0])
    zs = np.array([0, 0, 0, 0, 0, 0, 0, 1.0])
    x = np.arange(8.0)
    # z sits left of z#: s = -7
    assert transversal_q(z, zs, 1.0, 1.0, 1.0, x=x) == pytest.approx(np.exp(-3.5))
    assert transversal_q(zs, z, 1.0, 1.0, 1.0, x=x) == pytest.approx(1.0)


def test_pair_functionals_validate_input():
    with pytest.raises(GridTooLarge):
        transversal_q(np.zeros(MAX_PAIR_GRID + 1), np.zeros(MAX_PAIR_GRID + 1), 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        transversal_q(np.zeros(4), np.zeros(5), 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        transversal_q(np.zeros(4), np.zeros(4), 0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        area_functional(np.zeros(4), np.zeros(3), 1.0)


def test_area_of_proportional_curves_vanishes():
    v = np.linspace(0, 1, 50)
    assert area_functional(v, 2 * v, 0.1) == 0.0


def test_length_and_tv():
    assert length_functional(np.full(10, 3.0), np.full(10, 4.0), 0.5) == pytest.approx(25.0)
    per, total = tv(np.array([[0.0, 1.0], [1.0, 1.0], [0.5, 0.0]]))
    np.testing.assert_allclose(per, [1.5, 1.0])
    assert total == pytest.approx(2.5)


def test_kernel_constants():
    lam = np.zeros((3, 10))
    lam_sharp = np.ones((3, 10))
    mu = np.ones((3, 10))
    c, c1 = kernel_constants(lam, lam_sharp, mu, 2 * mu, 0.1)
    assert c == pytest.approx(1.0)
    assert c1 == pytest.approx(2.0)
    with pytest.raises(GapViolated):
        kernel_constants(lam_sharp, lam, mu, mu, 0.1)


def pulse_trajectory(M=256, T=4.0, stride=4):
    model = constant_system("pulses", np.diag([0.0, 1.0]), np.eye(2), state_box=[[-2, 2], [-2, 2]])
    gauss = lambda x, c: np.exp(-((x - c) ** 2)) / np.sqrt(np.pi)
    f = GridField.from_function(lambda x: np.stack([gauss(x, 0.0), gauss(x, -4.0)], -1), -15, 15, M)
    snaps = simulate(model, f, SolverConfig(t_end=T, snapshot_stride=stride))
    comps = []
    for s in snaps:
        comp = decompose_field(model, s, compute_ut(model, s), CutoffParams(), check_size=False)
        effective_fluxes(comp)
        comps.append(comp)
    return model, comps


def test_transversal_check_on_crossing_pulses():
    model, comps = pulse_trajectory()
    res = diagonal_residuals(comps)
    stack = lambda name: np.stack([getattr(c, name) for c in comps])
    Z, LT, MU = stack("z"), stack("lambda_tilde"), stack("mus")
    series = transversal_dissipation_check(res.times, Z[..., 0], Z[..., 1], LT[..., 0], LT[..., 1],
                                           MU[..., 0], MU[..., 1], res.Phi[..., 0], res.Phi[..., 1], res.h)
    assert series.pass_fraction == 1.0
    assert series.extras["interaction"] <= 1.05 * series.extras["bound"]
    assert series.extras["c"] == pytest.approx(1.0)


def test_transversal_check_rejects_small_gap():
    t = np.array([0.0, 1.0])
    z = np.ones((2, 8))
    with pytest.raises(GapViolated):
        transversal_dissipation_check(t, z, z, np.zeros((2, 8)), 0.5 * np.ones((2, 8)), z, z, z, z, 0.1, c=1.0, c1=1.0)


def test_times_must_increase():
    z = np.ones((2, 8))
    with pytest.raises(ValueError):
        area_dissipation_check([1.0, 1.0], z, z, z, z, z, 0.1)


def test_area_check_on_burgers_bump():
    model = builtin_system("burgers")
    f = GridField.from_function(lambda x: 0.5 * np.exp(-x * x), -10, 10, 256)
    snaps = simulate(model, f, SolverConfig(t_end=1.0, snapshot_stride=2))
    comps = [decompose_field(model, s, compute_ut(model, s), CutoffParams()) for s in snaps]
    res = diagonal_residuals(comps)
    stack = lambda name: np.stack([getattr(c, name)[:, 0] for c in comps])
    series = area_dissipation_check(res.times, stack("v"), stack("w"), stack("mus"), res.phi[..., 0],
                                    res.psi[..., 0], res.h)
    assert series.pass_fraction >= 0.95


def test_energy_functionals_vanish_on_constants():
    model = builtin_system("shared_frame2")
    f = GridField.from_function(lambda x: np.tile([0.1, 0.0], (len(x), 1)), -5, 5, 32)
    comp = decompose_field(model, f, compute_ut(model, f), CutoffParams())
    for value in energy_functionals(comp).values():
        np.testing.assert_array_equal(value, 0.0)


def smooth_random(rng, x):
    coef = rng.normal(size=5)
    return sum(c * np.exp(-((x - m) ** 2) / 2) for c, m in zip(coef, rng.uniform(-3, 3, 5)))


def test_coordinate_map_norm_bound_and_round_trip():
    rng = np.random.default_rng(7)
    x = np.linspace(-20, 20, 16001)
    h = x[1] - x[0]
    for _ in range(10):
        d = 1.0 + 0.5 * (1 + np.tanh(x)) * rng.uniform(0.5, 3.0)
        cmap = rescale_coordinates(x, d, 1.0)
        f = smooth_random(rng, x)
        mapped, bound = cmap.norm_bound(f, h)
        assert mapped <= bound * (1 + 1e-3)
        assert np.abs(cmap.inverse(cmap.forward(f)) - f).max() <= 1e-6


def test_coordinate_map_floor():
    x = np.linspace(0, 1, 11)
    with pytest.raises(ViscosityFloorViolated):
        rescale_coordinates(x, np.full(11, 0.5), 1.0)


def test_coordinate_map_identity_for_unit_viscosity():
    x = np.linspace(-5, 5, 101)
    cmap = rescale_coordinates(x, np.ones(101), 1.0)
    np.testing.assert_allclose(cmap.X, x, atol=1e-12)


@pytest.mark.parametrize("k, expected", [(1, (1, 4)), (2, (3, 6)), (3, (5, 10)), (4, (8, 10))])
def test_smoothing_exponents(k, expected):
    assert smoothing_exponents(k) == expected


def test_smoothing_exponents_range():
    with pytest.raises(ValueError):
        smoothing_exponents(5)


def test_smoothing_bound_decay():
    t = np.array([1.0, 4.0])
    b = smoothing_bound(2, 1.0, 0.1, t)
    assert b[0] / b[1] == pytest.approx(4.0)
    assert b[0] == pytest.approx(2.0**3 * 0.1)
