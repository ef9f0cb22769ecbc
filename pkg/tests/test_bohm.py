import math

import numpy as np
import pytest
from scipy import integrate, stats
from hypothesis import given
from hypothesis import strategies as st

from nonlocality_lab.bohm import (
    ContextualityParams, GaussianPacketModel, Trajectory, analytic_single_packet,
    asymptotic_momentum, density_cdf, entangled_density, equivariance_test, experiment1,
    experiment2, integrate_pair_direct, integrate_trajectory, median_point, no_crossing_check,
    sample_entangled_pairs, velocity_field, wz_inverse, wz_transform,
)
from nonlocality_lab.errors import DegenerateInitial, HorizonTooShort, NearNode


def free_packet(x, t, k):
    """Straight transcription of the boosted spreading Gaussian, no log-space tricks."""
    s = 1 + 1j * t
    return (s ** -0.5 * math.pi ** -0.25
            * np.exp(1j * k * x - 1j * k * k * t / 2 - (x - k * t) ** 2 / (2 * s)))


@pytest.mark.parametrize("k", [0.0, 1.5, -3.0])
def test_packet_at_time_zero(k):
    x = np.linspace(-4, 4, 101)
    model = GaussianPacketModel(np.array([k]), np.array([0.7 - 0.2j]))
    expected = (0.7 - 0.2j) * math.pi ** -0.25 * np.exp(-x**2 / 2) * np.exp(1j * k * x)
    assert np.max(np.abs(model.psi(x, 0.0) - expected)) < 1e-12


@pytest.mark.parametrize("k", [0.0, 2.0, -1.0])
def test_packet_solves_free_schroedinger(k):
    x = np.linspace(-3, 3, 61)
    t, h = 0.7, 1e-4
    model = GaussianPacketModel(np.array([k]), np.array([1.0]))
    psi = lambda xx, tt: model.psi(xx, tt)  # noqa: E731
    dt = (psi(x, t + h) - psi(x, t - h)) / (2 * h)
    dxx = (psi(x + h, t) - 2 * psi(x, t) + psi(x - h, t)) / h**2
    assert np.max(np.abs(1j * dt + 0.5 * dxx)) < 1e-5


def test_log_space_evaluation_matches_direct_formula():
    model = GaussianPacketModel(np.array([3.0, -3.0]), np.array([1.0, 0.5j]))
    x = np.linspace(-10, 10, 41)
    direct = free_packet(x, 2.0, 3.0) + 0.5j * free_packet(x, 2.0, -3.0)
    assert np.allclose(model.psi(x, 2.0), direct, rtol=1e-12, atol=1e-300)


def test_far_tail_velocity_is_finite():
    # |Psi| underflows here in linear space but the log-space velocity is still exact
    v = velocity_field(GaussianPacketModel.single(), 60.0, 1.0)
    assert v == pytest.approx(60.0 * 1 / 2)


@pytest.mark.parametrize("x,t,expected", [(1.0, 1.0, 0.5), (3.0, 0.0, 0.0), (-2.0, 2.0, -0.8)])
def test_single_packet_velocity(x, t, expected):
    assert velocity_field(GaussianPacketModel.single(), x, t) == pytest.approx(expected, abs=1e-14)


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_boosted_packet_moves_with_its_boost_at_time_zero(x, k):
    assert velocity_field(GaussianPacketModel.single(k), x, 0.0) == pytest.approx(k, abs=1e-12)


def test_velocity_raises_at_node():
    model = GaussianPacketModel.symmetric(1.0)
    # cos(k x) vanishes at x = pi / 2
    with pytest.raises(NearNode):
        velocity_field(model, math.pi / 2, 0.0)


@given(st.floats(0.01, 5), st.floats(0, 10))
def test_symmetric_velocity_is_odd(w, t):
    model = GaussianPacketModel.symmetric(math.sqrt(2) * 10)
    try:
        v_plus, v_minus = velocity_field(model, w, t), velocity_field(model, -w, t)
    except NearNode:
        return
    assert abs(v_plus + v_minus) < 1e-10 * max(1.0, abs(v_plus))


def test_norm_squared_matches_quadrature():
    model = GaussianPacketModel(np.array([1.0, -0.5]), np.array([1.0, 2.0 - 1j]))
    x = np.linspace(-15, 15, 30001)
    numeric = integrate.trapezoid(np.abs(model.psi(x, 0.3)) ** 2, x)
    assert model.norm_squared() == pytest.approx(numeric, rel=1e-9)


@pytest.mark.parametrize("x0,t,expected", [
    (1.0, math.sqrt(3), 2.0),
    (-1.3, 10.0, -1.3 * math.sqrt(101)),
    (0.0, 5.0, 0.0),
])
def test_single_packet_trajectory(x0, t, expected):
    traj = integrate_trajectory(GaussianPacketModel.single(), x0, t, dt=1e-3)
    assert traj.final_position == pytest.approx(expected, rel=1e-6, abs=1e-12)
    assert np.all(np.diff(traj.times) > 0)
    assert traj.final_time == pytest.approx(t, abs=1e-12)


def test_trajectory_of_origin_never_moves():
    traj = integrate_trajectory(GaussianPacketModel.single(), 0.0, 10.0, dt=0.01)
    assert np.all(traj.positions == 0.0)


def test_asymptotic_momentum():
    traj = integrate_trajectory(GaussianPacketModel.single(), 1.0, 100.0, dt=0.01)
    assert asymptotic_momentum(traj) == pytest.approx(math.sqrt(1 + 1e4) / 100, abs=1e-6)
    short = integrate_trajectory(GaussianPacketModel.single(), 1.0, 2.0, dt=0.01)
    with pytest.raises(HorizonTooShort):
        asymptotic_momentum(short)


def test_boosted_asymptotic_momentum():
    x0, horizon = 0.8, 100.0
    traj = integrate_trajectory(GaussianPacketModel.single(5.0), x0, horizon, dt=0.01)
    # Galilean shift: X(t) = k t + x0 sqrt(1 + t^2)
    assert traj.final_position == pytest.approx(5 * horizon + x0 * math.sqrt(1 + horizon**2), rel=1e-8)
    # the estimate carries the resting packet's own momentum x0 sqrt(1 + T^2) / T on top of k
    expected = 5.0 + x0 * math.sqrt(1 + horizon**2) / horizon
    assert asymptotic_momentum(traj) == pytest.approx(expected, abs=1e-6)


def test_single_packet_density_cdf():
    cdf = density_cdf(GaussianPacketModel.single(), 3.0)
    assert cdf(0.0) == pytest.approx(0.5)
    assert cdf(math.sqrt(5)) == pytest.approx(0.8413447460685429, abs=1e-12)


def test_two_packet_cdf_by_quadrature_is_symmetric():
    cdf = density_cdf(GaussianPacketModel.symmetric(3.0), 0.5)
    assert cdf(0.0) == pytest.approx(0.5, abs=1e-9)
    assert cdf(-40) == pytest.approx(0.0, abs=1e-12) and cdf(40) == pytest.approx(1.0, abs=1e-12)


def test_equivariance_single_packet_variance():
    r = equivariance_test(GaussianPacketModel.single(), 3.0, trials=10_000, seed=1)
    sigma = 5.0 * math.sqrt(2 / (10_000 - 1))
    assert abs(r["variance"] - 5.0) < 3 * sigma
    assert r["ks_pvalue"] > 0.01


def test_equivariance_at_time_zero():
    assert equivariance_test(GaussianPacketModel.single(), 0.0, trials=2000, seed=3)["ks_pvalue"] > 0.01


@pytest.mark.slow
@pytest.mark.parametrize("t", [1.0, 3.0, 10.0])
def test_equivariance_two_packets(t):
    r = equivariance_test(GaussianPacketModel.symmetric(3.0), t, trials=10_000, seed=2)
    assert r["ks_pvalue"] > 0.01
    # lobes carry half the mass each
    assert abs(r["right_fraction"] - 0.5) < 3 * math.sqrt(0.25 / 10_000)


def test_two_packet_lobes_separate():
    k = math.sqrt(2) * 10
    r = equivariance_test(GaussianPacketModel.symmetric(k), 5.0, trials=2000, seed=4, dt=1e-3)
    assert abs(r["right_fraction"] - 0.5) < 3 * math.sqrt(0.25 / 2000)
    assert r["ks_pvalue"] > 0.01


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_wz_round_trip(x, y):
    w, z = wz_transform(x, y)
    bx, by = wz_inverse(w, z)
    assert abs(bx - x) <= 1e-15 * max(1.0, abs(x), abs(y)) * 4
    assert abs(by - y) <= 1e-15 * max(1.0, abs(x), abs(y)) * 4


@pytest.mark.parametrize("xy,wz", [((1, 1), (math.sqrt(2), 0)), ((1, -1), (0, math.sqrt(2)))])
def test_wz_examples(xy, wz):
    assert np.allclose(wz_transform(*xy), wz, atol=1e-15)


def test_entangled_density_is_normalized():
    total, _ = integrate.dblquad(lambda y, x: entangled_density(x, y, 2.0), -8, 8, -8, 8,
                                 epsabs=1e-11)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_entangled_sampler_marginal():
    # the x-marginal of the k = 10 density is pi^-1/2 exp(-x^2) to within exp(-k^2)
    x, y = sample_entangled_pairs(10.0, 20_000, np.random.default_rng(5))
    assert stats.kstest(x, stats.norm(scale=math.sqrt(0.5)).cdf).pvalue > 0.01
    assert stats.kstest((x + y) / math.sqrt(2), stats.norm(scale=math.sqrt(0.5)).cdf).pvalue < 0.01


def test_sampler_fraction_in_quadrant_matches_quadrature():
    k = 1.0
    x, y = sample_entangled_pairs(k, 40_000, np.random.default_rng(6))
    p, _ = integrate.dblquad(lambda yy, xx: entangled_density(xx, yy, k), 0, 8, 0, 8)
    frac = np.mean((x > 0) & (y > 0))
    assert abs(frac - p) < 4 * math.sqrt(p * (1 - p) / 40_000)


PARAMS = ContextualityParams(k=10.0, horizon=50.0, dt=1e-3)


def test_contextuality_params_validation():
    with pytest.raises(ValueError):
        ContextualityParams(k=10.0, dt=0.01)
    with pytest.raises(ValueError):
        ContextualityParams(k=-1.0)
    with pytest.raises(ValueError):
        ContextualityParams(horizon=2.0)


def test_experiment1_examples():
    r = experiment1(PARAMS, 1.0, 2.0)
    assert 9.0 <= r <= 11.0
    assert experiment1(PARAMS, -2.0, 1.0) < 0


def test_experiment2_examples():
    r = experiment2(PARAMS, 1.0, -2.0)
    assert 9.0 <= r <= 11.0
    assert experiment2(PARAMS, -1.0, -2.0) < 0


def test_contextuality_witness():
    assert experiment1(PARAMS, -1.0, 2.0) > 0
    assert experiment2(PARAMS, -1.0, 2.0) < 0


def test_degenerate_initial_conditions():
    with pytest.raises(DegenerateInitial):
        experiment1(PARAMS, 1.0, -1.0)
    with pytest.raises(DegenerateInitial):
        experiment2(PARAMS, 0.0, 0.3)


def test_median_point_stays_inside_band():
    k = 10.0
    ys = np.linspace(-2, 2, 41)
    xm = median_point(GaussianPacketModel.collapsed(k, ys))
    assert np.max(np.abs(xm)) < math.pi / (2 * k)


def test_no_crossing_in_w_model():
    x0 = np.random.default_rng(8).normal(0, math.sqrt(0.5), 60)
    r = no_crossing_check(GaussianPacketModel.symmetric(math.sqrt(2) * 10), x0, 5.0, 1e-3)
    assert r["crossed_pairs"] == 0 and r["order_violations"] == 0


def test_factorized_and_direct_integration_agree():
    k, t_end, dt = 2.0, 10.0, 1e-3
    x0, y0 = np.array([0.3, -0.7, 1.1]), np.array([0.4, 0.2, -0.9])
    direct = integrate_pair_direct(k, x0, y0, t_end, dt, tol=1e-9)
    w0, z0 = wz_transform(x0, y0)
    w = integrate_trajectory(GaussianPacketModel.symmetric(math.sqrt(2) * k), w0, t_end, dt, tol=1e-9)
    z = integrate_trajectory(GaussianPacketModel.single(), z0, t_end, dt, tol=1e-9)
    x, y = wz_inverse(w.positions, z.positions)
    assert np.max(np.abs(direct.positions[..., 0] - x)) < 1e-5
    assert np.max(np.abs(direct.positions[..., 1] - y)) < 1e-5


def test_trajectory_analytic_helper():
    assert analytic_single_packet(2.0, math.sqrt(3)) == pytest.approx(4.0)


def test_trajectory_record_false_keeps_endpoints():
    traj = integrate_trajectory(GaussianPacketModel.single(), np.array([1.0, 2.0]), 1.0, 0.01,
                                record=False)
    assert isinstance(traj, Trajectory)
    assert traj.positions.shape == (2, 2)
    assert np.allclose(traj.final_position, np.array([1.0, 2.0]) * math.sqrt(2), rtol=1e-9)
