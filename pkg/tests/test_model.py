import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from cdfdrift import (
    DeltaAtZero,
    GaussianPdf,
    GridSpec,
    ModelError,
    OneWayMutation,
    PureDrift,
    Selection,
    TimeSpec,
    TwoWayMutation,
    UniformPdf,
    build_initial_cdf,
    eval_diffusion,
    eval_drift,
    steady_state_two_way,
    theta,
)
from cdfdrift.model import beta_normaliser, steady_cdf_two_way, theta_profile


def beta_integral_by_substitution(g, m):
    """B(g, m) with x = t^(1/g) near 0 and 1 - x = s^(1/m) near 1, which
    removes both endpoint singularities before adaptive quadrature."""
    left = integrate.quad(lambda t: (1 - t ** (1 / g)) ** (m - 1) / g, 0, 0.5**g, epsabs=1e-13, epsrel=1e-13)[0]
    right = integrate.quad(lambda s: (1 - s ** (1 / m)) ** (g - 1) / m, 0, 0.5**m, epsabs=1e-13, epsrel=1e-13)[0]
    return left + right


def test_pure_drift_has_no_drift():
    assert eval_drift(PureDrift(), 0.37) == 0


def test_selection_vanishes_at_balance_point():
    assert eval_drift(Selection(-4, 2), 0.5) == 0


def test_two_way_endpoint_values():
    m = TwoWayMutation(0.4, 0.2)
    assert eval_drift(m, 0.0) == pytest.approx(0.4, abs=0)
    assert eval_drift(m, 1.0) == pytest.approx(-0.2, abs=0)


def test_drift_is_vectorised():
    x = np.linspace(0, 1, 11)
    np.testing.assert_allclose(eval_drift(OneWayMutation(0.2), x), 0.2 * (1 - x))


@pytest.mark.parametrize("x, a", [(0.0, 0.0), (1.0, 0.0), (0.5, 0.25), (0.25, 0.1875)])
def test_diffusion_examples(x, a):
    assert eval_diffusion(x) == a


@given(st.floats(0, 1))
def test_diffusion_positive_inside(x):
    a = eval_diffusion(x)
    if x in (0.0, 1.0):
        assert a == 0
    else:
        assert a > 0


@pytest.mark.parametrize("kw", [{"gamma": 0.0}, {"gamma": -1.0}])
def test_one_way_rejects_nonpositive_rate(kw):
    with pytest.raises(ModelError):
        OneWayMutation(**kw)


@pytest.mark.parametrize("g, m", [(0.0, 0.2), (1.0, 0.2), (0.4, 1.0), (0.4, -0.1)])
def test_two_way_rates_must_lie_in_unit_interval(g, m):
    with pytest.raises(ModelError):
        TwoWayMutation(g, m)


def test_grid_endpoints_exact():
    for K in (4, 7, 100, 3200):
        g = GridSpec(K)
        assert g.x[0] == 0.0 and g.x[-1] == 1.0
        assert abs(g.h * K - 1) < 1e-15


def test_grid_too_small():
    with pytest.raises(ModelError):
        GridSpec(3)


def test_timespec_step_count():
    t = TimeSpec(1e-4, 36)
    assert t.N == 360000
    assert abs(t.N * t.tau - 36) <= 36e-9


def test_timespec_rejects_incommensurate_horizon():
    with pytest.raises(ModelError):
        TimeSpec(0.3, 1.0)


def test_theta_pure_drift_is_identity():
    assert theta(PureDrift(), 0.7) == 0.7


@pytest.mark.parametrize("model", [Selection(-4, 2), Selection(3, -1), Selection(0.5, 0.5)])
def test_theta_boundary_values(model):
    assert theta(model, 0.0) == 0.0
    assert theta(model, 1.0) == pytest.approx(1.0, abs=1e-15)


def test_theta_matches_simpson_oracle():
    def w(s):
        return np.exp(2 * s * s - 2 * s)

    def simpson(a, b, n=1_000_000):
        s = np.linspace(a, b, n + 1)
        return integrate.simpson(w(s), x=s)

    oracle = simpson(0, 0.5) / simpson(0, 1)
    assert abs(theta(Selection(-4, 2), 0.5) - oracle) < 1e-8


def test_theta_of_mutation_model_is_an_error():
    with pytest.raises(ModelError):
        theta(TwoWayMutation(0.4, 0.2), 0.5)
    with pytest.raises(ModelError):
        theta(OneWayMutation(0.2), 0.5)


def test_theta_needs_enough_points():
    with pytest.raises(ModelError):
        theta(Selection(-4, 2), 0.5, quad_points=50)


@pytest.mark.parametrize("model", [PureDrift(), Selection(-4, 2)])
def test_theta_nondecreasing(model):
    xs = np.linspace(0, 1, 1000)
    vals = [theta(model, x, quad_points=2000) for x in xs]
    assert np.all(np.diff(vals) >= 0)


def test_theta_profile_agrees_with_pointwise():
    m = Selection(-4, 2)
    s, th = theta_profile(m, 1000)
    assert th[500] == pytest.approx(theta(m, 0.5, 1000), abs=1e-6)
    assert th[0] == 0 and th[-1] == 1


def test_arcsine_steady_state():
    assert steady_state_two_way(TwoWayMutation(0.5, 0.5), 0.5) == pytest.approx(2 / math.pi, rel=1e-14)


def test_beta_constant_against_quadrature():
    m = TwoWayMutation(0.4, 0.2)
    B = beta_integral_by_substitution(0.4, 0.2)
    assert beta_normaliser(m) == pytest.approx(1 / B, rel=1e-10)
    expected = 0.5**-0.6 * 0.5**-0.8 / B
    assert steady_state_two_way(m, 0.5) == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("g, m", [(0.4, 0.2), (0.5, 0.5), (0.7, 0.3)])
def test_steady_state_normalised(g, m):
    def half(model, p):
        # mass on (0, 1/2] with t = x^p; the cut at 1e-12 drops O(1e-12)
        f = lambda t: steady_state_two_way(model, t ** (1 / p)) * t ** (1 / p - 1) / p
        return integrate.quad(f, 1e-12, 0.5**p, limit=200)[0]

    # f(x; g, m) = f(1 - x; m, g), so the right half is a left half too
    left = half(TwoWayMutation(g, m), g)
    right = half(TwoWayMutation(m, g), m)
    assert left + right == pytest.approx(1.0, abs=1e-4)


def test_steady_cdf_is_integral_of_density():
    model = TwoWayMutation(0.4, 0.2)
    g = 0.4
    part = integrate.quad(lambda t: steady_state_two_way(model, t ** (1 / g)) * t ** (1 / g - 1) / g, 0, 0.3**g)[0]
    assert steady_cdf_two_way(model, 0.3) == pytest.approx(part, rel=1e-9)


@pytest.mark.parametrize("x", [0.0, 1.0])
def test_steady_state_pole_is_an_error(x):
    with pytest.raises(ModelError):
        steady_state_two_way(TwoWayMutation(0.4, 0.2), x)


def test_uniform_initial_cdf():
    np.testing.assert_array_equal(build_initial_cdf(UniformPdf(), GridSpec(4)).F, [0, 0.25, 0.5, 0.75, 1])


def test_delta_initial_cdf():
    np.testing.assert_array_equal(build_initial_cdf(DeltaAtZero(), GridSpec(4)).F, [0, 1, 1, 1, 1])


def test_gaussian_node_sampling_has_median_at_mean():
    F = build_initial_cdf(GaussianPdf(0.7, 0.01, "node"), GridSpec(100)).F
    assert F[70] == 0.5


def test_gaussian_cell_sampling_is_shifted_half_a_cell():
    g = GridSpec(100)
    cell = build_initial_cdf(GaussianPdf(0.7, 0.01), g).F
    node = build_initial_cdf(GaussianPdf(0.7, 0.01, "node"), GridSpec(200)).F
    # F_i(cell, h) = Phi(x_i + h/2), which is the node CDF on the half-step grid
    np.testing.assert_allclose(cell[1:-1], node[3:-1:2], rtol=0, atol=1e-15)


def test_gaussian_cell_sampling_places_mass_one_minus_mean_below():
    # h * sum F_1..F_{K-1} equals the integral of F, i.e. 1 - x0
    for K in (100, 200, 800):
        F = build_initial_cdf(GaussianPdf(0.7, 0.01), GridSpec(K)).F
        assert F[1:-1].sum() / K == pytest.approx(0.3, abs=1e-12)


def test_gaussian_parameters_validated():
    with pytest.raises(ModelError):
        GaussianPdf(1.2, 0.01)
    with pytest.raises(ModelError):
        GaussianPdf(0.5, 0.0)
    with pytest.raises(ModelError):
        GaussianPdf(0.5, 0.1, "midpoint")


initial_conditions = st.one_of(
    st.builds(GaussianPdf, st.floats(0.05, 0.95), st.floats(0.005, 0.5), st.sampled_from(["cell", "node"])),
    st.just(DeltaAtZero()),
    st.just(UniformPdf()),
)


@settings(max_examples=60, deadline=None)
@given(initial_conditions, st.integers(4, 400))
def test_initial_cdf_is_monotone_and_pinned(ic, K):
    F = build_initial_cdf(ic, GridSpec(K)).F
    assert F[0] == 0.0 and F[-1] == 1.0
    assert np.all(np.diff(F) >= 0)
