import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from polymerlab.dickman import g_theta_cumulative
from polymerlab.errors import DomainError, SingularPointError
from polymerlab.kernels import (
    GaussianBump,
    RadialTestFunction,
    k_kernel,
    k_kernel_radial,
    m_t_series,
    script_i_m,
    smooth_bump,
    variance_limit,
    zero_function,
)


def _kernel_quad(t, theta, r):
    """``pi int_0^t g_u(r) H_theta(t - u) du`` by adaptive quadrature."""
    f = lambda u: math.exp(-r * r / (2 * u)) / (2 * u) * float(g_theta_cumulative(theta, t - u))
    return quad(f, 0, t, points=[r * r / 2, t / 2], limit=400, epsabs=1e-13)[0]


@pytest.mark.parametrize("t,theta,r", [(1.0, 0.0, 0.3), (0.5, 0.3, 0.2236), (0.2, -1.0, 1.0), (1.0, 2.0, 0.05)])
def test_kernel_against_adaptive_quadrature(t, theta, r):
    assert k_kernel(t, theta, r) == pytest.approx(_kernel_quad(t, theta, r), rel=1e-7)


def test_kernel_scaling_point():
    x = np.array([0.2, -0.1])
    t, theta = 0.5, 0.3
    assert k_kernel(t, theta, x) == pytest.approx(k_kernel(1.0, theta + math.log(t), x / math.sqrt(t)), abs=1e-10)


@given(st.floats(0.05, 1.0), st.floats(-2.0, 2.0), st.floats(0.01, 3.0))
def test_kernel_scaling_property(t, theta, r):
    x = np.array([r, 0.0])
    assert k_kernel(t, theta, x) == pytest.approx(k_kernel(1.0, theta + math.log(t), x / math.sqrt(t)), abs=1e-9)


def test_kernel_radial_symmetry():
    pts = np.array([[0.3, 0.4], [0.5, 0.0], [0.0, -0.5], [-0.4, 0.3]])
    vals = k_kernel(1.0, 0.0, pts)
    assert np.ptp(vals) < 1e-12
    assert vals[0] == pytest.approx(float(k_kernel_radial(1.0, 0.0, 0.5)[0]), rel=1e-14)


def test_kernel_log_divergence_slope():
    # near the origin K_t(x) = H_theta(t) log(1/|x|) + O(1)
    k1, k2 = k_kernel(1.0, 0.0, 1e-4), k_kernel(1.0, 0.0, 1e-6)
    slope = (k2 - k1) / math.log(100.0)
    assert slope == pytest.approx(float(g_theta_cumulative(0.0, 1.0)), rel=1e-6)


def test_kernel_singular_at_origin():
    with pytest.raises(SingularPointError):
        k_kernel(1.0, 0.0, np.array([0.0, 0.0]))
    with pytest.raises(DomainError):
        k_kernel(0.0, 0.0, 0.5)


def test_kernel_increasing_in_theta():
    vals = [k_kernel(1.0, th, 0.4) for th in (-2.0, -1.0, 0.0, 1.0, 2.0)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_kernel_decreasing_in_radius():
    r = np.linspace(0.05, 3.0, 40)
    assert np.all(np.diff(k_kernel_radial(1.0, 0.0, r)) < 0)


def test_kernel_error_estimate():
    val, err = k_kernel(1.0, 0.0, 0.3, with_error=True)
    assert err < 1e-10 * val


@pytest.mark.parametrize("u", [0.0, 0.1, 1.0])
def test_generic_transform_matches_gaussian_closed_form(u):
    g = GaussianBump(0.5)
    generic = RadialTestFunction(g.profile, g.support)
    assert float(generic.energy(u)[0]) == pytest.approx(float(g.energy(u)[0]), rel=1e-10)
    assert generic.integral() == pytest.approx(g.integral(), rel=1e-12)
    assert float(generic.autocorrelation(0.3)[0]) == pytest.approx(float(g.autocorrelation(0.3)[0]), rel=1e-9)


@pytest.mark.parametrize("t,theta", [(1.0, 0.0), (0.5, -1.0), (2.0, 0.5)])
def test_variance_routes_agree(t, theta):
    phi = GaussianBump(0.5)
    a = variance_limit(t, theta, phi, "energy").value
    b = variance_limit(t, theta, phi, "kernel").value
    assert a == pytest.approx(b, rel=1e-5)


def test_variance_routes_agree_for_bump():
    phi = smooth_bump(1.0)
    a = variance_limit(1.0, 0.0, phi, "energy").value
    b = variance_limit(1.0, 0.0, phi, "kernel").value
    assert a == pytest.approx(b, rel=1e-5)


def test_variance_of_zero_function():
    assert variance_limit(1.0, 0.0, zero_function(), "energy").value == 0.0
    assert script_i_m(2, 1.0, 0.0, zero_function(), samples=100).value == 0.0


def test_variance_unknown_route():
    with pytest.raises(DomainError):
        variance_limit(1.0, 0.0, GaussianBump(), "nope")


def test_variance_quadratic_in_amplitude():
    a = variance_limit(1.0, 0.0, GaussianBump(0.5, 1.0)).value
    b = variance_limit(1.0, 0.0, GaussianBump(0.5, 3.0)).value
    assert b == pytest.approx(9 * a, rel=1e-12)


def test_constant_terminal_function():
    phi = GaussianBump(0.5)
    ones = lambda x: np.ones(np.shape(x)[:-1])
    a = script_i_m(3, 1.0, 0.0, phi, None, 100_000, 4)
    b = script_i_m(3, 1.0, 0.0, phi, ones, 100_000, 4)
    assert abs(a.value - b.value) <= 4 * math.hypot(a.error, b.error)


def test_third_integral_domain():
    with pytest.raises(DomainError):
        script_i_m(6, 1.0, 0.0, GaussianBump())
    with pytest.raises(DomainError):
        script_i_m(2, 1.5, 0.0, GaussianBump())


def test_series_partial_sums_and_envelope():
    rep = m_t_series(1.0, 0.0, GaussianBump(0.5), m_max=5, samples=100_000, seed=2)
    sums = [rep.partial_sums[m] for m in range(2, 6)]
    assert all(b > a for a, b in zip(sums, sums[1:]))
    for m in range(2, 6):
        assert math.log(rep.terms[m] + 3 * rep.errors[m]) <= rep.envelope_log[m]
