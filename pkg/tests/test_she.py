import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from polymerlab.dickman import g_theta_cumulative
from polymerlab.errors import DomainError
from polymerlab.kernels import GaussianBump, variance_limit
from polymerlab.lattice import EULER_GAMMA
from polymerlab.she import (
    Mollifier,
    beta_eps_squared,
    bertini_cancrini_parameter,
    bump_mollifier,
    continuum_window,
    disk_mollifier,
    heat_product_identity,
    log_potential,
    mollifier_by_name,
    overlap_integral,
    overlap_integral_asymptotic,
    overlap_r,
    overlap_r_mc,
    she_continuum_renewal,
    she_variance_energy,
    she_variance_limit,
    theta_effective,
    truncated_gaussian_mollifier,
)


@pytest.fixture(scope="module")
def disk():
    return disk_mollifier(0.5)


@pytest.fixture(scope="module")
def generic_disk():
    # same density without the closed forms, so transforms go through Hankel integrals
    return Mollifier(lambda r: np.ones_like(np.asarray(r, dtype=float)), 0.5, "disk-hankel")


def test_mass_and_transform_at_zero(disk, generic_disk):
    for m in (disk, bump_mollifier(), truncated_gaussian_mollifier()):
        assert m.J_mass() == pytest.approx(1.0, abs=1e-9)
    # the Hankel route converges slowly for a profile with a jump
    assert generic_disk.J_mass() == pytest.approx(1.0, abs=1e-6)
    for m in (disk, generic_disk, bump_mollifier(), truncated_gaussian_mollifier()):
        assert float(np.atleast_1d(m.j_hat(0.0))[0]) == pytest.approx(1.0, abs=1e-12)


def test_closed_forms_match_hankel(disk, generic_disk):
    k = np.linspace(0.0, 40.0, 30)
    assert np.allclose(disk.j_hat(k), generic_disk.j_hat(k), atol=1e-12)
    r = np.linspace(0.01, 0.99, 25)
    assert np.max(np.abs(disk.J(r) - generic_disk.J(r))) < 1e-4 * np.max(disk.J(r))


def test_overlap_positive(disk):
    t = np.geomspace(1e-3, 1e4, 30)
    vals = overlap_r(disk, t)
    assert np.all(vals > 0)
    assert np.all(np.diff(vals) < 0)


def test_overlap_large_time(disk):
    # r(t) behaves like g_{2t}(0) = 1 / (4 pi t)
    dev = [abs(4 * math.pi * t * overlap_r(disk, t) - 1) for t in (10.0, 100.0, 1000.0)]
    assert dev[-1] < 1e-3
    assert dev[0] > dev[1] > dev[2]


def test_overlap_monte_carlo(disk):
    est, err = overlap_r_mc(disk, 1.0, samples=400_000, seed=1)
    assert abs(est - overlap_r(disk, 1.0)) <= 4 * err


def test_overlap_integral_routes(disk):
    ref = quad(lambda s: overlap_r(disk, s), 0, 5.0, limit=200, points=[0.01, 0.1, 1.0])[0]
    assert overlap_integral(disk, 5.0) == pytest.approx(ref, rel=1e-7)


def test_overlap_integral_asymptotic(disk):
    T = 1e8
    assert overlap_integral(disk, T) == pytest.approx(overlap_integral_asymptotic(disk, T), abs=1e-7)


def test_overlap_domain(disk):
    with pytest.raises(DomainError):
        overlap_r(disk, 0.0)
    with pytest.raises(DomainError):
        overlap_integral(disk, -1.0)


@pytest.mark.parametrize("make", [disk_mollifier, bump_mollifier, truncated_gaussian_mollifier])
def test_log_potential_routes(make):
    m = make()
    assert log_potential(m, "real") == pytest.approx(log_potential(m, "fourier"), abs=1e-7)


def test_log_potential_positive_for_small_support(disk):
    assert log_potential(disk) > 0


def test_log_potential_unknown_route(disk):
    with pytest.raises(DomainError):
        log_potential(disk, "nope")


def test_log_potential_scaling():
    # shrinking the mollifier by a factor c adds log(1/c)
    a, b = log_potential(disk_mollifier(0.5)), log_potential(disk_mollifier(0.25))
    assert b - a == pytest.approx(math.log(2.0), abs=1e-7)


@given(st.floats(-5.0, 5.0))
def test_theta_linear_in_rho(rho):
    m = disk_mollifier(0.5)
    assert theta_effective(m, rho) - theta_effective(m, 0.0) == pytest.approx(rho / math.pi, abs=1e-12)


def test_theta_formula(disk):
    expected = math.log(4) + 2 * log_potential(disk) - EULER_GAMMA
    assert theta_effective(disk) == pytest.approx(expected, rel=1e-14)


def test_beta_eps():
    L = math.log(1e3)
    assert beta_eps_squared(1e-3, 2.0) == pytest.approx(2 * math.pi / L + 2.0 / L**2, rel=1e-14)
    with pytest.raises(DomainError):
        beta_eps_squared(1.5)
    with pytest.raises(DomainError):
        beta_eps_squared(0.5, rho=-100.0)


def test_bertini_cancrini():
    assert bertini_cancrini_parameter(0.0) == pytest.approx(math.exp(-EULER_GAMMA), rel=1e-15)
    assert bertini_cancrini_parameter(1.3) == pytest.approx(math.exp(1.3 - EULER_GAMMA), rel=1e-15)


def test_window_gap_shrinks(disk):
    gaps = [abs(continuum_window(disk, eps, 0.0).gap) for eps in (1e-2, 1e-3, 1e-4, 1e-5)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    # beyond that the gap sits at the rounding floor of the quadrature
    assert abs(continuum_window(disk, 1e-8, 0.0).gap) < 1e-10


def test_window_gap_with_rho(disk):
    w = continuum_window(disk, 1e-8, 3.0)
    assert abs(w.gap) / abs(w.theta_eff) < 0.1


def test_heat_product_identity_point():
    lhs, rhs = heat_product_identity(0.7, np.array([1.0, 2.0]), np.array([-0.3, 0.4]))
    assert float(lhs) == pytest.approx(float(rhs), rel=1e-13)


@given(st.floats(0.01, 10.0), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_heat_product_identity(t, a, b, c, d):
    lhs, rhs = heat_product_identity(t, np.array([a, b]), np.array([c, d]))
    assert float(lhs) == pytest.approx(float(rhs), rel=1e-11, abs=1e-300)


def test_she_variance_routes(disk):
    phi = GaussianBump(0.5)
    th = theta_effective(disk)
    scaled = GaussianBump(0.5 / math.sqrt(2))
    energy = she_variance_limit(disk, 0.0, 1.0, phi, "energy")
    kernel = she_variance_limit(disk, 0.0, 1.0, phi, "kernel")
    assert energy.value == pytest.approx(8 * variance_limit(1.0, th, scaled).value, rel=1e-14)
    assert energy.value == pytest.approx(kernel.value, rel=1e-5)
    assert energy.value == pytest.approx(she_variance_energy(1.0, th, phi), rel=1e-6)
    assert energy.bertini_cancrini == pytest.approx(bertini_cancrini_parameter(th), rel=1e-15)


def test_she_variance_zero():
    assert she_variance_limit(disk_mollifier(), 0.0, 1.0, GaussianBump(0.5, 0.0)).value == 0.0


def test_mollifier_lookup():
    assert mollifier_by_name("disk").name == "disk"
    with pytest.raises(DomainError):
        mollifier_by_name("square")


def test_renewal_limit_right_side(disk):
    res = she_continuum_renewal(disk, 1e-3, 0.0, T=1.0, samples=2_000, seed=0)
    assert res.rhs == pytest.approx(float(g_theta_cumulative(0.0, 1.0)), rel=1e-15)
    assert res.large_deviation["empirical"] <= res.large_deviation["bound"]


@pytest.mark.slow
def test_renewal_limit_gap_shrinks(disk):
    gaps = []
    for eps in (1e-2, 1e-4, 1e-8):
        res = she_continuum_renewal(disk, eps, 0.0, T=1.0, samples=40_000, seed=3)
        gaps.append((res.gap, res.lhs_error))
    assert gaps[-1][0] < gaps[0][0]
    assert gaps[-1][0] / gaps[-1][1] < gaps[0][0] / gaps[0][1]
