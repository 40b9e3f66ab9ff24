import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polymerlab.chaos import lattice_field, variance_exact
from polymerlab.disorder import CriticalWindow, gaussian, solve_beta
from polymerlab.errors import CapacityError
from polymerlab.kernels import GaussianBump, smooth_bump
from polymerlab.oracles import (
    averaged_field_mc,
    averaged_variance_dp,
    second_moment_dp,
    second_moment_enum,
    third_moment_dp,
    third_moment_enum,
)


def zero_window(N):
    return CriticalWindow(N, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0)


def test_no_disorder():
    assert second_moment_dp(zero_window(10), 10) == 1.0
    assert third_moment_dp(zero_window(10), 10) == 1.0


def test_two_steps_closed_form(window):
    # one interior time: Z_2 = 1 + eta with eta the mean of four independent xi
    w = window(2)
    assert second_moment_dp(w, 2) == pytest.approx(1 + w.sigma2 / 4, rel=1e-15)
    expected = 1 + 3 * w.sigma2 / 4 + w.xi3 / 16
    assert third_moment_dp(w, 2) == pytest.approx(expected, rel=1e-14)
    assert third_moment_enum(w.sigma2, w.xi3, 2) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(5.197376, rel=1e-6)


@pytest.mark.parametrize("N", [2, 3, 4, 5, 6])
def test_dp_against_enumeration(window, N):
    w = window(N)
    assert second_moment_dp(w, N) == pytest.approx(second_moment_enum(w.sigma2, N), abs=1e-12)
    assert third_moment_dp(w, N) == pytest.approx(third_moment_enum(w.sigma2, w.xi3, N), abs=1e-12)


@given(st.floats(0.0, 3.0), st.floats(-2.0, 10.0), st.integers(2, 5))
def test_dp_against_enumeration_any_parameters(s2, x3, N):
    assert third_moment_dp((s2, x3), N) == pytest.approx(third_moment_enum(s2, x3, N), rel=1e-12, abs=1e-12)


def test_capacity_limits():
    with pytest.raises(CapacityError):
        second_moment_enum(1.0, 7)


@pytest.mark.parametrize("N", [6, 12, 48])
@pytest.mark.parametrize("phi", [GaussianBump(0.5), smooth_bump(1.0)], ids=["gauss", "bump"])
def test_averaged_variance_routes(window, N, phi):
    w = window(N)
    assert averaged_variance_dp(w, N, phi) == pytest.approx(variance_exact(w, N, 1.0, phi), rel=1e-12)


def test_point_mass_reduces_to_point_to_plane(window):
    N = 20
    w = window(N)
    assert variance_exact(w, N, 1.0, None) == pytest.approx(second_moment_dp(w, N) - 1, rel=1e-12)


def test_field_mean_is_lattice_sum(window):
    N = 8
    phi = GaussianBump(0.5)
    out = averaged_field_mc(window(N), gaussian(), N, phi, None, 2000, 4)
    exact = lattice_field(phi, N).total / N
    assert abs(out["mean"] - exact) <= 4 * out["mean_err"]


def test_field_without_disorder_is_deterministic():
    N = 8
    out = averaged_field_mc(zero_window(N), gaussian(), N, GaussianBump(0.5), None, 100, 1)
    assert out["var"] == pytest.approx(0.0, abs=1e-24)


@pytest.mark.slow
def test_field_variance_against_exact(window):
    N = 8
    w = window(N)
    phi = GaussianBump(0.5)
    out = averaged_field_mc(w, gaussian(), N, phi, None, 20_000, 9)
    assert abs(out["var"] - variance_exact(w, N, 1.0, phi)) <= 4 * out["var_err"]


def test_field_mc_reproducible(window):
    a = averaged_field_mc(window(6), gaussian(), 6, GaussianBump(0.5), None, 100, 3)
    b = averaged_field_mc(window(6), gaussian(), 6, GaussianBump(0.5), None, 100, 3)
    assert a["var"] == b["var"] and a["mean"] == b["mean"]
