import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polymerlab.chaos import (
    StretchChain,
    count_label_sequences,
    i2_exact,
    lattice_field,
    pair_weights,
    stretch_term_mc,
    stretch_third_moment_nt,
    stretch_weight,
    third_moment_chaos,
    triple_resummation,
    variance_exact,
)
from polymerlab.disorder import CriticalWindow, gaussian, solve_beta
from polymerlab.errors import CapacityError, DomainError, PrecisionWarning
from polymerlab.kernels import GaussianBump, script_i_m, zero_function
from polymerlab.oracles import second_moment_dp, third_moment_dp
from polymerlab.renewal import RenewalBridgeSampler, solve_renewal_spacetime


@pytest.mark.parametrize("k", [2, 3, 4, 5, 6, 7])
def test_label_sequences(k):
    # k labels with m runs: choose the m - 1 run boundaries, then 3 * 2^(m-1) run labels
    counts = count_label_sequences(k)
    for m, c in counts.items():
        assert c == stretch_weight(m) * math.comb(k - 1, m - 1)
    assert 1 not in counts


def test_stretch_weight():
    assert [stretch_weight(m) for m in (1, 2, 3, 4)] == [3, 6, 12, 24]


@given(st.integers(3, 10), st.sampled_from([-1.0, 0.0, 0.5]))
def test_chaos_matches_dp(N, theta):
    w = solve_beta(gaussian(), N, theta)
    centered = third_moment_dp(w, N) - 3 * second_moment_dp(w, N) + 2
    assert third_moment_chaos(w, N).centered == pytest.approx(centered, abs=1e-9, rel=1e-12)


def test_chain_capacity(window):
    with pytest.raises(CapacityError):
        StretchChain(window(40), 40)


@pytest.mark.parametrize("N,expected", [(6, 0.99149), (10, 1.79033), (12, 2.11960)])
def test_exact_i2_against_chain(window, N, expected):
    w = window(N, 0.3)
    chain = StretchChain(w, N).run(m_max=2, pp=False)
    value = i2_exact(w, N, 1.0, None)
    assert value == pytest.approx(chain.stretch_sum(2), rel=1e-13)
    assert value == pytest.approx(expected, abs=1e-5)


def test_mc_against_chain():
    N = 12
    w = solve_beta(gaussian(), N, 0.3)
    chain = StretchChain(w, N).run(pp=False)
    sampler = RenewalBridgeSampler(w, N - 1)
    for m in (2, 3, 4, 5):
        est, err = stretch_term_mc(w, N, 1.0, m, None, None, 200_000, m, sampler)
        assert abs(est - chain.stretch_sum(m)) <= 4 * err


def test_mc_against_exact_i2_with_test_function(window):
    N = 64
    w = window(N)
    phi = GaussianBump(0.5)
    est, err = stretch_term_mc(w, N, 1.0, 2, phi, None, 200_000, 1)
    assert abs(est - i2_exact(w, N, 1.0, phi)) <= 4 * err


def test_series_report(window):
    N = 32
    w = window(N)
    s = stretch_third_moment_nt(w, N, 1.0, GaussianBump(0.5), None, 4, 50_000, 3)
    assert s.methods[2] == "exact" and s.methods[3] == "mc"
    weighted = sum(stretch_weight(m) * v for m, v in s.terms.items())
    assert s.partial_sum == pytest.approx(weighted, rel=1e-12)
    assert all(v > 0 for v in s.terms.values())


def test_series_precision_warning(window):
    with pytest.warns(PrecisionWarning):
        stretch_third_moment_nt(window(32), 32, 1.0, GaussianBump(0.5), None, 3, 2_000, 0, rtol=1e-6)


def test_series_reproducible(window):
    a = stretch_third_moment_nt(window(32), 32, 1.0, GaussianBump(0.5), None, 3, 5_000, 8)
    b = stretch_third_moment_nt(window(32), 32, 1.0, GaussianBump(0.5), None, 3, 5_000, 8)
    assert a.terms == b.terms


def test_zero_test_function(window):
    assert variance_exact(window(16), 16, 1.0, zero_function()) == 0.0


def test_horizon_must_be_integer(window):
    with pytest.raises(DomainError):
        variance_exact(window(16), 16, 0.3, GaussianBump(0.5))


def test_point_mass_field():
    f = lattice_field(None, 9)
    assert f.total == 9.0 and f.radius == 0


@pytest.mark.parametrize("N", [6, 12])
def test_triple_parameter_exact_at_small_n(window, N):
    # below every truncation budget rho is the plain sum of pair weights over a <= N
    w = window(N)
    res = StretchChain(w, N).run()
    spacetime = solve_renewal_spacetime(w, None, N, budget=N)
    weights = pair_weights(w, res, spacetime, N)
    tri = triple_resummation(w, N)
    assert tri.rho == pytest.approx(abs(w.xi3) * weights[1:].sum(), rel=1e-12)
    if N == 12:
        assert tri.rho == pytest.approx(6.16991205213, abs=1e-9)


def test_triple_parameter_without_disorder():
    w = CriticalWindow(64, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0)
    res = triple_resummation(w, 64)
    assert res.rho == 0.0 and res.geometric_ok


@pytest.mark.slow
def test_lattice_parity_factor():
    # discrete stretch terms approach 2^(m-2) pi^m times the continuum integral
    N = 4096
    w = solve_beta(gaussian(), N, 0.0)
    phi = GaussianBump(0.5)
    sampler = RenewalBridgeSampler(w, N - 1)
    for m, factor in ((2, 1.0), (3, 2.0)):
        disc, de = stretch_term_mc(w, N, 1.0, m, phi, None, 400_000, 20 + m, sampler)
        cont = script_i_m(m, 1.0, 0.0, phi, None, 400_000, 30 + m)
        ratio = disc / (math.pi**m * cont.value)
        sd = ratio * math.hypot(de / disc, cont.error / cont.value)
        assert abs(ratio - factor) <= 0.05 * factor + 3 * sd
