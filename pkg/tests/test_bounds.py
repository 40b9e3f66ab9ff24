import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import gammaincc

from polymerlab.bounds import (
    PhiRecursion,
    c_lambda,
    c_table,
    coefficient_recursion,
    encoding_check,
    gamma_tail,
    j_m_envelope,
    j_m_mc,
    j_m_sharp,
    path_counts,
    phi_1_closed_form,
    phi_k,
    verify_all,
)
from polymerlab.dickman import g_theta_bound
from polymerlab.errors import DomainError


def test_phi1_at_one():
    assert phi_k(1, 1.0) == pytest.approx(2 * math.log(1 + math.sqrt(2)), rel=1e-13)


@given(st.floats(1e-9, 1.0))
def test_phi1_matches_closed_form(u):
    assert phi_k(1, u) == pytest.approx(float(phi_1_closed_form(u)), rel=1e-11)


@pytest.mark.parametrize("u", [1e-6, 1e-3, 0.1, 0.5, 1.0])
def test_phi2_against_quadrature(u):
    f = lambda s: float(phi_1_closed_form(s)) / math.sqrt(s * (s + u))
    ref = sum(quad(f, a, b, limit=200)[0] for a, b in ((0, u), (u, 1)))
    assert phi_k(2, u) == pytest.approx(ref, rel=1e-8)


def test_phi_error_estimate_small():
    v = phi_k(4, 1e-4, with_error=True)
    assert v.error < 1e-9 * v.value


def test_phi_monotone_decreasing_in_u():
    u = np.logspace(-10, 0, 60)
    for k in range(1, 6):
        assert np.all(np.diff(phi_k(k, u)) < 0)


def test_phi_integral_against_quadrature():
    rec = PhiRecursion()
    ref = quad(lambda s: float(phi_1_closed_form(s)), 0, 1, limit=200)[0]
    assert rec.integral(1) == pytest.approx(ref, rel=1e-10)
    assert rec.integral(0) == 1.0


@pytest.mark.parametrize("u", [2e-3, 0.2, 1.0])
def test_hatted_phi1_against_quadrature(u):
    N = 1000
    ref = quad(lambda s: 1.0 / (s * math.sqrt(s + u)), 1.0 / N, 1.0, limit=200)[0]
    assert phi_k(1, u, N=N) == pytest.approx(ref, rel=1e-10)


def test_phi_domain():
    with pytest.raises(DomainError):
        phi_k(1, 0.0)
    with pytest.raises(DomainError):
        phi_k(1, 1.5)
    with pytest.raises(DomainError):
        phi_k(1, 1e-4, N=100)


def test_first_coefficients():
    c = coefficient_recursion(3)
    assert (c[(1, 0)], c[(1, 1)]) == (0, 2)
    assert [c[(2, i)] for i in range(3)] == [4, 4, 4]
    assert list(path_counts(2)) == [1, 1, 1]


def test_coefficients_count_paths():
    table = c_table(9)
    assert table.identity_holds()
    assert table.max_ratio(4, "counts") <= 1.0
    assert table.max_ratio(8) <= 1.0


@pytest.mark.parametrize("k", [2, 4, 6])
def test_encoding_injective(k):
    injective, lo, hi = encoding_check(k)
    assert injective and lo == k and hi <= 2 * k


@pytest.mark.parametrize("k,t,expected", [(0, 1.0, 1 / math.e), (3, 1.0, 16 / math.e), (0, 0.0, 1.0), (4, 0.0, 24.0)])
def test_gamma_tail_values(k, t, expected):
    assert gamma_tail(k, t) == pytest.approx(expected, rel=1e-13)


@given(st.integers(0, 12), st.floats(0.01, 30.0))
def test_gamma_tail_against_quadrature(k, t):
    ref = gammaincc(k + 1, t) * math.factorial(k)
    assert gamma_tail(k, t) == pytest.approx(ref, rel=1e-11)


def test_gamma_tail_log_space():
    assert math.isfinite(gamma_tail(400, 3.0, log=True))


@pytest.mark.parametrize("lam", [1.0, math.e**2 - 2, 50.0, 1e4, 1e8])
def test_c_lambda_chain(lam):
    assert c_lambda(0.0, lam).ok


def test_c_lambda_domain():
    with pytest.raises(DomainError):
        c_lambda(0.0, 0.5)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_j_m_chain(m):
    est, err = j_m_mc(0.0, m, samples=100_000, seed=m)
    sharp = j_m_sharp(0.0, m, float(m))
    assert est - 3 * err <= sharp
    assert sharp <= j_m_envelope(0.0, m)


def test_envelope_threshold_constant_is_vacuous():
    # the certified constant needs log lambda near 287, far beyond any useful range
    assert 64 * g_theta_bound(0.0).c_theta - 2 > 250


def test_envelope_log_consistent():
    assert j_m_envelope(0.0, 5, log=True) == pytest.approx(math.log(j_m_envelope(0.0, 5)), rel=1e-14)


def test_envelope_summable_with_large_lambda():
    # the envelope decays geometrically in m exactly when 64 c < 2 + log lambda;
    # a small constant keeps e^lambda representable
    c = 0.1
    threshold = 64 * c - 2
    for log_lam, decays in ((threshold - 2, False), (threshold + 2, True)):
        terms = [j_m_envelope(0.0, m, lam=math.exp(log_lam), c_theta=c, log=True) for m in range(2, 8)]
        assert all(b < a for a, b in zip(terms, terms[1:])) == decays


def test_verify_all_passes():
    results = verify_all()
    assert results and all(r.passed for r in results)
    assert all(r.margin > 0 for r in results if not r.exact)


def test_unknown_group():
    with pytest.raises(DomainError):
        verify_all(["nope"])
