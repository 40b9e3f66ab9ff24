import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.signal import convolve2d

from polymerlab.errors import CacheError, DomainError
from polymerlab.lattice import (
    EULER_GAMMA,
    OVERLAP_ALPHA,
    build_kernel_table,
    cache_path,
    cached_kernel_table,
    central_return_1d,
    heat_kernel,
    is_even,
    load_kernel_table,
    overlap,
    save_kernel_table,
)

STEPS = [(1, 0), (-1, 0), (0, 1), (0, -1)]


def enumerate_kernel(n):
    """q_n by listing all 4^n paths."""
    counts = {}
    for path in itertools.product(STEPS, repeat=n):
        end = (sum(s[0] for s in path), sum(s[1] for s in path))
        counts[end] = counts.get(end, 0) + 1
    return {k: v / 4**n for k, v in counts.items()}


@pytest.fixture(scope="module")
def table():
    return build_kernel_table(40)


def test_single_step_value(table):
    assert table.prob(1, (1, 0)) == 0.25


def test_two_step_return(table):
    assert table.prob(2, (0, 0)) == 0.25


def test_parity_zero(table):
    assert table.prob(2, (1, 0)) == 0.0
    assert not is_even(2, (1, 0))


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_table_matches_path_enumeration(table, n):
    exact = enumerate_kernel(n)
    for x1 in range(-n, n + 1):
        for x2 in range(-n, n + 1):
            assert table.prob(n, (x1, x2)) == pytest.approx(exact.get((x1, x2), 0.0), abs=1e-15)


def test_rows_are_probabilities(table):
    assert np.max(np.abs(table.row_sums() - 1.0)) < 1e-13


@given(st.integers(1, 15), st.integers(1, 15))
def test_chapman_kolmogorov(a, b):
    t = build_kernel_table(a + b)
    conv = convolve2d(t.cartesian(a), t.cartesian(b))
    assert np.max(np.abs(conv - t.cartesian(a + b))) < 1e-15


@given(st.integers(0, 20), st.integers(-20, 20), st.integers(-20, 20))
def test_lattice_symmetries(n, x1, x2):
    t = build_kernel_table(20)
    p = t.prob(n, (x1, x2))
    assert p == t.prob(n, (-x1, x2)) == t.prob(n, (x2, x1)) == t.prob(n, (x1, -x2))


def test_u1_squared():
    assert overlap(4).u_sq[1] == 0.25


def test_overlap_routes_agree(table):
    a = overlap(20, table)
    b = overlap(20)
    assert np.max(np.abs(a.u_sq - b.u_sq)) < 1e-15


def test_u_squared_against_square_sums(table):
    for n in range(1, 20):
        assert table.square_sum(n) == pytest.approx(overlap(20).u_sq[n], rel=1e-13)


def test_u_squared_asymptotics():
    n = 1000
    assert overlap(n).u_sq[n] * math.pi * n == pytest.approx(1.0, rel=1e-2)


def test_overlap_constant():
    assert OVERLAP_ALPHA == pytest.approx(EULER_GAMMA + math.log(16) - math.pi, abs=1e-15)
    assert OVERLAP_ALPHA == pytest.approx(0.2082117335515, abs=1e-12)
    assert OVERLAP_ALPHA == pytest.approx(0.20824, abs=5e-5)
    N = 10**6
    tab = overlap(N)
    assert tab.diagnostic(N) == pytest.approx(OVERLAP_ALPHA / math.pi, abs=5e-3)


def test_central_return_closed_form():
    a = central_return_1d(30)
    for n in range(31):
        assert a[n] == pytest.approx(math.comb(2 * n, n) / 4**n, rel=1e-14)


def test_heat_kernel_origin():
    assert heat_kernel(1.0, (0.0, 0.0)) == pytest.approx(1 / (2 * math.pi), rel=1e-15)


@pytest.mark.parametrize("u", [0.1, 1.0, 10.0])
def test_heat_kernel_normalised(u):
    mass = quad(lambda r: 2 * math.pi * r * heat_kernel(u, (r, 0.0)), 0, np.inf)[0]
    assert mass == pytest.approx(1.0, abs=1e-8)


def test_heat_kernel_rejects_nonpositive_variance():
    with pytest.raises(DomainError):
        heat_kernel(0.0, (0, 0))


def test_cache_round_trip(tmp_path):
    t = build_kernel_table(12)
    path = save_kernel_table(t, tmp_path / "k.bin")
    back = load_kernel_table(path)
    assert back.horizon == 12
    assert all(np.array_equal(a, b) for a, b in zip(t.rows, back.rows))


def test_cached_table_reuses_file(tmp_path):
    first = cached_kernel_table(6, tmp_path)
    assert cache_path(tmp_path, 6).exists()
    second = cached_kernel_table(6, tmp_path)
    assert all(np.array_equal(a, b) for a, b in zip(first.rows, second.rows))


def test_cache_rejects_bad_header(tmp_path):
    p = tmp_path / "bad.bin"
    p.write_bytes(b"XXXX" + bytes(20))
    with pytest.raises(CacheError):
        load_kernel_table(p)


def test_cache_rejects_truncation(tmp_path):
    path = save_kernel_table(build_kernel_table(5), tmp_path / "k.bin")
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(CacheError):
        load_kernel_table(path)
