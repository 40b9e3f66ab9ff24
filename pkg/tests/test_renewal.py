import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polymerlab.dickman import g_theta
from polymerlab.disorder import gaussian, solve_beta
from polymerlab.errors import CapacityError, DomainError
from polymerlab.lattice import build_kernel_table, heat_kernel, overlap
from polymerlab.oracles import second_moment_dp
from polymerlab.renewal import (
    RenewalBridgeSampler,
    increment_law,
    renewal_geometric_sum,
    renewal_sum_law,
    sample_renewal_path,
    solve_renewal,
    solve_renewal_spacetime,
    solve_renewal_time,
    spacetime_profile,
)


def test_first_value(window):
    w = window(32)
    U = solve_renewal_time(w, overlap(32)).U_time
    assert U[0] == 1.0
    assert U[1] == pytest.approx(w.sigma2 / 4, rel=1e-15)


@given(st.integers(3, 48), st.sampled_from([-1.0, 0.0, 1.0]))
def test_variance_matches_dp(N, theta):
    w = solve_beta(gaussian(), N, theta)
    var = solve_renewal_time(w, overlap(N)).variance()
    assert var == pytest.approx(second_moment_dp(w, N) - 1.0, abs=1e-10)


def test_fft_matches_direct(window):
    w = window(700)
    a = solve_renewal_time(w, overlap(700), method="direct").U_time
    b = solve_renewal_time(w, overlap(700), method="fft").U_time
    assert np.max(np.abs(a - b) / a) < 1e-9


def test_geometric_series_matches_solver(window):
    # independent route: sum_r lambda^r P(tau_r = n) by repeated convolution
    w = window(64)
    U = solve_renewal_time(w, overlap(64)).U_time
    G = renewal_geometric_sum(w, overlap(64), r_max=64)
    assert np.max(np.abs(U - G)) < 1e-12


@given(st.lists(st.floats(0.0, 0.5), min_size=2, max_size=30))
def test_solver_against_power_series(k):
    # U = 1 / (1 - K) as formal power series
    K = np.array([0.0] + k)
    n = K.size - 1
    U = solve_renewal(K, n)
    series = np.zeros(n + 1)
    series[0] = 1.0
    power = np.zeros(n + 1)
    power[0] = 1.0
    for _ in range(n):
        power = np.convolve(power, K)[: n + 1]
        series += power
    assert np.allclose(U, series, rtol=1e-10, atol=1e-14)


def test_spacetime_single_step(window):
    w = window(16)
    tab = solve_renewal_spacetime(w, None, 4)
    U1 = tab.spacetime_cartesian(1)
    for x in [(1, 0), (-1, 0), (0, 1), (0, -1)]:
        assert U1[x[0] + 1, x[1] + 1] == pytest.approx(w.sigma2 / 16, rel=1e-15)
    assert U1[1, 1] == 0.0


def test_spacetime_marginal_is_time_renewal(window):
    w = window(40)
    st_tab = solve_renewal_spacetime(w, build_kernel_table(40), 40)
    U = solve_renewal_time(w, overlap(40)).U_time
    assert np.max(np.abs(st_tab.U_time - U)) < 1e-13


def test_spacetime_budget(window):
    with pytest.raises(CapacityError):
        solve_renewal_spacetime(window(16), None, 200)


def test_fourier_profile_matches_table(window):
    w = window(30)
    st_tab = solve_renewal_spacetime(w, None, 30)
    prof = spacetime_profile(w, [10, 30], L=256, kappa_max=math.pi)
    for n in (10, 30):
        cart = st_tab.spacetime_cartesian(n)
        pts = np.array([(x1, x2) for x1 in range(-n, n + 1, 3) for x2 in range(-n, n + 1, 2)])
        got = prof.value(n, pts)
        assert np.max(np.abs(got - cart[pts[:, 0] + n, pts[:, 1] + n])) < 1e-13


def test_local_limit_time():
    N = 2**15
    w = solve_beta(gaussian(), N, 0.0)
    U = solve_renewal_time(w, overlap(N), method="fft").U_time
    n = np.arange(N // 2, N + 1)
    G = g_theta(0.0, n / N)
    assert np.max(np.abs(N * U[n] / math.log(N) - G) / G) <= 0.10


@pytest.mark.slow
def test_local_limit_spacetime():
    N = 4096
    delta = 0.4
    w = solve_beta(gaussian(), N, 0.0)
    ns = [int(delta * N), int(0.7 * N), N]
    prof = spacetime_profile(w, ns, L=1024)
    worst = 0.0
    for n in ns:
        for r in np.linspace(0, 1 / delta, 9):
            x1 = int(round(r * math.sqrt(N)))
            x1 += (n + x1) % 2
            val = prof.value(n, [[x1, 0]])[0] * N**2 / math.log(N) / 2
            ref = g_theta(0.0, n / N) * heat_kernel(n / N / 4, (x1 / math.sqrt(N), 0.0))
            worst = max(worst, abs(val / ref - 1))
    assert worst <= 0.15


def test_diffusive_tail(window):
    N = 128
    w = window(N)
    tab = solve_renewal_spacetime(w, None, N, budget=N)
    n = N
    cart = tab.spacetime_cartesian(n)
    x1, x2 = np.meshgrid(np.arange(-n, n + 1), np.arange(-n, n + 1), indexing="ij")
    r = np.hypot(x1, x2)
    tails = {M: cart[r > M * math.sqrt(n)].sum() / cart.sum() for M in (0.5, 1, 2)}
    scaled = {M: v * M**2 for M, v in tails.items()}
    assert tails[0.5] > tails[1] > tails[2]
    assert max(scaled.values()) < 1.0


def test_increment_law_mass(window):
    N = 256
    tab = overlap(N)
    law = increment_law(tab, N)
    assert law.time_mass.sum() == pytest.approx(1.0, rel=1e-14)
    tau, _ = sample_renewal_path(law, 1, 3, 10**6)
    p_emp = np.mean(tau[:, 0] <= N // 2)
    p = tab.R[N // 2] / tab.R[N]
    assert abs(p_emp - p) <= 4 * math.sqrt(p * (1 - p) / 10**6)


def test_spatial_law_of_increment():
    law = increment_law(overlap(8), 8)
    m = law.spatial_mass(4)
    assert m.sum() == pytest.approx(1.0)
    assert m[2, 2] == pytest.approx((36 / 70) ** 2)


@given(st.integers(0, 10**6))
def test_paths_increase_and_keep_parity(seed):
    law = increment_law(overlap(64), 64)
    tau, S = sample_renewal_path(law, 12, seed, 50)
    assert np.all(np.diff(tau, axis=1) > 0)
    assert np.all((tau + S[..., 0] + S[..., 1]) % 2 == 0)


def test_sum_law_matches_sampling():
    N = 1024
    tab = overlap(N)
    law = renewal_sum_law(tab, N, 5)
    tau, _ = sample_renewal_path(increment_law(tab, N), 5, 11, 200_000)
    for frac in (0.25, 0.5, 1.0):
        p = law[: int(frac * N) + 1].sum()
        emp = np.mean(tau[:, -1] <= frac * N)
        assert abs(emp - p) <= 4 * math.sqrt(p * (1 - p) / tau.shape[0])


def test_bridge_sampler_previous_point(window):
    N = 64
    w = window(N)
    sampler = RenewalBridgeSampler(w, N)
    U = sampler.U
    k = 40
    rng = np.random.default_rng(0)
    prev = sampler.previous(np.full(200_000, k), rng)
    u2 = overlap(N).u_sq
    exact = np.array([w.sigma2 * u2[k - m] * U[m] / U[k] for m in range(k)])
    assert exact.sum() == pytest.approx(1.0, rel=1e-12)
    for m in (0, 10, 39):
        p = exact[m]
        assert abs(np.mean(prev == m) - p) <= 4 * math.sqrt(p * (1 - p) / prev.size) + 1e-12


def test_bridge_sampler_displacement_matches_table(window):
    N = 24
    w = window(N)
    sampler = RenewalBridgeSampler(w, N)
    tab = solve_renewal_spacetime(w, None, N)
    rng = np.random.default_rng(1)
    k = 20
    d = sampler.displacement(np.full(200_000, k), rng)
    cart = tab.spacetime_cartesian(k) / tab.U_time[k]
    for x in [(0, 0), (2, 0), (1, 1), (4, 2)]:
        p = cart[x[0] + k, x[1] + k]
        emp = np.mean((d[:, 0] == x[0]) & (d[:, 1] == x[1]))
        assert abs(emp - p) <= 4 * math.sqrt(p * (1 - p) / d.shape[0])


def test_rejects_short_table(window):
    with pytest.raises(DomainError):
        solve_renewal_time(window(64), overlap(32))
