"""The twelve acceptance checks, each runnable on its own.

Every check returns a :class:`CriterionResult` with the numbers it was
decided on, so the CLI and the test-suite print the same evidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .disorder import gaussian, solve_beta


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    summary: str
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"criterion {self.number:2d} [{self.name}]: {'PASS' if self.passed else 'FAIL'} - {self.summary}"

    def as_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed, "summary": self.summary, "details": self.details}


def _window(N: int, theta: float):
    return solve_beta(gaussian(), N, theta)


def second_moment_oracle() -> CriterionResult:
    from .lattice import overlap
    from .oracles import second_moment_dp
    from .renewal import solve_renewal_time

    worst = 0.0
    rows = {}
    for N in (4, 8, 16, 32, 48):
        for theta in (-1.0, 0.0, 1.0):
            w = _window(N, theta)
            table = solve_renewal_time(w, overlap(N))
            diff = abs(table.variance() - (second_moment_dp(w, N) - 1.0))
            rows[f"{N},{theta:g}"] = diff
            worst = max(worst, diff)
    return CriterionResult(1, "second-moment oracle", worst <= 1e-10, f"max |renewal - DP| = {worst:.2e} (tol 1e-10)", rows)


def third_moment_oracle() -> CriterionResult:
    from .chaos import third_moment_chaos
    from .oracles import second_moment_dp, second_moment_enum, third_moment_dp, third_moment_enum

    worst_dp = 0.0
    worst_enum = 0.0
    rows = {}
    for N in (4, 6, 8, 10, 12):
        w = _window(N, 0.0)
        chaos = third_moment_chaos(w, N).centered
        dp = third_moment_dp(w, N) - 3.0 * second_moment_dp(w, N) + 2.0
        rows[N] = {"chaos": chaos, "dp": dp}
        worst_dp = max(worst_dp, abs(chaos - dp))
        if N <= 6:
            e3 = third_moment_enum(w.sigma2, w.xi3, N)
            enum = e3 - 3.0 * second_moment_enum(w.sigma2, N) + 2.0
            rows[N]["enum"] = enum
            worst_enum = max(worst_enum, abs(chaos - enum), abs(dp - enum))
    ok = worst_dp <= 1e-8 and worst_enum <= 1e-12
    return CriterionResult(2, "third-moment oracle", ok, f"max |chaos - DP| = {worst_dp:.2e} (tol 1e-8); max vs enumeration {worst_enum:.2e} (tol 1e-12)", rows)


def intermittency_trend() -> CriterionResult:
    from .dickman import intermittency_constant
    from .lattice import overlap
    from .renewal import solve_renewal_time

    c = intermittency_constant(0.0)
    gaps = {}
    for e in (12, 14, 16):
        N = 2**e
        w = _window(N, 0.0)
        var = solve_renewal_time(w, overlap(N), method="fft").variance()
        gaps[N] = abs(var / math.log(N) - c) / c
    g = list(gaps.values())
    ok = g[0] > g[1] > g[2] and g[2] <= 0.15
    return CriterionResult(3, "intermittency constant", ok, "relative gaps " + ", ".join(f"{v:.4f}" for v in g) + f" (final tol 0.15, limit {c:.6f})", {"gaps": gaps, "limit": c})


def local_renewal() -> CriterionResult:
    from .dickman import g_theta
    from .lattice import overlap
    from .renewal import solve_renewal_time

    N = 2**15
    w = _window(N, 0.0)
    U = solve_renewal_time(w, overlap(N), method="fft").U_time
    n = np.arange(N // 2, N + 1)
    G = g_theta(0.0, n / N)
    err = float(np.max(np.abs(N * U[n] / math.log(N) - G) / G))
    return CriterionResult(4, "local renewal asymptotics", err <= 0.10, f"max relative deviation {err:.4f} on [N/2, N] at N = 2^15 (tol 0.10)", {"max_rel": err})


def dickman_checks(samples: int = 100_000, seed: int = 2024) -> CriterionResult:
    from .dickman import dickman_cdf_unit, dickman_density
    from .lattice import EULER_GAMMA, overlap
    from .renewal import increment_law, renewal_sum_law, sample_renewal_path

    t = np.linspace(0.001, 0.999, 999)
    f1 = dickman_density(1.0, t)
    exact = float(np.max(np.abs(f1 - math.exp(-EULER_GAMMA))))
    N = 2**16
    steps = int(math.floor(math.log(N)))
    table = overlap(N)
    tau, _ = sample_renewal_path(increment_law(table, N), steps, seed, samples)
    x = np.sort(tau[:, -1] / N)
    F = dickman_cdf_unit(x)
    emp_hi = np.arange(1, x.size + 1) / x.size
    emp_lo = np.arange(0, x.size) / x.size
    ks = float(max(np.max(np.abs(emp_hi - F)), np.max(np.abs(F - emp_lo))))
    # noise-free distance on [0, 1] from the exact law of the renewal sum
    cdf = np.cumsum(renewal_sum_law(table, N, steps))
    ks_exact = float(np.max(np.abs(cdf - math.exp(-EULER_GAMMA) * np.arange(N + 1) / N)))
    ok = exact <= 1e-15 and ks <= 0.02
    return CriterionResult(
        5,
        "Dickman",
        ok,
        f"max |f_1 - e^-gamma| = {exact:.1e}; KS = {ks:.4f} (tol 0.02, {samples} samples, {steps} steps); exact-law distance on [0, 1] = {ks_exact:.4f}",
        {"f1_dev": exact, "ks": ks, "ks_exact_unit_interval": ks_exact},
    )


def kernel_scaling(seed: int = 7) -> CriterionResult:
    from .kernels import K_TOLERANCE, k_kernel

    rng = np.random.default_rng(seed)
    worst = 0.0
    rows = []
    for _ in range(20):
        t = float(1.0 - rng.random())
        theta = float(rng.uniform(-2, 2))
        r = float(rng.uniform(0.01, 3.0))
        ang = float(rng.uniform(0, 2 * math.pi))
        x = np.array([r * math.cos(ang), r * math.sin(ang)])
        lhs = k_kernel(t, theta, x)
        rhs = k_kernel(1.0, theta + math.log(t), x / math.sqrt(t))
        worst = max(worst, abs(lhs - rhs))
        rows.append((t, theta, r, lhs, rhs))
    return CriterionResult(6, "kernel scaling", worst <= 2 * K_TOLERANCE, f"max difference {worst:.2e} over 20 triples (tol {2 * K_TOLERANCE:.0e})", {"rows": rows})


def kernel_log_divergence() -> CriterionResult:
    from .kernels import k_kernel

    vals = {r: k_kernel(1.0, 0.0, np.array([r, 0.0])) / math.log(1.0 / r) for r in (1e-3, 1e-4)}
    a, b = vals[1e-3], vals[1e-4]
    var = abs(a - b) / max(a, b)
    return CriterionResult(7, "kernel log divergence", var <= 0.05, f"K/log(1/|x|) = {a:.5f}, {b:.5f}; variation {var:.4f} (tol 0.05)", {"ratios": vals})


def combinatorics() -> CriterionResult:
    from .bounds import c_table, verify_all

    table = c_table(12)
    ident = table.identity_holds()
    r32 = table.max_ratio(32.0, "c")
    r16 = table.max_ratio(16.0, "counts")
    checks = verify_all()
    # identities carry no slack; only the inequalities need a positive margin
    margins = {c.name: c.margin for c in checks if not c.exact}
    ok = ident and r32 <= 1.0 and r16 <= 1.0 and all(c.passed for c in checks) and all(v > 0 for v in margins.values())
    worst = min(margins, key=margins.get)
    return CriterionResult(
        8,
        "combinatorics and bounds",
        ok,
        f"identity {'holds' if ident else 'fails'}; max c/32^k = {r32:.3g}; max |S|/16^k = {r16:.3g}; {len(checks)} checks all passed: {all(c.passed for c in checks)}, worst inequality margin {margins[worst]:.3g} ({worst})",
        {"margins": margins},
    )


def series_decay(samples: int = 400_000, seed: int = 11) -> CriterionResult:
    from .bounds import j_m_mc
    from .chaos import stretch_term_mc
    from .kernels import GaussianBump, m_t_series
    from .renewal import RenewalBridgeSampler

    N = 2**12
    w = _window(N, 0.0)
    phi = GaussianBump(0.5)
    sampler = RenewalBridgeSampler(w, N - 1)
    I = {m: stretch_term_mc(w, N, 1.0, m, phi, None, samples, seed + m, sampler) for m in (3, 4, 5)}
    ratios = {}
    discrete_ok = True
    for m in (3, 4):
        (a, ea), (b, eb) = I[m], I[m + 1]
        r = b / a
        sd = r * math.hypot(ea / a, eb / b)
        ratios[m] = (r, sd)
        discrete_ok &= r + 3 * sd < 1.0
    series = m_t_series(1.0, 0.0, phi, None, 5, samples, seed)
    env_ok = True
    mc_bounds = {}
    for m, term in series.terms.items():
        j, je = j_m_mc(0.0, m, samples, seed + 100 + m)
        bound = 1.5 * (2 * math.pi) ** 2 * series.c_phi * (j + 3 * je)
        mc_bounds[m] = bound
        env_ok &= 0 <= term - 3 * series.errors[m] and term + 3 * series.errors[m] <= bound
        env_ok &= math.log(term) <= series.envelope_log[m]
    ms = sorted(series.terms)
    cont_ratios = {m: series.terms[m + 1] / series.terms[m] for m in ms[:-1]}
    cauchy = all(r < 1 for r in cont_ratios.values())
    ok = discrete_ok and env_ok and cauchy
    return CriterionResult(
        9,
        "series decay",
        ok,
        "I4/I3 = {:.3f}+-{:.3f}, I5/I4 = {:.3f}+-{:.3f}; continuum term ratios ".format(*ratios[3], *ratios[4])
        + ", ".join(f"{v:.3f}" for v in cont_ratios.values())
        + f"; terms within J-envelope: {env_ok}",
        {"I": I, "continuum_terms": series.terms, "mc_bounds": mc_bounds},
    )


def variance_trend() -> CriterionResult:
    from .chaos import variance_exact
    from .kernels import GaussianBump, variance_limit

    phi = GaussianBump(0.5)
    lim = variance_limit(1.0, 0.0, phi).value
    gaps = {}
    for e in (10, 12, 14):
        N = 2**e
        gaps[N] = abs(variance_exact(_window(N, 0.0), N, 1.0, phi) - lim)
    g = list(gaps.values())
    ok = g[0] > g[1] > g[2]
    return CriterionResult(10, "discrete to continuum variance", ok, "gaps " + ", ".join(f"{v:.3e}" for v in g) + f" to limit {lim:.8f}", {"gaps": gaps, "limit": lim})


def she_window_check(seed: int = 5) -> CriterionResult:
    from .she import continuum_window, disk_mollifier, heat_product_identity

    w = continuum_window(disk_mollifier(), 1e-6, 0.0)
    rel = abs(w.window_theta - w.theta_eff) / abs(w.theta_eff)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(200):
        t = float(rng.uniform(0.05, 5.0))
        x = rng.normal(size=2) * 2
        y = rng.normal(size=2) * 2
        lhs, rhs = heat_product_identity(t, x, y)
        worst = max(worst, abs(lhs - rhs) / abs(lhs))
    ok = rel <= 0.10 and worst <= 1e-12
    return CriterionResult(
        11,
        "continuum window",
        ok,
        f"window theta {w.window_theta:.10f} vs theta_eff {w.theta_eff:.10f} (rel {rel:.1e}, tol 0.10); product identity max rel error {worst:.1e} (tol 1e-12)",
        w.as_dict(),
    )


def triple_trend() -> CriterionResult:
    from .chaos import triple_resummation

    rho, xi = {}, {}
    for e in (8, 10, 12):
        N = 2**e
        w = _window(N, 0.0)
        res = triple_resummation(w, N)
        rho[N] = res.rho * math.sqrt(math.log(N))
        xi[N] = abs(w.xi3) * math.log(N) ** 1.5
    r, x = list(rho.values()), list(xi.values())
    ok = max(r[1:]) <= r[0] and max(x[1:]) <= x[0]
    return CriterionResult(
        12,
        "triple-intersection trend",
        ok,
        "rho_N sqrt(log N) = " + ", ".join(f"{v:.4f}" for v in r) + "; E[xi^3] (log N)^1.5 = " + ", ".join(f"{v:.4f}" for v in x),
        {"rho_scaled": rho, "xi3_scaled": xi},
    )


CRITERIA = {
    1: second_moment_oracle,
    2: third_moment_oracle,
    3: intermittency_trend,
    4: local_renewal,
    5: dickman_checks,
    6: kernel_scaling,
    7: kernel_log_divergence,
    8: combinatorics,
    9: series_decay,
    10: variance_trend,
    11: she_window_check,
    12: triple_trend,
}


def run_criteria(numbers=None) -> list[CriterionResult]:
    numbers = sorted(CRITERIA) if numbers is None else numbers
    return [CRITERIA[k]() for k in numbers]
