"""Command-line entry point: ``polymerlab <command> [options]``.

Every command builds a :class:`RunReport` and writes it as JSON or CSV.
Options can also come from an INI file given with ``--config``; section
``[<command>]`` (or ``[<command> <sub>]``) supplies defaults and flags on the
command line override them.  Exit status is 2 for usage errors and 1 when a
checked invariant fails.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import PolymerLabError

EXIT_FAILED = 1
EXIT_USAGE = 2


@dataclass
class ReportEntry:
    quantity: str
    value: float
    method: str
    error: float = 0.0
    params: dict = field(default_factory=dict)
    tag: str = ""

    def as_dict(self) -> dict:
        return {"quantity": self.quantity, "value": self.value, "method": self.method, "error": self.error, "params": self.params, "tag": self.tag}


@dataclass
class RunReport:
    command: str
    config_hash: str
    seed: int | None
    version: str = __version__
    wall_time: float = 0.0
    entries: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def add(self, quantity, value, method, error=0.0, tag="", **params) -> None:
        self.entries.append(ReportEntry(quantity, _plain(value), method, _plain(error), _plain(params), tag))

    def check(self, condition: bool, message: str) -> None:
        if not condition:
            self.failures.append(message)

    @property
    def passed(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "version": self.version,
            "wall_time": self.wall_time,
            "passed": self.passed,
            "failures": list(self.failures),
            "entries": [e.as_dict() for e in self.entries],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, allow_nan=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["quantity", "value", "method", "error", "tag", "params"])
        for e in self.entries:
            writer.writerow([e.quantity, repr(e.value), e.method, repr(e.error), e.tag, json.dumps(e.params, sort_keys=True)])
        return buf.getvalue()


def _plain(obj):
    """Convert numpy scalars and containers into JSON-friendly Python values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def config_hash(args: argparse.Namespace) -> str:
    """sha256 of the canonical JSON of the options that affect results."""
    skip = {"output", "format", "config", "handler", "cache_dir"}
    payload = {k: _plain(v) for k, v in sorted(vars(args).items()) if k not in skip}
    return hashlib.sha256(json.dumps(payload, sort_keys=True, default=str).encode()).hexdigest()


# ---------------------------------------------------------------------------
# option parsing helpers


def parse_function(spec: str | None, allow_point: bool = False):
    """Test function from a string.

    ``gaussian:W`` is a Gaussian bump of width ``W``; ``bump:R`` the smooth
    bump of radius ``R``; ``one`` means the constant 1 (returned as ``None``);
    ``point`` (when allowed) the point mass at the origin, also ``None``.
    Anything else is read as a file with two columns ``r f(r)`` describing a
    radial profile; the support is the last radius.
    """
    from .kernels import GaussianBump, RadialTestFunction, smooth_bump

    if spec is None or spec in ("one", "point"):
        if spec == "point" and not allow_point:
            raise argparse.ArgumentTypeError("a point mass is not allowed here")
        return None
    name, _, arg = spec.partition(":")
    if name == "gaussian":
        return GaussianBump(float(arg) if arg else 0.5)
    if name == "bump":
        return smooth_bump(float(arg) if arg else 1.0)
    if not os.path.exists(spec):
        raise argparse.ArgumentTypeError(f"unknown test function {spec!r}")
    data = np.loadtxt(spec, ndmin=2)
    if data.shape[1] != 2 or data.shape[0] < 2 or np.any(np.diff(data[:, 0]) <= 0):
        raise argparse.ArgumentTypeError("grid file needs two columns with increasing radii")
    r, f = data[:, 0].copy(), data[:, 1].copy()
    return RadialTestFunction(lambda x: np.interp(x, r, f, right=0.0), float(r[-1]), os.path.basename(spec))


def _floats(text: str) -> list[float]:
    return [float(v) for v in str(text).replace(",", " ").split()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in str(text).replace(",", " ").split()]


def _window(family: str, N: int, theta: float):
    from .disorder import family_by_name, solve_beta

    return solve_beta(family_by_name(family), N, theta)


# ---------------------------------------------------------------------------
# commands


def cmd_kernels(args, rep: RunReport) -> None:
    from .lattice import cached_kernel_table, overlap

    table = cached_kernel_table(2 * args.horizon, args.cache_dir)
    dev = float(np.max(np.abs(table.row_sums() - 1.0)))
    rep.add("row_sum_deviation", dev, "kernel-table", tag="walk-kernel-normalisation", horizon=2 * args.horizon)
    rep.check(dev <= 1e-12, f"kernel rows do not sum to one (deviation {dev:.2e})")
    from_table = overlap(args.horizon, table)
    product = overlap(args.horizon)
    N = args.horizon
    rep.add("R_N", float(product.R[N]), "product-formula", tag="replica-overlap", N=N)
    rep.add("R_N", float(from_table.R[N]), "kernel-table", tag="replica-overlap", N=N)
    diff = abs(float(product.R[N] - from_table.R[N]))
    rep.check(diff <= 1e-10, f"overlap routes disagree by {diff:.2e}")
    rep.add("R_N - log(N)/pi", product.diagnostic(N), "product-formula", tag="overlap-constant", N=N, limit=product.alpha / math.pi)


def cmd_oracle(args, rep: RunReport) -> None:
    from .chaos import third_moment_chaos, variance_exact
    from .lattice import overlap
    from .oracles import averaged_field_mc, second_moment_dp, second_moment_enum, third_moment_dp, third_moment_enum
    from .renewal import solve_renewal_time

    w = _window(args.family, args.N, args.theta)
    p = {"N": args.N, "theta": args.theta, "family": args.family}
    if args.which == "second":
        dp = second_moment_dp(w, args.N) - 1.0
        ren = solve_renewal_time(w, overlap(args.N)).variance()
        rep.add("variance", dp, "dp-oracle", tag="second-moment", **p)
        rep.add("variance", ren, "renewal-sum", tag="second-moment", **p)
        rep.add("difference", abs(dp - ren), "dp-vs-renewal", tag="second-moment", **p)
        rep.check(abs(dp - ren) <= 1e-10, "second moment routes disagree")
        if args.N <= 6:
            en = second_moment_enum(w.sigma2, args.N) - 1.0
            rep.add("variance", en, "enumeration", tag="second-moment", **p)
            rep.check(abs(en - dp) <= 1e-12, "enumeration disagrees with dp")
    elif args.which == "third":
        chaos = third_moment_chaos(w, args.N)
        dp = third_moment_dp(w, args.N) - 3.0 * second_moment_dp(w, args.N) + 2.0
        rep.add("centered_third_moment", chaos.centered, "chaos-assembly", tag="third-moment", **p)
        rep.add("no_triple_part", chaos.no_triple, "stretch-chain", tag="third-moment-stretches", **p)
        rep.add("triple_part", chaos.triple, "triple-renewal", tag="third-moment-triples", **p)
        rep.add("centered_third_moment", dp, "triple-dp", tag="third-moment", **p)
        rep.check(abs(chaos.centered - dp) <= 1e-8, "chaos assembly disagrees with dp")
        if args.N <= 6:
            en = third_moment_enum(w.sigma2, w.xi3, args.N) - 3.0 * second_moment_enum(w.sigma2, args.N) + 2.0
            rep.add("centered_third_moment", en, "enumeration", tag="third-moment", **p)
            rep.check(abs(en - dp) <= 1e-12, "enumeration disagrees with dp")
    else:
        from .disorder import family_by_name

        phi = parse_function(args.phi)
        out = averaged_field_mc(w, family_by_name(args.family), args.N, phi, None, args.replicas, args.seed)
        exact = variance_exact(w, args.N, 1.0, phi)
        rep.add("field_mean", out["mean"], "environment-mc", out["mean_err"], tag="averaged-field", **p, replicas=args.replicas)
        rep.add("field_variance", out["var"], "environment-mc", out["var_err"], tag="averaged-field", **p, replicas=args.replicas)
        rep.add("field_variance", exact, "fourier-exact", tag="averaged-field", **p)
        from .chaos import lattice_field

        mean = lattice_field(phi, args.N).total / args.N
        rep.add("field_mean", mean, "lattice-sum", tag="averaged-field", **p)
        rep.check(abs(out["mean"] - mean) <= 5 * out["mean_err"] + 1e-12, "field mean off its exact value by more than 5 standard errors")


def cmd_renewal(args, rep: RunReport) -> None:
    from .dickman import dickman_cdf_unit, g_theta, intermittency_constant
    from .lattice import overlap
    from .renewal import increment_law, renewal_sum_law, sample_renewal_path, solve_renewal_time

    N = args.N
    w = _window(args.family, N, args.theta)
    table = overlap(N)
    U = solve_renewal_time(w, table, method=args.method)
    p = {"N": N, "theta": args.theta}
    var = U.variance()
    limit = intermittency_constant(args.theta)
    rep.add("variance", var, f"renewal-{args.method}", tag="second-moment", **p)
    rep.add("variance/log N", var / math.log(N), f"renewal-{args.method}", tag="intermittency", **p)
    rep.add("int_0^1 G_theta", limit, "quadrature", tag="intermittency", theta=args.theta)
    n = np.arange(N // 2, N + 1)
    G = g_theta(args.theta, n / N)
    dev = float(np.max(np.abs(N * U.U_time[n] / math.log(N) - G) / G))
    rep.add("max_rel_local_deviation", dev, "renewal-vs-G_theta", tag="local-renewal", **p)
    if args.samples:
        steps = int(math.floor(args.s * math.log(N)))
        tau, _ = sample_renewal_path(increment_law(table, N), steps, args.seed, args.samples)
        x = np.sort(tau[:, -1] / N)
        F = dickman_cdf_unit(x) if args.s == 1.0 else None
        if F is not None:
            hi = np.arange(1, x.size + 1) / x.size
            ks = float(max(np.max(np.abs(hi - F)), np.max(np.abs(F - hi + 1.0 / x.size))))
            rep.add("ks_distance", ks, "renewal-mc", tag="dickman-limit", **p, samples=args.samples, steps=steps)
        cdf = np.cumsum(renewal_sum_law(table, N, steps))
        from .dickman import dickman_cdf

        gap = float(np.max(np.abs(cdf - dickman_cdf(args.s, np.arange(N + 1) / N))))
        rep.add("unit_interval_distance", gap, "exact-convolution", tag="dickman-limit", **p, s=args.s, steps=steps)


def cmd_dickman_tab(args, rep: RunReport) -> None:
    from .dickman import dickman_density, g_hat, g_theta, g_theta_bound

    grid = np.asarray(_floats(args.grid))
    cert = g_theta_bound(args.theta)
    G = g_theta(args.theta, grid)
    Gh = g_hat(cert.c_theta, grid)
    for i, t in enumerate(grid):
        for s in _floats(args.s):
            if 0 < t < 1:
                rep.add("f_s", dickman_density(s, t), "closed-form", tag="dickman-density", s=s, t=float(t))
        rep.add("G_theta", float(G[i]), "log-s-quadrature", tag="weighted-renewal-density", theta=args.theta, w=float(t))
        rep.add("G_hat", float(Gh[i]), "certified-majorant", tag="weighted-renewal-majorant", theta=args.theta, w=float(t), c_theta=cert.c_theta)
        rep.check(G[i] <= Gh[i], f"majorant fails at w = {t}")


def cmd_variance(args, rep: RunReport) -> None:
    from .chaos import variance_exact
    from .kernels import variance_limit

    phi = parse_function(args.phi)
    if phi is None:
        raise PolymerLabError("variance needs a test function")
    lim_e = variance_limit(args.t, args.theta, phi, "energy")
    lim_k = variance_limit(args.t, args.theta, phi, "kernel")
    rep.add("variance_limit", lim_e.value, "energy-route", lim_e.error, tag="variance-limit", t=args.t, theta=args.theta)
    rep.add("variance_limit", lim_k.value, "kernel-route", lim_k.error, tag="variance-limit", t=args.t, theta=args.theta)
    rep.check(abs(lim_e.value - lim_k.value) <= 1e-6 * abs(lim_e.value), "variance-limit routes disagree")
    gaps = []
    for N in _ints(args.N):
        v = variance_exact(_window(args.family, N, args.theta), N, args.t, phi)
        gaps.append(abs(v - lim_e.value))
        rep.add("variance_exact", v, "fourier-renewal", tag="averaged-variance", N=N, t=args.t, theta=args.theta)
        rep.add("gap_to_limit", gaps[-1], "difference", tag="averaged-variance", N=N)
    if len(gaps) > 1:
        rep.add("gap_decreasing", float(all(a > b for a, b in zip(gaps, gaps[1:]))), "comparison", tag="averaged-variance")


def cmd_thirdmoment(args, rep: RunReport) -> None:
    from .chaos import stretch_third_moment_nt, triple_resummation

    phi = parse_function(args.phi, allow_point=True)
    psi = parse_function(args.psi)
    w = _window(args.family, args.N, args.theta)
    series = stretch_third_moment_nt(w, args.N, args.t, phi, psi, args.mmax, args.samples, args.seed)
    for m in sorted(series.terms):
        rep.add(f"I^(N,{m})", series.terms[m], series.methods[m], series.errors[m], tag="stretch-term", N=args.N, m=m)
    for m, r in series.ratios().items():
        rep.add(f"ratio {m + 1}/{m}", r, "derived", tag="stretch-decay", N=args.N)
    rep.add("no_triple_partial_sum", series.partial_sum, "weighted-sum", series.partial_error, tag="stretch-series", N=args.N)
    rep.add("tail_estimate", series.tail_estimate, "geometric-extrapolation", tag="stretch-series", N=args.N)
    if args.triple:
        res = triple_resummation(w, args.N)
        rep.add("rho_N", res.rho, "pair-weight-sum", tag="triple-resummation", N=args.N, exact_upto=res.exact_upto)
        rep.add("triple_bound", res.bound, "geometric-resummation", tag="triple-resummation", N=args.N)
        for name, v in res.pieces.items():
            rep.add(f"rho_piece_{name}", v, "pair-weight-sum", tag="triple-resummation", N=args.N)


def cmd_bounds(args, rep: RunReport) -> None:
    from .bounds import c_table, verify_all

    groups = None if args.lemmas in ("all", None) else args.lemmas.split(",")
    for c in verify_all(groups):
        rep.add(c.name, c.margin, "grid-check", tag=c.name, points=c.points, exact=c.exact, passed=c.passed)
        rep.check(c.passed, f"{c.name} failed (margin {c.margin:.3g})")
    tab = c_table(args.kmax)
    rep.add("coefficient_identity", float(tab.identity_holds()), "enumeration", tag="path-count-identity", k_max=args.kmax)
    rep.add("max c/32^k", tab.max_ratio(32, "c"), "enumeration", tag="coefficient-growth", k_max=args.kmax)
    rep.add("max |S|/16^k", tab.max_ratio(16, "counts"), "enumeration", tag="path-count-growth", k_max=args.kmax)
    rep.check(tab.identity_holds(), "coefficient identity fails")


def cmd_she(args, rep: RunReport) -> None:
    from .she import continuum_window, log_potential, mollifier_by_name, she_continuum_renewal, she_variance_energy, she_variance_limit, theta_effective

    moll = mollifier_by_name(args.mollifier)
    if args.which == "theta":
        real, fourier = log_potential(moll, "real"), log_potential(moll, "fourier")
        rep.add("log_potential", real, "real-space", tag="mollifier-log-potential", mollifier=moll.name)
        rep.add("log_potential", fourier, "fourier", tag="mollifier-log-potential", mollifier=moll.name)
        rep.check(abs(real - fourier) <= 1e-8, "log-potential routes disagree")
        rep.add("theta_eff", theta_effective(moll, args.rho), "closed-form", tag="effective-theta", rho=args.rho)
        for eps in _floats(args.eps):
            cw = continuum_window(moll, eps, args.rho)
            rep.add("window_theta", cw.window_theta, "overlap-quadrature", tag="effective-theta", epsilon=eps, rho=args.rho, gap=cw.gap)
    elif args.which == "variance":
        phi = parse_function(args.phi)
        v = she_variance_limit(moll, args.rho, args.t, phi)
        rep.add("she_variance", v.value, "polymer-rescaled", v.error, tag="she-variance", theta=v.theta, t=args.t)
        ind = she_variance_energy(args.t, v.theta, phi)
        rep.add("she_variance", ind, "heat-energy", tag="she-variance", theta=v.theta, t=args.t)
        rep.add("bertini_cancrini", v.bertini_cancrini, "closed-form", tag="parameter-map", theta=v.theta)
        rep.check(abs(ind - v.value) <= 1e-6 * abs(v.value), "SHE variance routes disagree")
    else:
        for eps in _floats(args.eps):
            r = she_continuum_renewal(moll, eps, args.theta, args.T, args.samples, args.seed)
            rep.add("renewal_sum", r.lhs, "continuum-mc", r.lhs_error, tag="continuum-renewal", epsilon=eps, theta=args.theta)
            rep.add("renewal_limit", r.rhs, "quadrature", tag="continuum-renewal", epsilon=eps, theta=args.theta, gap=r.gap)


def cmd_kernel(args, rep: RunReport) -> None:
    from .kernels import k_kernel, m_t_series, variance_limit

    if args.which == "k":
        for r in _floats(args.x):
            val, err = k_kernel(args.t, args.theta, float(r), with_error=True)
            rep.add("K", val, "nested-quadrature", err, tag="covariance-kernel", t=args.t, theta=args.theta, r=r)
    elif args.which == "variance-limit":
        phi = parse_function(args.phi)
        v = variance_limit(args.t, args.theta, phi, args.route)
        rep.add("variance_limit", v.value, f"{args.route}-route", v.error, tag="variance-limit", t=args.t, theta=args.theta)
    else:
        phi = parse_function(args.phi)
        psi = parse_function(args.psi)
        s = m_t_series(args.t, args.theta, phi, psi, args.mmax, args.samples, args.seed)
        for m in sorted(s.terms):
            rep.add(f"term_{m}", s.terms[m], "continuum-mc", s.errors[m], tag="continuum-third-moment", m=m, log_envelope=s.envelope_log[m])
            rep.add(f"partial_sum_{m}", s.partial_sums[m], "continuum-mc", tag="continuum-third-moment", m=m)


def cmd_acceptance(args, rep: RunReport) -> None:
    from .acceptance import CRITERIA

    numbers = sorted(CRITERIA) if args.criteria in (None, "all") else _ints(args.criteria)
    for k in numbers:
        if k not in CRITERIA:
            raise PolymerLabError(f"no criterion {k}")
        t0 = time.perf_counter()
        res = CRITERIA[k]()
        rep.add(f"criterion_{k}", float(res.passed), "acceptance", tag=res.name, summary=res.summary, seconds=time.perf_counter() - t0)
        print(res.line(), file=sys.stderr)
        rep.check(res.passed, res.line())


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polymerlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="INI file with per-command defaults")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--output", help="write the report here instead of stdout")
    parser.add_argument("--seed", type=int, default=0, help="master seed for Monte Carlo paths")
    parser.add_argument("--cache-dir", default=os.environ.get("POLYMERLAB_CACHE"), help="kernel-table cache (default $POLYMERLAB_CACHE)")
    sub = parser.add_subparsers(dest="command")
    # the global flags are accepted after the command too
    late = argparse.ArgumentParser(add_help=False)
    late.add_argument("--format", choices=("json", "csv"), default=argparse.SUPPRESS)
    late.add_argument("--output", default=argparse.SUPPRESS)
    late.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    late.add_argument("--cache-dir", default=argparse.SUPPRESS)

    def add(name, handler, help_text):
        p = sub.add_parser(name, help=help_text, parents=[late])
        p.set_defaults(handler=handler)
        return p

    def common(p, N=48, theta=0.0):
        p.add_argument("--N", type=int, default=N)
        p.add_argument("--theta", type=float, default=theta)
        p.add_argument("--family", default="gaussian", choices=("gaussian", "rademacher"))

    p = add("kernels", cmd_kernels, "walk kernel table and replica overlap")
    p.add_argument("--horizon", type=int, default=64)

    p = add("oracle", cmd_oracle, "exact moment oracles")
    p.add_argument("which", choices=("second", "third", "field"))
    common(p, N=12)
    p.add_argument("--phi", default="gaussian:0.5")
    p.add_argument("--replicas", type=int, default=400)

    p = add("renewal", cmd_renewal, "renewal function and its limits")
    common(p, N=2**12)
    p.add_argument("--method", choices=("direct", "fft"), default="fft")
    p.add_argument("--samples", type=int, default=0, help="renewal paths for the Dickman comparison (0 skips it)")
    p.add_argument("--s", type=float, default=1.0)

    p = add("dickman-tab", cmd_dickman_tab, "tables of f_s, G_theta and its majorant")
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--s", default="0.5,1,2")
    p.add_argument("--grid", default="0.01,0.1,0.25,0.5,0.75,1")

    p = add("variance", cmd_variance, "averaged-field variance against its limit")
    p.add_argument("--N", default="1024,4096,16384")
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--phi", default="gaussian:0.5")
    p.add_argument("--family", default="gaussian", choices=("gaussian", "rademacher"))

    p = add("thirdmoment", cmd_thirdmoment, "stretch series of the third moment")
    common(p, N=256)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--mmax", type=int, default=4)
    p.add_argument("--phi", default="gaussian:0.5", help="test function, or 'point'")
    p.add_argument("--psi", default="one")
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--triple", action="store_true", help="also resum the triple intersections")

    p = add("bounds", cmd_bounds, "verify the combinatorial and analytic inequalities")
    p.add_argument("action", choices=("verify",))
    p.add_argument("--lemmas", default="all", help="comma-separated check groups, or 'all'")
    p.add_argument("--kmax", type=int, default=12)

    p = add("she", cmd_she, "mollified heat equation calculus")
    p.add_argument("which", choices=("theta", "variance", "renewal"))
    p.add_argument("--mollifier", default="disk")
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--eps", default="1e-2,1e-4,1e-6")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--phi", default="gaussian:0.5")
    p.add_argument("--samples", type=int, default=100_000)

    p = add("kernel", cmd_kernel, "continuum covariance kernel and third moment")
    p.add_argument("which", choices=("k", "variance-limit", "third"))
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--x", default="0.001,0.01,0.1,1")
    p.add_argument("--phi", default="gaussian:0.5")
    p.add_argument("--psi", default="one")
    p.add_argument("--route", choices=("energy", "kernel"), default="energy")
    p.add_argument("--mmax", type=int, default=4)
    p.add_argument("--samples", type=int, default=200_000)

    p = add("acceptance", cmd_acceptance, "run the acceptance criteria")
    p.add_argument("--criteria", default="all", help="comma-separated numbers, or 'all'")
    return parser


def _apply_config(parser: argparse.ArgumentParser, path: str, argv: list[str]) -> None:
    """Feed ``[command]`` and ``[command sub]`` sections of an INI file in as defaults."""
    cfg = configparser.ConfigParser()
    cfg.optionxform = str  # option names such as N are case-sensitive
    if not cfg.read(path):
        parser.error(f"cannot read config file {path!r}")
    if not any(cfg.items(s) for s in cfg.sections()) and not cfg.defaults():
        parser.error(f"config file {path!r} is empty")
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for name, sp in sub_action.choices.items():
        values = dict(cfg.defaults())
        if cfg.has_section(name):
            values.update(cfg.items(name, raw=True))
        for sec in cfg.sections():
            if sec.startswith(name + " ") and sec.split(None, 1)[1] in argv:
                values.update(cfg.items(sec, raw=True))
        known = {a.dest: a for a in sp._actions}
        if cfg.has_section(name):
            unknown = [k for k in cfg.options(name) if k.replace("-", "_") not in known and k not in cfg.defaults()]
            if unknown:
                parser.error(f"unknown option(s) {', '.join(unknown)} in section [{name}]")
        typed = {}
        for key, raw in values.items():
            dest = key.replace("-", "_")
            if dest in known and known[dest].option_strings:
                act = known[dest]
                if isinstance(act, argparse._StoreTrueAction):
                    typed[dest] = raw.strip().lower() in ("1", "true", "yes", "on")
                else:
                    typed[dest] = act.type(raw) if act.type else raw
        sp.set_defaults(**typed)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre, _ = parser.parse_known_args(argv)
    try:
        if pre.config:
            _apply_config(parser, pre.config, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    rep = RunReport(args.command, config_hash(args), args.seed)
    t0 = time.perf_counter()
    try:
        args.handler(args, rep)
    except (PolymerLabError, argparse.ArgumentTypeError) as exc:
        print(f"polymerlab {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(exc, argparse.ArgumentTypeError) else EXIT_FAILED
    rep.wall_time = time.perf_counter() - t0
    text = rep.to_json() if args.format == "json" else rep.to_csv()
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    for msg in rep.failures:
        print(f"invariant failed: {msg}", file=sys.stderr)
    return EXIT_FAILED if rep.failures else 0


if __name__ == "__main__":
    sys.exit(main())
