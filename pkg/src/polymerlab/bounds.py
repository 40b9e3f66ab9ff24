"""Executable versions of the bounds used to control the third-moment series.

Contents: the iterated kernels ``phi^(k)`` and their truncated (hatted)
variant, the polynomial coefficient recursions and the lattice paths that
count them, the Gamma-tail identity, the integral ``C_lambda`` of the
uniform ``G_theta`` majorant, and the ``J^(m)`` envelopes.  Each inequality
is checked pointwise on a grid by :func:`verify_all`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp

from .dickman import composite_gauss_legendre, g_theta, g_theta_bound, sample_g_theta_time
from .errors import DomainError

PHI_MAX_DEPTH = 8
COEFF_MAX_DEPTH = 14


# ---------------------------------------------------------------------------
# iterated kernels


@dataclass(frozen=True)
class PhiValue:
    value: float
    error: float


class PhiRecursion:
    """``phi^(k)(u) = int 1 / sqrt(s (s + u)) phi^(k-1)(s) ds`` by a Nystrom scheme.

    With ``s = e^{-y}`` the kernel becomes ``dy / sqrt(1 + u e^y)``, smooth in
    ``y`` with a transition of unit width at ``y = log(1/u)``.  Levels are
    stored at the quadrature nodes, so no interpolation is needed between
    levels.  The error estimate is the difference from a rule with half the
    panels.

    Parameters
    ----------
    N : int, optional
        If given, the hatted variant: ``phi^(0)(u) = 1/sqrt(u)`` and the
        integral runs over ``(1/N, 1)``.
    u_min : float
        Smallest argument for the plain variant; sets the truncation of the
        ``y`` axis so the neglected tail is below ``1e-15``.
    """

    def __init__(self, N: int | None = None, u_min: float = 1e-12, order: int = 12):
        self.N = None if N is None else int(N)
        if self.N is not None and self.N < 2:
            raise DomainError("N must be at least 2")
        self.u_min = float(u_min)
        y_max = math.log(self.N) if self.N is not None else math.log(1.0 / self.u_min) + 72.0
        self.y_max = y_max
        self.order = order
        panels = max(8, int(math.ceil(y_max)))
        self._rules = [self._levels(panels), self._levels(max(4, panels // 2))]

    def _levels(self, panels: int):
        y, w = composite_gauss_legendre(0.0, self.y_max, panels, self.order)
        s = np.exp(-y)
        start = np.ones_like(y) if self.N is None else np.exp(0.5 * y)
        A = w[None, :] / np.sqrt(1.0 + s[:, None] / s[None, :])
        levels = [start]
        for _ in range(PHI_MAX_DEPTH):
            levels.append(A @ levels[-1])
        return y, w, levels

    def _check(self, k: int, u: np.ndarray):
        if not 0 <= k <= PHI_MAX_DEPTH:
            raise DomainError(f"depth k must lie in 0..{PHI_MAX_DEPTH}")
        lo = 0.0 if self.N is None else 1.0 / self.N
        if np.any((u <= lo) | (u > 1)):
            raise DomainError(f"u must lie in ({lo:g}, 1]")
        if self.N is None and np.any(u < self.u_min):
            raise DomainError(f"u below u_min={self.u_min:g}; build with a smaller u_min")

    def _eval(self, rule, k: int, u: np.ndarray) -> np.ndarray:
        y, w, levels = rule
        if k == 0:
            return levels[0][:1].repeat(u.size) if self.N is None else 1.0 / np.sqrt(u)
        row = w[None, :] / np.sqrt(1.0 + u[:, None] * np.exp(y)[None, :])
        return row @ levels[k - 1]

    def __call__(self, k: int, u):
        """Values of ``phi^(k)`` at ``u`` (array or float)."""
        u_arr = np.atleast_1d(np.asarray(u, dtype=float))
        self._check(k, u_arr)
        out = self._eval(self._rules[0], k, u_arr)
        return float(out[0]) if np.ndim(u) == 0 else out.reshape(np.shape(u))

    def with_error(self, k: int, u) -> PhiValue:
        u_arr = np.atleast_1d(np.asarray(u, dtype=float))
        self._check(k, u_arr)
        fine = self._eval(self._rules[0], k, u_arr)
        coarse = self._eval(self._rules[1], k, u_arr)
        return PhiValue(float(fine[0]), float(abs(fine[0] - coarse[0])))

    def integral(self, k: int) -> float:
        """``int_0^1 phi^(k)(u) du`` (plain variant) using the stored levels."""
        if self.N is not None:
            raise DomainError("integral is defined for the plain variant")
        y, w, levels = self._rules[0]
        if k == 0:
            return 1.0
        # int_0^1 phi^(k)(u) du = int phi^(k-1)(s) int_0^1 du / sqrt(s (s+u)) ds
        s = np.exp(-y)
        inner = 2.0 * (np.sqrt(1.0 + s) - np.sqrt(s)) / np.sqrt(s)
        return float(np.sum(w * s * inner * levels[k - 1]))


@lru_cache(maxsize=8)
def _plain(u_min: float) -> PhiRecursion:
    return PhiRecursion(None, u_min)


@lru_cache(maxsize=8)
def _hatted(N: int) -> PhiRecursion:
    return PhiRecursion(N)


def phi_k(k: int, u, N: int | None = None, with_error: bool = False):
    """``phi^(k)(u)``, or the hatted variant ``hat phi^(k)(u)`` when ``N`` is given.

    Raises
    ------
    DomainError
        If ``u`` is outside ``(0, 1]`` (``(1/N, 1]`` hatted) or ``k > 8``.
    """
    if N is None:
        u_min = float(np.min(u)) if np.size(u) else 1.0
        rec = _plain(min(1e-12, 10.0 ** math.floor(math.log10(u_min)))) if u_min > 0 else _plain(1e-12)
    else:
        rec = _hatted(int(N))
    if with_error:
        return rec.with_error(k, u)
    return rec(k, u)


def phi_1_closed_form(u) -> np.ndarray:
    """``phi^(1)(u) = 2 asinh(1 / sqrt(u))``."""
    return 2.0 * np.arcsinh(1.0 / np.sqrt(np.asarray(u, dtype=float)))


# ---------------------------------------------------------------------------
# coefficients and lattice paths


def coefficient_recursion(k_max: int, hatted: bool = False) -> dict[tuple[int, int], int]:
    """``c_{k,i}`` (or ``hat c_{k,i}``) for ``1 <= k <= k_max``, as exact integers.

    ``c_{k,i} = 2 sum_{j >= (i-1)^+} c_{k-1,j}`` from ``c_{1,0} = 0, c_{1,1} = 2``;
    the hatted version drops the factor 2 and starts from ``(0, 1)``.
    """
    factor = 1 if hatted else 2
    c = {(1, 0): 0, (1, 1): factor}
    for k in range(2, k_max + 1):
        prev = [c[(k - 1, j)] for j in range(k)]
        suffix = np.cumsum(prev[::-1])[::-1].tolist()  # suffix[j] = sum_{j' >= j} prev[j']
        for i in range(k + 1):
            c[(k, i)] = factor * int(suffix[max(i - 1, 0)])
    return c


def enumerate_path_ends(k: int) -> np.ndarray:
    """End points ``j_k`` of every path in the union of ``S_k(i)`` over ``i``.

    Paths start at ``j_1 = 1``, stay non-negative and rise by at most one per
    step.  Every path is materialised, one array entry per path.
    """
    if k < 1:
        raise DomainError("k must be positive")
    ends = np.array([1], dtype=np.int64)
    for _ in range(k - 1):
        fan = ends + 2  # children 0..j+1
        ends = np.arange(fan.sum()) - np.repeat(np.cumsum(fan) - fan, fan)
    return ends


def path_counts(k: int) -> np.ndarray:
    """``|S_k(i)|`` for ``i = 0..k`` by exhaustive enumeration."""
    return np.bincount(enumerate_path_ends(k), minlength=k + 1)[: k + 1]


def _paths(k: int):
    """Explicit paths of ``S_k`` (all end points) by depth-first search."""
    out = []

    def dfs(path):
        if len(path) == k:
            out.append(tuple(path))
            return
        for nxt in range(path[-1] + 2):
            path.append(nxt)
            dfs(path)
            path.pop()

    dfs([1])
    return out


def encode_path(path) -> tuple[str, ...]:
    """Map a path to nearest-neighbour increments ``+``, ``0``, ``-``, ``0*``.

    A downward jump of size ``d`` becomes ``d`` unit descents followed by a
    marked zero, which makes the map injective.
    """
    word: list[str] = []
    for a, b in zip(path[:-1], path[1:]):
        if b == a + 1:
            word.append("+")
        elif b == a:
            word.append("0")
        else:
            word.extend(["-"] * (a - b))
            word.append("0*")
    return tuple(word)


@dataclass
class CoefficientTable:
    """Recursion coefficients alongside the enumerated path counts."""

    k_max: int
    c: dict
    c_hat: dict
    counts: dict = field(default_factory=dict)

    def identity_holds(self) -> bool:
        """``c_{k,i} = 2^k |S_k(i)|`` and ``hat c_{k,i} = 2^{-k} c_{k,i}`` for all entries."""
        for k in range(1, self.k_max + 1):
            for i in range(k + 1):
                if self.c[(k, i)] != 2**k * int(self.counts[k][i]):
                    return False
                if self.c_hat[(k, i)] * 2**k != self.c[(k, i)]:
                    return False
        return True

    def max_ratio(self, base: int, which: str = "c") -> float:
        """Largest ``c_{k,i} / base^k`` (or ``|S_k(i)| / base^k``)."""
        worst = 0.0
        for k in range(1, self.k_max + 1):
            for i in range(k + 1):
                v = self.c[(k, i)] if which == "c" else int(self.counts[k][i])
                worst = max(worst, v / base**k)
        return worst


def c_table(k_max: int) -> CoefficientTable:
    """Recursion values and exhaustive path counts for ``k <= k_max``."""
    if not 1 <= k_max <= COEFF_MAX_DEPTH:
        raise DomainError(f"k_max must lie in 1..{COEFF_MAX_DEPTH}")
    c = coefficient_recursion(k_max)
    c_hat = coefficient_recursion(k_max, hatted=True)
    counts = {k: path_counts(k) for k in range(1, k_max + 1)}
    return CoefficientTable(k_max, c, c_hat, counts)


def encoding_check(k: int) -> tuple[bool, int, int]:
    """Injectivity and length range of :func:`encode_path` on all of ``S_k``.

    Returns ``(injective, min_length, max_length)``, lengths counted in path
    points (increments + 1).
    """
    paths = _paths(k)
    words = [encode_path(p) for p in paths]
    lengths = [len(w) + 1 for w in words]
    return len(set(words)) == len(words), min(lengths), max(lengths)


# ---------------------------------------------------------------------------
# Gamma tail and the G_theta majorant


def gamma_tail(k: int, t: float, log: bool = False) -> float:
    """``int_t^inf y^k e^{-y} dy = e^{-t} sum_{i <= k} (k!/i!) t^i``.

    Evaluated in log space so large ``k`` does not overflow.
    """
    if k < 0 or t < 0:
        raise DomainError("need k >= 0 and t >= 0")
    i = np.arange(k + 1)
    if t == 0:
        val = gammaln(k + 1)
    else:
        val = -t + gammaln(k + 1) + logsumexp(i * math.log(t) - gammaln(i + 1))
    return float(val) if log else float(np.exp(val))


def g_hat_integral(c_theta: float, lam: float, y_max: float = 80.0) -> float:
    """``int_0^1 e^{-lam v} c / (v log(e^2/v)^2) dv`` on ``v = e^{-y}`` plus the analytic tail."""
    y, w = composite_gauss_legendre(0.0, y_max, 160)
    body = np.sum(w * np.exp(-lam * np.exp(-y)) / (2.0 + y) ** 2)
    tail = 1.0 / (2.0 + y_max)  # e^{-lam v} = 1 to double precision beyond y_max for lam <= 1e20
    return float(c_theta * (body + tail))


def g_theta_weighted_integral(theta: float, lam: float, y_max: float = 600.0) -> float:
    """``int_0^1 e^{-lam v} G_theta(v) dv`` with ``v = e^{-y}``.

    Beyond ``y_max`` the integrand ``v G_theta(v)`` is replaced by its leading
    term ``1/y^2``, giving the tail ``1/y_max``.
    """
    y, w = composite_gauss_legendre(0.0, y_max, 600, 16)
    v = np.exp(-y)
    body = np.sum(w * np.exp(-lam * v) * v * g_theta(theta, v))
    return float(body + 1.0 / y_max)


@dataclass(frozen=True)
class CLambda:
    """``int_0^1 e^{-lambda v} hat G_theta(v) dv`` against ``frak c / (2 + log lambda)``."""

    theta: float
    lam: float
    c_theta: float
    integral: float
    split_bound: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.integral <= self.split_bound <= self.bound


def c_lambda(theta: float, lam: float, c_theta: float | None = None) -> CLambda:
    """Evaluate the ``C_lambda`` inequality chain with ``frak c_theta = 2 c_theta``.

    The middle term is ``(1 + 1/e) int_0^{1/lambda} hat G = (1 + 1/e) c / (2 + log lambda)``.
    """
    if lam < 1:
        raise DomainError("lambda must be at least 1")
    if c_theta is None:
        c_theta = g_theta_bound(theta).c_theta
    integral = g_hat_integral(c_theta, lam)
    split = (1.0 + math.exp(-1.0)) * c_theta / (2.0 + math.log(lam))
    bound = 2.0 * c_theta / (2.0 + math.log(lam))
    return CLambda(float(theta), float(lam), float(c_theta), integral, split, bound)


def j_m_envelope(theta: float, m: int, lam: float | None = None, c_theta: float | None = None, log: bool = False) -> float:
    """``e^lambda (32 C_lambda)^m`` with ``C_lambda = frak c / (2 + log lambda)``; ``lambda = m`` by default."""
    if m < 2:
        raise DomainError("m must be at least 2")
    lam = float(m) if lam is None else float(lam)
    if c_theta is None:
        c_theta = g_theta_bound(theta).c_theta
    C = 2.0 * c_theta / (2.0 + math.log(lam))
    val = lam + m * math.log(32.0 * C)
    return val if log else math.exp(val)


def j_m_sharp(theta: float, m: int, lam: float, phi: PhiRecursion | None = None) -> float:
    """The intermediate bound ``e^lambda (int e^{-lambda v} G_theta)^m int phi^(m-2)``.

    Uses the actual ``G_theta`` and the computed ``phi^(m-2)``, before the two
    majorisations that produce :func:`j_m_envelope`.
    """
    if m < 2:
        raise DomainError("m must be at least 2")
    phi = phi or _plain(1e-12)
    return math.exp(lam) * g_theta_weighted_integral(theta, lam) ** m * phi.integral(m - 2)


def j_m_mc(theta: float, m: int, samples: int = 200_000, seed: int = 0, t: float = 1.0):
    """Monte Carlo estimate of ``J^(m)`` on the ordered simplex of ``(0, t)``.

    Stretch lengths ``v_i`` are drawn from ``G_theta`` on ``(0, t)``; gaps
    ``u_1, u_2`` are uniform and ``u_i`` for ``i >= 3`` have density
    ``1 / (2 sqrt(u t))``, which absorbs the ``1/sqrt(u_i)`` singularity.

    Returns
    -------
    (estimate, standard error)
    """
    if m < 2:
        raise DomainError("m must be at least 2")
    rng = np.random.default_rng(seed)
    v = np.empty((samples, m))
    mass = 1.0
    for i in range(m):
        v[:, i], mass = sample_g_theta_time(theta, t, rng, samples)
    u = np.empty((samples, m))
    u[:, :2] = rng.random((samples, 2)) * t
    weight = np.full(samples, mass**m * t * t)
    if m > 2:
        u[:, 2:] = t * rng.random((samples, m - 2)) ** 2
    for i in range(2, m):
        # density of u_i is 1/(2 sqrt(u t)); integrand has 1/sqrt(u_i (u_i + v_{i-1} + u_{i-1}))
        weight *= 2.0 * math.sqrt(t) / np.sqrt(u[:, i] + v[:, i - 1] + u[:, i - 1])
    inside = (u.sum(axis=1) + v.sum(axis=1)) < t
    vals = np.where(inside, weight, 0.0)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


# ---------------------------------------------------------------------------
# grid verification


@dataclass(frozen=True)
class CheckResult:
    """One inequality family on its grid.

    ``margin`` is the smallest relative slack ``(rhs - lhs) / rhs``; a check
    passes when it is positive (or zero for identities flagged ``exact``).
    """

    name: str
    passed: bool
    margin: float
    points: int
    exact: bool = False

    def as_dict(self) -> dict:
        return {"check": self.name, "passed": self.passed, "margin": self.margin, "points": self.points, "exact": self.exact}


def _ineq(name: str, lhs, rhs) -> CheckResult:
    lhs = np.asarray(lhs, dtype=float).ravel()
    rhs = np.asarray(rhs, dtype=float).ravel()
    margin = float(np.min((rhs - lhs) / np.abs(rhs)))
    return CheckResult(name, bool(margin > 0), margin, lhs.size)


def _poly_log(coeffs, L):
    """``sum_i coeffs[i] L^i / (2^i i!)``."""
    return sum(cf * L**i / (2.0**i * math.factorial(i)) for i, cf in enumerate(coeffs))


def check_phi1_log(v=None) -> CheckResult:
    v = np.logspace(-12, 0, 200)[:-1] if v is None else v
    return _ineq("phi1-log-bound", phi_1_closed_form(v), 2.0 + np.log(1.0 / v))


def check_intlog(k_max: int = 6, v=None) -> CheckResult:
    """``int_0^1 log(e^2/s)^k / sqrt(s(s+v)) ds <= 2^{k+1} k! sum_{i<=k+1} log(e^2/v)^i / (2^i i!)``."""
    v = np.logspace(-10, 0, 60)[:-1] if v is None else v
    y, w = composite_gauss_legendre(0.0, 140.0, 280, 16)
    s = np.exp(-y)
    lhs, rhs = [], []
    for k in range(k_max + 1):
        integrand = (2.0 + y[None, :]) ** k / np.sqrt(1.0 + v[:, None] / s[None, :])
        lhs.append(integrand @ w)
        L = np.log(np.e**2 / v)
        rhs.append(2.0 ** (k + 1) * math.factorial(k) * _poly_log([1.0] * (k + 2), L))
    return _ineq("log-moment-integral", lhs, rhs)


def check_gamma_tail(ks=range(0, 7), ts=(0.5, 1.0, 2.0)) -> CheckResult:
    """Identity against quadrature of ``int_t^inf y^k e^{-y} dy``; margin is the negated worst relative error."""
    worst = 0.0
    n = 0
    for k in ks:
        for t in ts:
            y, w = composite_gauss_legendre(t, t + 80.0, 80, 24)
            ref = float(np.sum(w * y**k * np.exp(-y)))
            worst = max(worst, abs(gamma_tail(k, t) - ref) / ref)
            n += 1
    return CheckResult("gamma-tail-identity", worst < 1e-10, -worst, n, exact=True)


def check_phik_coefficients(k_max: int = 5, v=None) -> CheckResult:
    """``phi^(k)(v) <= sum_i c_{k,i} log(e^2/v)^i / (2^i i!)`` and the ``32^k`` form."""
    v = np.logspace(-10, 0, 80)[:-1] if v is None else v
    c = coefficient_recursion(k_max)
    rec = _plain(1e-12)
    L = np.log(np.e**2 / v)
    lhs, rhs = [], []
    for k in range(1, k_max + 1):
        val = rec(k, v)
        sharp = _poly_log([c[(k, i)] for i in range(k + 1)], L)
        loose = 32.0**k * sum((0.5 * L) ** i / math.factorial(i) for i in range(k + 1))
        lhs += [val, sharp, loose]
        rhs += [sharp, loose, 32.0**k * np.e / np.sqrt(v)]
    return _ineq("phik-polylog-bound", np.concatenate(lhs), np.concatenate(rhs))


def check_phik_monotone(k_max: int = 6, hatted_N: int | None = None) -> CheckResult:
    lo = -10 if hatted_N is None else math.log10(1.0 / hatted_N) + 1e-9
    u = np.logspace(lo, 0, 300)[1:]
    rec = _plain(1e-12) if hatted_N is None else _hatted(hatted_N)
    worst = math.inf
    for k in range(1, k_max + 1):
        vals = rec(k, u)
        worst = min(worst, float(np.min(-np.diff(vals) / vals[:-1])))
    name = "phik-decreasing" if hatted_N is None else "phik-hatted-decreasing"
    return CheckResult(name, worst > 0, worst, u.size * k_max)


def check_coefficients(k_max: int = 12) -> list[CheckResult]:
    tab = c_table(k_max)
    out = [CheckResult("coefficient-path-identity", tab.identity_holds(), 0.0, sum(k + 1 for k in range(1, k_max + 1)), exact=True)]
    r32 = tab.max_ratio(32, "c")
    r16 = tab.max_ratio(16, "paths")
    out.append(CheckResult("coefficient-growth-32", r32 < 1, 1.0 - r32, len(tab.c)))
    out.append(CheckResult("path-count-growth-16", r16 < 1, 1.0 - r16, len(tab.c)))
    ok = True
    for k in range(1, min(k_max, 8) + 1):
        inj, lo, hi = encoding_check(k)
        ok &= inj and k <= lo and hi <= 2 * k
    out.append(CheckResult("path-encoding-injective", ok, 0.0, min(k_max, 8), exact=True))
    return out


def check_c_lambda(theta: float = 0.0, lams=(1.0, math.e**2 - 2.0, 10.0, 100.0, 1e3, 1e6)) -> list[CheckResult]:
    cert = g_theta_bound(theta)
    rows = [c_lambda(theta, lam, cert.c_theta) for lam in lams]
    chain = _ineq("ghat-integral-split", [r.integral for r in rows], [r.split_bound for r in rows])
    final = _ineq("ghat-integral-bound", [r.split_bound for r in rows], [r.bound for r in rows])
    true_g = _ineq("gtheta-integral-below-ghat", [g_theta_weighted_integral(theta, lam) for lam in lams], [r.integral for r in rows])
    bounds = [r.bound for r in rows]
    dec = float(np.min(-np.diff(bounds) / np.asarray(bounds[:-1])))
    return [chain, final, true_g, CheckResult("c-lambda-decreasing", dec > 0, dec, len(rows))]


def check_envelope_chain(theta: float = 0.0, ms=(2, 3, 4, 5, 6)) -> CheckResult:
    """``e^l I_l^m int phi^(m-2) <= e^l (int e^{-l v} hat G)^m 32^{m-2} 2e <= e^l (32 C_l)^m`` at ``l = m``."""
    cert = g_theta_bound(theta)
    rec = _plain(1e-12)
    lhs, rhs = [], []
    for m in ms:
        lam = float(m)
        sharp = j_m_sharp(theta, m, lam, rec)
        mid = math.exp(lam) * g_hat_integral(cert.c_theta, lam) ** m * 32.0 ** (m - 2) * 2.0 * math.e
        lhs += [sharp, mid]
        rhs += [mid, j_m_envelope(theta, m, lam, cert.c_theta)]
    return _ineq("j-envelope-chain", lhs, rhs)


def check_intlog_hatted(N: int = 10_000, i_max: int = 5) -> CheckResult:
    """``int_{1/N}^1 log(e^2 N s)^i / (s sqrt(s+v)) ds <= 2^{i+1} i! / sqrt(v) sum_{j<=i+1} log(e^2 N v)^j / (2^j j!)``."""
    v = np.logspace(math.log10(1.0 / N), 0, 60)[1:]
    y, w = composite_gauss_legendre(0.0, math.log(N), 200, 16)
    s = np.exp(-y)
    lhs, rhs = [], []
    for i in range(i_max + 1):
        # ds / s = dy
        integrand = np.log(np.e**2 * N * s)[None, :] ** i / np.sqrt(s[None, :] + v[:, None])
        lhs.append(integrand @ w)
        Lv = np.log(np.e**2 * N * v)
        rhs.append(2.0 ** (i + 1) * math.factorial(i) / np.sqrt(v) * _poly_log([1.0] * (i + 2), Lv))
    return _ineq("log-moment-integral-truncated", lhs, rhs)


def check_phik_hatted(N: int = 10_000, k_max: int = 4) -> CheckResult:
    """Hatted coefficient bound, its ``32^k`` form and ``32^k e sqrt(N)``."""
    u = np.logspace(math.log10(1.0 / N), 0, 80)[1:]
    ch = coefficient_recursion(k_max, hatted=True)
    rec = _hatted(N)
    Lu = np.log(np.e**2 * N * u)
    lhs, rhs = [], []
    for k in range(1, k_max + 1):
        val = rec(k, u)
        sharp = 2.0**k / np.sqrt(u) * _poly_log([ch[(k, i)] for i in range(k + 1)], Lu)
        loose = 32.0**k / np.sqrt(u) * _poly_log([1.0] * (k + 1), Lu)
        lhs += [val, sharp, loose]
        rhs += [sharp, loose, np.full_like(u, 32.0**k * np.e * math.sqrt(N))]
    return _ineq("phik-hatted-bound", np.concatenate(lhs), np.concatenate(rhs))


def check_gtheta_certificate(theta: float = 0.0) -> CheckResult:
    cert = g_theta_bound(theta)
    ok, worst = cert.verify()
    return CheckResult("gtheta-uniform-majorant", ok, 1.0 - worst, cert.grid.size * 10)


CHECK_GROUPS = {
    "gtheta-majorant": lambda: [check_gtheta_certificate()],
    "c-lambda": check_c_lambda,
    "phi1": lambda: [check_phi1_log()],
    "intlog": lambda: [check_intlog()],
    "gamma-tail": lambda: [check_gamma_tail()],
    "phik": lambda: [check_phik_coefficients(), check_phik_monotone()],
    "coefficients": check_coefficients,
    "envelope": lambda: [check_envelope_chain()],
    "intlog-hatted": lambda: [check_intlog_hatted()],
    "phik-hatted": lambda: [check_phik_hatted(), check_phik_monotone(4, 10_000)],
}


def verify_all(groups=None) -> list[CheckResult]:
    """Run the named check groups (default: all)."""
    names = list(CHECK_GROUPS) if groups in (None, "all", ["all"]) else list(groups)
    out: list[CheckResult] = []
    for name in names:
        if name not in CHECK_GROUPS:
            raise DomainError(f"unknown check group {name!r}")
        out.extend(CHECK_GROUPS[name]())
    return out
