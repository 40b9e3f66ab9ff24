"""Mollified two-dimensional stochastic heat equation in its critical window.

A mollifier ``j`` is a radial probability density with compact support and
``J = j * j``.  The pair overlap ``r(t) = <J, g_{2t} J>`` and its integral
``R_eps`` up to ``eps^-2`` play the roles of ``u_n^2`` and ``R_N`` for the
polymer; they are computed as Hankel integrals of ``j_hat^4``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import exp1, j0, j1

from .dickman import composite_gauss_legendre, g_theta_cumulative
from .errors import DomainError, PrecisionWarning
from .kernels import GaussianBump, RadialTestFunction, variance_limit
from .lattice import EULER_GAMMA, heat_kernel

_K_SPLIT = 1.0


# ---------------------------------------------------------------------------
# mollifiers


class Mollifier:
    """Radial, compactly supported probability density ``j(x) = f(|x|)``.

    Parameters
    ----------
    profile : callable
        Radial profile; it is renormalised to unit mass.
    support : float
        ``f(r) = 0`` for ``r >= support``.
    j_hat, J_closed : callable, optional
        Closed forms for the Fourier transform of ``j`` and for ``J = j * j``
        as functions of the radius; otherwise both come from Hankel
        transforms.
    """

    def __init__(self, profile, support: float, name: str = "mollifier", j_hat=None, J_closed=None):
        if not support > 0:
            raise DomainError("support must be positive")
        self.support = float(support)
        self.name = name
        self._r, self._wr = composite_gauss_legendre(0.0, self.support, 64, 24)
        raw = np.asarray(profile(self._r), dtype=float)
        mass = float(np.sum(raw * 2 * np.pi * self._r * self._wr))
        self._profile = profile
        self._scale = 1.0 / mass
        self._fr = raw * self._scale
        self._j_hat = j_hat
        self._J_closed = J_closed
        self._J_spline = None

    def __call__(self, x) -> np.ndarray:
        r = np.hypot(np.asarray(x)[..., 0], np.asarray(x)[..., 1])
        return self.radial(r)

    def radial(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return np.where(r < self.support, self._scale * self._profile(np.minimum(r, self.support)), 0.0)

    def j_hat(self, k) -> np.ndarray:
        """``int j(x) e^{i k.x} dx`` as a function of ``|k|``; equals 1 at 0."""
        if self._j_hat is not None:
            return self._j_hat(np.asarray(k, dtype=float))
        k = np.atleast_1d(np.asarray(k, dtype=float))
        out = np.empty(k.shape)
        for lo in range(0, k.size, 2048):
            kk = k.ravel()[lo:lo + 2048]
            out.ravel()[lo:lo + 2048] = j0(np.outer(kk, self._r)) @ (self._fr * 2 * np.pi * self._r * self._wr)
        return out

    def J(self, r) -> np.ndarray:
        """``J = j * j`` as a function of the radius (support ``2 * support``)."""
        r = np.asarray(r, dtype=float)
        if self._J_closed is not None:
            return self._J_closed(r)
        if self._J_spline is None:
            from scipy.interpolate import CubicSpline

            nodes = 2 * self.support * 0.5 * (1 - np.cos(np.linspace(0.0, np.pi, 1201)))
            self._J_spline = CubicSpline(nodes, self._J_hankel(nodes))
        return np.where(r < 2 * self.support, self._J_spline(np.minimum(r, 2 * self.support)), 0.0)

    def _J_hankel(self, r: np.ndarray) -> np.ndarray:
        k, wk = composite_gauss_legendre(0.0, 400.0 / self.support, 800, 24)
        jh2 = self.j_hat(k) ** 2 * k * wk / (2 * np.pi)
        flat = r.ravel()
        out = np.empty(flat.shape)
        for lo in range(0, flat.size, 512):
            out[lo:lo + 512] = j0(np.outer(flat[lo:lo + 512], k)) @ jh2
        out = np.where(flat < 2 * self.support, out, 0.0)
        return out.reshape(r.shape)

    def J_mass(self) -> float:
        r, w = composite_gauss_legendre(0.0, 2 * self.support, 64, 24)
        return float(np.sum(self.J(r) * 2 * np.pi * r * w))


def disk_mollifier(radius: float = 0.5) -> Mollifier:
    """Uniform density on the disk of the given radius, with closed-form ``j_hat`` and ``J``."""
    a = float(radius)

    def j_hat(k):
        z = np.asarray(k, dtype=float) * a
        safe = np.where(z == 0, 1.0, z)
        return np.where(z == 0, 1.0, 2.0 * j1(safe) / safe)

    def J_closed(r):
        r = np.asarray(r, dtype=float)
        rr = np.minimum(r, 2 * a)
        lens = 2 * a * a * np.arccos(rr / (2 * a)) - 0.5 * rr * np.sqrt(np.maximum(4 * a * a - rr * rr, 0.0))
        return np.where(r < 2 * a, lens / (np.pi**2 * a**4), 0.0)

    return Mollifier(lambda r: np.ones_like(np.asarray(r, dtype=float)), a, "disk", j_hat, J_closed)


def bump_mollifier(radius: float = 0.5) -> Mollifier:
    """``exp(-1 / (1 - |x|^2 / radius^2))`` on the disk, normalised."""
    a = float(radius)

    def profile(r):
        s = np.asarray(r, dtype=float) / a
        inside = s < 1
        out = np.zeros_like(s)
        out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
        return out

    return Mollifier(profile, a, "bump")


def truncated_gaussian_mollifier(width: float = 0.15, cutoff: float = 3.0) -> Mollifier:
    """Gaussian of the given width cut at ``cutoff`` widths and renormalised.

    The mass removed by the cut, ``exp(-cutoff^2 / 2)``, is reported as
    ``support_penalty``.
    """
    s = float(width)
    m = Mollifier(lambda r: np.exp(-np.asarray(r, dtype=float) ** 2 / (2 * s * s)), cutoff * s, "truncated-gaussian")
    m.support_penalty = float(np.exp(-cutoff * cutoff / 2.0))
    return m


MOLLIFIERS = {"disk": disk_mollifier, "bump": bump_mollifier, "truncated-gaussian": truncated_gaussian_mollifier}


def mollifier_by_name(name: str) -> Mollifier:
    try:
        return MOLLIFIERS[name]()
    except KeyError:
        raise DomainError(f"unknown mollifier {name!r}; choose from {sorted(MOLLIFIERS)}") from None


# ---------------------------------------------------------------------------
# overlap and its integral


def _k_nodes(moll: Mollifier, k_lo: float):
    """Nodes for ``int_0^inf F(k) dk / k``: log-spaced below ``_K_SPLIT``, linear above."""
    y, wy = composite_gauss_legendre(np.log(k_lo), np.log(_K_SPLIT), max(8, int(np.ceil(np.log(_K_SPLIT / k_lo)))), 16)
    k_log = np.exp(y)
    k_max = 600.0 / moll.support
    k_lin, w_lin = composite_gauss_legendre(_K_SPLIT, k_max, int(np.ceil(4 * (k_max - _K_SPLIT) * moll.support)), 16)
    # dk / k = dy on the log part
    return np.concatenate([k_log, k_lin]), np.concatenate([wy, w_lin / k_lin])


def overlap_r(moll: Mollifier, t) -> np.ndarray | float:
    """``r(t) = <J, g_{2t} J> = (1 / 2 pi) int_0^inf j_hat(k)^4 e^{-t k^2} k dk``."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0):
        raise DomainError("r(t) needs t > 0")
    k, wk = _k_nodes(moll, 1e-8 / np.sqrt(max(float(t_arr.max()), 1.0)))
    base = moll.j_hat(k) ** 4 * k * k * wk / (2 * np.pi)  # k dk = k^2 (dk / k)
    out = np.exp(-np.outer(np.atleast_1d(t_arr).ravel(), k * k)) @ base
    return float(out[0]) if t_arr.ndim == 0 else out.reshape(t_arr.shape)


def overlap_r_mc(moll: Mollifier, t: float, samples: int = 400_000, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo ``E[g_{2t}(X - Y)]`` with ``X, Y`` independent with density ``J``.

    Each of ``X``, ``Y`` is a sum of two independent draws from ``j``, sampled
    by inverting the radial mass function.
    """
    rng = np.random.default_rng(seed)
    r = np.linspace(0.0, moll.support, 4001)
    dens = moll.radial(r) * 2 * np.pi * r
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(r))])
    cdf /= cdf[-1]

    def draw(n):
        rad = np.interp(rng.random(n), cdf, r)
        ang = rng.random(n) * 2 * np.pi
        return np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=-1)

    diff = draw(samples) + draw(samples) - draw(samples) - draw(samples)
    vals = heat_kernel(2.0 * t, diff)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(samples))


def overlap_integral(moll: Mollifier, T) -> np.ndarray | float:
    """``R(T) = int_0^T r(t) dt = (1 / 2 pi) int_0^inf j_hat^4 (1 - e^{-T k^2}) dk / k``."""
    T_arr = np.asarray(T, dtype=float)
    if np.any(T_arr <= 0):
        raise DomainError("T must be positive")
    k, wk = _k_nodes(moll, 1e-6 / np.sqrt(float(T_arr.max())))
    base = moll.j_hat(k) ** 4 * wk / (2 * np.pi)
    out = -np.expm1(-np.outer(np.atleast_1d(T_arr).ravel(), k * k)) @ base
    return float(out[0]) if T_arr.ndim == 0 else out.reshape(T_arr.shape)


# ---------------------------------------------------------------------------
# the effective window parameter


def log_potential(moll: Mollifier, route: str = "real") -> float:
    """``int int J(x) log(1 / |x - y|) J(y) dx dy``.

    ``route="real"`` uses Newton's theorem for radial densities: the
    circular average of ``log(1 / |x - y|)`` over ``|y| = s`` equals
    ``log(1 / max(|x|, s))``, which leaves two nested radial integrals split
    at the kink.  ``route="fourier"`` uses
    ``int_0^inf (j_hat^4 - 1{k < 1}) dk / k + gamma - log 2``.
    """
    if route == "fourier":
        k, wk = _k_nodes(moll, 1e-10)
        f = moll.j_hat(k) ** 4 - (k < _K_SPLIT)
        return float(np.sum(f * wk)) + EULER_GAMMA - np.log(2.0)
    if route != "real":
        raise DomainError("route must be 'real' or 'fourier'")
    R = 2 * moll.support
    r, wr = composite_gauss_legendre(0.0, R, 48, 16)
    x, wx = np.polynomial.legendre.leggauss(24)
    total = 0.0
    Jr = moll.J(r)
    for ri, wi, Ji in zip(r, wr, Jr):
        # inner: int_0^R J(s) 2 pi s log(1 / max(ri, s)) ds, split at s = ri
        s_in = 0.5 * ri * (x + 1)
        w_in = 0.5 * ri * wx
        inner = np.log(1.0 / ri) * np.sum(moll.J(s_in) * 2 * np.pi * s_in * w_in)
        s_out, w_out = composite_gauss_legendre(ri, R, 8, 24)
        inner += np.sum(moll.J(s_out) * 2 * np.pi * s_out * np.log(1.0 / s_out) * w_out)
        total += Ji * inner * 2 * np.pi * ri * wi
    return float(total)


def theta_effective(moll: Mollifier, rho: float = 0.0, route: str = "real") -> float:
    """``log 4 + 2 * log_potential - gamma + rho / pi``."""
    return float(np.log(4.0) + 2.0 * log_potential(moll, route) - EULER_GAMMA + rho / np.pi)


def beta_eps_squared(epsilon: float, rho: float = 0.0) -> float:
    """``2 pi / log(1/eps) + rho / log(1/eps)^2``."""
    if not 0 < epsilon < 1:
        raise DomainError("epsilon must lie in (0, 1)")
    L = np.log(1.0 / epsilon)
    b2 = 2 * np.pi / L + rho / L**2
    if not b2 > 0:
        raise DomainError("rho too negative for this epsilon: beta^2 is not positive")
    return float(b2)


def bertini_cancrini_parameter(theta: float) -> float:
    """``exp(theta - gamma)``, the parameter of the same covariance in the older parametrisation."""
    return float(np.exp(theta - EULER_GAMMA))


@dataclass(frozen=True)
class ContinuumWindow:
    """Critical window of the mollified equation at one ``eps``.

    ``window_theta = (beta^2 R_eps - 1) log eps^-2`` is the finite-``eps``
    version of ``theta_eff``.
    """

    epsilon: float
    rho: float
    beta2: float
    R_eps: float
    theta_eff: float
    window_theta: float
    mollifier: str = "disk"

    @property
    def gap(self) -> float:
        return self.window_theta - self.theta_eff

    def as_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "rho": self.rho,
            "beta2": self.beta2,
            "R_eps": self.R_eps,
            "theta_eff": self.theta_eff,
            "window_theta": self.window_theta,
            "gap": self.gap,
            "bertini_cancrini": bertini_cancrini_parameter(self.theta_eff),
            "mollifier": self.mollifier,
        }


def continuum_window(moll: Mollifier, epsilon: float, rho: float = 0.0) -> ContinuumWindow:
    b2 = beta_eps_squared(epsilon, rho)
    T = epsilon**-2
    R = overlap_integral(moll, T)
    return ContinuumWindow(float(epsilon), float(rho), b2, R, theta_effective(moll, rho), float((b2 * R - 1.0) * np.log(T)), moll.name)


def overlap_integral_asymptotic(moll: Mollifier, T: float) -> float:
    """``(log T + 2 I + gamma + E1(T)) / (4 pi)`` with ``I = int (j_hat^4 - 1{k<1}) dk / k``.

    Drops only the ``O(1/T)`` term ``int (j_hat^4 - 1{k<1}) e^{-T k^2} dk / k``.
    """
    k, wk = _k_nodes(moll, 1e-10)
    I = float(np.sum((moll.j_hat(k) ** 4 - (k < _K_SPLIT)) * wk))
    return float((np.log(T) + 2 * I + EULER_GAMMA + exp1(T)) / (4 * np.pi))


def heat_product_identity(t: float, x, y) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of ``g_t(x) g_t(y) = 4 g_{2t}(x - y) g_{2t}(x + y)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return heat_kernel(t, x) * heat_kernel(t, y), 4.0 * heat_kernel(2 * t, x - y) * heat_kernel(2 * t, x + y)


# ---------------------------------------------------------------------------
# variance of the averaged solution


def _rescaled(phi: RadialTestFunction, factor: float) -> RadialTestFunction:
    """``x -> phi(factor * x)``."""
    if isinstance(phi, GaussianBump):
        return GaussianBump(phi.width / factor, phi.amplitude, phi.cutoff)
    return RadialTestFunction(lambda r: phi.profile(np.asarray(r) * factor), phi.support / factor, f"{phi.name}-scaled")


@dataclass(frozen=True)
class SHEVariance:
    value: float
    theta: float
    bertini_cancrini: float
    route: str
    error: float = 0.0

    def as_dict(self) -> dict:
        return {"value": self.value, "theta": self.theta, "bertini_cancrini": self.bertini_cancrini, "route": self.route, "error": self.error}


def she_variance_limit(moll: Mollifier, rho: float, t: float, phi: RadialTestFunction, route: str = "energy", theta: float | None = None) -> SHEVariance:
    """``2 int int phi(z) phi(z') K_{t,theta}((z - z') / sqrt 2) dz dz'``.

    With ``z = sqrt(2) w`` this is ``8`` times the polymer variance limit of
    ``phi(sqrt(2) .)``; ``route`` selects the quadrature route used there.
    """
    th = theta_effective(moll, rho) if theta is None else float(theta)
    if phi.sup_norm == 0:
        return SHEVariance(0.0, th, bertini_cancrini_parameter(th), route)
    v = variance_limit(t, th, _rescaled(phi, np.sqrt(2.0)), route)
    return SHEVariance(8.0 * v.value, th, bertini_cancrini_parameter(th), route, 8.0 * v.error)


def she_variance_energy(t: float, theta: float, phi: RadialTestFunction, panels: int = 40) -> float:
    """Independent route: ``4 pi int_0^t E_phi(2u) H_theta(t - u) du``.

    ``E_phi(u) = int int phi phi' g_u(z - z')``.  Uses
    ``g_u(x / sqrt 2) = 2 g_{2u}(x)`` and ``K = pi int g_u H(t - u) du``.
    The endpoint behaviour of ``H`` at ``u -> t`` is handled with
    ``t - u = t e^{-y}``.
    """
    y, wy = composite_gauss_legendre(0.0, 60.0, panels * 3, 16)
    v = t * np.exp(-y)  # v = t - u
    u = t - v
    vals = phi.energy(2 * u) * g_theta_cumulative(theta, np.minimum(v, 1.0)) * v
    return float(4 * np.pi * np.sum(vals * wy))


# ---------------------------------------------------------------------------
# renewal sums of the continuum overlap


@dataclass(frozen=True)
class RenewalLimitCheck:
    epsilon: float
    theta: float
    T: float
    lhs: float
    lhs_error: float
    rhs: float
    large_deviation: dict = field(default_factory=dict)

    @property
    def gap(self) -> float:
        return abs(self.lhs - self.rhs)

    def as_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "theta": self.theta,
            "T": self.T,
            "lhs": self.lhs,
            "lhs_error": self.lhs_error,
            "rhs": self.rhs,
            "gap": self.gap,
            "large_deviation": dict(self.large_deviation),
        }


def _increment_table(moll: Mollifier, T_max: float, points: int = 3000):
    t = np.concatenate([[0.0], np.geomspace(1e-8, T_max, points)])
    R = np.concatenate([[0.0], overlap_integral(moll, t[1:])])
    return t, R


def she_continuum_renewal(
    moll: Mollifier,
    epsilon: float,
    theta: float,
    T: float = 1.0,
    samples: int = 100_000,
    seed: int = 0,
    s_ld: float = 10.0,
    c_ld: float = 0.5,
) -> RenewalLimitCheck:
    """Both sides of the Riemann-sum limit for continuum renewal sums.

    Left: ``(1 / log eps^-2) sum_{r >= 1} lambda^r P(T_1 + ... + T_r <= eps^-2 T)``
    with ``lambda = 1 + theta / log eps^-2`` and increments of density
    ``r(t) / R_eps`` on ``[0, eps^-2]``, by Monte Carlo over whole paths.
    Right: ``int_0^inf e^{theta u} P(Y_u <= T) du = H_theta(T)``.

    Also records the empirical ``P(sum of s log eps^-2 increments <= eps^-2)``
    next to ``exp(s - c s log s)``; this is observational only.
    """
    if not 0 < T <= 1:
        raise DomainError("T must lie in (0, 1]")
    import warnings

    L = np.log(epsilon**-2)
    lam = 1.0 + theta / L
    t_tab, R_tab = _increment_table(moll, epsilon**-2)
    rng = np.random.default_rng(seed)

    def draw(n):
        return np.interp(rng.random(n) * R_tab[-1], R_tab, t_tab)

    limit = T * epsilon**-2
    total = np.zeros(samples)
    S = np.zeros(samples)
    weight = np.ones(samples)
    live = np.ones(samples, dtype=bool)
    while np.any(live):
        idx = np.flatnonzero(live)
        S[idx] += draw(idx.size)
        weight[idx] *= lam
        ok = S[idx] <= limit
        total[idx[ok]] += weight[idx[ok]]
        live[idx[~ok]] = False
    est = total / L
    lhs = float(est.mean())
    err = float(est.std(ddof=1) / np.sqrt(samples))
    rhs = float(g_theta_cumulative(theta, T))
    if err > 0.05 * abs(rhs):
        warnings.warn("renewal Monte Carlo error above 5% of the limit", PrecisionWarning)
    steps = int(np.floor(s_ld * L))
    ld_samples = min(samples, 20_000)
    sums = np.zeros(ld_samples)
    for _ in range(steps):
        sums += draw(ld_samples)
    emp = float(np.mean(sums <= epsilon**-2))
    ld = {"s": s_ld, "c": c_ld, "empirical": emp, "bound": float(np.exp(s_ld - c_ld * s_ld * np.log(s_ld))), "steps": steps}
    return RenewalLimitCheck(float(epsilon), float(theta), float(T), lhs, err, rhs, ld)
