"""Dickman subordinator marginals and the weighted renewal density ``G_theta``.

``G_theta(w) = int_0^inf exp((theta - gamma) s) s w^(s-1) / Gamma(s+1) ds``

The s-integral is evaluated on ``u = log s`` with composite Gauss-Legendre
panels.  This is vectorised over ``w`` and resolves the peak at
``s ~ 1 / log(1/w)`` that appears as ``w -> 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import DomainError
from .lattice import EULER_GAMMA, heat_kernel

_U_LOW = -40.0
_GL_ORDER = 24


def _gl_nodes(order: int = _GL_ORDER):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def composite_gauss_legendre(lo: float, hi: float, panels: int, order: int = _GL_ORDER):
    """Nodes and weights of a composite Gauss-Legendre rule on ``[lo, hi]``."""
    x, w = _gl_nodes(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def euler_gamma_integrals() -> tuple[float, float]:
    """Two integral representations of Euler's constant, by adaptive quadrature.

    Returns ``-int_0^inf e^{-u} log u du`` and
    ``int_0^inf (1/(1+t) - e^{-t}) / t dt``.
    """
    from scipy.integrate import quad

    a = -(quad(lambda u: np.exp(-u) * np.log(u), 0, 1, limit=200)[0] + quad(lambda u: np.exp(-u) * np.log(u), 1, np.inf, limit=200)[0])

    def f(t):
        if t < 1e-8:
            return -0.5 + t * (2.0 / 3.0)  # series of (1/(1+t) - e^{-t}) / t
        return (1.0 / (1.0 + t) - np.exp(-t)) / t

    b = quad(f, 0, 1, limit=200, epsabs=1e-14)[0] + quad(f, 1, np.inf, limit=200, epsabs=1e-14)[0]
    return float(a), float(b)


def dickman_density(s: float, t) -> np.ndarray | float:
    """``f_s(t) = e^{-gamma s} s t^(s-1) / Gamma(s+1)`` for ``t`` in (0, 1)."""
    if not s > 0:
        raise DomainError("s must be positive")
    t = np.asarray(t, dtype=float)
    if np.any((t <= 0) | (t >= 1)):
        raise DomainError("the closed-form density holds only for t in (0, 1)")
    out = np.exp(-EULER_GAMMA * s + np.log(s) + (s - 1) * np.log(t) - gammaln(s + 1))
    return float(out) if out.ndim == 0 else out


def dickman_density_spacetime(s: float, t, x) -> np.ndarray | float:
    """``f_s(t, x) = f_s(t) g_{t/4}(x)``."""
    f = dickman_density(s, t)
    return f * heat_kernel(float(t) / 4.0, x) if np.ndim(t) == 0 else f * np.array([heat_kernel(tt / 4.0, xx) for tt, xx in zip(np.ravel(t), np.reshape(x, (-1, 2)))])


def dickman_mass_below_one(s: float) -> float:
    """``P(Y_s <= 1) = int_0^1 f_s = e^{-gamma s} / Gamma(s+1)``."""
    return float(np.exp(-EULER_GAMMA * s - gammaln(s + 1)))


def dickman_cdf(s: float, t) -> np.ndarray:
    """``P(Y_s <= t)`` for ``t`` in [0, 1]: ``e^{-gamma s} t^s / Gamma(s+1)``."""
    t = np.asarray(t, dtype=float)
    if np.any((t < 0) | (t > 1)):
        raise DomainError("closed form holds for t in [0, 1]")
    return np.exp(-EULER_GAMMA * s - gammaln(s + 1)) * t**s


def _s_max(theta: float) -> float:
    return max(50.0, 10.0 * abs(theta) + 30.0)


def _s_integral(theta: float, log_w: np.ndarray, power_shift: float, panels: int) -> np.ndarray:
    """``int_0^inf exp((theta-gamma) s) s^k w^(s - shift) / Gamma(s+1) ds`` on the log-s scale.

    ``power_shift = 1`` with the factor ``s`` gives ``G_theta``; ``0`` without
    it gives the cumulative ``H_theta``.
    """
    u, wu = composite_gauss_legendre(_U_LOW, np.log(_s_max(theta)), panels)
    s = np.exp(u)
    base = (theta - EULER_GAMMA) * s - gammaln(s + 1.0) + u  # ds = s du
    if power_shift == 1:
        base = base + u  # factor s
    log_w = np.atleast_1d(log_w)
    expo = base[None, :] + (s[None, :] - power_shift) * log_w[:, None]
    return np.exp(expo) @ wu


def g_theta(theta: float, w, panels: int = 160, with_error: bool = False):
    """``G_theta(w)`` for ``w`` in (0, 1].

    Parameters
    ----------
    theta : float
    w : float or array
    panels : int
        Gauss-Legendre panels on the log-s axis.
    with_error : bool
        Also return ``|Q(panels) - Q(panels / 2)|`` as an error estimate.

    Raises
    ------
    DomainError
        If any ``w`` lies outside (0, 1].
    """
    w_arr = np.asarray(w, dtype=float)
    if np.any((w_arr <= 0) | (w_arr > 1)):
        raise DomainError("G_theta is evaluated on (0, 1] only")
    val = _s_integral(theta, np.log(w_arr), 1, panels)
    out = val.reshape(w_arr.shape)
    out = float(out) if out.ndim == 0 else out
    if with_error:
        coarse = _s_integral(theta, np.log(w_arr), 1, panels // 2).reshape(w_arr.shape)
        err = np.abs(val.reshape(w_arr.shape) - coarse)
        return out, (float(err) if err.ndim == 0 else err)
    return out


def g_theta_spacetime(theta: float, w, x):
    """``G_theta(w, x) = G_theta(w) g_{w/4}(x)``."""
    return g_theta(theta, w) * heat_kernel(float(w) / 4.0, x)


def g_theta_cumulative(theta: float, r, panels: int = 160):
    """``H_theta(r) = int_0^r G_theta = int_0^inf e^{(theta-gamma)s} r^s / Gamma(s+1) ds`` for ``r`` in [0, 1]."""
    r_arr = np.asarray(r, dtype=float)
    if np.any((r_arr < 0) | (r_arr > 1)):
        raise DomainError("cumulative G_theta is evaluated on [0, 1]")
    out = np.zeros(r_arr.shape)
    pos = r_arr > 0
    if np.any(pos):
        out[pos] = _s_integral(theta, np.log(r_arr[pos]), 0, panels)
    return float(out) if out.ndim == 0 else out


def intermittency_constant(theta: float) -> float:
    """``int_0^1 G_theta(t) dt``."""
    return g_theta_cumulative(theta, 1.0)


def g_theta_asymptotic(theta: float, w) -> np.ndarray:
    """Two-term small-``w`` expansion ``(1 + 2 theta / log(1/w)) / (w log(1/w)^2)``."""
    L = np.log(1.0 / np.asarray(w, dtype=float))
    return (1.0 + 2.0 * theta / L) / (np.asarray(w) * L**2)


def g_hat(c_theta: float, t) -> np.ndarray:
    """``c / (t log(e^2 / t)^2)``."""
    t = np.asarray(t, dtype=float)
    return c_theta / (t * (2.0 - np.log(t)) ** 2)


@dataclass(frozen=True)
class GThetaBound:
    """Grid certificate for ``G_theta <= c_theta / (t log(e^2/t)^2)``."""

    theta: float
    c_theta: float
    grid_max: float
    argmax: float
    safety: float = 1.05
    grid: np.ndarray = field(default=None, repr=False)

    def verify(self, density: int = 10) -> tuple[bool, float]:
        """Check on a grid ``density`` times finer; returns (ok, worst ratio to c_theta)."""
        t = np.logspace(-10, 0, density * self.grid.size)
        ratio = g_theta(self.theta, t) * t * (2.0 - np.log(t)) ** 2
        worst = float(ratio.max() / self.c_theta)
        return worst <= 1.0, worst


def g_theta_bound(theta: float, points: int = 400, safety: float = 1.05) -> GThetaBound:
    """Smallest grid-certified ``c_theta`` times a safety factor."""
    t = np.logspace(-10, 0, points)
    ratio = g_theta(theta, t) * t * (2.0 - np.log(t)) ** 2
    k = int(np.argmax(ratio))
    return GThetaBound(float(theta), float(safety * ratio[k]), float(ratio[k]), float(t[k]), safety, t)


def sample_g_theta_time(theta: float, t: float, rng: np.random.Generator, size: int, grid: int = 4000):
    """Draw from the density proportional to ``G_theta`` on (0, t), by inverting ``H_theta``.

    Returns the samples and the normalising mass ``H_theta(t)``.
    """
    if not 0 < t <= 1:
        raise DomainError("t must lie in (0, 1]")
    # log-spaced inversion table; H_theta(r) ~ 1/log(1/r) near 0 so extend far down
    r = t * np.concatenate([[0.0], np.logspace(-300, 0, grid)])
    H = g_theta_cumulative(theta, r)
    mass = float(H[-1])
    target = rng.random(size) * mass
    idx = np.clip(np.searchsorted(H, target), 1, r.size - 1)
    lo, hi = r[idx - 1], r[idx]
    Hlo, Hhi = H[idx - 1], H[idx]
    frac = np.where(Hhi > Hlo, (target - Hlo) / np.where(Hhi > Hlo, Hhi - Hlo, 1.0), 0.5)
    # interpolate geometrically between log-spaced nodes
    samples = np.where(lo > 0, lo * (hi / np.where(lo > 0, lo, 1.0)) ** frac, hi * frac)
    return samples, mass


class GThetaInterpolant:
    """Cubic interpolation of ``log G_theta`` or ``log H_theta`` against ``log w``.

    A cheap evaluator for inner loops of quadrature oracles on ``[w_min, 1]``.
    """

    def __init__(self, theta: float, cumulative: bool = False, w_min: float = 1e-200, points: int = 1500):
        from scipy.interpolate import CubicSpline

        self.theta = float(theta)
        self.cumulative = cumulative
        self.w_min = float(w_min)
        # nodes in log(1/w), geometrically refined towards w = 1
        depth = np.concatenate([[0.0], np.geomspace(1e-8, np.log(1.0 / w_min), points - 1)])
        lw = -depth[::-1]
        vals = g_theta_cumulative(theta, np.exp(lw)) if cumulative else g_theta(theta, np.exp(lw))
        self._spline = CubicSpline(lw, np.log(vals))

    def __call__(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if np.any((w < self.w_min) | (w > 1)):
            raise DomainError(f"interpolant covers [{self.w_min:g}, 1]")
        return np.exp(self._spline(np.log(w)))


def dickman_rho(u, per_unit: int = 4000) -> np.ndarray:
    """Dickman's function: ``rho = 1`` on [0, 1] and ``u rho'(u) = -rho(u - 1)`` beyond.

    Integrated on a grid of ``per_unit`` steps per unit length with the
    trapezoidal rule; the delayed value always falls on a grid node.
    """
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise DomainError("rho is defined for u >= 0")
    top = max(1.0, float(np.max(u)) if u.size else 1.0)
    M = int(per_unit)
    n_nodes = int(np.ceil(top * M)) + 1
    grid = np.arange(n_nodes) / M
    rho = np.ones(n_nodes)
    for n in range(M, n_nodes - 1):
        rho[n + 1] = rho[n] - 0.5 / M * (rho[n + 1 - M] / grid[n + 1] + rho[n - M] / grid[n])
    out = np.interp(u, grid, rho)
    return float(out) if out.ndim == 0 else out


def dickman_cdf_unit(x, per_unit: int = 4000) -> np.ndarray:
    """``P(Y_1 <= x)`` for all ``x >= 0``, where ``Y_1`` has density ``e^{-gamma} rho``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("x must be non-negative")
    top = max(1.0, float(np.max(x)) if x.size else 1.0)
    grid = np.arange(int(np.ceil(top * per_unit)) + 1) / per_unit
    rho = dickman_rho(grid, per_unit)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (rho[1:] + rho[:-1])) / per_unit])
    out = np.exp(-EULER_GAMMA) * np.interp(x, grid, cum)
    return float(out) if out.ndim == 0 else out
