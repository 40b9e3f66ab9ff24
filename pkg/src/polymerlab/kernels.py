"""Continuum limits: the covariance kernel, the variance limit and the third-moment integrals.

Conventions: ``g_u(x) = exp(-|x|^2 / (2u)) / (2 pi u)`` on R^2,
``Phi_s = phi * g_{s/2}`` and ``G_theta(t, x) = G_theta(t) g_{t/4}(x)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import j0

from .dickman import composite_gauss_legendre, g_theta_cumulative, sample_g_theta_time
from .errors import DomainError, PrecisionWarning, SingularPointError

K_TOLERANCE = 1e-7


# ---------------------------------------------------------------------------
# test functions


class RadialTestFunction:
    """A radial, compactly supported, non-negative test function ``phi(x) = f(|x|)``.

    Transforms use the Hankel form ``hat phi(k) = 2 pi int_0^R f(r) J0(k r) r dr``;
    the autocorrelation and the Gaussian energies follow from ``hat phi^2``.

    Parameters
    ----------
    profile : callable
        Radial profile ``f``, vectorised, vanishing for ``r >= support``.
    support : float
    """

    def __init__(self, profile, support: float, name: str = "radial"):
        if not support > 0:
            raise DomainError("support radius must be positive")
        self.profile = profile
        self.support = float(support)
        self.name = name
        self._r, self._wr = composite_gauss_legendre(0.0, self.support, 64, 24)
        self._fr = np.asarray(profile(self._r), dtype=float)
        self._k_max = 120.0 / self.support
        self._k, self._wk = composite_gauss_legendre(0.0, self._k_max, 400, 24)
        self._hat_k = self.fourier(self._k)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r = np.hypot(x[..., 0], x[..., 1])
        return np.where(r < self.support, self.profile(np.minimum(r, self.support)), 0.0)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.profile(np.linspace(0, self.support, 2001)))))

    def integral(self) -> float:
        return float(2.0 * math.pi * np.sum(self._wr * self._fr * self._r))

    def fourier(self, k) -> np.ndarray:
        k = np.atleast_1d(np.asarray(k, dtype=float))
        return 2.0 * math.pi * (j0(k[:, None] * self._r[None, :]) @ (self._wr * self._fr * self._r))

    def energy(self, u) -> np.ndarray:
        """``int |Phi_u|^2 = iint phi(z) phi(z') g_u(z - z') dz dz'``."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        integrand = self._hat_k**2 * self._k
        return (np.exp(-0.5 * u[:, None] * self._k[None, :] ** 2) @ (self._wk * integrand)) / (2.0 * math.pi)

    def autocorrelation(self, r) -> np.ndarray:
        """``(phi * phi)(r)`` as a function of ``|r|`` (``phi`` is even)."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        return (j0(r[:, None] * self._k[None, :]) @ (self._wk * self._hat_k**2 * self._k)) / (2.0 * math.pi)

    def smoothed(self, s: float, x) -> np.ndarray:
        """``Phi_s(x) = (phi * g_{s/2})(x)`` by the Hankel inversion."""
        x = np.asarray(x, dtype=float)
        r = np.hypot(x[..., 0], x[..., 1]).ravel()
        damp = np.exp(-0.25 * s * self._k**2)
        vals = (j0(r[:, None] * self._k[None, :]) @ (self._wk * self._hat_k * damp * self._k)) / (2.0 * math.pi)
        return vals.reshape(x.shape[:-1])


class GaussianBump(RadialTestFunction):
    """``amplitude * exp(-|x|^2 / (2 width^2))`` cut at ``cutoff`` widths.

    The closed forms below ignore the cut; at the default ``cutoff = 9`` the
    neglected mass is ``exp(-40.5)`` relative.
    """

    def __init__(self, width: float = 0.5, amplitude: float = 1.0, cutoff: float = 9.0):
        self.width = float(width)
        self.cutoff = float(cutoff)
        self.amplitude = float(amplitude)
        super().__init__(lambda r: self.amplitude * np.exp(-0.5 * (np.asarray(r) / self.width) ** 2), cutoff * width, "gaussian")

    @property
    def sup_norm(self) -> float:
        return abs(self.amplitude)

    def integral(self) -> float:
        return self.amplitude * 2.0 * math.pi * self.width**2

    def energy(self, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        mass = self.integral()
        return mass**2 / (2.0 * math.pi * (u + 2.0 * self.width**2))

    def autocorrelation(self, r) -> np.ndarray:
        r = np.atleast_1d(np.asarray(r, dtype=float))
        v = 2.0 * self.width**2
        return self.integral() ** 2 * np.exp(-0.5 * r**2 / v) / (2.0 * math.pi * v)

    def smoothed(self, s: float, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        v = self.width**2 + 0.5 * s
        r2 = np.sum(x * x, axis=-1)
        return self.integral() * np.exp(-0.5 * r2 / v) / (2.0 * math.pi * v)


def smooth_bump(radius: float = 1.0, amplitude: float = 1.0) -> RadialTestFunction:
    """``amplitude * exp(1 - 1 / (1 - |x|^2 / radius^2))`` inside the disk."""

    def profile(r):
        z = 1.0 - (np.asarray(r, dtype=float) / radius) ** 2
        out = np.zeros_like(z)
        pos = z > 0
        out[pos] = amplitude * np.exp(1.0 - 1.0 / z[pos])
        return out

    return RadialTestFunction(profile, radius, "bump")


def zero_function(support: float = 1.0) -> RadialTestFunction:
    return RadialTestFunction(lambda r: np.zeros_like(np.asarray(r, dtype=float)), support, "zero")


# ---------------------------------------------------------------------------
# covariance kernel


def _radius(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return np.atleast_1d(np.abs(x))
    if x.shape[-1] != 2:
        raise DomainError("points must have a trailing axis of length 2")
    return np.atleast_1d(np.hypot(x[..., 0], x[..., 1]))


def _kernel_direct(t: float, theta: float, r: np.ndarray, order: int = 16) -> np.ndarray:
    """``pi int_0^t g_u(r) H_theta(t - u) du`` for ``t <= 1``.

    ``(0, t/2]`` uses ``u = e^{-p}``, ``(t/2, t)`` uses ``t - u = e^{-q}``.
    """
    r2 = r * r
    lo = math.log(2.0 / t)
    # lower half: pi g_u(r) u = exp(-r^2 / (2u)) / 2
    hi = max(lo + 1.0, math.log(80.0 / float(np.min(r2))))
    p, wp = composite_gauss_legendre(lo, hi, max(4, int(math.ceil(hi - lo))), order)
    u = np.exp(-p)
    Hp = g_theta_cumulative(theta, t - u)
    lower = (np.exp(-0.5 * r2[:, None] / u[None, :]) @ (wp * Hp)) * 0.5
    # upper half: pi g_{t-w}(r) H(w) w dq
    q, wq = composite_gauss_legendre(lo, lo + 40.0, 40, order)
    w = np.exp(-q)
    Hq = g_theta_cumulative(theta, w)
    uu = t - w
    gq = np.exp(-0.5 * r2[:, None] / uu[None, :]) / (2.0 * uu[None, :])
    upper = gq @ (wq * Hq * w)
    return lower + upper


def k_kernel(t: float, theta: float, x, with_error: bool = False):
    """Covariance kernel ``K_{t,theta}(x) = pi int_{0<u<v<t} g_u(x) G_theta(v-u) du dv``.

    ``x`` may be a point (shape ``(2,)``), an array of points (``(..., 2)``) or
    a radius (scalar).  For ``t > 1`` the value is taken from
    ``K_{1, theta + log t}(x / sqrt t)`` so ``G_theta`` is only used on (0, 1].

    Raises
    ------
    SingularPointError
        At ``x = 0``, where the kernel diverges logarithmically.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    r = _radius(x)
    if np.any(r == 0):
        raise SingularPointError("K diverges logarithmically at x = 0")
    shape = np.shape(x)[:-1] if np.ndim(x) >= 1 else ()
    if t > 1:
        theta, r, t = theta + math.log(t), r / math.sqrt(t), 1.0
    val = _kernel_direct(t, theta, r)
    out = float(val[0]) if shape == () else val.reshape(shape)
    if with_error:
        err = np.abs(val - _kernel_direct(t, theta, r, order=10))
        return out, (float(err[0]) if shape == () else err.reshape(shape))
    return out


def k_kernel_radial(t: float, theta: float, r) -> np.ndarray:
    """``K_{t,theta}`` at an array of radii ``r > 0``."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r <= 0):
        raise SingularPointError("radii must be positive")
    if not t > 0:
        raise DomainError("t must be positive")
    if t > 1:
        theta, r, t = theta + math.log(t), r / math.sqrt(t), 1.0
    return _kernel_direct(t, theta, r)


# ---------------------------------------------------------------------------
# variance limit


@dataclass(frozen=True)
class VarianceLimit:
    value: float
    route: str
    error: float


def variance_limit(t: float, theta: float, phi: RadialTestFunction, route: str = "energy") -> VarianceLimit:
    """``iint phi(z) phi(z') K_{t,theta}(z - z') dz dz'``.

    ``route="energy"`` integrates ``pi int_0^t (int |Phi_u|^2) H_theta(t - u) du``;
    ``route="kernel"`` integrates the autocorrelation of ``phi`` against ``K``
    over the plane.  The two are independent evaluations of the same number.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    if route == "energy":
        if t > 1:
            # H_theta(t s) with s in (0,1]: scale time, theta_t = theta + log t
            theta_s, scale = theta + math.log(t), t
        else:
            theta_s, scale = theta, 1.0
        tt = t / scale

        def quad(order):
            lo = math.log(2.0 / tt)
            p, wp = composite_gauss_legendre(lo, lo + 60.0, 60, order)
            u = np.exp(-p)
            a = np.sum(wp * u * phi.energy(scale * u) * g_theta_cumulative(theta_s, tt - u))
            q, wq = composite_gauss_legendre(lo, lo + 60.0, 60, order)
            w = np.exp(-q)
            b = np.sum(wq * w * phi.energy(scale * (tt - w)) * g_theta_cumulative(theta_s, w))
            return math.pi * scale * (a + b)

        val = quad(16)
        return VarianceLimit(float(val), route, float(abs(val - quad(10))))
    if route == "kernel":
        R = 2.0 * phi.support

        def quad(panels):
            # log-singular at r = 0: use r = R e^{-y}
            y, wy = composite_gauss_legendre(0.0, 40.0, panels, 16)
            r = R * np.exp(-y)
            A = phi.autocorrelation(r)
            keep = np.abs(A) > 0
            K = np.zeros_like(r)
            K[keep] = k_kernel_radial(t, theta, r[keep])
            return float(np.sum(wy * 2.0 * math.pi * r * r * A * K))

        val = quad(40)
        return VarianceLimit(val, route, float(abs(val - quad(20))))
    raise DomainError(f"unknown route {route!r}")


# ---------------------------------------------------------------------------
# third-moment integrals


@dataclass(frozen=True)
class MCEstimate:
    value: float
    error: float
    samples: int

    def as_dict(self) -> dict:
        return {"value": self.value, "error": self.error, "samples": self.samples}


def _gap_proposal(rng, size, t, mix=0.5):
    """Gaps on (0, t) from a mixture of uniform and ``density 1/(2 sqrt(u t))``; returns gaps and densities."""
    pick = rng.random(size) < mix
    g = np.where(pick, rng.random(size) * t, t * rng.random(size) ** 2)
    dens = mix / t + (1.0 - mix) / (2.0 * np.sqrt(g * t))
    return g, dens


def _gauss(rng, mean, var):
    return mean + np.sqrt(var)[:, None] * rng.standard_normal(mean.shape)


def script_i_m(
    m: int,
    t: float,
    theta: float,
    phi: RadialTestFunction,
    psi=None,
    samples: int = 200_000,
    seed: int = 0,
    rtol: float | None = None,
) -> MCEstimate:
    """Importance-sampled Monte Carlo for the third-moment integral ``I^(m)_t(phi, psi)``.

    Stretch lengths follow ``G_theta`` (by inversion), gaps follow a
    uniform/square-root mixture, and space variables are drawn from the
    Gaussian factors of the integrand, so the weight only carries ``phi``,
    ``psi``, the normalising masses and the bridge factors for ``i >= 3``.

    Parameters
    ----------
    psi : callable, optional
        Terminal test function (vectorised over ``(..., 2)``); ``None`` means 1.
    rtol : float, optional
        Emit a :class:`PrecisionWarning` if the relative error exceeds it.
    """
    if not 2 <= m <= 5:
        raise DomainError("m must lie in 2..5")
    if not 0 < t <= 1:
        raise DomainError("t must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    n = int(samples)
    mass_phi = phi.integral()
    if mass_phi == 0:
        return MCEstimate(0.0, 0.0, n)
    v = np.empty((n, m))
    H = 0.0
    for i in range(m):
        v[:, i], H = sample_g_theta_time(theta, t, rng, n)
    gaps = np.empty((n, m))
    weight = np.full(n, H**m)
    for i in range(m):
        gaps[:, i], dens = _gap_proposal(rng, n, t)
        weight /= dens
    a = np.cumsum(gaps + np.roll(v, 1, axis=1) * (np.arange(m) > 0), axis=1)
    b = a + v
    inside = b[:, -1] < t
    weight = np.where(inside, weight, 0.0)

    # start points: z ~ phi / mass, x1 = z + N(a1/2), z' = x1 + N(a1/2)
    z = _sample_radial(phi, rng, n)
    x1 = _gauss(rng, z, a[:, 0] / 2.0)
    zp = _gauss(rng, x1, a[:, 0] / 2.0)
    weight *= mass_phi * phi(zp)
    ys = []
    y = _gauss(rng, x1, v[:, 0] / 4.0)
    ys.append(y)
    x2 = _gauss(rng, y, (a[:, 1] - b[:, 0]) / 2.0)
    weight *= phi(_gauss(rng, x2, a[:, 1] / 2.0))
    ys.append(_gauss(rng, x2, v[:, 1] / 4.0))
    for i in range(2, m):
        s1 = (a[:, i] - b[:, i - 2]) / 2.0
        s2 = (a[:, i] - b[:, i - 1]) / 2.0
        d = ys[i - 1] - ys[i - 2]
        tot = np.where(inside, s1 + s2, 1.0)
        weight *= np.exp(-0.5 * np.sum(d * d, axis=1) / tot) / (2.0 * math.pi * tot)
        mean = (s2[:, None] * ys[i - 2] + s1[:, None] * ys[i - 1]) / tot[:, None]
        xi = _gauss(rng, mean, np.where(inside, s1 * s2 / tot, 1.0))
        ys.append(_gauss(rng, xi, v[:, i] / 4.0))
    if psi is not None:
        weight *= _smoothed_at(psi, rng, ys[m - 2], t - b[:, m - 2])
        weight *= _smoothed_at(psi, rng, ys[m - 1], t - b[:, m - 1]) * _smoothed_at(psi, rng, ys[m - 1], t - b[:, m - 1])
    weight = np.where(inside, weight, 0.0)
    est = float(weight.mean())
    err = float(weight.std(ddof=1) / math.sqrt(n))
    if rtol is not None and est != 0 and err > rtol * abs(est):
        warnings.warn(f"relative MC error {err / abs(est):.3g} exceeds {rtol:g}", PrecisionWarning, stacklevel=2)
    return MCEstimate(est, err, n)


def _smoothed_at(psi, rng, y, s):
    """Unbiased one-sample estimate of ``Psi_s(y) = E psi(y + N(0, s/2))``."""
    s = np.maximum(s, 0.0)
    return psi(_gauss(rng, y, s / 2.0))


def _sample_radial(phi: RadialTestFunction, rng, n: int) -> np.ndarray:
    """Points with density ``phi / int phi`` (``phi >= 0``) by radial inversion."""
    r = np.linspace(0.0, phi.support, 4097)
    dens = np.maximum(phi.profile(r), 0.0) * r
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(r))])
    cdf /= cdf[-1]
    rad = np.interp(rng.random(n), cdf, r)
    ang = rng.random(n) * 2.0 * math.pi
    return np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)


@dataclass
class SeriesReport:
    """Partial sums of ``3 sum 2^{m-1} pi^m I^(m)`` with per-term MC errors and envelope tails."""

    terms: dict
    errors: dict
    partial_sums: dict
    envelope_log: dict
    c_phi: float

    def as_dict(self) -> dict:
        return {
            "terms": self.terms,
            "errors": self.errors,
            "partial_sums": self.partial_sums,
            "envelope_log": self.envelope_log,
            "c_phi": self.c_phi,
        }


def m_t_series(t: float, theta: float, phi: RadialTestFunction, psi=None, m_max: int = 5, samples: int = 200_000, seed: int = 0) -> SeriesReport:
    """``M_t(phi, psi)`` truncated at ``m_max``, with the ``J^(m)`` envelope for each term.

    ``envelope_log[m]`` is the log of ``(3/2) (2 pi)^2 C_phi e^m (32 C_m)^m``
    (the analytic bound on the ``m``-th term with ``lambda = m``).
    """
    from .bounds import j_m_envelope
    from .dickman import g_theta_bound

    if not 2 <= m_max <= 5:
        raise DomainError("m_max must lie in 2..5")
    seeds = np.random.SeedSequence(seed).spawn(m_max - 1)
    c_theta = g_theta_bound(theta).c_theta
    c_phi = phi.sup_norm**2 * phi.integral()
    terms, errors, partial, env = {}, {}, {}, {}
    running = 0.0
    for idx, m in enumerate(range(2, m_max + 1)):
        est = script_i_m(m, t, theta, phi, psi, samples, seeds[idx])
        factor = 3.0 * 2 ** (m - 1) * math.pi**m
        terms[m] = factor * est.value
        errors[m] = factor * est.error
        running += terms[m]
        partial[m] = running
        env[m] = math.log(1.5 * (2 * math.pi) ** 2 * c_phi) + j_m_envelope(theta, m, c_theta=c_theta, log=True)
    return SeriesReport(terms, errors, partial, env, c_phi)
