"""Disorder laws and tuning of the inverse temperature inside the critical window."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, TuningError, UnsupportedError
from .lattice import EULER_GAMMA, OVERLAP_ALPHA, overlap

Sampler = Callable[[np.random.Generator, int], np.ndarray]


@dataclass(frozen=True)
class DisorderSpec:
    """Law of a single environment variable, described by its log-MGF.

    Attributes
    ----------
    family : str
        ``"gaussian"``, ``"rademacher"`` or ``"user"``.
    log_mgf : callable
        ``t -> log E[exp(t omega)]``; must return ``inf`` or ``nan`` where undefined.
    kappa3, kappa4 : float
        Third and fourth cumulants.
    sampler : callable, optional
        ``(rng, size) -> omega samples``.
    """

    family: str
    log_mgf: Callable[[float], float] = field(repr=False)
    kappa3: float = 0.0
    kappa4: float = 0.0
    sampler: Sampler | None = field(default=None, repr=False)

    def sigma2(self, beta: float) -> float:
        """Variance of ``exp(beta omega - lambda(beta))``."""
        return float(np.expm1(self.log_mgf(2 * beta) - 2 * self.log_mgf(beta)))


def gaussian() -> DisorderSpec:
    return DisorderSpec(
        "gaussian",
        lambda t: 0.5 * t * t,
        0.0,
        0.0,
        lambda rng, size: rng.standard_normal(size),
    )


def _log_cosh(t):
    t = np.abs(t)
    return t + np.log1p(np.exp(-2 * t)) - np.log(2.0)


def rademacher() -> DisorderSpec:
    return DisorderSpec(
        "rademacher",
        _log_cosh,
        0.0,
        -2.0,
        lambda rng, size: rng.choice(np.array([-1.0, 1.0]), size=size),
    )


def user_family(log_mgf, kappa3: float, kappa4: float, sampler: Sampler | None = None) -> DisorderSpec:
    return DisorderSpec("user", log_mgf, float(kappa3), float(kappa4), sampler)


def family_by_name(name: str) -> DisorderSpec:
    table = {"gaussian": gaussian, "rademacher": rademacher}
    if name not in table:
        raise UnsupportedError(f"unknown disorder family {name!r}")
    return table[name]()


def cumulants_fd(spec: DisorderSpec, h: float = 1e-2) -> tuple[float, float, float, float]:
    """Cumulants 1..4 of ``omega`` by central differences of the log-MGF."""
    f = spec.log_mgf
    f0, fp1, fm1, fp2, fm2 = f(0.0), f(h), f(-h), f(2 * h), f(-2 * h)
    k1 = (fp1 - fm1) / (2 * h)
    k2 = (fp1 - 2 * f0 + fm1) / h**2
    k3 = (fp2 - 2 * fp1 + 2 * fm1 - fm2) / (2 * h**3)
    k4 = (fp2 - 4 * fp1 + 6 * f0 - 4 * fm1 + fm2) / h**4
    return float(k1), float(k2), float(k3), float(k4)


def xi_third_moment(spec: DisorderSpec, beta: float) -> float:
    """``E[xi^3]`` for ``xi = exp(beta omega - lambda(beta)) - 1``.

    Raises
    ------
    DomainError
        If the log-MGF is not finite at ``3 beta``.
    """
    l1, l2, l3 = spec.log_mgf(beta), spec.log_mgf(2 * beta), spec.log_mgf(3 * beta)
    if not np.isfinite(l3):
        raise DomainError("log-MGF undefined at 3 beta")
    # written as a sum of expm1 terms to avoid cancellation near beta = 0
    return float(np.expm1(l3 - 3 * l1) - 3 * np.expm1(l2 - 2 * l1))


@dataclass(frozen=True)
class CriticalWindow:
    """Solved parameters for horizon ``N`` and window parameter ``theta``."""

    N: int
    theta: float
    beta: float
    sigma2: float
    lambda_N: float
    xi3: float
    R_N: float
    family: str = "gaussian"


def _check_increasing(f, lo, hi, npts=64):
    grid = np.linspace(lo, hi, npts)[1:]
    vals = np.array([f(b) for b in grid])
    if not np.all(np.isfinite(vals)) or np.any(np.diff(vals) <= 0):
        raise TuningError("sigma^2(beta) is not finite and increasing on the bracket")


def solve_beta(spec: DisorderSpec, N: int, theta: float, R_N: float | None = None) -> CriticalWindow:
    """Solve ``sigma^2(beta) R_N = 1 + theta / log N`` with zero slack.

    The bracket starts at ``(0, 1]`` and is doubled until it contains the
    target, since small ``N`` can need ``beta > 1``.

    Raises
    ------
    DomainError
        If the target variance is not positive or ``N < 2``.
    TuningError
        If the target cannot be bracketed with ``sigma^2`` increasing.
    """
    N = int(N)
    if N < 2:
        raise DomainError("N must be at least 2")
    if R_N is None:
        R_N = float(overlap(N).R[N])
    target = (1.0 + theta / np.log(N)) / R_N
    if not target > 0:
        raise DomainError("theta too negative: target sigma^2 is not positive")
    hi = 1.0
    while spec.sigma2(hi) < target:
        hi *= 2.0
        if hi > 64 or not np.isfinite(spec.sigma2(hi)):
            raise TuningError(f"cannot bracket sigma^2 = {target:g} for family {spec.family}")
    _check_increasing(spec.sigma2, 0.0, hi)
    beta = brentq(lambda b: spec.sigma2(b) - target, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    s2 = spec.sigma2(beta)
    try:
        xi3 = xi_third_moment(spec, beta)
    except DomainError:
        xi3 = float("nan")
    return CriticalWindow(N, float(theta), float(beta), s2, s2 * R_N, xi3, float(R_N), spec.family)


def beta_squared_expansion(spec: DisorderSpec, N: int, theta: float) -> float:
    """Three-term expansion of ``beta_N^2`` in powers of ``1 / log N``."""
    L = np.log(N)
    k3, k4 = spec.kappa3, spec.kappa4
    second = np.pi * (theta - OVERLAP_ALPHA) + np.pi**2 * (1.5 * k3**2 - 0.5 - 7.0 / 12.0 * k4)
    return float(np.pi / L - k3 * np.pi**1.5 / L**1.5 + second / L**2)


class XiSampler:
    """Reproducible stream of ``xi = exp(beta omega - lambda(beta)) - 1``."""

    def __init__(self, spec: DisorderSpec, beta: float, seed):
        if spec.sampler is None:
            raise UnsupportedError(f"family {spec.family} has no sampler")
        self.spec = spec
        self.beta = float(beta)
        self.rng = np.random.default_rng(seed)
        self._shift = spec.log_mgf(self.beta)

    def draw(self, size) -> np.ndarray:
        if self.beta == 0.0:
            return np.zeros(size)
        omega = self.spec.sampler(self.rng, size)
        return np.expm1(self.beta * omega - self._shift)

    def __iter__(self):
        while True:
            yield from self.draw(4096)


def xi_sampler(spec: DisorderSpec, beta: float, seed) -> XiSampler:
    return XiSampler(spec, beta, seed)


def split_seeds(master_seed: int, count: int) -> list[np.random.SeedSequence]:
    """Independent child seeds: ``SeedSequence(master).spawn(count)``."""
    return np.random.SeedSequence(master_seed).spawn(count)


__all__ = [
    "DisorderSpec",
    "CriticalWindow",
    "gaussian",
    "rademacher",
    "user_family",
    "family_by_name",
    "cumulants_fd",
    "xi_third_moment",
    "solve_beta",
    "beta_squared_expansion",
    "xi_sampler",
    "split_seeds",
    "EULER_GAMMA",
]
