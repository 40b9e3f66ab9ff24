"""Weighted renewal functions of the pair-overlap renewal process.

Temporal part::

    U(0) = 1,   U(n) = sigma^2 * sum_{m=0}^{n-1} u_{n-m}^2 U(m)

Space-time part, with ``U(0, .)`` the delta at the origin::

    U(n, .) = sigma^2 * sum_{m=0}^{n-1} U(m, .) * q_{n-m}^2
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import gammaln

from .disorder import CriticalWindow
from .errors import CapacityError, DivergingSeriesWarning, DomainError
from .lattice import OverlapTable, WalkKernelTable, from_rotated, overlap, walk1d_law

DEFAULT_SPATIAL_BUDGET = 128
_BLOCK = 64


# ---------------------------------------------------------------------------
# generic causal renewal solver


def solve_renewal(K: np.ndarray, n_max: int, method: str = "direct") -> np.ndarray:
    """Solve ``U(n) = sum_{m<n} K[n-m] U(m)`` with ``U(0) = 1``.

    Parameters
    ----------
    K : ndarray
        Kernel with ``K[j]`` for ``j = 0..n_max`` (``K[0]`` is ignored).  A
        trailing axis holds independent problems solved side by side.
    n_max : int
        Last index computed.
    method : {"direct", "fft"}
        ``"direct"`` runs the O(n^2) causal sum; ``"fft"`` uses a
        divide-and-conquer blocked convolution, O(n log^2 n).
    """
    K = np.asarray(K, dtype=float)
    K = K.copy()
    K[0] = 0.0
    shape = (n_max + 1,) + K.shape[1:]
    U = np.zeros(shape)
    acc = np.zeros(shape)
    U[0] = 1.0
    if method == "direct":
        Kr = K[: n_max + 1]
        for n in range(1, n_max + 1):
            if U.ndim == 1:
                U[n] = np.dot(Kr[n:0:-1], U[:n])
            else:
                U[n] = np.einsum("m...,m...->...", Kr[n:0:-1], U[:n])
        return U
    if method != "fft":
        raise DomainError(f"unknown method {method!r}")

    def rec(lo, hi):
        if hi - lo <= _BLOCK:
            for n in range(max(lo, 1), hi):
                if n > lo:
                    if U.ndim == 1:
                        acc[n] += np.dot(K[n - lo:0:-1], U[lo:n])
                    else:
                        acc[n] += np.einsum("m...,m...->...", K[n - lo:0:-1], U[lo:n])
                U[n] = acc[n]
            return
        mid = (lo + hi) // 2
        rec(lo, mid)
        c = fftconvolve(U[lo:mid], K[0:hi - lo], axes=0)
        acc[mid:hi] += c[mid - lo:hi - lo]
        rec(mid, hi)

    rec(0, n_max + 1)
    return U


# ---------------------------------------------------------------------------
# increment law


@dataclass(frozen=True)
class RenewalIncrementLaw:
    """Law of one renewal increment ``(T, X)`` for horizon ``N``.

    ``P(T = n) = u_n^2 / R_N`` on ``1..N``; given ``T = n`` each rotated
    coordinate index is hypergeometric(n, n, n), which is the law
    proportional to ``binom(n, i)^2``.
    """

    N: int
    time_mass: np.ndarray = field(repr=False)
    time_cdf: np.ndarray = field(repr=False)

    def spatial_mass(self, n: int) -> np.ndarray:
        """Conditional law of ``X`` given ``T = n`` in rotated index space."""
        p = walk1d_law(n)
        p2 = p * p
        p2 /= p2.sum()
        return np.outer(p2, p2)


def increment_law(table: OverlapTable, N: int) -> RenewalIncrementLaw:
    if N > table.horizon:
        raise DomainError("overlap table shorter than N")
    mass = np.zeros(N + 1)
    mass[1:] = table.u_sq[1:N + 1] / table.R[N]
    cdf = np.cumsum(mass)
    return RenewalIncrementLaw(N, mass, cdf)


def sample_renewal_path(law: RenewalIncrementLaw, steps: int, seed, size: int = 1):
    """Draw ``size`` independent paths of ``steps`` renewal points.

    Returns
    -------
    tau : ndarray, shape (size, steps)
        Cumulative times.
    S : ndarray, shape (size, steps, 2)
        Cumulative positions.
    """
    if steps < 1:
        raise DomainError("steps must be at least 1")
    rng = np.random.default_rng(seed)
    T = np.searchsorted(law.time_cdf, rng.random((size, steps)) * law.time_cdf[-1], side="right")
    T = np.clip(T, 1, law.N)
    i = rng.hypergeometric(T, T, T)
    j = rng.hypergeometric(T, T, T)
    uu = 2 * i - T
    vv = 2 * j - T
    X = np.stack([(uu + vv) // 2, (uu - vv) // 2], axis=-1)
    return np.cumsum(T, axis=1), np.cumsum(X, axis=1)


# ---------------------------------------------------------------------------
# temporal renewal function


@dataclass(frozen=True)
class RenewalTable:
    """Renewal function arrays.

    Attributes
    ----------
    U_time : ndarray
        ``U_time[n] = U_N(n)`` for ``n = 0..n_max`` with ``U_time[0] = 1``.
    U_spacetime : tuple of ndarray or None
        ``U_spacetime[n]`` in rotated index space, shape ``(n + 1, n + 1)``,
        for ``n = 0..N_sp``.
    """

    N: int
    sigma2: float
    U_time: np.ndarray = field(repr=False)
    U_spacetime: tuple | None = field(default=None, repr=False)
    N_sp: int = 0
    leaked_mass: float = 0.0

    def variance(self, M: int | None = None) -> float:
        """``sum_{n=1}^{M-1} U(n)``, the variance of the point-to-plane partition function."""
        M = self.N if M is None else M
        return float(np.sum(self.U_time[1:M]))

    def spacetime_cartesian(self, n: int) -> np.ndarray:
        out = np.zeros((2 * n + 1, 2 * n + 1))
        i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
        x1, x2 = from_rotated(i, j, n)
        out[x1 + n, x2 + n] = self.U_spacetime[n]
        return out


def solve_renewal_time(
    window: CriticalWindow,
    table: OverlapTable,
    method: str = "direct",
    n_max: int | None = None,
) -> RenewalTable:
    """Temporal renewal function ``U_N(n)`` for ``n = 0..n_max`` (default ``N``)."""
    n_max = window.N if n_max is None else int(n_max)
    if n_max > table.horizon:
        raise DomainError("overlap table shorter than requested horizon")
    if window.lambda_N * (table.R[n_max] / window.R_N) > 2.0:
        import warnings

        warnings.warn("renewal weight well above one; geometric series may diverge", DivergingSeriesWarning)
    K = window.sigma2 * np.asarray(table.u_sq[: n_max + 1], dtype=float)
    U = solve_renewal(K, n_max, method)
    U.setflags(write=False)
    return RenewalTable(window.N, window.sigma2, U)


def renewal_geometric_sum(window: CriticalWindow, table: OverlapTable, r_max: int, n_max: int | None = None) -> np.ndarray:
    """``sum_{r=1}^{r_max} lambda_N^r P(tau_r = n)`` by repeated convolution.

    Independent of :func:`solve_renewal`; the increment law is truncated at
    ``N`` as in the definition of the renewal process.
    """
    N = window.N
    n_max = N if n_max is None else n_max
    law = increment_law(table, N)
    p = law.time_mass[: n_max + 1]
    out = np.zeros(n_max + 1)
    out[0] = 1.0
    cur = np.zeros(n_max + 1)
    cur[0] = 1.0
    for _ in range(r_max):
        cur = fftconvolve(cur, p)[: n_max + 1] * window.lambda_N
        cur[cur < 0] = 0.0
        out += cur
    return out


# ---------------------------------------------------------------------------
# space-time renewal function


def _toeplitz(p2: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Matrix ``T[a, b] = p2[a - b]`` (zero outside ``0 <= a - b < len(p2)``)."""
    T = np.zeros((rows, cols))
    k = p2.size
    for b in range(cols):
        top = min(rows, b + k)
        T[b:top, b] = p2[: top - b]
    return T


def solve_renewal_spacetime(
    window: CriticalWindow,
    kernels: WalkKernelTable | None,
    N_sp: int,
    budget: int = DEFAULT_SPATIAL_BUDGET,
) -> RenewalTable:
    """Space-time renewal function on the full reachable diamond for ``n <= N_sp``.

    Convolution with the separable kernel ``q_k^2 = p_k^2 (x) p_k^2`` is applied
    in rotated index space as ``T U T^T`` with a banded Toeplitz ``T``.

    Raises
    ------
    CapacityError
        If ``N_sp > budget``.
    """
    N_sp = int(N_sp)
    if N_sp > budget:
        raise CapacityError(f"spatial horizon {N_sp} exceeds budget {budget}")
    if N_sp < 1:
        raise DomainError("N_sp must be at least 1")
    p2 = [None] + [walk1d_law(k) ** 2 for k in range(1, N_sp + 1)]
    if kernels is not None and kernels.horizon >= N_sp:
        # take the 1d factor from the 2d table: q_k[i, j] = p_k(i) p_k(j)
        for k in range(1, N_sp + 1):
            row = kernels.row(k)
            p = row.sum(axis=1)
            p2[k] = p * p
    s2 = window.sigma2
    U = [np.ones((1, 1))]
    for n in range(1, N_sp + 1):
        acc = np.zeros((n + 1, n + 1))
        for m in range(n):
            T = _toeplitz(p2[n - m], n + 1, m + 1)
            acc += T @ U[m] @ T.T
        U.append(s2 * acc)
    U_time = np.array([u.sum() for u in U])
    for u in U:
        u.setflags(write=False)
    return RenewalTable(window.N, s2, U_time, tuple(U), N_sp, 0.0)


def _centred_char(n: int, kappa: np.ndarray) -> np.ndarray:
    """``sum_i p_n(i)^2 cos(kappa (i - n/2))``: real transform of the 1d factor of ``q_n^2``."""
    i = np.arange(n + 1)
    logp = gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1) - n * np.log(2.0)
    p2 = np.exp(2 * logp)
    return np.cos(np.outer(kappa, i - 0.5 * n)) @ p2


@dataclass(frozen=True)
class SpacetimeProfile:
    """Space-time renewal function at selected times via its spatial Fourier transform.

    ``value(n, x)`` inverts the transform; the result is exact up to
    periodisation with period ``L`` and truncation at ``|kappa| <= kappa_max``.
    """

    n_values: np.ndarray
    kappa: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    transform: np.ndarray = field(repr=False)
    L: int = 0

    def value(self, n: int, x) -> np.ndarray:
        k = int(np.searchsorted(self.n_values, n))
        if k >= self.n_values.size or self.n_values[k] != n:
            raise DomainError(f"time {n} was not requested")
        x = np.atleast_2d(np.asarray(x, dtype=float))
        c1 = 0.5 * (x[:, 0] + x[:, 1])
        c2 = 0.5 * (x[:, 0] - x[:, 1])
        C1 = np.cos(np.outer(c1, self.kappa)) * self.weights
        C2 = np.cos(np.outer(c2, self.kappa)) * self.weights
        F = self.transform[k]
        vals = np.einsum("pa,ab,pb->p", C1, F, C2) / self.L**2
        parity = (n + x[:, 0] + x[:, 1]) % 2 == 0
        return np.where(parity, vals, 0.0)


def spacetime_profile(
    window: CriticalWindow,
    n_values,
    L: int = 512,
    kappa_max: float | None = None,
    method: str = "fft",
) -> SpacetimeProfile:
    """Evaluate ``U_N(n, .)`` at large ``n`` by a per-frequency renewal solve.

    In centred rotated coordinates the transform of ``q_k^2`` factorises as
    ``P_k(kappa1) P_k(kappa2)`` with a real even ``P_k``, so each frequency
    pair solves an independent scalar renewal equation.

    Parameters
    ----------
    n_values : sequence of int
        Times at which ``U_N(n, .)`` is wanted.
    L : int
        Period of the frequency grid in rotated index units.
    kappa_max : float, optional
        Frequencies above this are dropped; defaults to the level where the
        smallest requested ``n`` has relative weight ``exp(-40)``.
    """
    n_values = np.unique(np.asarray(n_values, dtype=int))
    n_top = int(n_values.max())
    n_min = int(n_values.min())
    if kappa_max is None:
        kappa_max = min(np.pi, np.sqrt(16 * 40.0 / max(n_min, 1)))
    l_max = int(np.floor(kappa_max * L / (2 * np.pi)))
    kappa = 2 * np.pi * np.arange(l_max + 1) / L
    l = np.arange(l_max + 1)
    # cosine series: interior frequencies stand for +-kappa, zero and Nyquist only once
    weights = np.where((l == 0) | (2 * l == L), 1.0, 2.0)
    P = np.zeros((n_top + 1, l_max + 1))
    for k in range(1, n_top + 1):
        P[k] = _centred_char(k, kappa)
    K = window.sigma2 * (P[:, :, None] * P[:, None, :]).reshape(n_top + 1, -1)
    Uh = solve_renewal(K, n_top, method).reshape(n_top + 1, l_max + 1, l_max + 1)
    return SpacetimeProfile(n_values, kappa, weights, Uh[n_values], L)


# ---------------------------------------------------------------------------
# sampling stretch displacements


class RenewalBridgeSampler:
    """Draw the end point of a stretch of length ``k`` from ``U(k, .) / U(k)``.

    Stretches are sampled backwards: given a renewal at time ``k`` the
    previous renewal ``m < k`` has probability
    ``sigma^2 u_{k-m}^2 U(m) / U(k)``, and the increment over ``k - m``
    steps has law ``q_{k-m}(x)^2 / u_{k-m}^2``, which factorises into two
    hypergeometric coordinates in rotated space.

    The conditional laws of all ``k <= n_max`` are kept in one sorted array
    (row ``k`` holds ``k + cdf``), so a single ``searchsorted`` serves a
    whole batch of different lengths.
    """

    def __init__(self, window: CriticalWindow, n_max: int, table: OverlapTable | None = None):
        n_max = int(n_max)
        if n_max < 1:
            raise DomainError("n_max must be at least 1")
        table = overlap(n_max) if table is None else table
        self.n_max = n_max
        self.U = solve_renewal_time(window, table, n_max=n_max).U_time
        s2 = window.sigma2
        u2 = np.asarray(table.u_sq[: n_max + 1], dtype=float)
        rows = []
        self._offset = np.zeros(n_max + 2, dtype=np.int64)
        for k in range(1, n_max + 1):
            w = s2 * u2[k:0:-1] * self.U[:k]  # index m = 0..k-1
            c = np.cumsum(w)
            c /= c[-1]
            c[-1] = 1.0
            rows.append(k + c)
            self._offset[k + 1] = self._offset[k] + k
        self._flat = np.concatenate(rows)

    def previous(self, k: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Sample the renewal preceding ``k`` (all entries of ``k`` at least 1)."""
        pos = np.searchsorted(self._flat, k + rng.random(k.shape), side="left")
        pos = np.minimum(pos, self._offset[k + 1] - 1)
        return pos - self._offset[k]

    def displacement(self, k, rng: np.random.Generator) -> np.ndarray:
        """Cartesian displacements for stretch lengths ``k``; shape ``k.shape + (2,)``."""
        k = np.array(k, dtype=np.int64, copy=True)
        if np.any((k < 0) | (k > self.n_max)):
            raise DomainError("stretch length outside the sampler range")
        uu = np.zeros(k.shape, dtype=np.int64)
        vv = np.zeros(k.shape, dtype=np.int64)
        live = k > 0
        while np.any(live):
            idx = np.flatnonzero(live)
            kk = k.flat[idx]
            m = self.previous(kk, rng)
            ell = kk - m
            uu.flat[idx] += 2 * rng.hypergeometric(ell, ell, ell) - ell
            vv.flat[idx] += 2 * rng.hypergeometric(ell, ell, ell) - ell
            k.flat[idx] = m
            live = k > 0
        return np.stack([(uu + vv) // 2, (uu - vv) // 2], axis=-1)


def renewal_sum_law(table: OverlapTable, N: int, steps: int) -> np.ndarray:
    """Exact ``P(tau_steps = n)`` for ``n = 0..N`` by repeated FFT convolution.

    Only the part of the law on ``[0, N]`` is kept, which is all that is
    needed to compare ``tau_steps / N`` with a distribution on ``[0, 1]``.
    """
    from scipy.fft import irfft, next_fast_len, rfft

    law = increment_law(table, N)
    L = next_fast_len(2 * N + 2)
    P = rfft(law.time_mass, L)
    q = np.zeros(N + 1)
    q[0] = 1.0
    for _ in range(int(steps)):
        q = irfft(rfft(q, L) * P, L)[: N + 1]
    return np.clip(q, 0.0, None)
