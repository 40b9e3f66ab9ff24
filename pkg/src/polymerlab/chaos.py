"""Finite-N moments of the partition function through its chaos expansion.

Third-moment bookkeeping.  In the no-triple part every matched space-time
point carries one of the labels AB, BC, AC.  Maximal runs of a single label
are stretches; a stretch from ``(a, x)`` to ``(b, y)`` is dressed by
``sigma^2 U(b - a, y - x)`` and the walk entering a new stretch comes from
the stretch before the previous one.  Everything below works in rotated
index space where the kernels factorise (see :mod:`polymerlab.lattice`).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .disorder import CriticalWindow
from .errors import CapacityError, DomainError, PrecisionWarning
from .lattice import OverlapTable, heat_kernel, overlap, walk1d_law
from .renewal import RenewalBridgeSampler, RenewalTable, solve_renewal, solve_renewal_spacetime, solve_renewal_time

EXACT_CHAIN_MAX_HORIZON = 20


def stretch_weight(m: int) -> int:
    """Number of label sequences with ``m`` stretches: ``3 * 2^(m - 1)``."""
    return 3 * 2 ** (m - 1)


def count_label_sequences(k: int) -> dict[int, int]:
    """Count sequences in ``{AB, BC, AC}^k`` by their number of stretches.

    Only sequences in which every replica appears are kept, matching the
    requirement that each of the three chaos terms is non-empty.
    """
    labels = ("AB", "BC", "AC")
    counts: dict[int, int] = {}
    for seq in np.ndindex(*(3,) * k):
        names = [labels[s] for s in seq]
        if set("".join(names)) != {"A", "B", "C"}:
            continue
        m = 1 + sum(1 for i in range(1, k) if seq[i] != seq[i - 1])
        counts[m] = counts.get(m, 0) + 1
    return counts


# ---------------------------------------------------------------------------
# exact stretch chain for point starts


def _step_matrix(p: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """``T[i', i] = p[i' - i]``, the 1d rotated-index transition from ``cols`` to ``rows`` sites."""
    T = np.zeros((rows, cols))
    k = p.size
    for i in range(cols):
        top = min(rows, i + k)
        T[i:top, i] = p[: top - i]
    return T


@dataclass
class ChainResult:
    """Output of :meth:`StretchChain.run`.

    Attributes
    ----------
    mass_by_end : dict
        ``mass_by_end[m][b]``: total weight of ``m``-stretch configurations
        whose last stretch ends at time ``b`` (point start, free end).
    pp_end : dict
        ``pp_end[n]``: no-triple third moment of the point-to-point partition
        function from the origin to each site at time ``n``, summed over
        ``m >= 2`` with the label factor included; rotated index array.
    """

    horizon: int
    mass_by_end: dict = field(default_factory=dict)
    pp_end: dict = field(default_factory=dict)

    def stretch_sum(self, m: int, k: int | None = None) -> float:
        """``I_m`` for interior times ``< k`` (default: the full horizon)."""
        k = self.horizon if k is None else k
        row = self.mass_by_end.get(m)
        if row is None:
            return 0.0
        return float(np.sum(row[:k]))

    def no_triple(self, k: int | None = None) -> float:
        """Point-to-plane no-triple third moment for horizon ``k``."""
        return float(sum(stretch_weight(m) * self.stretch_sum(m, k) for m in self.mass_by_end if m >= 2))


class StretchChain:
    """Transfer operator over stretches for walks started at the origin.

    The state after a stretch is indexed by the end times of the last two
    stretches and the absolute positions of their end points.

    Parameters
    ----------
    window : CriticalWindow
    horizon : int
        The partition function carries environment at times ``1..horizon-1``.
        Point-to-point pieces are produced for end times up to ``horizon``.
    """

    def __init__(self, window: CriticalWindow, horizon: int):
        if horizon > EXACT_CHAIN_MAX_HORIZON:
            raise CapacityError(f"exact stretch chain limited to horizon {EXACT_CHAIN_MAX_HORIZON}")
        if horizon < 1:
            raise DomainError("horizon must be positive")
        self.window = window
        self.horizon = int(horizon)
        self.sigma2 = window.sigma2
        T = self.horizon
        self.p = [walk1d_law(k) for k in range(T + 1)]
        self.spacetime = solve_renewal_spacetime(window, None, max(T, 1), budget=max(T, 1))
        self._Q: dict = {}
        self._MU: dict = {}

    def Q(self, t: int, s: int) -> np.ndarray:
        """Dense transition ``q_{t-s}(x - y)`` from sites at time ``s`` to time ``t``."""
        key = (t, s)
        if key not in self._Q:
            T1 = _step_matrix(self.p[t - s], t + 1, s + 1)
            self._Q[key] = np.kron(T1, T1)
        return self._Q[key]

    def MU(self, t: int, s: int) -> np.ndarray:
        """Dense ``U(t - s, y - x)`` from sites at time ``s`` to time ``t``."""
        key = (t, s)
        if key not in self._MU:
            k = t - s
            Uk = self.spacetime.U_spacetime[k]
            M = np.zeros(((t + 1) ** 2, (s + 1) ** 2))
            i, j = np.meshgrid(np.arange(s + 1), np.arange(s + 1), indexing="ij")
            cols = (i * (s + 1) + j).ravel()
            for di in range(k + 1):
                for dj in range(k + 1):
                    rows = ((i + di) * (t + 1) + (j + dj)).ravel()
                    M[rows, cols] = Uk[di, dj]
            self._MU[key] = M
        return self._MU[key]

    def run(self, m_max: int | None = None, pp: bool = True) -> ChainResult:
        """Iterate the stretch transfer operator.

        Parameters
        ----------
        m_max : int, optional
            Largest number of stretches; defaults to ``horizon - 1``, the
            most that fit in the interior times.
        pp : bool
            Also accumulate point-to-point end pieces.
        """
        T = self.horizon
        m_max = T - 1 if m_max is None else min(int(m_max), T - 1)
        s2 = self.sigma2
        res = ChainResult(T)
        if pp:
            res.pp_end = {n: np.zeros((n + 1, n + 1)) for n in range(1, T + 1)}
        state = {(0, 0): np.ones((1, 1))}
        for m in range(1, m_max + 1):
            new: dict = {}
            for (bp, b), X in state.items():
                for a in range(b + 1, T):
                    A = self.Q(a, bp) @ X
                    B = A * self.Q(a, b)
                    for b2 in range(a, T):
                        contrib = (self.MU(b2, a) @ B).T * s2
                        key = (b, b2)
                        if key in new:
                            new[key] += contrib
                        else:
                            new[key] = contrib
            state = new
            if not state:
                break
            row = np.zeros(T)
            for (bp, b), X in state.items():
                row[b] += X.sum()
            res.mass_by_end[m] = row
            if pp and m >= 2:
                w = stretch_weight(m)
                for (bp, b), X in state.items():
                    for n in range(b + 1, T + 1):
                        Z = (self.Q(n, bp) @ X) * self.Q(n, b) ** 2
                        res.pp_end[n] += w * Z.sum(axis=1).reshape(n + 1, n + 1)
        return res


# ---------------------------------------------------------------------------
# triple intersections


@dataclass(frozen=True)
class ThirdMomentAssembly:
    """Centered third moment of the point-to-plane partition function split by triple points."""

    N: int
    no_triple: float
    triple: float
    stretch_terms: dict

    @property
    def centered(self) -> float:
        return self.no_triple + self.triple


def pair_weights(window: CriticalWindow, chain_result: ChainResult, spacetime: RenewalTable, n_max: int) -> np.ndarray:
    """``w(n) = sum_z [q^3 + 3 q Var + M_pp]`` for ``n = 1..n_max``.

    This is the third moment between two consecutive triple points, with the
    triple contributions removed, summed over the end site.
    """
    s2 = window.sigma2
    w = np.zeros(n_max + 1)
    for n in range(1, n_max + 1):
        p = walk1d_law(n)
        q = np.outer(p, p)
        var = spacetime.U_spacetime[n] / s2 - q * q
        mpp = chain_result.pp_end.get(n)
        w[n] = np.sum(q**3) + 3.0 * np.sum(q * var) + (0.0 if mpp is None else np.sum(mpp))
    return w


def third_moment_chaos(window: CriticalWindow, N: int) -> ThirdMomentAssembly:
    """Exact centered third moment ``E[(Z_N - 1)^3]`` from the stretch chain.

    The no-triple part is the full-depth stretch series.  The triple part
    chains point-to-point pieces between consecutive triple points; after
    summing over sites this is a scalar renewal in the triple-point times.
    """
    N = int(N)
    chain = StretchChain(window, N)
    res = chain.run()
    U_time = chain.spacetime.U_time
    w = pair_weights(window, res, chain.spacetime, N - 1)
    xi3 = window.xi3
    # tau(d) = xi3 * (w(d) + sum_{d' < d} tau(d') w(d - d'))
    tau = np.zeros(N)
    for d in range(1, N):
        tau[d] = xi3 * (w[d] + np.dot(tau[1:d], w[d - 1:0:-1]))
    triple = 0.0
    for d in range(1, N):
        k = N - d
        var_k = float(np.sum(U_time[1:k]))
        tail = 1.0 + 3.0 * var_k + res.no_triple(k)
        triple += tau[d] * tail
    terms = {m: res.stretch_sum(m) for m in res.mass_by_end if m >= 2}
    return ThirdMomentAssembly(N, res.no_triple(), float(triple), terms)


# ---------------------------------------------------------------------------
# averaged fields: test functions sampled on the lattice


@dataclass(frozen=True)
class LatticeField:
    """Weights ``phi(z / sqrt N)`` on the square ``|z_i| <= radius``.

    ``weights[radius + z1, radius + z2]`` is the weight of site ``z``.
    """

    N: int
    radius: int
    weights: np.ndarray = field(repr=False)

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    @property
    def sup_norm(self) -> float:
        return float(np.abs(self.weights).max())

    def at(self, z: np.ndarray) -> np.ndarray:
        """Weights at integer sites ``z`` (shape ``(..., 2)``); zero off the square."""
        i = z[..., 0] + self.radius
        j = z[..., 1] + self.radius
        size = self.weights.shape[0]
        ok = (i >= 0) & (i < size) & (j >= 0) & (j < size)
        out = np.zeros(z.shape[:-1])
        out[ok] = self.weights[i[ok], j[ok]]
        return out


def _support_radius(phi) -> float:
    support = getattr(phi, "support", None)
    if support is not None:
        return float(support)
    grid = np.linspace(-8, 8, 321)
    X, Y = np.meshgrid(grid, grid, indexing="ij")
    vals = np.abs(phi(np.stack([X, Y], axis=-1)))
    mask = vals > 0
    if not mask.any():
        return 0.0
    return float(np.max(np.hypot(X[mask], Y[mask]))) + grid[1] - grid[0]


def lattice_field(phi, N: int) -> LatticeField:
    """Sample a macroscopic test function on ``Z^2 / sqrt N``.

    ``phi`` is a vectorised callable of points ``(..., 2)``, or an existing
    :class:`LatticeField` (returned unchanged), or ``None`` for the point
    mass ``N * delta_0`` that turns averaged quantities into point-started
    ones.
    """
    if isinstance(phi, LatticeField):
        return phi
    if phi is None:
        return LatticeField(int(N), 0, np.array([[float(N)]]))
    radius = int(np.ceil(_support_radius(phi) * np.sqrt(N)))
    coords = np.arange(-radius, radius + 1)
    X, Y = np.meshgrid(coords, coords, indexing="ij")
    w = np.asarray(phi(np.stack([X, Y], axis=-1) / np.sqrt(N)), dtype=float)
    w = np.broadcast_to(w, X.shape).copy()
    return LatticeField(int(N), radius, w)


def _horizon(N: int, t: float) -> int:
    T = N * t
    if not t > 0 or abs(T - round(T)) > 1e-9:
        raise DomainError("N * t must be a positive integer")
    return int(round(T))


def _chi(L: int, real: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Characteristic function ``(cos k1 + cos k2) / 2`` of one walk step on the ``L``-torus."""
    k1 = 2 * np.pi * np.fft.fftfreq(L)
    k2 = 2 * np.pi * (np.fft.rfftfreq(L) if real else np.fft.fftfreq(L))
    return 0.5 * (np.cos(k1)[:, None] + np.cos(k2)[None, :]), (np.full(k2.size, 2.0) if real else np.ones(k2.size))


def _embed(weights: np.ndarray, L: int) -> np.ndarray:
    """Place a centred square array on the ``L``-torus with its centre at the origin."""
    r = weights.shape[0] // 2
    out = np.zeros((L, L))
    idx = np.arange(-r, r + 1) % L
    out[np.ix_(idx, idx)] = weights
    return out


def _rfft_weights(L: int) -> np.ndarray:
    """Multiplicities of the half-spectrum columns of ``rfft2`` for Parseval sums."""
    m = np.full(L // 2 + 1, 2.0)
    m[0] = 1.0
    if L % 2 == 0:
        m[-1] = 1.0
    return m


def variance_exact(window: CriticalWindow, N: int, t: float, phi, rel_cut: float = 1e-22) -> float:
    """``Var[Z_{Nt}(phi)]`` from the renewal representation.

    ``sigma^2 / N^2 * sum_{0<m<Nt} S(m) (1 + sum_{d=1}^{Nt-1-m} U(d))`` with
    ``S(m) = sum_x q^N_{0,m}(phi, x)^2``.  ``S(m)`` is a Parseval sum
    ``L^-2 sum_k |phi_hat(k)|^2 chi(k)^{2m}`` on a torus wide enough that
    the smoothed field does not wrap; frequencies where ``|phi_hat|^2`` is
    below ``rel_cut`` times its peak are dropped.
    """
    from scipy.fft import next_fast_len, rfft2

    N = int(N)
    T = _horizon(N, t)
    field_ = lattice_field(phi, N)
    if not np.any(field_.weights):
        return 0.0
    table = overlap(T)
    U = solve_renewal_time(window, table, n_max=T).U_time
    cu = np.concatenate([[0.0], np.cumsum(U[1:])])  # cu[j] = sum_{d=1}^{j} U(d)
    m = np.arange(1, T)
    wm = 1.0 + cu[T - 1 - m]
    L = next_fast_len(2 * (field_.radius + int(np.ceil(12 * np.sqrt(T))) + 2))
    A = np.abs(rfft2(_embed(field_.weights, L))) ** 2 * _rfft_weights(L)[None, :] / L**2
    chi, _ = _chi(L)
    keep = A > rel_cut * A.max()
    a = A[keep]
    c2 = chi[keep] ** 2
    total = 0.0
    chunk = max(1, int(2**24 // max(T, 1)))
    logc = np.log(np.maximum(c2, 1e-300))
    for lo in range(0, a.size, chunk):
        P = np.exp(np.outer(logc[lo:lo + chunk], m))
        total += float(a[lo:lo + chunk] @ (P @ wm))
    return window.sigma2 * total / N**2


# ---------------------------------------------------------------------------
# no-triple third moment of averaged fields


@dataclass
class StretchSeries:
    """Per-stretch-count terms ``I^(N,m)`` of the no-triple third moment.

    Attributes
    ----------
    terms, errors, methods : dict
        Keyed by ``m``; ``methods[m]`` is ``"exact"`` or ``"mc"``.
    partial_sum : float
        ``sum_{m <= m_max} 3 * 2^(m-1) I^(N,m)``.
    tail_estimate : float
        Geometric extrapolation of the weighted terms from the last ratio;
        ``inf`` when that ratio is not below one.
    """

    N: int
    t: float
    terms: dict
    errors: dict
    methods: dict
    partial_sum: float
    partial_error: float
    tail_estimate: float

    def ratios(self) -> dict:
        ms = sorted(self.terms)
        return {m: self.terms[m + 1] / self.terms[m] for m in ms if m + 1 in self.terms and self.terms[m] != 0}

    def as_dict(self) -> dict:
        return {
            "N": self.N,
            "t": self.t,
            "terms": {str(k): v for k, v in self.terms.items()},
            "errors": {str(k): v for k, v in self.errors.items()},
            "methods": {str(k): v for k, v in self.methods.items()},
            "partial_sum": self.partial_sum,
            "partial_error": self.partial_error,
            "tail_estimate": self.tail_estimate,
        }


EXACT_I2_MAX_N = 128


def i2_exact(window: CriticalWindow, N: int, t: float, phi) -> float:
    """``I^(N,2)`` with ``psi = 1`` by nested space-time convolution.

    Fourier space on a torus that holds every support without wrap.  With
    ``F_a = q^N(phi, .)^2`` and ``G_a = q^N(phi, .)``::

        L_b = sum_{1 <= a <= b} F_a * U_{b-a},   M_a = sum_{b < a} L_b * q_{a-b}
        I = sigma^4 / N^3 * sum_a <M_a, G_a> * sum_{k=0}^{T-1-a} U(k)
    """
    from scipy.fft import irfft2, next_fast_len, rfft2

    N = int(N)
    T = _horizon(N, t)
    if T > EXACT_I2_MAX_N:
        raise CapacityError(f"exact I^(N,2) limited to horizons <= {EXACT_I2_MAX_N}")
    field_ = lattice_field(phi, N)
    if T < 3:
        return 0.0
    sp = solve_renewal_spacetime(window, None, T - 1, budget=max(T - 1, 1))
    L = next_fast_len(2 * (field_.radius + 2 * T) + 2)
    chi, _ = _chi(L)
    phat = rfft2(_embed(field_.weights, L))
    G = np.empty((T,) + chi.shape, dtype=complex)
    F = np.empty_like(G)
    G[0] = phat
    for a in range(1, T):
        G[a] = G[a - 1] * chi
        F[a] = rfft2(irfft2(G[a], s=(L, L)) ** 2)
    F[0] = 0.0
    Uh = np.empty_like(G)
    for k in range(T):
        Uh[k] = rfft2(_embed(sp.spacetime_cartesian(k), L))
    # time convolution L_b = sum_a F_a U_{b-a}, done along axis 0 by FFT
    n = next_fast_len(2 * T)
    Lb = np.fft.ifft(np.fft.fft(F, n=n, axis=0) * np.fft.fft(Uh, n=n, axis=0), axis=0)[:T]
    Ut = sp.U_time
    tail = np.cumsum(Ut[:T])  # tail[j] = sum_{k=0}^{j} U(k)
    mult = _rfft_weights(L)[None, :]
    M = np.zeros(chi.shape, dtype=complex)
    total = 0.0
    for a in range(2, T):
        M = chi * (M + Lb[a - 1])
        total += float(np.sum((M * np.conj(G[a])).real * mult)) / L**2 * tail[T - 1 - a]
    return window.sigma2**2 * total / N**3


def _walk_displacement(n: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Simple random walk positions after ``n`` steps (Cartesian, shape ``n.shape + (2,)``)."""
    uu = 2 * rng.binomial(n, 0.5) - n
    vv = 2 * rng.binomial(n, 0.5) - n
    return np.stack([(uu + vv) // 2, (uu - vv) // 2], axis=-1)


def _log_binom_half(n: np.ndarray, k: np.ndarray) -> np.ndarray:
    from scipy.special import gammaln

    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0) - n * np.log(2.0)


def _walk_pmf(n: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``q_n(x)`` for arrays of step counts and Cartesian sites."""
    uu = x[..., 0] + x[..., 1]
    vv = x[..., 0] - x[..., 1]
    ok = ((uu + n) % 2 == 0) & (np.abs(uu) <= n) & (np.abs(vv) <= n)
    iu = np.where(ok, (uu + n) // 2, 0)
    iv = np.where(ok, (vv + n) // 2, 0)
    return np.where(ok, np.exp(_log_binom_half(n, iu) + _log_binom_half(n, iv)), 0.0)


def _bridge_point(y0: np.ndarray, y1: np.ndarray, n0: np.ndarray, n1: np.ndarray, rng) -> np.ndarray:
    """Site of a walk bridge from ``y0`` (``n0`` steps before) to ``y1`` (``n1`` steps after)."""
    n = n0 + n1
    out = []
    for sign in (1, -1):
        d = (y1[..., 0] - y0[..., 0]) + sign * (y1[..., 1] - y0[..., 1])
        ups = (d + n) // 2
        h = rng.hypergeometric(ups, n - ups, n0)
        out.append(y0[..., 0] + sign * y0[..., 1] + 2 * h - n0)
    uu, vv = out
    return np.stack([(uu + vv) // 2, (uu - vv) // 2], axis=-1)


def _draw_gap(rng, G: np.ndarray, d0: np.ndarray, mix: float = 0.3):
    """Gap ``g`` in ``1..G`` from a mixture of the uniform law and log-width bins.

    The second component gives ``g`` a mass proportional to the log-length
    of ``[d0 + 2g - 1, d0 + 2g + 1]``, about ``1 / (d0 + 2g)``, which tracks
    the ``q_{d0 + 2g}`` weight picked up by stretches after the second.
    Returns the gaps and their probabilities.
    """
    n = G.shape[0]
    lo = d0 + 1.0
    hi = d0 + 2.0 * G + 1.0
    span = np.log(hi / lo)
    s = lo * np.exp(rng.random(n) * span)
    g_log = np.clip(np.floor((s - d0 - 1.0) / 2.0).astype(np.int64) + 1, 1, G)
    g_uni = 1 + np.minimum((rng.random(n) * G).astype(np.int64), G - 1)
    g = np.where(rng.random(n) < mix, g_uni, g_log)
    p_log = np.log((d0 + 2.0 * g + 1.0) / (d0 + 2.0 * g - 1.0)) / span
    return g, mix / G + (1.0 - mix) * p_log


def stretch_term_mc(
    window: CriticalWindow,
    N: int,
    t: float,
    m: int,
    phi=None,
    psi=None,
    samples: int = 200_000,
    seed: int = 0,
    sampler: RenewalBridgeSampler | None = None,
) -> tuple[float, float]:
    """Unbiased Monte Carlo estimate of ``I^(N,m)`` with its standard error.

    Times are drawn stretch by stretch: gaps from :func:`_draw_gap` and
    stretch lengths ``k`` with probability proportional to ``U(k)``, both
    restricted so that the remaining stretches still fit before ``Nt``.  Stretch end
    points come from :class:`~polymerlab.renewal.RenewalBridgeSampler`, the
    entry point of stretch ``i >= 3`` from the walk bridge between the ends
    of stretches ``i - 2`` and ``i - 1`` (whose exact weight is a single
    ``q_n``), and the smoothed factors ``q^N(phi, .)`` by one-sample
    averaging, or exactly when ``phi`` is the point mass (``None``).
    """
    N = int(N)
    T = _horizon(N, t)
    if m < 2:
        raise DomainError("m must be at least 2")
    if T < 2 * m:
        return 0.0, 0.0
    rng = np.random.default_rng(seed)
    field_ = lattice_field(phi, N)
    point = phi is None
    sampler = RenewalBridgeSampler(window, T - 1) if sampler is None else sampler
    cumU = np.cumsum(sampler.U[:T])  # cumU[j] = sum_{k<=j} U(k)
    psi_field = None if psi is None else lattice_field(psi, N)
    if point:
        u2 = overlap(T).u_sq
    if not point:
        flat = np.cumsum(field_.weights.ravel())
        flat /= flat[-1]
    out = np.empty(samples)
    block = 50_000
    for lo in range(0, samples, block):
        n = min(block, samples - lo)
        w = np.full(n, window.sigma2**m / N**3)
        b_prev2 = np.zeros(n, dtype=np.int64)
        b_prev = np.zeros(n, dtype=np.int64)
        y_prev2 = y_prev = None
        for i in range(1, m + 1):
            # leave one time unit for each later gap so every draw is admissible
            g, pg = _draw_gap(rng, T - 1 - (m - i) - b_prev, b_prev - b_prev2)
            a = b_prev + g
            top = T - 1 - (m - i) - a
            k = np.minimum(np.searchsorted(cumU, rng.random(n) * cumU[top], side="right"), top)
            w *= cumU[top] / pg
            b = a + k
            if i == 1:
                if point:
                    ii = rng.hypergeometric(a, a, a)
                    jj = rng.hypergeometric(a, a, a)
                    uu, vv = 2 * ii - a, 2 * jj - a
                    x = np.stack([(uu + vv) // 2, (uu - vv) // 2], axis=-1)
                    w *= float(N) ** 2 * u2[a]
                else:
                    pick = np.searchsorted(flat, rng.random(n), side="right")
                    pick = np.minimum(pick, flat.size - 1)
                    size = field_.weights.shape[0]
                    zA = np.stack([pick // size - field_.radius, pick % size - field_.radius], axis=-1)
                    x = zA + _walk_displacement(a, rng)
                    zB = x + _walk_displacement(a, rng)
                    w *= field_.total * field_.at(zB)
            elif i == 2:
                x = y_prev + _walk_displacement(g, rng)
                if point:
                    w *= float(N) * _walk_pmf(a, x)
                else:
                    w *= field_.at(x + _walk_displacement(a, rng))
            else:
                n0 = a - b_prev2
                n1 = g
                w *= _walk_pmf(n0 + n1, y_prev - y_prev2)
                live = w > 0
                x = np.zeros_like(y_prev)
                if np.any(live):
                    x[live] = _bridge_point(y_prev2[live], y_prev[live], n0[live], n1[live], rng)
            y = x + sampler.displacement(k, rng)
            y_prev2, y_prev = y_prev, y
            b_prev2, b_prev = b_prev, b
        if psi_field is not None:
            end1 = y_prev2 + _walk_displacement(T - b_prev2, rng)
            end2 = y_prev + _walk_displacement(T - b_prev, rng)
            end3 = y_prev + _walk_displacement(T - b_prev, rng)
            w *= psi_field.at(end1) * psi_field.at(end2) * psi_field.at(end3)
        out[lo:lo + n] = w
    return float(out.mean()), float(out.std(ddof=1) / np.sqrt(samples))


STRETCH_MAX_M = 6


def stretch_third_moment_nt(
    window: CriticalWindow,
    N: int,
    t: float = 1.0,
    phi=None,
    psi=None,
    m_max: int = 5,
    samples: int = 200_000,
    seed: int = 0,
    rtol: float | None = None,
) -> StretchSeries:
    """Terms ``I^(N,m)``, ``m = 2..m_max``, and the partial no-triple sum.

    ``m = 2`` is exact (:func:`i2_exact`) when ``psi = 1`` and the horizon is
    at most ``EXACT_I2_MAX_N``; everything else is Monte Carlo
    (:func:`stretch_term_mc`) with independent streams per ``m``.

    Warns
    -----
    PrecisionWarning
        If ``rtol`` is given and some Monte Carlo term has a larger relative
        standard error.
    """
    if not 2 <= m_max <= STRETCH_MAX_M:
        raise DomainError(f"m_max must lie in 2..{STRETCH_MAX_M}")
    T = _horizon(int(N), t)
    sampler = RenewalBridgeSampler(window, max(T - 1, 1)) if T >= 4 else None
    seeds = np.random.SeedSequence(seed).spawn(m_max + 1)
    terms, errors, methods = {}, {}, {}
    for m in range(2, m_max + 1):
        if m == 2 and psi is None and T <= EXACT_I2_MAX_N:
            terms[m], errors[m], methods[m] = i2_exact(window, N, t, phi), 0.0, "exact"
            continue
        if sampler is None:
            terms[m], errors[m], methods[m] = 0.0, 0.0, "exact"
            continue
        v, e = stretch_term_mc(window, N, t, m, phi, psi, samples, seeds[m], sampler)
        terms[m], errors[m], methods[m] = v, e, "mc"
        if rtol is not None and v != 0 and e / abs(v) > rtol:
            warnings.warn(f"I^(N,{m}) relative error {e / abs(v):.3g} above {rtol:g}", PrecisionWarning)
    weighted = {m: stretch_weight(m) * v for m, v in terms.items()}
    partial = float(sum(weighted.values()))
    perr = float(np.sqrt(sum((stretch_weight(m) * e) ** 2 for m, e in errors.items())))
    last, prev = weighted[m_max], weighted.get(m_max - 1, 0.0)
    if prev > 0 and 0 <= last < prev:
        r = last / prev
        tail = last * r / (1.0 - r)
    elif last == 0:
        tail = 0.0
    else:
        tail = float("inf")
    return StretchSeries(int(N), float(t), terms, errors, methods, partial, perr, float(tail))


# ---------------------------------------------------------------------------
# triple-intersection resummation


@dataclass(frozen=True)
class TripleResummation:
    """``rho_N`` and the bound it gives on the triple-intersection part.

    Attributes
    ----------
    rho : float
        ``|E xi^3| * sum_{a <= N} w(a)`` with ``w`` as in :func:`pair_weights`.
    pieces : dict
        The three contributions to ``rho`` (cube, ``3 q Var`` and no-triple),
        each already multiplied by ``|E xi^3|``.
    geometric_ok : bool
        ``rho < 1``, so that ``sum rho^n = 1 / (1 - rho)``.
    bound : float
        ``|E xi^3| * A_N * B_N / (1 - rho)`` for the point-to-plane partition
        function (``inf`` when the series diverges).
    exact_upto : dict
        Largest ``a`` computed exactly per piece; beyond it a ``C / a^2``
        tail fitted on the last exact stretch is added.
    """

    N: int
    rho: float
    pieces: dict
    geometric_ok: bool
    bound: float
    exact_upto: dict


def _c_over_a2_tail(values: np.ndarray, a_hi: int, N: int, fit: int = 8) -> float:
    """``sum_{a_hi < a <= N} C / a^2`` with ``C`` the largest ``a^2 w(a)`` over the last ``fit`` exact points."""
    if N <= a_hi:
        return 0.0
    a = np.arange(max(1, a_hi - fit + 1), a_hi + 1)
    C = float(np.max(a**2 * values[a]))
    k = np.arange(a_hi + 1, N + 1)
    return C * float(np.sum(1.0 / k.astype(float) ** 2))


def triple_resummation(window: CriticalWindow, N: int, spatial_budget: int = 96, chain_horizon: int = 14) -> TripleResummation:
    """Assemble ``rho_N`` from its three pieces.

    * ``sum_z q_a(z)^3`` is exact for every ``a <= N`` (it factorises in
      rotated coordinates).
    * ``3 sum_z q_a(z) Var Z_{0,a}(0,z)`` needs the space-time renewal
      function, so it is exact for ``a <= spatial_budget``.
    * the no-triple point-to-point third moment comes from the exact stretch
      chain for ``a <= chain_horizon``.

    Pieces truncated below ``N`` receive a ``C / a^2`` tail.
    """
    N = int(N)
    s2, xi3 = window.sigma2, abs(window.xi3)
    if s2 == 0 or xi3 == 0:
        return TripleResummation(N, 0.0, {"cube": 0.0, "variance": 0.0, "no_triple": 0.0}, True, 0.0, {})
    cube = np.zeros(N + 1)
    for a in range(1, N + 1):
        p = np.exp(_log_binom_half(np.full(a + 1, a), np.arange(a + 1)))
        cube[a] = float(np.sum(p**3)) ** 2
    a_sp = min(N, spatial_budget)
    sp = solve_renewal_spacetime(window, None, a_sp, budget=a_sp)
    var = np.zeros(a_sp + 1)
    for a in range(1, a_sp + 1):
        q = np.outer(walk1d_law(a), walk1d_law(a))
        var[a] = 3.0 * float(np.sum(q * (sp.U_spacetime[a] / s2 - q * q)))
    a_ch = min(N, chain_horizon)
    res = StretchChain(window, a_ch).run()
    mpp = np.zeros(a_ch + 1)
    for a in range(1, a_ch + 1):
        mpp[a] = float(np.sum(res.pp_end.get(a, 0.0)))
    pieces = {
        "cube": xi3 * float(cube[1:].sum()),
        "variance": xi3 * (float(var[1:].sum()) + _c_over_a2_tail(var, a_sp, N)),
        "no_triple": xi3 * (float(mpp[1:].sum()) + _c_over_a2_tail(mpp, a_ch, N)),
    }
    rho = float(sum(pieces.values()))
    ok = rho < 1.0
    if ok:
        # A_N = rho / |E xi^3| for the point start; B_N from the point-to-plane moments
        U = solve_renewal_time(window, overlap(N), n_max=N).U_time
        B = 1.0 + 3.0 * float(np.sum(U[1:N])) + res.no_triple()
        bound = rho * B / (1.0 - rho)
    else:
        bound = float("inf")
    return TripleResummation(N, rho, pieces, ok, float(bound), {"cube": N, "variance": a_sp, "no_triple": a_ch})
