"""Brute-force moment oracles: coupled-walk dynamic programming and path enumeration.

All walks are handled in halved rotated coordinates.  A single step moves
each rotated coordinate by an independent fair sign, so the difference of
two walks moves each rotated coordinate by ``-1, 0, +1`` with weights
``1/4, 1/2, 1/4`` (in half-units).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .disorder import CriticalWindow, DisorderSpec, XiSampler
from .errors import CapacityError, DomainError

SECOND_DP_MAX_N = 512
THIRD_DP_MAX_N = 24
ENUM_MAX_N = 6

_STEPS = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]])


@dataclass(frozen=True)
class MomentReport:
    """A computed quantity with its method and error estimate."""

    quantity: str
    N: int
    value: float
    method: str
    error: float = 0.0
    params: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "N": self.N,
            "value": self.value,
            "method": self.method,
            "error": self.error,
            "params": dict(self.params),
        }


def _lazy_step(f: np.ndarray, axis: int) -> np.ndarray:
    """Apply the lazy kernel (1/4, 1/2, 1/4) along ``axis`` (zero boundary)."""
    g = 0.5 * f
    lo = [slice(None)] * f.ndim
    hi = [slice(None)] * f.ndim
    lo[axis] = slice(1, None)
    hi[axis] = slice(None, -1)
    g[tuple(lo)] += 0.25 * f[tuple(hi)]
    g[tuple(hi)] += 0.25 * f[tuple(lo)]
    return g


def second_moment_dp(window: CriticalWindow | float, N: int) -> float:
    """``E[Z_N^2]`` from the difference walk with weight ``1 + sigma^2`` on returns.

    Environment sits at interior times ``1..N-1``.  The state array has
    radius ``N`` so no mass can leave it.
    """
    sigma2 = window.sigma2 if isinstance(window, CriticalWindow) else float(window)
    N = int(N)
    if N < 1:
        raise DomainError("N must be at least 1")
    if N > SECOND_DP_MAX_N:
        raise CapacityError(f"second-moment DP limited to N <= {SECOND_DP_MAX_N}")
    r = N
    f = np.zeros((2 * r + 1, 2 * r + 1))
    f[r, r] = 1.0
    for _ in range(1, N):
        f = _lazy_step(_lazy_step(f, 0), 1)
        f[r, r] *= 1.0 + sigma2
    return float(f.sum())


def _triple_step_2d(f: np.ndarray, axes: tuple[int, int]) -> np.ndarray:
    """One step of ``((s - s')/2, (s' - s'')/2)`` for three fair signs along two axes."""
    a0, a1 = axes
    g = np.zeros_like(f)
    for s, sp, spp in itertools.product((-1, 1), repeat=3):
        d1 = (s - sp) // 2
        d2 = (sp - spp) // 2
        g += np.roll(np.roll(f, d1, axis=a0), d2, axis=a1)
    return g / 8.0


def third_moment_dp(window: CriticalWindow | tuple[float, float], N: int) -> float:
    """``E[Z_N^3]`` from the pair of differences ``(S - S', S' - S'')``.

    The state is four-dimensional: two rotated coordinates for each
    difference.  The per-site weight is
    ``1 + sigma^2 (1{D1=0} + 1{D2=0} + 1{D1+D2=0}) + E[xi^3] 1{D1=D2=0}``.
    """
    if isinstance(window, CriticalWindow):
        sigma2, xi3 = window.sigma2, window.xi3
    else:
        sigma2, xi3 = map(float, window)
    N = int(N)
    if N < 1:
        raise DomainError("N must be at least 1")
    if N > THIRD_DP_MAX_N:
        raise CapacityError(f"third-moment DP limited to N <= {THIRD_DP_MAX_N}")
    r = N
    size = 2 * r + 1
    # axes: (D1u, D2u, D1v, D2v)
    f = np.zeros((size,) * 4)
    f[r, r, r, r] = 1.0
    idx = np.arange(size) - r
    d1u = idx[:, None, None, None]
    d2u = idx[None, :, None, None]
    d1v = idx[None, None, :, None]
    d2v = idx[None, None, None, :]
    z1 = (d1u == 0) & (d1v == 0)
    z2 = (d2u == 0) & (d2v == 0)
    z3 = (d1u + d2u == 0) & (d1v + d2v == 0)
    weight = 1.0 + sigma2 * (z1.astype(float) + z2 + z3) + xi3 * (z1 & z2)
    for _ in range(1, N):
        f = _triple_step_2d(f, (0, 1))
        f = _triple_step_2d(f, (2, 3))
        f *= weight
    # radius N exceeds the N - 1 steps taken, so np.roll never wraps mass
    return float(f.sum())


def _all_paths(steps: int) -> np.ndarray:
    """Every path of ``steps`` steps as positions at times ``1..steps``, shape (4^steps, steps, 2)."""
    if steps == 0:
        return np.zeros((1, 0, 2), dtype=np.int64)
    choice = np.array(list(itertools.product(range(4), repeat=steps)))
    return np.cumsum(_STEPS[choice], axis=1)


def _coincidence(paths: np.ndarray) -> np.ndarray:
    """``C[a, b, n] = 1`` iff paths ``a`` and ``b`` share the site at time ``n + 1``."""
    return np.all(paths[:, None, :, :] == paths[None, :, :, :], axis=-1)


def second_moment_enum(sigma2: float, N: int) -> float:
    """``E[Z_N^2]`` by summing over all ``4^{2(N-1)}`` path pairs."""
    if N > ENUM_MAX_N:
        raise CapacityError(f"enumeration limited to N <= {ENUM_MAX_N}")
    paths = _all_paths(N - 1)
    C = _coincidence(paths)
    w = np.prod(np.where(C, 1.0 + sigma2, 1.0), axis=-1)
    return float(w.mean())


def third_moment_enum(sigma2: float, xi3: float, N: int) -> float:
    """``E[Z_N^3]`` by summing over all ``4^{3(N-1)}`` path triples.

    The first step of the first walk is fixed to ``(1, 0)``; the other three
    choices are images under lattice rotations applied to all three walks,
    which preserve every coincidence.
    """
    if N > ENUM_MAX_N:
        raise CapacityError(f"enumeration limited to N <= {ENUM_MAX_N}")
    steps = N - 1
    if steps == 0:
        return 1.0
    paths = _all_paths(steps)
    C = _coincidence(paths)
    first = paths[:, 0, :]
    heads = np.flatnonzero((first[:, 0] == 1) & (first[:, 1] == 0))
    pair_w = 1.0 + sigma2
    total = 0.0
    for a in heads:
        cab = C[a][:, None, :]
        cac = C[a][None, :, :]
        cbc = C
        code = cab.astype(np.int8) + cac + cbc
        w = np.where(code == 3, 1.0 + 3.0 * sigma2 + xi3, np.where(code == 1, pair_w, 1.0))
        total += np.prod(w, axis=-1).sum()
    n = paths.shape[0]
    return float(4.0 * total / n**3)


def averaged_variance_dp(window: CriticalWindow, N: int, phi, t: float = 1.0) -> float:
    """``Var[(1/N) sum_x phi(x / sqrt N) Z_{Nt}(x)]`` from the difference walk.

    ``h(d) = E_d[prod_j (1 + sigma^2 1{D_j = 0})] - 1`` over the ``Nt - 1``
    interior times, for the difference ``D`` of two walks started ``d``
    apart, obeys ``h <- P h + sigma^2 P(. -> 0) (1 + h(0))``.  The variance
    is ``N^-2 sum_d A(d) h(d)`` with ``A`` the lattice autocorrelation of
    ``phi``.  Differences with odd ``d1 + d2`` never meet and drop out.
    """
    from scipy.signal import fftconvolve

    sigma2 = window.sigma2
    N = int(N)
    T = int(round(N * t))
    if T < 1 or abs(N * t - T) > 1e-9:
        raise DomainError("N * t must be a positive integer")
    if T > SECOND_DP_MAX_N:
        raise CapacityError(f"difference-walk DP limited to horizons <= {SECOND_DP_MAX_N}")
    sqN = np.sqrt(N)
    support = getattr(phi, "support", 8.0)
    R = int(np.ceil(support * sqN))
    coords = np.arange(-R, R + 1)
    X, Y = np.meshgrid(coords, coords, indexing="ij")
    w = np.asarray(phi(np.stack([X, Y], axis=-1) / sqN), dtype=float)
    A = fftconvolve(w, w[::-1, ::-1])  # A[2R + d] = sum_x w(x) w(x - d)
    # halved rotated coordinates of the difference, radius T suffices
    r = T
    h = np.zeros((2 * r + 1, 2 * r + 1))
    for _ in range(1, T):
        h0 = h[r, r]
        h = _lazy_step(_lazy_step(h, 0), 1)
        h[r - 1:r + 2, r - 1:r + 2] += sigma2 * (1.0 + h0) * np.outer([0.25, 0.5, 0.25], [0.25, 0.5, 0.25])
    iu, iv = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1), indexing="ij")
    d1 = iu + iv
    d2 = iu - iv
    ok = (np.abs(d1) <= 2 * R) & (np.abs(d2) <= 2 * R)
    return float(np.sum(A[d1[ok] + 2 * R, d2[ok] + 2 * R] * h[ok]) / N**2)


# ---------------------------------------------------------------------------
# environment Monte Carlo for the averaged field


def _transfer_step(Z: np.ndarray) -> np.ndarray:
    """Backward walk average: ``Z(x) <- 1/4 sum_e Z(x + e)`` on a padded square."""
    out = np.zeros_like(Z)
    out[1:, :] += Z[:-1, :]
    out[:-1, :] += Z[1:, :]
    out[:, 1:] += Z[:, :-1]
    out[:, :-1] += Z[:, 1:]
    return 0.25 * out


def averaged_field_mc(
    window: CriticalWindow,
    spec: DisorderSpec,
    N: int,
    phi,
    psi=None,
    replicas: int = 200,
    seed: int = 0,
    t: float = 1.0,
):
    """Monte Carlo moments of ``(1/N) sum_x phi(x / sqrt N) Z_{0,Nt}(x, psi)``.

    Each replica samples the environment on the slab and evaluates the
    point-to-function partition functions of all starting points at once by
    the backward transfer recursion, which is exact given the environment.

    Parameters
    ----------
    phi : callable
        Vectorised test function of the macroscopic point, shape ``(..., 2)``.
    psi : callable, optional
        Terminal weight; ``None`` means ``psi = 1``.

    Returns
    -------
    dict
        ``mean``, ``var``, ``third`` and their standard errors.
    """
    if replicas < 100:
        raise DomainError("at least 100 replicas are required")
    if N > 256:
        raise CapacityError("environment Monte Carlo limited to N <= 256")
    T = int(np.floor(N * t))
    sqN = np.sqrt(N)
    # phi support bounded by a radius: find it on a coarse macroscopic grid
    grid = np.linspace(-6, 6, 241)
    X, Y = np.meshgrid(grid, grid, indexing="ij")
    vals = np.abs(phi(np.stack([X, Y], axis=-1)))
    mask = vals > 0
    rad = float(np.max(np.hypot(X[mask], Y[mask]))) if mask.any() else 0.0
    start = int(np.ceil(rad * sqN)) + 1
    R = start + T + 1
    coords = np.arange(-R, R + 1)
    CX, CY = np.meshgrid(coords, coords, indexing="ij")
    pts = np.stack([CX, CY], axis=-1) / sqN
    phiw = phi(pts)
    psiw = np.ones_like(CX, dtype=float) if psi is None else psi(pts)
    rng_seeds = np.random.SeedSequence(seed).spawn(replicas)
    samples = np.empty(replicas)
    for k in range(replicas):
        xs = XiSampler(spec, window.beta, rng_seeds[k])
        Z = psiw.copy()
        # times T-1, ..., 1 carry environment; time 0 is the start point
        Z = _transfer_step(Z)
        for _ in range(T - 1, 0, -1):
            Z = Z * (1.0 + xs.draw(Z.shape))
            Z = _transfer_step(Z)
        samples[k] = np.sum(phiw * Z) / N
    mean = samples.mean()
    c = samples - mean
    var = np.mean(c * c) * replicas / (replicas - 1)
    third = np.mean(c**3)
    return {
        "mean": float(mean),
        "mean_err": float(np.sqrt(var / replicas)),
        "var": float(var),
        "var_err": float(np.sqrt(max(np.mean(c**4) - var**2, 0.0) / replicas)),
        "third": float(third),
        "third_err": float(np.std(c**3) / np.sqrt(replicas)),
        "replicas": replicas,
        "samples": samples,
    }
