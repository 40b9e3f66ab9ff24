"""Simple random walk kernels on Z^2, Gaussian heat kernels and the replica overlap.

The planar walk is stored in rotated coordinates ``u = x1 + x2`` and
``v = x1 - x2``.  Each step changes both ``u`` and ``v`` by an independent
fair sign, so after ``n`` steps ``(u + n) / 2`` and ``(v + n) / 2`` are two
independent Binomial(n, 1/2) counts.  Array index ``(i, j)`` of row ``n``
therefore lives on the even sublattice by construction and the parity rule
is structural rather than checked.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CacheError, CapacityError, DomainError

EULER_GAMMA = 0.57721566490153286061
OVERLAP_ALPHA = EULER_GAMMA + np.log(16.0) - np.pi

DEFAULT_MEMORY_BUDGET = 512 * 2**20


def is_even(n: int, x) -> bool:
    """Parity predicate ``n + x1 + x2`` even."""
    return (int(n) + int(x[0]) + int(x[1])) % 2 == 0


def to_rotated(x1, x2, n):
    """Map lattice sites at time ``n`` to rotated array indices ``(i, j)``."""
    x1 = np.asarray(x1)
    x2 = np.asarray(x2)
    return (x1 + x2 + n) // 2, (x1 - x2 + n) // 2


def from_rotated(i, j, n):
    """Inverse of :func:`to_rotated` on the even sublattice."""
    i = np.asarray(i)
    j = np.asarray(j)
    return i + j - n, i - j


def walk1d_law(n: int) -> np.ndarray:
    """Law of ``(S_n + n) / 2`` for the one-dimensional fair walk.

    Built by repeated averaging so every entry is a dyadic rational
    computed without cancellation.
    """
    if n < 0:
        raise DomainError("n must be non-negative")
    p = np.ones(1)
    for _ in range(n):
        nxt = np.zeros(p.size + 1)
        nxt[:-1] += 0.5 * p
        nxt[1:] += 0.5 * p
        p = nxt
    return p


def central_return_1d(n_max: int) -> np.ndarray:
    """``a_n = binom(2n, n) / 4^n`` for ``n = 0..n_max`` by the ratio product."""
    n = np.arange(1, n_max + 1, dtype=float)
    a = np.empty(n_max + 1)
    a[0] = 1.0
    a[1:] = np.cumprod((2.0 * n - 1.0) / (2.0 * n))
    return a


@dataclass(frozen=True)
class WalkKernelTable:
    """Exact transition probabilities ``q_n(x)`` for ``n = 0..horizon``.

    Attributes
    ----------
    horizon : int
        Largest time stored.
    rows : tuple of ndarray
        ``rows[n]`` has shape ``(n + 1, n + 1)`` in rotated index space.
    """

    horizon: int
    rows: tuple = field(repr=False)

    def row(self, n: int) -> np.ndarray:
        if not 0 <= n <= self.horizon:
            raise DomainError(f"time {n} outside table horizon {self.horizon}")
        return self.rows[n]

    def prob(self, n: int, x) -> float:
        """``q_n(x)``; zero off the even sublattice or outside reach."""
        if not is_even(n, x):
            return 0.0
        i, j = to_rotated(int(x[0]), int(x[1]), n)
        if not (0 <= i <= n and 0 <= j <= n):
            return 0.0
        return float(self.row(n)[i, j])

    def cartesian(self, n: int) -> np.ndarray:
        """``q_n`` on the square ``[-n, n]^2``, index ``x + n``."""
        out = np.zeros((2 * n + 1, 2 * n + 1))
        i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
        x1, x2 = from_rotated(i, j, n)
        out[x1 + n, x2 + n] = self.row(n)
        return out

    def sites(self, n: int):
        """Cartesian coordinates of every stored entry of row ``n``."""
        i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
        return from_rotated(i, j, n)

    def row_sums(self) -> np.ndarray:
        return np.array([r.sum() for r in self.rows])

    def square_sum(self, n: int) -> float:
        """``sum_x q_n(x)^2``, the direct route to ``u_n^2``."""
        r = self.row(n)
        return float(np.sum(r * r))


def table_bytes(horizon: int) -> int:
    return 8 * sum((n + 1) ** 2 for n in range(horizon + 1))


def build_kernel_table(horizon: int, memory_budget: int = DEFAULT_MEMORY_BUDGET) -> WalkKernelTable:
    """Forward recursion ``q_{n+1}(x) = 1/4 sum_e q_n(x - e)``.

    Parameters
    ----------
    horizon : int
        Largest time, at least 1.
    memory_budget : int
        Bytes allowed for the table.

    Raises
    ------
    DomainError
        If ``horizon < 1``.
    CapacityError
        If the table would exceed ``memory_budget``.
    """
    horizon = int(horizon)
    if horizon < 1:
        raise DomainError("horizon must be at least 1")
    need = table_bytes(horizon)
    if need > memory_budget:
        raise CapacityError(f"kernel table to {horizon} needs {need} bytes, budget {memory_budget}")
    rows = [np.ones((1, 1))]
    for n in range(horizon):
        prev = rows[-1]
        nxt = np.zeros((n + 2, n + 2))
        # each rotated coordinate moves by -1 or +1, i.e. index +0 or +1
        nxt[:-1, :-1] += prev
        nxt[1:, :-1] += prev
        nxt[:-1, 1:] += prev
        nxt[1:, 1:] += prev
        nxt *= 0.25
        rows.append(nxt)
    for r in rows:
        r.setflags(write=False)
    return WalkKernelTable(horizon=horizon, rows=tuple(rows))


@dataclass(frozen=True)
class OverlapTable:
    """Expected replica meetings.

    Attributes
    ----------
    u_sq : ndarray
        ``u_sq[n]`` is ``u_n^2 = q_{2n}(0)`` for ``n = 0..horizon``; ``u_sq[0] = 1``.
    R : ndarray
        ``R[N] = sum_{n=1}^{N} u_n^2``; ``R[0] = 0``.
    alpha : float
        ``gamma + log 16 - pi``.
    """

    horizon: int
    u_sq: np.ndarray = field(repr=False)
    R: np.ndarray = field(repr=False)
    alpha: float = OVERLAP_ALPHA

    def diagnostic(self, N: int) -> float:
        """``R_N - log(N) / pi``, which tends to ``alpha / pi``."""
        return float(self.R[N] - np.log(N) / np.pi)


def overlap(horizon: int, kernels: WalkKernelTable | None = None) -> OverlapTable:
    """Overlap table up to ``horizon``.

    ``u_n^2`` comes from the product formula for ``binom(2n, n) / 4^n``
    squared.  When a kernel table reaching time ``2 * horizon`` is given,
    the values are taken from the table instead and the product formula is
    left for the tests to compare.
    """
    horizon = int(horizon)
    if horizon < 1:
        raise DomainError("horizon must be at least 1")
    if kernels is not None and kernels.horizon >= 2 * horizon:
        u_sq = np.array([kernels.prob(2 * n, (0, 0)) for n in range(horizon + 1)])
    else:
        a = central_return_1d(horizon)
        u_sq = a * a
    R = np.concatenate([[0.0], np.cumsum(u_sq[1:])])
    u_sq.setflags(write=False)
    R.setflags(write=False)
    return OverlapTable(horizon=horizon, u_sq=u_sq, R=R)


def heat_kernel(u: float, x) -> np.ndarray | float:
    """Planar Gaussian density ``g_u(x) = exp(-|x|^2 / 2u) / (2 pi u)``.

    ``x`` may be a pair or an array with trailing dimension 2.
    """
    if not u > 0:
        raise DomainError("heat kernel variance must be positive")
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1)
    out = np.exp(-r2 / (2.0 * u)) / (2.0 * np.pi * u)
    return float(out) if out.ndim == 0 else out


def heat_kernel_radial(u: float, r2) -> np.ndarray:
    """``g_u`` as a function of the squared radius."""
    if not u > 0:
        raise DomainError("heat kernel variance must be positive")
    return np.exp(-np.asarray(r2) / (2.0 * u)) / (2.0 * np.pi * u)


# ---------------------------------------------------------------------------
# binary cache

CACHE_MAGIC = b"PLKT"
CACHE_VERSION = 1
CACHE_ENV = "POLYMERLAB_CACHE"
_HEADER = struct.Struct("<4sII")


def cache_path(directory, horizon: int) -> Path:
    return Path(directory) / f"kernels-{int(horizon)}.bin"


def save_kernel_table(table: WalkKernelTable, path) -> Path:
    """Write a table as ``magic, version, horizon`` followed by every row as little-endian float64."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, table.horizon))
        for r in table.rows:
            fh.write(np.ascontiguousarray(r, dtype="<f8").tobytes())
    return path


def load_kernel_table(path) -> WalkKernelTable:
    """Read a table written by :func:`save_kernel_table`.

    Raises
    ------
    CacheError
        On a wrong magic number, an unknown version or a truncated file.
    """
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise CacheError("cache file shorter than its header")
    magic, version, horizon = _HEADER.unpack_from(data)
    if magic != CACHE_MAGIC:
        raise CacheError("not a kernel-table cache file")
    if version != CACHE_VERSION:
        raise CacheError(f"cache version {version}, expected {CACHE_VERSION}")
    if len(data) != _HEADER.size + table_bytes(horizon):
        raise CacheError("cache file size does not match its horizon")
    rows = []
    pos = _HEADER.size
    for n in range(horizon + 1):
        count = (n + 1) ** 2
        r = np.frombuffer(data, dtype="<f8", count=count, offset=pos).reshape(n + 1, n + 1).astype(float)
        r.setflags(write=False)
        rows.append(r)
        pos += 8 * count
    return WalkKernelTable(horizon=horizon, rows=tuple(rows))


def cached_kernel_table(horizon: int, directory=None, memory_budget: int = DEFAULT_MEMORY_BUDGET) -> WalkKernelTable:
    """Load the table from ``directory`` (default ``$POLYMERLAB_CACHE``) or build and store it.

    Without a directory this is :func:`build_kernel_table`.
    """
    directory = directory if directory is not None else os.environ.get(CACHE_ENV)
    if not directory:
        return build_kernel_table(horizon, memory_budget)
    path = cache_path(directory, horizon)
    if path.exists():
        return load_kernel_table(path)
    table = build_kernel_table(horizon, memory_budget)
    save_kernel_table(table, path)
    return table
