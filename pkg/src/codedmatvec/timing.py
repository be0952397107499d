"""Stochastic worker computation times: shifted-exponential model and its
order statistics.

A worker assigned w inner products finishes after a constant startup
a*w plus an Exponential(mu/w) variable part.  The constant shift is
carried separately everywhere (as ClusterParams.t0 for the coded split);
all order-statistic math in this module operates on the variable part
only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import RngStream


@dataclass(frozen=True)
class ClusterParams:
    """Cluster configuration (n, k, r, a, mu) plus the derived scales.

    n   -- number of workers
    k   -- recovery threshold: results needed to decode
    r   -- total inner products in the job
    a   -- startup shift per inner product, seconds
    mu  -- exponential rate per inner product, 1/seconds
    """

    n: int
    k: int
    r: int
    a: float
    mu: float

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"n: must be a positive integer, got {self.n!r}")
        if not isinstance(self.k, int) or not 1 <= self.k <= self.n:
            raise ValueError(f"k: must satisfy 1 <= k <= n, got {self.k!r}")
        if not isinstance(self.r, int) or self.r < 1:
            raise ValueError(f"r: must be a positive integer, got {self.r!r}")
        if not math.isfinite(self.a) or self.a < 0:
            raise ValueError(f"a: must be >= 0, got {self.a!r}")
        if not math.isfinite(self.mu) or self.mu <= 0:
            raise ValueError(f"mu: must be > 0, got {self.mu!r}")

    @property
    def t0(self) -> float:
        """Constant startup of a coded worker (a * r/k seconds)."""
        return self.a * self.r / self.k

    @property
    def alpha(self) -> float:
        """Mean of the coded variable part: r / (mu * k) seconds."""
        return self.r / (self.mu * self.k)

    def coded_work(self) -> int:
        """Inner products per coded worker; requires k | r."""
        if self.r % self.k != 0:
            raise ValueError(f"coded run requires k | r: k={self.k}, r={self.r}")
        return self.r // self.k

    def uncoded_work(self) -> int:
        """Inner products per uncoded worker; requires n | r."""
        if self.r % self.n != 0:
            raise ValueError(f"uncoded run requires n | r: n={self.n}, r={self.r}")
        return self.r // self.n


@dataclass(frozen=True)
class CompTimes:
    """Variable-part computation times of one realized trial.

    raw            -- per-worker times, worker order
    sorted         -- the order statistics of raw (nondecreasing)
    rank_of_worker -- worker index -> 0-based rank in `sorted`
    """

    raw: np.ndarray
    sorted: np.ndarray
    rank_of_worker: np.ndarray

    def __post_init__(self):
        if self.raw.size == 0:
            raise ValueError("computation times must be non-empty")
        if np.any(self.raw < 0) or not np.all(np.isfinite(self.raw)):
            raise ValueError("computation times must be finite and >= 0")
        if np.any(np.diff(self.sorted) < 0):
            raise ValueError("sorted times must be nondecreasing")

    @property
    def n(self) -> int:
        return self.raw.size


@dataclass(frozen=True)
class Spacings:
    """Differential times between consecutive order statistics."""

    d: np.ndarray

    def order_statistics(self) -> np.ndarray:
        """Prefix sums of the spacings, distributed as sorted i.i.d. times."""
        return np.cumsum(self.d)


def sample_comp_times(params: ClusterParams, work_per_worker: int, rng: RngStream) -> CompTimes:
    """Sample the variable parts for n workers doing `work_per_worker`
    inner products each: i.i.d. Exponential(mu / w), then sort.

    The shift a*w is not included; the caller adds it when building
    absolute completion times.
    """
    if not isinstance(work_per_worker, int) or work_per_worker < 1:
        raise ValueError(f"work_per_worker must be a positive integer, got {work_per_worker!r}")
    rate = params.mu / work_per_worker
    raw = rng.exponentials(rate, params.n)
    # ties (measure zero) broken by worker index: stable argsort
    order = np.argsort(raw, kind="stable")
    rank_of_worker = np.empty(params.n, dtype=np.intp)
    rank_of_worker[order] = np.arange(params.n)
    return CompTimes(raw=raw, sorted=raw[order], rank_of_worker=rank_of_worker)


def inject_comp_times(sorted_values) -> CompTimes:
    """Build a CompTimes from given order statistics (identity permutation).

    Lets a fixed realization drive the simulator, e.g. for golden tests.
    """
    values = np.asarray(sorted_values, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("injected times must be a non-empty 1-d sequence")
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise ValueError("injected times must be finite and >= 0")
    if np.any(np.diff(values) < 0):
        raise ValueError("injected times must be nondecreasing")
    return CompTimes(
        raw=values.copy(),
        sorted=values.copy(),
        rank_of_worker=np.arange(values.size, dtype=np.intp),
    )


def sample_spacings(params: ClusterParams, rng: RngStream) -> Spacings:
    """Sample the n differential times directly: D_i ~ Exp((n-i+1)/alpha).

    Their prefix sums have the same joint law as the sorted i.i.d.
    Exponential(1/alpha) sample (Renyi representation), which makes
    rank-indexed quantities cheap to reason about.
    """
    return _spacings(params.n, params.alpha, rng)


def _spacings(n: int, alpha: float, rng: RngStream) -> Spacings:
    rates = (n - np.arange(n)) / alpha
    return Spacings(d=rng.exponentials(rates, n))


def comp_times_from_spacings(params: ClusterParams, rng: RngStream, alpha: float | None = None) -> CompTimes:
    """Alternate sampler: build the order statistics from spacings.

    Produces a CompTimes with identity permutation (worker identities are
    immaterial once sorted).  `alpha` defaults to the coded scale.
    """
    sp = _spacings(params.n, params.alpha if alpha is None else alpha, rng)
    sorted_times = sp.order_statistics()
    return CompTimes(
        raw=sorted_times,
        sorted=sorted_times,
        rank_of_worker=np.arange(params.n, dtype=np.intp),
    )


def harmonic(n: int) -> float:
    """n-th harmonic number by direct summation; H_0 = 0."""
    if not isinstance(n, int) or n < 0:
        raise ValueError(f"harmonic is defined for n >= 0, got {n!r}")
    return math.fsum(1.0 / i for i in range(1, n + 1))


def expected_order_stat(params: ClusterParams, j: int) -> float:
    """E[T_(j)] = alpha * (H_n - H_(n-j)); variable part only."""
    _check_rank(params, j)
    return params.alpha * (harmonic(params.n) - harmonic(params.n - j))


def variance_order_stat(params: ClusterParams, j: int) -> float:
    """Var[T_(j)] = sum_{i<=j} alpha^2 / (n-i+1)^2."""
    _check_rank(params, j)
    n, alpha = params.n, params.alpha
    return alpha * alpha * math.fsum(1.0 / ((n - i + 1) ** 2) for i in range(1, j + 1))


def _check_rank(params: ClusterParams, j: int):
    if not isinstance(j, int) or not 1 <= j <= params.n:
        raise ValueError(f"rank j must satisfy 1 <= j <= n={params.n}, got {j!r}")
