"""Monte Carlo harness: repeated trials, regime sweeps, speedup curves,
and the transmission-count reports behind the asymptotic claims."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .analysis import RegimeFamily, expected_runtime_regime3, optimize_k, pipeline_index_p
from .channel import CommModel, Timeline, run_coded_trial, run_uncoded_trial
from .rng import RngStream
from .timing import ClusterParams

Z95 = 1.959963984540054  # two-sided 95% normal quantile

SWEEP_CSV_HEADER = "n,k,r,beta,c,t_cmm,mean,stderr,trials,frac_lb_hit,completed_by_Tk,closed_form,gap"
SPEEDUP_CSV_HEADER = "n,k,r,t_one_cmm,coded_mean,uncoded_mean,ratio"


@dataclass(frozen=True)
class MCStats:
    """Aggregate of one Monte Carlo configuration's total run-times."""

    mean: float
    variance: float
    stderr: float
    trials: int
    ci95_halfwidth: float

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "MCStats":
        trials = samples.size
        mean = float(np.mean(samples))
        variance = float(np.var(samples, ddof=1)) if trials > 1 else 0.0
        stderr = math.sqrt(variance / trials)
        return cls(mean=mean, variance=variance, stderr=stderr, trials=trials,
                   ci95_halfwidth=Z95 * stderr)


@dataclass(frozen=True)
class AggregateMetrics:
    """Trial-averaged channel metrics accompanying an MCStats."""

    frac_lower_bound_hit: float
    mean_completed_by_comp_k: float
    mean_q_idle: float
    mean_busy_fraction: float
    stderr_frac_lower_bound_hit: float = 0.0
    stderr_completed_by_comp_k: float = 0.0


@dataclass(frozen=True)
class SweepRow:
    """One ladder point of a regime sweep (or its per-row failure)."""

    n: int
    k: int
    r: int
    beta: float
    c: float
    t_cmm: float
    mc: MCStats | None
    frac_lower_bound_hit: float
    mean_completed_by_comp_k: float
    closed_form_leading: float
    gap: float
    error: str | None = None


@dataclass(frozen=True)
class SpeedupPoint:
    n: int
    k: int
    r: int
    t_one_cmm: float
    coded_mean: float
    uncoded_mean: float
    ratio: float


@dataclass(frozen=True)
class LemmaReport:
    """Per-configuration transmission-count report.

    count1 counts transmissions completed by t0 + T_(p); count2 those
    completed in (t0 + T_(p), t0 + T_(k)].  The deficits are the
    per-trial fractions (p - count1)/n and (k - p - count2)/n; the
    signed second deficit is also reported clamped at zero per trial
    (the shortfall against the at-least-(k-p) transmission claim, which
    is the quantity that vanishes with n).
    """

    n: int
    k: int
    p: int
    trials: int
    mean_count1: float
    mean_count2: float
    mean_deficit_p: float
    stderr_deficit_p: float
    mean_deficit_k_signed: float
    stderr_deficit_k_signed: float
    mean_deficit_k_shortfall: float
    stderr_deficit_k_shortfall: float
    sandwich_violations: int


def default_r_rule(n: int, k: int) -> int:
    """Smallest workload divisible by both k (coded) and n (uncoded)."""
    return math.lcm(k, n)


def round_k(k_fraction: float, n: int) -> int:
    if not 0 < k_fraction <= 1:
        raise ValueError(f"k_fraction must lie in (0, 1], got {k_fraction!r}")
    return min(n, max(1, round(k_fraction * n)))


def monte_carlo(
    params: ClusterParams,
    comm: CommModel,
    trials: int,
    seed: int,
    scheme: str = "coded",
    sampling: str = "sort",
) -> tuple[MCStats, AggregateMetrics]:
    """Run `trials` independent trials, stream i keyed by (seed, i)."""
    if not isinstance(trials, int) or trials < 1:
        raise ValueError(f"trials must be a positive integer, got {trials!r}")
    if scheme == "coded":
        run = run_coded_trial
    elif scheme == "uncoded":
        run = run_uncoded_trial
    else:
        raise ValueError(f"scheme must be 'coded' or 'uncoded', got {scheme!r}")

    totals = np.empty(trials)
    completed = np.empty(trials)
    q_idle = np.empty(trials)
    busy = np.empty(trials)
    hits = np.empty(trials, dtype=bool)
    for i in range(trials):
        timeline, metrics = run(params, comm, RngStream(seed, i), sampling=sampling)
        totals[i] = timeline.t_total
        completed[i] = metrics.completed_by_comp_k
        q_idle[i] = metrics.q_idle
        busy[i] = metrics.busy_fraction
        hits[i] = metrics.hit_lower_bound
    frac_hit = float(np.mean(hits))
    agg = AggregateMetrics(
        frac_lower_bound_hit=frac_hit,
        mean_completed_by_comp_k=float(np.mean(completed)),
        mean_q_idle=float(np.mean(q_idle)),
        mean_busy_fraction=float(np.mean(busy)),
        stderr_frac_lower_bound_hit=math.sqrt(frac_hit * (1.0 - frac_hit) / trials),
        stderr_completed_by_comp_k=(
            float(np.std(completed, ddof=1)) / math.sqrt(trials) if trials > 1 else 0.0
        ),
    )
    return MCStats.from_samples(totals), agg


def sweep_regime(
    family: RegimeFamily,
    ns: Sequence[int],
    k_fraction: float,
    r_rule: Callable[[int, int], int] = default_r_rule,
    a: float = 1.0,
    mu: float = 1.0,
    trials: int = 10_000,
    seed: int = 0,
) -> list[SweepRow]:
    """One coded Monte Carlo configuration per n, with t_one_cmm drawn
    from the scaling family."""
    rows = []
    for n in ns:
        k = round_k(k_fraction, n)
        r = r_rule(n, k)
        row = SweepRow(
            n=n, k=k, r=r, beta=family.beta, c=family.c,
            t_cmm=(r / k) * family.t_one_cmm(n),
            mc=None, frac_lower_bound_hit=math.nan,
            mean_completed_by_comp_k=math.nan,
            closed_form_leading=math.nan, gap=math.nan,
        )
        try:
            params = ClusterParams(n=n, k=k, r=r, a=a, mu=mu)
            params.coded_work()
            comm = CommModel.coded(params, family.t_one_cmm(n))
            mc, agg = monte_carlo(params, comm, trials, seed, scheme="coded")
        except ValueError as exc:
            rows.append(replace(row, error=str(exc)))
            continue
        closed_form = expected_runtime_regime3(params)
        rows.append(replace(
            row,
            mc=mc,
            frac_lower_bound_hit=agg.frac_lower_bound_hit,
            mean_completed_by_comp_k=agg.mean_completed_by_comp_k,
            closed_form_leading=closed_form,
            gap=mc.mean - closed_form,
        ))
    return rows


def speedup_curve(
    ns: Sequence[int],
    k_fraction: float,
    r_rule: Callable[[int, int], int] = default_r_rule,
    a: float = 1.0,
    mu: float = 1.0,
    family: RegimeFamily = RegimeFamily(c=0.1, beta=1.0),
    trials: int = 10_000,
    seed: int = 0,
    optimize: bool = False,
) -> list[SpeedupPoint]:
    """Mean uncoded over mean coded run-time per ladder point.

    With optimize=True the coded threshold is the leading-term minimizer
    over divisors of r instead of the fixed k_fraction.  Coded and
    uncoded trials share streams (common random numbers), which makes a
    degenerate k = n comparison come out at ratio exactly 1.
    """
    points = []
    for n in ns:
        k = round_k(k_fraction, n)
        r = r_rule(n, k)
        t_one = family.t_one_cmm(n)
        if optimize:
            k, _ = optimize_k(n, r, a, mu,
                              comm_at_k=lambda kk: (r / kk) * t_one,
                              require_divisor=True)
        params = ClusterParams(n=n, k=k, r=r, a=a, mu=mu)
        coded_mc, _ = monte_carlo(params, CommModel.coded(params, t_one),
                                  trials, seed, scheme="coded")
        uncoded_mc, _ = monte_carlo(params, CommModel.uncoded(params, t_one),
                                    trials, seed, scheme="uncoded")
        points.append(SpeedupPoint(
            n=n, k=k, r=r, t_one_cmm=t_one,
            coded_mean=coded_mc.mean,
            uncoded_mean=uncoded_mc.mean,
            ratio=uncoded_mc.mean / coded_mc.mean,
        ))
    return points


def transmission_counts(timeline: Timeline, p: int) -> tuple[int, int]:
    """(transmissions done by t0+T_(p), transmissions done in
    (t0+T_(p), t0+T_(k)]) for one coded timeline."""
    if not 1 <= p <= timeline.comp_finish.size:
        raise ValueError(f"p must lie in [1, {timeline.comp_finish.size}], got {p!r}")
    t_p = timeline.comp_finish[p - 1]
    t_k = timeline.comp_finish[timeline.needed - 1]
    count1 = int(np.searchsorted(timeline.comm_end, t_p, side="right"))
    by_k = int(np.searchsorted(timeline.comm_end, t_k, side="right"))
    return count1, by_k - count1


def verify_transmission_lemmas(
    params: ClusterParams,
    comm: CommModel,
    trials: int,
    seed: int,
    sampling: str = "sort",
) -> LemmaReport:
    """Measure the pipeline transmission counts over repeated coded trials,
    also checking the realization-level run-time sandwich on every trial."""
    p = pipeline_index_p(params, comm.t_cmm)
    n, k = params.n, params.k
    c1 = np.empty(trials)
    c2 = np.empty(trials)
    violations = 0
    for i in range(trials):
        timeline, _ = run_coded_trial(params, comm, RngStream(seed, i), sampling=sampling)
        c1[i], c2[i] = transmission_counts(timeline, p)
        kth = timeline.comp_finish[k - 1]
        if not (kth + comm.t_cmm <= timeline.t_total <= kth + k * comm.t_cmm):
            violations += 1
    deficit_p = (p - c1) / n
    deficit_k = (k - p - c2) / n
    shortfall = np.maximum(deficit_k, 0.0)

    def _se(x):
        return float(np.std(x, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0

    return LemmaReport(
        n=n, k=k, p=p, trials=trials,
        mean_count1=float(np.mean(c1)),
        mean_count2=float(np.mean(c2)),
        mean_deficit_p=float(np.mean(deficit_p)),
        stderr_deficit_p=_se(deficit_p),
        mean_deficit_k_signed=float(np.mean(deficit_k)),
        stderr_deficit_k_signed=_se(deficit_k),
        mean_deficit_k_shortfall=float(np.mean(shortfall)),
        stderr_deficit_k_shortfall=_se(shortfall),
        sandwich_violations=violations,
    )


def monotone_with_slack(values: Sequence[float], halfwidths: Sequence[float],
                        decreasing: bool = False) -> bool:
    """Monotonicity of a ladder of estimates after widening each point by
    its uncertainty halfwidth."""
    if len(values) != len(halfwidths):
        raise ValueError("values and halfwidths must have equal length")
    for prev, cur, hw_prev, hw_cur in zip(values, values[1:], halfwidths, halfwidths[1:]):
        slack = hw_prev + hw_cur
        if decreasing:
            if cur > prev + slack:
                return False
        elif cur < prev - slack:
            return False
    return True


def loglinear_fit(ns: Sequence[int], values: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares fit values ~ slope * ln(n) + intercept.

    Returns (slope, intercept, r_squared).
    """
    x = np.log(np.asarray(ns, dtype=np.float64))
    y = np.asarray(values, dtype=np.float64)
    if x.size != y.size or x.size < 2:
        raise ValueError("need at least two (n, value) pairs")
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2


def _g(value: float) -> str:
    return f"{value:.9g}"


def sweep_to_csv(rows: Sequence[SweepRow]) -> str:
    """Regime-sweep CSV; rows that failed validation are skipped."""
    lines = [SWEEP_CSV_HEADER]
    for row in rows:
        if row.error is not None:
            continue
        lines.append(",".join([
            str(row.n), str(row.k), str(row.r),
            _g(row.beta), _g(row.c), _g(row.t_cmm),
            _g(row.mc.mean), _g(row.mc.stderr), str(row.mc.trials),
            _g(row.frac_lower_bound_hit), _g(row.mean_completed_by_comp_k),
            _g(row.closed_form_leading), _g(row.gap),
        ]))
    return "\n".join(lines) + "\n"


def speedup_to_csv(points: Sequence[SpeedupPoint]) -> str:
    lines = [SPEEDUP_CSV_HEADER]
    for pt in points:
        lines.append(",".join([
            str(pt.n), str(pt.k), str(pt.r), _g(pt.t_one_cmm),
            _g(pt.coded_mean), _g(pt.uncoded_mean), _g(pt.ratio),
        ]))
    return "\n".join(lines) + "\n"
