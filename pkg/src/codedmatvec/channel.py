"""Serial-channel scheduling of worker result transmissions.

Only one worker transmits to the master at a time.  Transmissions happen
in computation-completion order (FIFO), without preemption, and each lasts
t_cmm seconds.  The whole timeline follows from the single-pass recurrence

    comm_end[i] = max(comp_finish[i], comm_end[i-1]) + t_cmm

over the first `needed` completion ranks; workers finishing after the
needed-th transmission never occupy the channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import RngStream
from .timing import ClusterParams, CompTimes, comp_times_from_spacings, sample_comp_times

# relative tolerance for "run-time equals the lower bound" classification;
# absorbs float summation-order noise only.
LOWER_BOUND_REL_TOL = 1e-12


@dataclass(frozen=True)
class CommModel:
    """Per-worker transmission duration on the serial channel.

    t_one_cmm       -- seconds to transmit one inner-product result
    work_per_worker -- inner products per worker (may be fractional)
    """

    t_one_cmm: float
    work_per_worker: float

    def __post_init__(self):
        if not math.isfinite(self.t_one_cmm) or self.t_one_cmm < 0:
            raise ValueError(f"t_one_cmm must be >= 0, got {self.t_one_cmm!r}")
        if not math.isfinite(self.work_per_worker) or self.work_per_worker <= 0:
            raise ValueError(f"work_per_worker must be > 0, got {self.work_per_worker!r}")

    @property
    def t_cmm(self) -> float:
        """Transmission time of one worker's full result."""
        return self.work_per_worker * self.t_one_cmm

    @classmethod
    def coded(cls, params: ClusterParams, t_one_cmm: float) -> "CommModel":
        return cls(t_one_cmm=t_one_cmm, work_per_worker=params.r / params.k)

    @classmethod
    def uncoded(cls, params: ClusterParams, t_one_cmm: float) -> "CommModel":
        return cls(t_one_cmm=t_one_cmm, work_per_worker=params.r / params.n)


@dataclass(frozen=True)
class Timeline:
    """One realized trial of the serial channel.

    comp_finish -- absolute completion times by rank (length >= needed)
    comm_start  -- transmission starts for ranks 1..needed
    comm_end    -- transmission ends for ranks 1..needed
    needed      -- transmissions required to decode
    t_cmm       -- per-transmission duration used for this timeline
    t_total     -- comm_end[needed], the total run-time
    """

    comp_finish: np.ndarray
    comm_start: np.ndarray
    comm_end: np.ndarray
    needed: int
    t_cmm: float
    t_total: float


@dataclass(frozen=True)
class TimelineMetrics:
    """Channel-occupancy summary of a Timeline.

    q_idle              -- greatest rank q <= needed whose transmission
                           started the instant its computation finished
    completed_by_comp_k -- transmissions finished by the needed-th
                           computation's completion time
    busy_fraction       -- channel busy time / (t_total - comp_finish[1])
    hit_lower_bound     -- t_total equals comp_finish[needed] + t_cmm
    """

    q_idle: int
    completed_by_comp_k: int
    busy_fraction: float
    hit_lower_bound: bool


def schedule_serial_channel(comp_finish, t_cmm: float, needed: int) -> Timeline:
    """Run the FIFO non-preemptive recurrence over the first `needed` ranks."""
    cf = np.ascontiguousarray(comp_finish, dtype=np.float64)
    if cf.ndim != 1 or cf.size == 0:
        raise ValueError("comp_finish must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(cf)):
        raise ValueError("comp_finish must be finite")
    if np.any(np.diff(cf) < 0):
        raise ValueError("comp_finish must be nondecreasing")
    if not isinstance(needed, int) or not 1 <= needed <= cf.size:
        raise ValueError(f"needed must satisfy 1 <= needed <= {cf.size}, got {needed!r}")
    if not math.isfinite(t_cmm) or t_cmm < 0:
        raise ValueError(f"t_cmm must be >= 0, got {t_cmm!r}")

    starts = []
    ends = []
    free = -math.inf
    for x in cf[:needed].tolist():
        s = x if x >= free else free
        free = s + t_cmm
        starts.append(s)
        ends.append(free)
    return Timeline(
        comp_finish=cf,
        comm_start=np.array(starts),
        comm_end=np.array(ends),
        needed=needed,
        t_cmm=t_cmm,
        t_total=ends[-1],
    )


def compute_metrics(t: Timeline) -> TimelineMetrics:
    kth_finish = t.comp_finish[t.needed - 1]
    completed = int(np.searchsorted(t.comm_end, kth_finish, side="right"))
    idle = np.nonzero(t.comm_start == t.comp_finish[: t.needed])[0]
    q_idle = int(idle[-1]) + 1  # rank 1 always qualifies
    busy = t.needed * t.t_cmm
    span = float(t.t_total - t.comp_finish[0])
    busy_fraction = busy / span if span > 0 else 0.0
    lower = kth_finish + t.t_cmm
    hit = math.isclose(t.t_total, lower, rel_tol=LOWER_BOUND_REL_TOL, abs_tol=1e-15)
    return TimelineMetrics(
        q_idle=q_idle,
        completed_by_comp_k=completed,
        busy_fraction=busy_fraction,
        hit_lower_bound=hit,
    )


def run_coded_trial(
    params: ClusterParams,
    comm: CommModel,
    rng: RngStream | None = None,
    times: CompTimes | None = None,
    sampling: str = "sort",
) -> tuple[Timeline, TimelineMetrics]:
    """One coded trial: n workers at r/k inner products each, wait for k.

    With `times` given, the injected realization is used instead of
    sampling (the startup shift a*r/k is still applied), which also
    admits configurations where k does not divide r.
    """
    _check_work(comm, params.r / params.k)
    if times is None:
        times = _sample(params, params.coded_work(), rng, sampling)
    elif times.n != params.n:
        raise ValueError(f"need {params.n} injected times, got {times.n}")
    comp_finish = params.t0 + times.sorted
    timeline = schedule_serial_channel(comp_finish, comm.t_cmm, needed=params.k)
    return timeline, compute_metrics(timeline)


def run_uncoded_trial(
    params: ClusterParams,
    comm: CommModel,
    rng: RngStream | None = None,
    times: CompTimes | None = None,
    sampling: str = "sort",
) -> tuple[Timeline, TimelineMetrics]:
    """One uncoded trial: n workers at r/n inner products each, wait for all."""
    _check_work(comm, params.r / params.n)
    if times is None:
        work = params.uncoded_work()
        if sampling == "spacings":
            times = comp_times_from_spacings(params, rng, alpha=work / params.mu)
        else:
            times = _sample(params, work, rng, sampling)
    elif times.n != params.n:
        raise ValueError(f"need {params.n} injected times, got {times.n}")
    comp_finish = params.a * (params.r / params.n) + times.sorted
    timeline = schedule_serial_channel(comp_finish, comm.t_cmm, needed=params.n)
    return timeline, compute_metrics(timeline)


def _sample(params, work, rng, sampling):
    if rng is None:
        raise ValueError("an RngStream is required when no times are injected")
    if sampling == "sort":
        return sample_comp_times(params, work, rng)
    if sampling == "spacings":
        return comp_times_from_spacings(params, rng, alpha=work / params.mu)
    raise ValueError(f"unknown sampling method {sampling!r}")


def _check_work(comm, expected):
    if not math.isclose(comm.work_per_worker, expected, rel_tol=1e-9):
        raise ValueError(
            f"comm.work_per_worker={comm.work_per_worker} does not match "
            f"the scheme's per-worker load {expected}"
        )


def timeline_to_csv(t: Timeline) -> str:
    """CSV rows rank,comp_finish,comm_start,comm_end for ranks 1..needed."""
    lines = ["rank,comp_finish,comm_start,comm_end"]
    for i in range(t.needed):
        lines.append(
            f"{i + 1},{t.comp_finish[i]:.9f},{t.comm_start[i]:.9f},{t.comm_end[i]:.9f}"
        )
    return "\n".join(lines) + "\n"


def timeline_record(t: Timeline, m: TimelineMetrics) -> str:
    """Structured-text record of a timeline plus its metrics."""
    lines = [
        f"needed={t.needed}",
        f"t_cmm={t.t_cmm:.9g}",
        f"t_total={t.t_total:.9g}",
        f"q_idle={m.q_idle}",
        f"completed_by_comp_k={m.completed_by_comp_k}",
        f"busy_fraction={m.busy_fraction:.9g}",
        f"hit_lower_bound={'true' if m.hit_lower_bound else 'false'}",
    ]
    return "\n".join(lines) + "\n"
