"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines as the
criteria execute.  Monte Carlo criteria use fixed seeds; trend criteria
widen each estimate by twice its standard error before comparing, and
every stated tolerance is pinned in the test body.
"""

import itertools
import math

import numpy as np
import pytest

from codedmatvec import (
    ClusterParams,
    CommModel,
    RegimeFamily,
    RngStream,
    encode_random_linear,
    encode_systematic_mds,
    expected_order_stat,
    inject_comp_times,
    loglinear_fit,
    monotone_with_slack,
    monte_carlo,
    pipeline_index,
    recovery_error,
    round_k,
    run_coded_trial,
    run_uncoded_trial,
    sample_comp_times,
    schedule_serial_channel,
    speedup_curve,
    sweep_regime,
    variance_order_stat,
    verify_transmission_lemmas,
    worker_compute,
)
from codedmatvec.cli import main
from oracles import event_queue_schedule, pipeline_f, pipeline_scan

EXAMPLE_TIMES = [0.1138, 0.2725, 0.6458, 0.7033, 5.5538]


def _report(num: int, label: str, ok: bool) -> bool:
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num:02d}: {label}")
    return ok


def test_criterion_01_golden_example_timeline():
    params = ClusterParams(n=5, k=3, r=5, a=1.0, mu=1.0)
    comm = CommModel.coded(params, 0.12)  # t_cmm = (r/k) * 0.12 = 0.2
    timeline, metrics = run_coded_trial(params, comm, times=inject_comp_times(EXAMPLE_TIMES))

    t0 = 5 / 3
    expected_total = t0 + 0.6458 + 0.2
    ok_total = abs(timeline.t_total - expected_total) <= 1e-12 * expected_total
    # full hand recurrence: rank 2 queues behind rank 1, rank 3 finds the
    # channel idle
    expected_starts = [t0 + 0.1138, t0 + 0.3138, t0 + 0.6458]
    expected_ends = [t0 + 0.3138, t0 + 0.5138, t0 + 0.8458]
    ok_timeline = all(
        abs(timeline.comm_start[i] - expected_starts[i]) <= 1e-12 * expected_starts[i]
        and abs(timeline.comm_end[i] - expected_ends[i]) <= 1e-12 * expected_ends[i]
        for i in range(3)
    )
    # transmissions of ranks 1 and 2 end at t0+0.3138 and t0+0.5138, both
    # before t0+T_(3) = t0+0.6458: the count by the hand recurrence is 2
    ok_count = metrics.completed_by_comp_k == 2
    ok = ok_total and ok_timeline and ok_count and metrics.hit_lower_bound
    assert _report(1, "golden injected-realization timeline", ok), (
        timeline, metrics)


def test_criterion_02_scheduler_matches_event_queue_oracle():
    rng = np.random.default_rng(20240201)
    ok = True
    for _ in range(1000):
        n = int(rng.integers(1, 501))
        scale = float(rng.choice([0.1, 1.0, 10.0]))
        cf = np.sort(rng.random(n) * scale)
        t_cmm = float(rng.random() * rng.choice([0.0, 0.01, 0.1, 1.0]))
        needed = int(rng.integers(1, n + 1))
        t = schedule_serial_channel(cf, t_cmm, needed)
        starts, ends = event_queue_schedule(cf, t_cmm, needed)
        if t.comm_start.tolist() != starts or t.comm_end.tolist() != ends:
            ok = False
            break
    assert _report(2, "recurrence vs event-queue oracle, 1000 instances", ok)


def test_criterion_03_bound_sandwich_every_trial():
    params = ClusterParams(n=100, k=70, r=700, a=1.0, mu=1.0)
    t_one = params.k / (params.r * params.n)
    trials = 100_000
    violations = 0
    comm = CommModel.coded(params, t_one)
    for i in range(trials):
        t, _ = run_coded_trial(params, comm, RngStream(301, i))
        kth = t.comp_finish[params.k - 1]
        if not (kth + comm.t_cmm <= t.t_total <= kth + params.k * comm.t_cmm):
            violations += 1
    comm_u = CommModel.uncoded(params, t_one)
    for i in range(trials):
        t, _ = run_uncoded_trial(params, comm_u, RngStream(302, i))
        nth = t.comp_finish[params.n - 1]
        if not (nth + comm_u.t_cmm <= t.t_total <= nth + params.n * comm_u.t_cmm):
            violations += 1
    assert _report(3, "run-time sandwich in 2x100k trials", violations == 0), violations


def test_criterion_04_order_stat_moments():
    params = ClusterParams(n=200, k=140, r=1400, a=1.0, mu=1.0)  # alpha = 10
    trials = 10_000
    samples = np.empty(trials)
    for i in range(trials):
        samples[i] = sample_comp_times(params, 10, RngStream(41, i)).sorted[139]
    expected = expected_order_stat(params, 140)
    theory_var = variance_order_stat(params, 140)
    mean_ok = abs(float(np.mean(samples)) - expected) <= 3 * math.sqrt(theory_var / trials)
    var_ok = abs(float(np.var(samples, ddof=1)) - theory_var) <= 0.10 * theory_var
    assert _report(4, "T_(k) mean within 3 stderr, variance within 10%",
                   mean_ok and var_ok)


def test_criterion_05_decode_correctness():
    # systematic: exhaustive over all (n, k) with n <= 8, two block sizes
    systematic_ok = True
    for n in range(1, 9):
        for k in range(1, n + 1):
            for w in (1, 3):
                params = ClusterParams(n=n, k=k, r=k * w, a=0.0, mu=1.0)
                rng = RngStream(1000 * n + 10 * k + w, 0)
                a = rng.standard_normals((k * w, 5))
                x = rng.standard_normals(5)
                job = encode_systematic_mds(a, x, params)
                for subset in itertools.combinations(range(1, n + 1), k):
                    err, _ = recovery_error(job, subset)
                    if err > 1e-10:
                        systematic_ok = False

    # the (4,2) construction verbatim: A1, A2, A1+A2, A1+2*A2
    params = ClusterParams(n=4, k=2, r=2, a=0.0, mu=1.0)
    job = encode_systematic_mds(np.eye(2), np.array([3.0, 4.0]), params)
    example_ok = (
        np.array_equal(job.coding[0], [[1.0, 0.0]])
        and np.array_equal(job.coding[1], [[0.0, 1.0]])
        and np.array_equal(job.coding[2], [[1.0, 1.0]])
        and np.array_equal(job.coding[3], [[1.0, 2.0]])
        and worker_compute(job, 3)[0] == 7.0
        and all(recovery_error(job, s)[0] <= 1e-10
                for s in itertools.combinations(range(1, 5), 2))
    )

    # random-linear: 200 random (config, subset) draws with r <= 24
    draw_rng = np.random.default_rng(505)
    recovered = 0
    unflagged_failures = 0
    for i in range(200):
        k = int(draw_rng.integers(2, 7))
        w = int(draw_rng.integers(1, 1 + min(4, 24 // k)))
        n = int(draw_rng.integers(k + 1, 13))
        params = ClusterParams(n=n, k=k, r=k * w, a=0.0, mu=1.0)
        rng = RngStream(51, i)
        a = rng.standard_normals((k * w, 5))
        x = rng.standard_normals(5)
        job = encode_random_linear(a, x, params, rng)
        subset = draw_rng.choice(np.arange(1, n + 1), size=k, replace=False)
        err, well_conditioned = recovery_error(job, subset.tolist())
        if err <= 1e-8:
            recovered += 1
        elif well_conditioned:
            unflagged_failures += 1
    random_ok = recovered >= 198 and unflagged_failures == 0

    assert _report(5, "systematic exhaustive + Example-1 + random-linear decode",
                   systematic_ok and example_ok and random_ok), (
        systematic_ok, example_ok, recovered, unflagged_failures)


def _ladder_metrics(beta, ns, seed, trials=10_000):
    family = RegimeFamily(c=1.0, beta=beta)
    out = []
    for n in ns:
        k = round_k(0.7, n)
        params = ClusterParams(n=n, k=k, r=k, a=1.0, mu=1.0)
        comm = CommModel.coded(params, family.t_one_cmm(n))
        mc, agg = monte_carlo(params, comm, trials, seed, scheme="coded")
        out.append((n, k, mc, agg))
    return out


def test_criterion_06_regime1_lower_bound_trend():
    ladder = _ladder_metrics(beta=2.0, ns=[125, 250, 500, 1000], seed=61)
    fracs = [agg.frac_lower_bound_hit for _, _, _, agg in ladder]
    widths = [2 * agg.stderr_frac_lower_bound_hit for _, _, _, agg in ladder]
    trend_ok = monotone_with_slack(fracs, widths)
    level_ok = fracs[-1] >= 0.9
    assert _report(6, "regime I: lower-bound hit fraction rises to >= 0.9",
                   trend_ok and level_ok), fracs


def test_criterion_07_regime2_completed_fraction_trend():
    ladder = _ladder_metrics(beta=0.5, ns=[125, 250, 500, 1000], seed=71)
    fractions = [agg.mean_completed_by_comp_k / n for n, _, _, agg in ladder]
    widths = [2 * agg.stderr_completed_by_comp_k / n for n, _, _, agg in ladder]
    trend_ok = monotone_with_slack(fractions, widths, decreasing=True)
    strictly = all(b < a for a, b in zip(fractions, fractions[1:]))
    assert _report(7, "regime II: completed-by-T_(k) fraction shrinks",
                   trend_ok and strictly), fractions


def test_criterion_08_regime3_gap():
    rows = sweep_regime(
        RegimeFamily(c=1.0, beta=1.0), [200, 400, 800, 1600], 0.7,
        r_rule=lambda n, k: k, a=1.0, mu=1.0, trials=10_000, seed=81,
    )
    gaps = [row.gap for row in rows]
    widths = [2 * row.mc.stderr for row in rows]
    positive = all(g > 0 for g in gaps)
    decreasing = monotone_with_slack(gaps, widths, decreasing=True)
    small_at_end = gaps[-1] <= 0.05 * rows[-1].mc.mean
    assert _report(8, "regime III: mean minus leading term shrinks below 5%",
                   positive and decreasing and small_at_end), gaps


def test_criterion_09_log_speedup():
    ns = [100, 200, 400, 800, 1600, 3200]
    points = speedup_curve(
        ns, 0.7, a=1.0, mu=1.0, family=RegimeFamily(c=0.1, beta=1.0),
        trials=10_000, seed=91, optimize=True,
    )
    s_unc, _, r2_unc = loglinear_fit(ns, [p.uncoded_mean for p in points])
    s_ratio, _, r2_ratio = loglinear_fit(ns, [p.ratio for p in points])
    ok = s_unc > 0 and r2_unc >= 0.95 and s_ratio > 0 and r2_ratio >= 0.95
    assert _report(9, "uncoded mean and coded-vs-uncoded ratio grow like log n",
                   ok), (s_unc, r2_unc, s_ratio, r2_ratio)


def test_criterion_10_pipeline_index():
    draw = np.random.default_rng(101)
    post_ok = True
    for _ in range(100):
        n = int(draw.integers(10, 1501))
        alpha = float(draw.uniform(0.05, 3.0))
        t_cmm = float(draw.uniform(1e-4, 0.05))
        p = pipeline_index(n, alpha, t_cmm)
        if p != pipeline_scan(n, alpha, t_cmm):
            post_ok = False
            break
        if p == 1:
            post_ok = all(pipeline_f(n, alpha, t_cmm, j) >= 0 for j in range(1, n + 1))
        elif pipeline_f(n, alpha, t_cmm, p) >= 0:
            post_ok = pipeline_f(n, alpha, t_cmm, p - 1) < 0
        else:
            # saturated: the backlog never clears inside the horizon
            post_ok = p == n and all(
                pipeline_f(n, alpha, t_cmm, j) < 0 for j in range(2, n + 1))
        if not post_ok:
            break

    ratios = [pipeline_index(n, 0.5, 1.0 / n) / n for n in (100, 200, 400, 800)]
    stable = (
        all(0.7 < x < 0.9 for x in ratios)
        and abs(ratios[3] - ratios[2]) <= abs(ratios[1] - ratios[0]) + 1e-9
    )
    assert _report(10, "pipeline index postcondition and p = Theta(n)",
                   post_ok and stable), ratios


def test_criterion_11_lemma_deficits_shrink():
    reports = []
    for n in (400, 1600):
        k = round_k(0.9, n)
        params = ClusterParams(n=n, k=k, r=k, a=1.0, mu=2.0)  # alpha = 0.5
        comm = CommModel.coded(params, params.k / (params.r * params.n))
        reports.append(verify_transmission_lemmas(params, comm, trials=10_000, seed=111))
    ok_p = monotone_with_slack(
        [rep.mean_deficit_p for rep in reports],
        [2 * rep.stderr_deficit_p for rep in reports], decreasing=True)
    # the at-least-(k-p) claim is a lower bound on count2, so its deficit
    # per trial is clamped at zero before averaging
    ok_k = monotone_with_slack(
        [rep.mean_deficit_k_shortfall for rep in reports],
        [2 * rep.stderr_deficit_k_shortfall for rep in reports], decreasing=True)
    clean = all(rep.sandwich_violations == 0 for rep in reports)
    assert _report(11, "lemma transmission deficits shrink from n=400 to n=1600",
                   ok_p and ok_k and clean), reports


def test_criterion_12_byte_identical_outputs(tmp_path):
    commands = {
        "simulate.csv": ["simulate", "--n", "5", "--k", "3", "--r", "5",
                         "--a", "1", "--mu", "1", "--t1cmm", "0.12",
                         "--inject", ",".join(str(v) for v in EXAMPLE_TIMES)],
        "montecarlo.txt": ["montecarlo", "--n", "100", "--k", "70", "--r", "700",
                           "--a", "1", "--mu", "1", "--t1cmm", "0.001",
                           "--trials", "500", "--seed", "12"],
        "sweep.csv": ["sweep", "--beta", "2", "--c", "1", "--ns", "25,50",
                      "--k-fraction", "0.7", "--a", "1", "--mu", "1",
                      "--trials", "300", "--seed", "12"],
        "speedup.csv": ["speedup", "--beta", "1", "--c", "0.1", "--ns", "10,20",
                        "--a", "1", "--mu", "1", "--trials", "200", "--seed", "12"],
        "expect.txt": ["expect", "--n", "5", "--k", "3", "--r", "5",
                       "--a", "1", "--mu", "1", "--t1cmm", "0.12"],
        "decode.txt": ["decode-check", "--scheme", "systematic", "--n", "4",
                       "--k", "2", "--r", "2", "--m", "2", "--seed", "12"],
        "verify.txt": ["verify", "--n", "50", "--k", "35", "--r", "35",
                       "--a", "1", "--mu", "2", "--t1cmm", "0.0002",
                       "--trials", "300", "--seed", "12"],
    }
    ok = True
    for name, args in commands.items():
        first = tmp_path / f"first_{name}"
        second = tmp_path / f"second_{name}"
        rc1 = main([*args, "--out", str(first)])
        rc2 = main([*args, "--out", str(second)])
        if rc1 != 0 or rc2 != 0 or first.read_bytes() != second.read_bytes():
            ok = False
            break
    assert _report(12, "identical seeds give byte-identical output files", ok)
