"""Command-line front end for the simulator, analysis, and experiment sweeps.

Exit codes: 0 success, 1 configuration/validation error, 2 verification
failure (verify and decode-check only).
"""

from __future__ import annotations

import argparse
import itertools
import math
import sys
from pathlib import Path

import numpy as np

from .analysis import (
    RegimeFamily,
    classify_regime,
    expectation_bracket_coded,
    expectation_bracket_uncoded,
    expected_runtime_regime3,
    optimize_k,
    pipeline_index_p,
)
from .channel import (
    CommModel,
    run_coded_trial,
    run_uncoded_trial,
    timeline_record,
    timeline_to_csv,
)
from .coding import encode_random_linear, encode_systematic_mds, recovery_error
from .config import ConfigError, RunConfig, parse_config
from .experiments import (
    monte_carlo,
    speedup_curve,
    speedup_to_csv,
    sweep_regime,
    sweep_to_csv,
    verify_transmission_lemmas,
)
from .rng import RngStream
from .timing import ClusterParams, expected_order_stat, harmonic, inject_comp_times, variance_order_stat

_VALUE_FLAGS = (
    "n", "k", "r", "a", "mu", "t1cmm", "beta", "c", "k-fraction",
    "trials", "seed", "scheme", "inject", "ns", "m", "out", "format",
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; reserve 2 for
    # verification failures and report usage problems as status 1
    def error(self, message):
        raise _UsageError(message)


def _g(value: float) -> str:
    return f"{value:.9g}"


def _bool(value: bool) -> str:
    return "true" if value else "false"


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="codedmatvec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="PATH", help="key = value config file")
        for flag in _VALUE_FLAGS:
            p.add_argument(f"--{flag}")
        p.set_defaults(handler=handler)
        return p

    add("simulate", _cmd_simulate, "run one trial and emit its timeline")
    add("montecarlo", _cmd_montecarlo, "aggregate run-times over repeated trials")
    add("sweep", _cmd_sweep, "regime sweep over a ladder of n")
    p = add("speedup", _cmd_speedup, "coded vs uncoded mean run-time ratio per n")
    p.add_argument("--fix-k", action="store_true",
                   help="use k = round(k_fraction * n) instead of the leading-term optimum")
    p = add("optimize-k", _cmd_optimize_k, "scan for the leading-term-optimal k")
    p.add_argument("--require-divisor", action="store_true",
                   help="restrict the scan to k dividing r")
    add("expect", _cmd_expect, "closed-form expectations for one configuration")
    add("decode-check", _cmd_decode_check, "verify any-k recovery of the coding scheme")
    add("verify", _cmd_verify, "check the run-time sandwich and transmission counts")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        config = _load_config(args)
        return args.handler(config, args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _load_config(args) -> RunConfig:
    contents = ""
    if args.config is not None:
        contents = Path(args.config).read_text()
    overrides = {}
    for flag in _VALUE_FLAGS:
        value = getattr(args, flag.replace("-", "_"))
        if value is not None:
            overrides[flag] = value
    return parse_config(contents, overrides)


def _emit(text: str, config: RunConfig):
    if config.out:
        Path(config.out).write_text(text)
    else:
        sys.stdout.write(text)


def _need(config: RunConfig, *keys):
    for key in keys:
        if getattr(config, key) is None:
            raise ConfigError(f"{key}: required for this command")


def _params(config: RunConfig) -> ClusterParams:
    _need(config, "n", "k", "r", "a", "mu")
    return ClusterParams(n=config.n, k=config.k, r=config.r, a=config.a, mu=config.mu)


def _comm(config: RunConfig, params: ClusterParams) -> CommModel:
    _need(config, "t1cmm")
    if config.scheme == "uncoded":
        return CommModel.uncoded(params, config.t1cmm)
    return CommModel.coded(params, config.t1cmm)


def _run_scheme(config: RunConfig):
    if config.scheme == "uncoded":
        return run_uncoded_trial
    if config.scheme == "coded":
        return run_coded_trial
    raise ConfigError(f"scheme: must be coded or uncoded here, got {config.scheme!r}")


def _cmd_simulate(config: RunConfig, args) -> int:
    params = _params(config)
    comm = _comm(config, params)
    run = _run_scheme(config)
    if config.inject is not None:
        timeline, metrics = run(params, comm, times=inject_comp_times(config.inject))
    else:
        timeline, metrics = run(params, comm, RngStream(config.seed, 0))
    if (config.format or "csv") == "csv":
        _emit(timeline_to_csv(timeline), config)
    else:
        _emit(timeline_record(timeline, metrics), config)
    return 0


def _cmd_montecarlo(config: RunConfig, args) -> int:
    params = _params(config)
    comm = _comm(config, params)
    if config.scheme not in ("coded", "uncoded"):
        raise ConfigError(f"scheme: must be coded or uncoded here, got {config.scheme!r}")
    mc, agg = monte_carlo(params, comm, config.trials, config.seed, scheme=config.scheme)
    values = [
        ("scheme", config.scheme), ("n", params.n), ("k", params.k), ("r", params.r),
        ("trials", mc.trials), ("mean", _g(mc.mean)), ("variance", _g(mc.variance)),
        ("stderr", _g(mc.stderr)), ("ci95_halfwidth", _g(mc.ci95_halfwidth)),
        ("frac_lower_bound_hit", _g(agg.frac_lower_bound_hit)),
        ("mean_completed_by_comp_k", _g(agg.mean_completed_by_comp_k)),
        ("mean_q_idle", _g(agg.mean_q_idle)),
        ("mean_busy_fraction", _g(agg.mean_busy_fraction)),
    ]
    if (config.format or "text") == "csv":
        header = ",".join(key for key, _ in values)
        row = ",".join(str(v) for _, v in values)
        _emit(f"{header}\n{row}\n", config)
    else:
        _emit("".join(f"{key}={v}\n" for key, v in values), config)
    return 0


def _family(config: RunConfig) -> RegimeFamily:
    _need(config, "beta", "c")
    return RegimeFamily(c=config.c, beta=config.beta)


def _cmd_sweep(config: RunConfig, args) -> int:
    _need(config, "ns", "a", "mu")
    family = _family(config)
    rows = sweep_regime(
        family, config.ns, config.k_fraction or 0.7,
        a=config.a, mu=config.mu, trials=config.trials, seed=config.seed,
    )
    for row in rows:
        if row.error is not None:
            print(f"error: n={row.n}: {row.error}", file=sys.stderr)
    if all(row.error is not None for row in rows):
        return 1
    if (config.format or "csv") == "csv":
        _emit(sweep_to_csv(rows), config)
    else:
        blocks = []
        for row in rows:
            if row.error is not None:
                continue
            blocks.append(
                f"n={row.n}\nk={row.k}\nr={row.r}\nt_cmm={_g(row.t_cmm)}\n"
                f"mean={_g(row.mc.mean)}\nstderr={_g(row.mc.stderr)}\n"
                f"frac_lower_bound_hit={_g(row.frac_lower_bound_hit)}\n"
                f"mean_completed_by_comp_k={_g(row.mean_completed_by_comp_k)}\n"
                f"closed_form={_g(row.closed_form_leading)}\ngap={_g(row.gap)}\n"
            )
        _emit("\n".join(blocks), config)
    return 0


def _cmd_speedup(config: RunConfig, args) -> int:
    _need(config, "ns", "a", "mu")
    family = _family(config)
    points = speedup_curve(
        config.ns, config.k_fraction or 0.7,
        a=config.a, mu=config.mu, family=family,
        trials=config.trials, seed=config.seed,
        optimize=not args.fix_k,
    )
    if (config.format or "csv") == "csv":
        _emit(speedup_to_csv(points), config)
    else:
        blocks = [
            f"n={pt.n}\nk={pt.k}\nr={pt.r}\ncoded_mean={_g(pt.coded_mean)}\n"
            f"uncoded_mean={_g(pt.uncoded_mean)}\nratio={_g(pt.ratio)}\n"
            for pt in points
        ]
        _emit("\n".join(blocks), config)
    return 0


def _cmd_optimize_k(config: RunConfig, args) -> int:
    _need(config, "n", "r", "a", "mu", "t1cmm")
    k_star, value = optimize_k(
        config.n, config.r, config.a, config.mu,
        comm_at_k=lambda k: (config.r / k) * config.t1cmm,
        require_divisor=args.require_divisor,
    )
    _emit(f"k_star={k_star}\nexpected_runtime={_g(value)}\n", config)
    return 0


def _cmd_expect(config: RunConfig, args) -> int:
    params = _params(config)
    comm = _comm(config, params)
    lines = [f"scheme={config.scheme}", f"n={params.n}", f"k={params.k}", f"r={params.r}"]
    if config.scheme == "uncoded":
        bracket = expectation_bracket_uncoded(params, comm)
        alpha_u = params.r / (params.mu * params.n)
        lines += [
            f"t0={_g(params.a * params.r / params.n)}",
            f"alpha={_g(alpha_u)}",
            f"t_cmm={_g(comm.t_cmm)}",
            f"lower={_g(bracket.lower)}",
            f"upper={_g(bracket.upper)}",
            f"expected_Tn={_g(alpha_u * harmonic(params.n))}",
        ]
    else:
        bracket = expectation_bracket_coded(params, comm)
        lines += [
            f"t0={_g(params.t0)}",
            f"alpha={_g(params.alpha)}",
            f"t_cmm={_g(comm.t_cmm)}",
            f"lower={_g(bracket.lower)}",
            f"upper={_g(bracket.upper)}",
            f"regime3_leading={_g(expected_runtime_regime3(params))}",
            f"pipeline_p={pipeline_index_p(params, comm.t_cmm)}",
            f"expected_Tk={_g(expected_order_stat(params, params.k))}",
            f"variance_Tk={_g(variance_order_stat(params, params.k))}",
        ]
    if config.beta is not None:
        family = RegimeFamily(c=config.c if config.c is not None else 1.0, beta=config.beta)
        lines.append(f"regime={classify_regime(family).value}")
    _emit("".join(f"{line}\n" for line in lines), config)
    return 0


def _cmd_decode_check(config: RunConfig, args) -> int:
    _need(config, "n", "k", "r", "m")
    if config.scheme not in ("systematic", "random"):
        raise ConfigError(
            f"scheme: decode-check needs systematic or random, got {config.scheme!r}")
    params = ClusterParams(n=config.n, k=config.k, r=config.r, a=0.0, mu=1.0)
    rng = RngStream(config.seed, 0)
    a_matrix = rng.standard_normals((config.r, config.m))
    x = rng.standard_normals(config.m)

    if config.scheme == "systematic":
        job = encode_systematic_mds(a_matrix, x, params)
        tol = 1e-10
    else:
        job = encode_random_linear(a_matrix, x, params, rng)
        tol = 1e-8

    total_subsets = math.comb(config.n, config.k)
    exhaustive = total_subsets <= 20_000
    if exhaustive:
        subsets = itertools.combinations(range(1, config.n + 1), config.k)
        checked = total_subsets
    else:
        checked = min(config.trials, 20_000)
        subsets = (
            sorted(np.argsort(rng.uniforms(config.n))[: config.k] + 1)
            for _ in range(checked)
        )

    failures = 0
    unflagged = 0
    max_err = 0.0
    for subset in subsets:
        err, ok = recovery_error(job, subset)
        max_err = max(max_err, err)
        if err > tol:
            failures += 1
            if ok:
                unflagged += 1
    recovered = (checked - failures) / checked
    if config.scheme == "systematic":
        passed = failures == 0
    else:
        passed = recovered >= 0.99 and unflagged == 0
    _emit(
        f"scheme={config.scheme}\nn={config.n}\nk={config.k}\nr={config.r}\n"
        f"m={config.m}\nsubsets_checked={checked}\nexhaustive={_bool(exhaustive)}\n"
        f"tolerance={_g(tol)}\nmax_relative_error={_g(max_err)}\n"
        f"failures={failures}\nunflagged_failures={unflagged}\n"
        f"recovered_fraction={_g(recovered)}\npass={_bool(passed)}\n",
        config,
    )
    return 0 if passed else 2


def _cmd_verify(config: RunConfig, args) -> int:
    params = _params(config)
    comm = _comm(config, params)
    report = verify_transmission_lemmas(params, comm, config.trials, config.seed)
    passed = report.sandwich_violations == 0
    _emit(
        f"n={report.n}\nk={report.k}\np={report.p}\ntrials={report.trials}\n"
        f"mean_count1={_g(report.mean_count1)}\nmean_count2={_g(report.mean_count2)}\n"
        f"mean_deficit_p={_g(report.mean_deficit_p)}\n"
        f"stderr_deficit_p={_g(report.stderr_deficit_p)}\n"
        f"mean_deficit_k_signed={_g(report.mean_deficit_k_signed)}\n"
        f"stderr_deficit_k_signed={_g(report.stderr_deficit_k_signed)}\n"
        f"mean_deficit_k_shortfall={_g(report.mean_deficit_k_shortfall)}\n"
        f"stderr_deficit_k_shortfall={_g(report.stderr_deficit_k_shortfall)}\n"
        f"sandwich_violations={report.sandwich_violations}\npass={_bool(passed)}\n",
        config,
    )
    return 0 if passed else 2


if __name__ == "__main__":
    raise SystemExit(main())
