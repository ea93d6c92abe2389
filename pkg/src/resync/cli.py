"""Command line interface.

Subcommands cover the whole toolkit: pattern generation, offset recovery
on recorded detections, scenario simulation, parameter planning, grid
evaluation, Monte Carlo rate checks, and the kernel benchmark.  Every run
prints its resolved configuration so results are reproducible from logs
alone.

Exit codes: 0 success, 2 bad usage or argument values, 3 missing input
file, 4 corrupt or malformed input, 5 no feasible operating point.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from . import __version__, kernels
from .analytics import (
    DEFAULT_FIBER_SPEED_MPS,
    DEFAULT_TAU_PS,
    feasibility_grid,
    fiber_km_to_timebins,
    optimize_params,
    penalty_curve,
    penalty_to_db,
    timebins_to_fiber_km,
    write_grid_csv,
    write_penalty_curve_csv,
)
from .bench import compare_backends, make_bench_case, run_bench
from .errors import (
    CorruptFileError,
    InfeasibleThresholdError,
    InsufficientDetectionsError,
    InvalidScheduleError,
    NoFeasibleSolutionError,
)
from .pattern import generate_pattern, read_pattern, write_pattern
from .recovery import RecoveryParams, find_offset, read_detections
from .simulator import ChannelModel, ScenarioConfig, monte_carlo_rates, run_scenario

_EXIT_USAGE = 2
_EXIT_MISSING = 3
_EXIT_CORRUPT = 4
_EXIT_INFEASIBLE = 5


def _emit(args, config: dict, payload: dict) -> None:
    """Print config plus results, as text lines or one JSON document."""
    if getattr(args, "json", False):
        json.dump({"config": config, "result": payload}, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        print("config: " + " ".join(f"{k}={v}" for k, v in config.items()))
        for key, value in payload.items():
            print(f"{key}: {value}")


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("RESYNC_THREADS", "1")))
    except ValueError:
        return 1


def _cmd_gen_pattern(args) -> int:
    pattern = generate_pattern(args.seed, args.bins)
    write_pattern(pattern, args.out)
    config = {"seed": pattern.seed, "bins": pattern.len_timebins, "out": args.out}
    _emit(args, config, {"pulses": pattern.popcount, "written": args.out})
    return 0


def _recovery_params(args) -> RecoveryParams:
    return RecoveryParams(
        tau_ps=args.tau_ps,
        threshold_t=args.t,
        delta_max=args.delta_max,
        nd_max=args.nd_max,
    )


def _cmd_recover(args) -> int:
    pattern = read_pattern(args.pattern)
    detections = read_detections(args.detections)
    params = _recovery_params(args)
    outcome = find_offset(pattern, detections, params, min_detections=args.min_detections)
    config = {
        "pattern": args.pattern,
        "detections": args.detections,
        "tau_ps": params.tau_ps,
        "t": params.threshold_t,
        "delta_max": params.delta_max,
        "nd_max": params.nd_max,
        "min_detections": args.min_detections,
        "backend": kernels.active_name(),
    }
    payload = {
        "status": outcome.status.value,
        "delta_bins": outcome.delta_bins,
        "delta_align_ps": outcome.delta_align_ps,
        "delta_total_ps": outcome.delta_total_ps,
        "tested_count": outcome.tested_count,
        "correlation_abs": outcome.correlation_abs,
        "nd": outcome.nd,
        "threshold_abs": outcome.threshold_abs,
    }
    _emit(args, config, payload)
    return 0


def _cmd_simulate(args) -> int:
    config_obj = ScenarioConfig.from_json(args.config)
    report = run_scenario(config_obj)
    report.write_csv(args.out)
    summary_path = args.summary or args.out + ".summary.json"
    report.write_summary_json(summary_path)
    config = {"config": args.config, "out": args.out, "summary": summary_path,
              "backend": kernels.active_name()}
    payload = dict(report.summary_dict())
    payload["csv"] = args.out
    _emit(args, config, payload)
    return 0


def _cmd_plan(args) -> int:
    delta_max = fiber_km_to_timebins(args.max_km, args.tau_ps, args.fiber_speed)
    plan = optimize_params(
        qber_max=args.qmax,
        delta_max=delta_max,
        interval_s=args.interval_s,
        p_day_min=args.p_day,
        p_correct_min=args.p_correct,
        detection_rate_hz=args.rate_hz,
        nd_range=(args.nd_min, args.nd_max),
        t_step=args.t_step,
    )
    config = {
        "qmax": args.qmax, "max_km": args.max_km, "delta_max": delta_max,
        "interval_s": args.interval_s, "p_day": args.p_day, "p_correct": args.p_correct,
        "rate_hz": args.rate_hz, "tau_ps": args.tau_ps, "fiber_speed": args.fiber_speed,
        "nd_range": (args.nd_min, args.nd_max), "t_step": args.t_step,
    }
    payload = {
        "nd_star": plan.nd_star,
        "t_star": plan.t_star,
        "p_correct": plan.p_correct,
        "p_no_wrong_day": plan.p_no_wrong_day,
        "reach_km": timebins_to_fiber_km(delta_max, args.tau_ps, args.fiber_speed),
    }
    if plan.skr_penalty is not None:
        payload["skr_penalty"] = plan.skr_penalty
        payload["skr_penalty_db"] = penalty_to_db(plan.skr_penalty)
    if args.curve_out:
        rates = [float(r) for r in args.curve_rates.split(",")] if args.curve_rates else [args.rate_hz]
        if any(r is None for r in rates):
            raise ValueError("--curve-out needs --curve-rates or --rate-hz")
        qmaxes = [float(q) for q in args.curve_qmax.split(",")] if args.curve_qmax else [args.qmax]
        points = penalty_curve(qmaxes, rates, delta_max, args.interval_s,
                               args.p_day, args.p_correct)
        write_penalty_curve_csv(points, args.curve_out)
        payload["curve_csv"] = args.curve_out
    _emit(args, config, payload)
    return 0


def _parse_range(spec: str, kind: str):
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"--{kind} must look like lo:hi:step")
    lo, hi, step = (float(p) for p in parts)
    if step <= 0 or hi < lo:
        raise ValueError(f"--{kind} range is empty or has nonpositive step")
    values = []
    v = lo
    while v <= hi + 1e-12:
        values.append(v)
        v += step
    return values


def _cmd_grid(args) -> int:
    delta_max = fiber_km_to_timebins(args.max_km, args.tau_ps, args.fiber_speed)
    nd_values = [int(round(v)) for v in _parse_range(args.nd, "nd")]
    t_values = _parse_range(args.t, "t")
    cells = feasibility_grid(
        qber_max=args.qmax,
        delta_max=delta_max,
        interval_s=args.interval_s,
        p_day_min=args.p_day,
        p_correct_min=args.p_correct,
        nd_values=nd_values,
        t_values=t_values,
    )
    write_grid_csv(cells, args.out)
    feasible = sum(1 for c in cells if c.feasible)
    config = {
        "qmax": args.qmax, "max_km": args.max_km, "delta_max": delta_max,
        "interval_s": args.interval_s, "p_day": args.p_day, "p_correct": args.p_correct,
        "nd": args.nd, "t": args.t, "tau_ps": args.tau_ps, "fiber_speed": args.fiber_speed,
    }
    _emit(args, config, {"cells": len(cells), "feasible": feasible, "csv": args.out})
    return 0


def _cmd_mc(args) -> int:
    pattern = generate_pattern(args.pattern_seed, args.pattern_bins)
    channel = ChannelModel(
        detection_prob=args.eta,
        qber=args.qber,
        dark_rate_hz=args.dark_rate_hz,
        jitter_ps=args.jitter_ps,
        true_offset_ps=args.offset_ps,
        tdc_tick_ps=args.tick_ps,
    )
    params = _recovery_params(args)
    workers = args.workers if args.workers else _default_workers()
    result = monte_carlo_rates(pattern, channel, params, args.trials, args.seed,
                               workers=workers)
    config = {
        "trials": args.trials, "pattern_seed": args.pattern_seed,
        "pattern_bins": args.pattern_bins, "eta": args.eta, "qber": args.qber,
        "dark_rate_hz": args.dark_rate_hz, "jitter_ps": args.jitter_ps,
        "offset_ps": args.offset_ps, "tick_ps": args.tick_ps,
        "tau_ps": args.tau_ps, "t": args.t, "delta_max": args.delta_max,
        "nd_max": args.nd_max, "seed": args.seed, "workers": workers,
        "backend": kernels.active_name(),
    }
    payload = {
        "correct_rate": result.correct_rate,
        "correct_ci95": list(result.correct_ci),
        "wrong_rate": result.wrong_rate,
        "wrong_ci95": list(result.wrong_ci),
        "mean_tested": result.mean_tested,
        "n_correct": result.n_correct,
        "n_wrong": result.n_wrong,
    }
    _emit(args, config, payload)
    return 0


def _cmd_bench(args) -> int:
    case = make_bench_case(
        pattern_bins=args.pattern_bins,
        nd=args.nd,
        delta_max=args.delta_max,
        tau_ps=args.tau_ps,
        threshold_t=args.t,
        seed=args.seed,
    )
    if args.backend == "both":
        results = compare_backends(case, reps=args.reps, sweep_reps=args.sweep_reps)
    else:
        results = [run_bench(case, args.backend, reps=args.reps, sweep_reps=args.sweep_reps)]
    config = {
        "pattern_bins": args.pattern_bins, "nd": args.nd, "delta_max": args.delta_max,
        "tau_ps": args.tau_ps, "t": args.t, "reps": args.reps,
        "sweep_reps": args.sweep_reps, "backends": [r.backend for r in results],
    }
    payload = {}
    for r in results:
        payload[f"{r.backend}_aligned_median_us"] = round(r.aligned_median_us, 3)
        payload[f"{r.backend}_aligned_p95_us"] = round(r.aligned_p95_us, 3)
        payload[f"{r.backend}_sweep_median_us"] = round(r.sweep_median_us, 3)
        payload[f"{r.backend}_sweep_p95_us"] = round(r.sweep_p95_us, 3)
        payload[f"{r.backend}_sweep_over_aligned"] = round(r.ratio, 1)
    if len(results) == 2:
        by_name = {r.backend: r for r in results}
        if "compiled" in by_name and "python" in by_name:
            payload["python_over_compiled_sweep"] = round(
                by_name["python"].sweep_median_us / by_name["compiled"].sweep_median_us, 2
            )
    _emit(args, config, payload)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resync",
        description="Clock-offset recovery toolkit for single-photon timing links.",
        epilog=(
            "exit codes: 0 success, 2 bad usage or argument values, "
            "3 missing input file, 4 corrupt or malformed input, "
            "5 no feasible operating point"
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-pattern", help="generate a pulse pattern file")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--bins", type=int, required=True, help="pattern length in timebins (even)")
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_gen_pattern)

    p = sub.add_parser("recover", help="recover the clock offset from a detections file")
    p.add_argument("--pattern", required=True)
    p.add_argument("--detections", required=True)
    p.add_argument("--tau-ps", type=int, default=DEFAULT_TAU_PS)
    p.add_argument("--t", type=float, default=0.5, help="relative correlation threshold")
    p.add_argument("--delta-max", type=int, required=True)
    p.add_argument("--nd-max", type=int, default=500)
    p.add_argument("--min-detections", type=int, default=8)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_recover)

    p = sub.add_parser("simulate", help="replay a scenario config")
    p.add_argument("--config", required=True, help="scenario JSON file")
    p.add_argument("--out", required=True, help="per-block CSV output")
    p.add_argument("--summary", default=None, help="summary JSON (default <out>.summary.json)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("plan", help="pick the cheapest feasible (nd, t)")
    p.add_argument("--qmax", type=float, required=True)
    p.add_argument("--max-km", type=float, required=True)
    p.add_argument("--interval-s", type=float, required=True)
    p.add_argument("--p-day", type=float, required=True)
    p.add_argument("--p-correct", type=float, required=True)
    p.add_argument("--rate-hz", type=float, default=None)
    p.add_argument("--tau-ps", type=int, default=DEFAULT_TAU_PS)
    p.add_argument("--fiber-speed", type=float, default=DEFAULT_FIBER_SPEED_MPS)
    p.add_argument("--nd-min", type=int, default=8)
    p.add_argument("--nd-max", type=int, default=5000)
    p.add_argument("--t-step", type=float, default=1e-3)
    p.add_argument("--curve-out", default=None, help="also write a penalty curve CSV here")
    p.add_argument("--curve-rates", default=None, help="comma list of detection rates for the curve")
    p.add_argument("--curve-qmax", default=None, help="comma list of error rates for the curve")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("grid", help="evaluate the feasibility grid to CSV")
    p.add_argument("--qmax", type=float, required=True)
    p.add_argument("--max-km", type=float, required=True)
    p.add_argument("--interval-s", type=float, required=True)
    p.add_argument("--p-day", type=float, required=True)
    p.add_argument("--p-correct", type=float, required=True)
    p.add_argument("--nd", required=True, help="lo:hi:step")
    p.add_argument("--t", required=True, help="lo:hi:step")
    p.add_argument("--tau-ps", type=int, default=DEFAULT_TAU_PS)
    p.add_argument("--fiber-speed", type=float, default=DEFAULT_FIBER_SPEED_MPS)
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_grid)

    p = sub.add_parser("mc", help="Monte Carlo accept-rate estimate")
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--pattern-seed", type=int, default=1)
    p.add_argument("--pattern-bins", type=int, default=65536)
    p.add_argument("--eta", type=float, default=0.015, help="per-pulse detection probability")
    p.add_argument("--qber", type=float, default=0.0)
    p.add_argument("--dark-rate-hz", type=float, default=0.0)
    p.add_argument("--jitter-ps", type=float, default=0.0)
    p.add_argument("--offset-ps", type=int, default=0)
    p.add_argument("--tick-ps", type=int, default=100)
    p.add_argument("--tau-ps", type=int, default=DEFAULT_TAU_PS)
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument("--delta-max", type=int, default=16)
    p.add_argument("--nd-max", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None,
                   help="thread count (default RESYNC_THREADS or 1)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_mc)

    p = sub.add_parser("bench", help="time the kernels on both backends")
    p.add_argument("--pattern-bins", type=int, default=1 << 25)
    p.add_argument("--nd", type=int, default=500)
    p.add_argument("--delta-max", type=int, default=1_000_000)
    p.add_argument("--tau-ps", type=int, default=DEFAULT_TAU_PS)
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--sweep-reps", type=int, default=3)
    p.add_argument("--backend", choices=["compiled", "python", "both"], default="both")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: missing input file: {exc.filename or exc}", file=sys.stderr)
        return _EXIT_MISSING
    except IsADirectoryError as exc:
        print(f"error: expected a file: {exc}", file=sys.stderr)
        return _EXIT_MISSING
    except CorruptFileError as exc:
        print(f"error: corrupt input: {exc}", file=sys.stderr)
        return _EXIT_CORRUPT
    except (InfeasibleThresholdError, NoFeasibleSolutionError, InvalidScheduleError) as exc:
        print(f"error: infeasible: {exc}", file=sys.stderr)
        return _EXIT_INFEASIBLE
    except InsufficientDetectionsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CORRUPT
    except ValueError as exc:
        print(f"error: bad argument: {exc}", file=sys.stderr)
        return _EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
