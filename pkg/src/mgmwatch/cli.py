"""Command-line interface.

Exit codes: 0 on success, 1 for model/parameter validation failures, 2 for
I/O, parse, and usage errors.  When ``--seed`` is not given, the MGM_SEED
environment variable (if set) supplies the default seed.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from .detect import DetectorConfig, calibrate_threshold
from .errors import ModelValidationError, ParseError
from .experiment import ExperimentConfig, detect_stream, run_experiment
from .io import read_dataset, read_model, write_baseline, write_dataset
from .rankscan import baseline_report
from .sampling import SamplerConfig, sample_joint

__all__ = ["main"]


def _env_seed() -> int | None:
    raw = os.environ.get("MGM_SEED")
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ParseError(f"MGM_SEED must be an integer, got {raw!r}") from None


def _resolve_seed(cli_seed: int | None) -> int | None:
    return cli_seed if cli_seed is not None else _env_seed()


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mgmwatch",
        description="Anomaly detection and localisation on mixed binary/continuous streams.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model file and report its dimensions")
    p.add_argument("model", help="model JSON file")

    p = sub.add_parser("sample", help="draw observations from a model")
    p.add_argument("model")
    p.add_argument("-n", "--num", type=int, required=True, help="number of observations")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--output", default=None, help="output CSV (default stdout)")
    p.add_argument("--method", choices=("auto", "exact", "gibbs"), default="auto")
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--thin", type=int, default=10)

    p = sub.add_parser("detect", help="run CUSUM detection over a data CSV")
    p.add_argument("model")
    p.add_argument("--input", required=True, help="data CSV path, or - for stdin")
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--threshold", type=float, required=True)
    p.add_argument("--trajectory", default=None, help="also write per-step statistics CSV here")
    p.add_argument("-o", "--output", default=None, help="events JSONL (default stdout)")

    p = sub.add_parser("calibrate", help="Monte Carlo alarm threshold for a model")
    p.add_argument("model")
    p.add_argument("--horizon", type=int, default=50)
    p.add_argument("--alpha", type=float, default=0.05, help="per-stream false-alarm budget")
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("experiment", help="run an anomaly-injection experiment config")
    p.add_argument("config", help="experiment JSON file")
    p.add_argument("-o", "--out-dir", default=".", help="artifact directory (default .)")

    p = sub.add_parser("baseline", help="rank-scan the continuous variables of a data CSV")
    p.add_argument("model")
    p.add_argument("--input", required=True, help="data CSV path, or - for stdin")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--method", choices=("asymptotic", "monte-carlo"), default="asymptotic")
    p.add_argument("--runs", type=int, default=10000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--output", default=None, help="output CSV (default stdout)")
    return parser


def _cmd_validate(args) -> int:
    model = read_model(args.model)
    print(
        f"ok: {model.n_cat} binary + {model.n_quant} continuous variables; "
        "matrices symmetric, precision positive definite"
    )
    return 0


def _cmd_sample(args) -> int:
    model = read_model(args.model)
    config = SamplerConfig(method=args.method, burn_in=args.burn_in, thin=args.thin,
                           seed=_resolve_seed(args.seed))
    x_cat, x_quant = sample_joint(model, args.num, config=config)
    write_dataset(args.output if args.output else sys.stdout, x_cat, x_quant)
    return 0


def _cmd_detect(args) -> int:
    model = read_model(args.model)
    config = DetectorConfig(threshold=args.threshold, delta=args.delta)
    source = sys.stdin if args.input == "-" else args.input
    events_fh = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    trajectory_fh = open(args.trajectory, "w", encoding="utf-8") if args.trajectory else None
    try:
        summary = detect_stream(model, source, config,
                                events_out=events_fh, trajectory_out=trajectory_fh)
    finally:
        if args.output:
            events_fh.close()
        if trajectory_fh is not None:
            trajectory_fh.close()
    alarmed = [name for name, t in zip(summary.var_names, summary.first_alarm) if t >= 0]
    print(
        f"{summary.n_steps} steps, {len(summary.events)} alarms"
        + (f" ({', '.join(alarmed)})" if alarmed else ""),
        file=sys.stderr,
    )
    return 0


def _cmd_calibrate(args) -> int:
    model = read_model(args.model)
    threshold = calibrate_threshold(
        model,
        delta=args.delta,
        horizon=args.horizon,
        target_fa=args.alpha,
        n_runs=args.runs,
        rng=np.random.default_rng(_resolve_seed(args.seed)),
    )
    print(repr(threshold))
    return 0


def _cmd_experiment(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", lineno=exc.lineno) from None
    config = ExperimentConfig.from_dict(doc)
    if config.seed is None and _env_seed() is not None:
        config = dataclasses.replace(config, seed=_env_seed())
    result = run_experiment(config, out_dir=args.out_dir)
    print(
        f"threshold {result.threshold:.6g}; alarms: "
        + (", ".join(f"{e.variable}@{e.t}" for e in result.report.events) or "none")
    )
    print("artifacts: " + ", ".join(str(p) for p in result.paths.values()))
    return 0


def _cmd_baseline(args) -> int:
    model = read_model(args.model)
    source = sys.stdin if args.input == "-" else args.input
    x_cat, x_quant = read_dataset(source, model)
    X = np.hstack([x_cat, x_quant])
    scans = baseline_report(
        model, X,
        alpha=args.alpha, method=args.method, n_runs=args.runs,
        rng=np.random.default_rng(_resolve_seed(args.seed)),
    )
    write_baseline(args.output if args.output else sys.stdout, scans)
    detected = [s.variable for s in scans if s.detected]
    thr = scans[0].threshold if scans else float("nan")
    print(
        f"threshold {thr:.6g}; change detected in: " + (", ".join(detected) or "none"),
        file=sys.stderr,
    )
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "sample": _cmd_sample,
    "detect": _cmd_detect,
    "calibrate": _cmd_calibrate,
    "experiment": _cmd_experiment,
    "baseline": _cmd_baseline,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ModelValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
