"""Command-line entry point: ``mcsched gen | run | compare | validate``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import load_config, parse_weights
from .scheduling import Policy
from .simulator import ConfigError, TraceError, generate_trace, run
from .traceio import export_metrics, export_summary, parse_trace, serialize_trace, trace_sha256

log = logging.getLogger("mcsched")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mcsched", description="Mixed-criticality cluster scheduling simulator.")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--quiet", action="store_true", help="only report errors")
    verbosity.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="generate a seeded workload trace")
    gen.add_argument("--config", help="scenario config JSON (defaults if omitted)")
    gen.add_argument("--seed", type=int, help="PRNG seed (falls back to $MCSCHED_SEED)")
    gen.add_argument("--out", required=True, help="trace file to write")

    run_p = sub.add_parser("run", help="replay a trace under one policy")
    run_p.add_argument("--trace", required=True, help="trace JSON to replay")
    run_p.add_argument("--policy", required=True, help=", ".join(p.value for p in Policy))
    run_p.add_argument("--weights", help="acceptance,assurance,residual (default 52.5,42.5,5)")
    run_p.add_argument("--config", help="scenario config JSON for thresholds, gamma and policy options")
    run_p.add_argument("--out", required=True, help="metrics CSV to write")

    cmp_p = sub.add_parser("compare", help="replay a trace under all four policies")
    cmp_p.add_argument("--trace", required=True, help="trace JSON to replay")
    cmp_p.add_argument("--weights", help="as for run")
    cmp_p.add_argument("--config", help="as for run")
    cmp_p.add_argument("--out-dir", required=True, help="directory for per-policy CSVs and summary.csv")

    val = sub.add_parser("validate", help="check a trace file")
    val.add_argument("--trace", required=True, help="trace JSON to check")
    return parser


def _read_trace(path: str):
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise TraceError(f"cannot read trace {path}: {exc.strerror}") from exc
    return parse_trace(data)


def _weights(args, config):
    if args.weights is None:
        return config.weights
    try:
        return parse_weights(args.weights)
    except ValueError as exc:
        raise UsageError(f"--weights: {exc}") from exc


def _load_config(path):
    try:
        return load_config(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc


def _cmd_gen(args) -> int:
    seed = args.seed
    if seed is None:
        env = os.environ.get("MCSCHED_SEED")
        if env is None:
            raise UsageError("--seed is required when MCSCHED_SEED is unset")
        try:
            seed = int(env)
        except ValueError:
            raise UsageError(f"MCSCHED_SEED must be an integer, got {env!r}") from None
    config = _load_config(args.config)
    trace = generate_trace(config.generator, seed)
    Path(args.out).write_bytes(serialize_trace(trace))
    log.info("wrote %s: %d initial nodes, %d events", args.out, len(trace.initial_nodes), len(trace.events))
    return EXIT_OK


def _cmd_run(args) -> int:
    try:
        policy = Policy.parse(args.policy)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    config = _load_config(args.config)
    weights = _weights(args, config)
    trace = _read_trace(args.trace)
    series = run(trace, config.scheduler(policy, weights))
    Path(args.out).write_bytes(export_metrics(series, policy.value, trace_sha256(trace)))
    return EXIT_OK


def _cmd_compare(args) -> int:
    config = _load_config(args.config)
    weights = _weights(args, config)
    trace = _read_trace(args.trace)
    digest = trace_sha256(trace)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = {}
    for policy in Policy:
        series = run(trace, config.scheduler(policy, weights))
        (out / f"{policy.value}.csv").write_bytes(export_metrics(series, policy.value, digest))
        results[policy.value] = series
        avg = series.summary()
        log.info("%-28s acceptance=%.4f assurance=%.4f", policy.value, avg["acceptance"], avg["assurance"])
    (out / "summary.csv").write_bytes(export_summary(results, digest))
    return EXIT_OK


def _cmd_validate(args) -> int:
    trace = _read_trace(args.trace)
    print(f"ok: {len(trace.initial_nodes)} initial nodes, {len(trace.events)} events, sha256={trace_sha256(trace)}")
    return EXIT_OK


_COMMANDS = {"gen": _cmd_gen, "run": _cmd_run, "compare": _cmd_compare, "validate": _cmd_validate}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = logging.ERROR if args.quiet else logging.DEBUG if args.verbose else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"mcsched: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, TraceError) as exc:
        print(f"mcsched: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
