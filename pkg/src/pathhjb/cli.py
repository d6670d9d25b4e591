"""Command-line entry point: ``pathhjb {solve,stability,lipschitz,validate} --config <json>``.

Exit codes: 0 success, 2 malformed config or refused validation, 3 budget
refusal, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import pandas as pd
from rose import get_logger, set_log_dir, write_errors

from pathhjb.coefficients import (
    load_family,
    load_sequence,
    make_pairs,
    make_probes,
    theta_convexity,
    validate_growth,
    validate_nonanticipativity,
    validate_path_lipschitz,
    validate_random_g,
    validate_terminal_bound,
    validate_terminal_lipschitz,
)
from pathhjb.coefficients.library import family_spec
from pathhjb.errors import BudgetRefusal, ConfigError, PathDomainError, ValidationRefusal
from pathhjb.lab import (
    N_VALUES,
    load_test_set,
    run_lipschitz,
    run_stability,
    sample_pairs,
)
from pathhjb.paths import SampledPath, TimedPath
from pathhjb.report import RunContext, prepare_run, write_run
from pathhjb.solver import load_solver_config, solve

_LOG_CLI = {
    "name": "cli",
    "file": "pathhjb.log",
    "level": logging.INFO,
}

COMMANDS = ("solve", "stability", "lipschitz", "validate")
# validate exits 2 when one of these fails
REQUIRED_CONDITIONS = ("non_anticipativity", "linear_growth", "random_g_bounds")


# =========================
# CONFIG
# =========================


def load_experiment(path) -> dict:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
    except FileNotFoundError as e:
        raise ConfigError("config", f"{path} not found") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"line {e.lineno}, column {e.colno}", e.msg) from e
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be an object")
    return raw


def _require(raw: dict, key: str):
    if key not in raw:
        raise ConfigError(key, "missing")
    return raw[key]


def _horizon(raw: dict) -> float:
    horizon = float(raw.get("horizon", 1.0))
    if horizon <= 0:
        raise ConfigError("horizon", f"must be positive, got {horizon}")
    return horizon


def load_query(raw, horizon: float, where: str) -> TimedPath:
    """``{"t", "x"}`` (a constant path) or ``{"t", "grid", "values"}``."""
    if not isinstance(raw, dict) or "t" not in raw:
        raise ConfigError(where, f"expected an object with 't', got {raw!r}")
    try:
        if "x" in raw:
            return TimedPath(float(raw["t"]), SampledPath.constant(raw["x"], horizon))
        return TimedPath.from_json(raw)
    except (KeyError, PathDomainError) as e:
        raise ConfigError(where, str(e)) from e


def _seed(args, raw: dict) -> int:
    return int(args.seed if args.seed is not None else raw.get("seed", 0))


def _threads(args, raw: dict) -> int:
    threads = args.threads if args.threads is not None else raw.get("threads")
    return int(threads or os.cpu_count() or 1)


def _start(command: str, args, raw: dict) -> tuple[RunContext, int, int]:
    """Run directory keyed by the config (threads excluded) and seed; logs go there too."""
    seed, threads = _seed(args, raw), _threads(args, raw)
    config = {k: v for k, v in raw.items() if k not in ("seed", "threads")}
    ctx = prepare_run(args.out, {**config, "experiment": command}, seed)
    set_log_dir(ctx.path / "logs")
    logger = get_logger(**_LOG_CLI)
    logger.info(f"{command} run {ctx.config_hash[:12]}: seed={seed}, threads={threads}")
    return ctx, seed, threads


def _ms(tic: float) -> float:
    return 1000.0 * (time.perf_counter() - tic)


# =========================
# COMMANDS
# =========================


def cmd_solve(args) -> int:
    raw = load_experiment(args.config)
    horizon = _horizon(raw)
    tic = time.perf_counter()
    c = load_family(_require(raw, "family"), horizon)
    cfg = load_solver_config(_require(raw, "solver"))
    queries = _require(raw, "query")
    if isinstance(queries, dict):
        queries = [queries]
    points = [load_query(q, horizon, f"query[{i}]") for i, q in enumerate(queries)]
    ctx, seed, threads = _start("solve", args, raw)
    timings = {"load": _ms(tic)}

    tic = time.perf_counter()
    documents, rows = {}, []
    for i, point in enumerate(points):
        estimate = solve(c, cfg.with_start(point), seed=seed, threads=threads)
        documents[f"value_{i:03d}.json"] = {
            "query": point.to_json(),
            "family": c.name,
            **estimate.to_json(),
        }
        rows.append(
            {
                "query": i,
                "t": point.t,
                "x": float(point.state[0]),
                "value": estimate.value,
                "stderr": estimate.stderr,
                "runtime_ms": estimate.runtime_ms,
            }
        )
    timings["solve"] = _ms(tic)
    write_run(ctx, "solve", {"values.csv": pd.DataFrame(rows)}, documents, timings)
    return 0


def cmd_stability(args) -> int:
    raw = load_experiment(args.config)
    horizon = _horizon(raw)
    tic = time.perf_counter()
    seq = load_sequence(_require(raw, "sequence"), horizon)
    cfg = load_solver_config(_require(raw, "solver"))
    n_values = raw.get("n_values", list(N_VALUES))
    if not isinstance(n_values, list) or not all(isinstance(n, int) and n >= 1 for n in n_values):
        raise ConfigError("n_values", f"expected a list of positive integers, got {n_values!r}")
    ctx, seed, threads = _start("stability", args, raw)
    test_set = load_test_set(_require(raw, "test_set"), seq.at(0).horizon_T, seed)
    timings = {"load": _ms(tic)}

    tic = time.perf_counter()
    report = run_stability(seq, test_set, cfg, n_values, seed=seed, threads=threads)
    timings["stability"] = _ms(tic)
    document = {
        "experiment": "stability",
        "sequence": seq.name,
        "test_set_size": len(test_set),
        **report.to_json(),
    }
    tables = {"stability.csv": report.to_frame(), "gap_curve.csv": report.gap_curve()}
    write_run(ctx, "stability", tables, {"stability.json": document}, timings)
    return 0


def cmd_lipschitz(args) -> int:
    raw = load_experiment(args.config)
    horizon = _horizon(raw)
    tic = time.perf_counter()
    c = load_family(_require(raw, "family"), horizon)
    cfg = load_solver_config(_require(raw, "solver"))
    pairs_raw = raw.get("pairs", {})
    if not isinstance(pairs_raw, dict):
        raise ConfigError("pairs", "expected an object")
    ctx, seed, threads = _start("lipschitz", args, raw)
    pairs = sample_pairs(
        int(pairs_raw.get("count", 200)),
        float(pairs_raw.get("bound", 2.0)),
        c.horizon_T,
        seed=seed,
        modes=tuple(pairs_raw.get("modes", ("time", "path", "both"))),
    )
    timings = {"load": _ms(tic)}

    tic = time.perf_counter()
    report = run_lipschitz(c, pairs, cfg, seed=seed, threads=threads, L_budget=raw.get("L_budget"))
    timings["lipschitz"] = _ms(tic)
    document = {"experiment": "lipschitz", "family": c.name, **report.to_json()}
    write_run(ctx, "lipschitz", {"lipschitz.csv": report.to_frame()}, {"lipschitz.json": document}, timings)
    return 0


def cmd_validate(args) -> int:
    """Run every validator; exit 2 naming the first failing required condition."""
    raw = load_experiment(args.config)
    horizon = _horizon(raw)
    tic = time.perf_counter()
    family_raw = _require(raw, "family")
    c = load_family(family_raw, horizon)
    spec = family_spec(family_raw, horizon)
    probes_raw = raw.get("probes", {})
    required = tuple(raw.get("require", REQUIRED_CONDITIONS))
    ctx, seed, _ = _start("validate", args, raw)
    count, bound = int(probes_raw.get("count", 64)), float(probes_raw.get("bound", 2.0))
    probes = make_probes(c, count=count, bound=bound, seed=seed)
    pairs = make_pairs(c, count=count, bound=bound, seed=seed)
    timings = {"load": _ms(tic)}

    tic = time.perf_counter()
    reports = [
        validate_nonanticipativity(c, probes, seed),
        validate_growth(c, probes),
        validate_path_lipschitz(c, pairs),
        validate_terminal_bound(c, [p.path for p in probes]),
        validate_terminal_lipschitz(c, [(p.path, other) for p, other in pairs]),
    ]
    if spec is not None:
        reports.append(validate_random_g(spec, [TimedPath(p.t, p.path) for p in probes]))
    if c.action_dim > 1:
        first = probes[0]
        reports.append(theta_convexity(c, first.t, first.path))
    timings["validate"] = _ms(tic)

    frame = pd.DataFrame(
        {
            "condition": [r.condition for r in reports],
            "passed": [r.passed for r in reports],
            "estimate": [r.estimate for r in reports],
            "declared": [r.declared for r in reports],
            "probes": [r.probes for r in reports],
        }
    )
    document = {"experiment": "validate", "family": c.name, "reports": [r.to_json() for r in reports]}
    write_run(ctx, "validate", {"validation.csv": frame}, {"validation.json": document}, timings)
    for report in reports:
        if report.condition in required and not report.passed:
            report.require()
    return 0


HANDLERS = {
    "solve": cmd_solve,
    "stability": cmd_stability,
    "lipschitz": cmd_lipschitz,
    "validate": cmd_validate,
}


# =========================
# ENTRY POINT
# =========================


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pathhjb",
        description="Solve path-dependent HJB equations and run the convergence experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name, help=(HANDLERS[name].__doc__ or name).splitlines()[0])
        cmd.add_argument("--config", required=True, help="Experiment config (JSON).")
        cmd.add_argument("--out", default="runs", help="Parent of the run directories. Default: runs.")
        cmd.add_argument("--seed", type=int, default=None, help="Master seed; overrides the config.")
        cmd.add_argument(
            "--threads",
            type=int,
            default=None,
            help="Worker processes; overrides the config. Default: all cores.",
        )
    return parser


def exit_code(error: BaseException) -> int:
    if isinstance(error, (ConfigError, ValidationRefusal, PathDomainError)):
        return 2
    if isinstance(error, BudgetRefusal):
        return 3
    return 1


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logger = get_logger(**_LOG_CLI)
    try:
        return HANDLERS[args.command](args)
    except Exception as e:
        code = exit_code(e)
        if code == 1:
            logger.exception(f"{args.command} failed")
        else:
            logger.error(f"{args.command} refused: {e}")
        message = f"pathhjb {args.command}: {type(e).__name__}: {e}"
        print(message, file=sys.stderr)
        write_errors([message], Path(args.out) / "errors.txt")
        return code
