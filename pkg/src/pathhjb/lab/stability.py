"""Compact-convergence experiments: sup over a test set of |vⁿ − v⁰| as n grows."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from rose import get_logger
from tqdm import tqdm

from pathhjb.coefficients import (
    CoefficientSequence,
    make_probes,
    validate_shared_growth,
    validate_terminal_bound,
)
from pathhjb.coefficients.library import sequence_analytic_gap
from pathhjb.errors import PathDomainError, ValidationRefusal
from pathhjb.lab.testset import CompactTestSet
from pathhjb.paths import TimedPath
from pathhjb.solver import SolverConfig, solve

_LOG_STABILITY = {
    "name": "stability",
    "file": "pathhjb.log",
    "level": logging.INFO,
}

N_VALUES = (1, 2, 4, 8, 16, 32, 64)


@dataclass(frozen=True)
class StabilityReport:
    n_values: tuple[int, ...]
    gaps: tuple[float, ...]
    floor_estimate: float
    solver: dict
    runtime_ms: tuple[float, ...]
    analytic: tuple[float | None, ...] = ()
    # v^n at every test point, row i for n_values[i]; limit values separately
    values: tuple[tuple[float, ...], ...] = field(default=(), repr=False)
    limit_values: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if any(g < 0 for g in self.gaps):
            raise PathDomainError(f"gaps must be nonnegative, got {self.gaps}")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "n": list(self.n_values),
                "gap": list(self.gaps),
                "floor": [self.floor_estimate] * len(self.n_values),
                "runtime_ms": list(self.runtime_ms),
            }
        )

    def gap_curve(self) -> pd.DataFrame:
        analytic = list(self.analytic) or [None] * len(self.n_values)
        return pd.DataFrame(
            {
                "n": list(self.n_values),
                "gap": list(self.gaps),
                "analytic_reference": [np.nan if a is None else a for a in analytic],
            }
        )

    def to_json(self) -> dict:
        return {
            "n_values": list(self.n_values),
            "gaps": list(self.gaps),
            "floor_estimate": self.floor_estimate,
            "analytic_reference": list(self.analytic),
            "solver": self.solver,
            "runtime_ms": list(self.runtime_ms),
        }


def _solve_point(args: tuple[CoefficientSequence, int, SolverConfig, TimedPath, int]):
    seq, n, cfg, point, seed = args
    estimate = solve(seq.at(n), cfg.with_start(point), seed=seed)
    return estimate.value, estimate.runtime_ms


def _check_preconditions(
    seq: CoefficientSequence, test_set: CompactTestSet, n_values, seed: int
) -> None:
    """Shared linear growth, and terminals within their declared bound on the probes.

    Terminals without a declared bound only need finite values there.
    """
    limit = seq.at(0)
    probes = make_probes(limit, bound=test_set.bound, seed=seed)
    validate_shared_growth(seq, n_values, probes).require()
    paths = [p.path for p in probes] + [p.path for p in test_set]
    for n in sorted({0, *n_values}):
        report = validate_terminal_bound(seq.at(n), paths)
        violated = report.declared is not None and not report.passed
        if violated or not np.isfinite(report.estimate):
            raise ValidationRefusal(
                "terminal_bound",
                f"member {n}: terminal reaches {report.estimate:.6g}, declared {report.declared}",
                n=n,
                estimate=report.estimate,
            )


def run_stability(
    seq: CoefficientSequence,
    test_set: CompactTestSet,
    cfg: SolverConfig,
    n_values=N_VALUES,
    seed: int = 0,
    threads: int = 1,
) -> StabilityReport:
    """Solve every member at every test point with one solver config.

    The floor is sup |v⁰(2N) − v⁰(N)| over the test set: member 0 re-solved
    at doubled steps.
    """
    logger = get_logger(**_LOG_STABILITY)
    tic = time.perf_counter()
    n_values = tuple(int(n) for n in n_values)
    if not n_values or min(n_values) < 1:
        raise PathDomainError(f"n_values must be positive integers, got {n_values}")
    limit = seq.at(0)
    if abs(test_set.horizon - limit.horizon_T) > 1e-12:
        raise PathDomainError(
            f"test set horizon {test_set.horizon} != coefficient horizon {limit.horizon_T}"
        )
    try:
        _check_preconditions(seq, test_set, n_values, seed)
    except ValidationRefusal as e:
        logger.error(f"stability refused for {seq.name}: {e}")
        raise

    points = list(test_set)
    doubled = cfg.with_steps(2 * cfg.steps)
    jobs = [(seq, 0, cfg, p, seed) for p in points]
    jobs += [(seq, 0, doubled, p, seed) for p in points]
    jobs += [(seq, n, cfg, p, seed) for n in n_values for p in points]
    logger.info(
        f"stability of {seq.name}: n={list(n_values)}, {len(points)} test points, "
        f"mode={cfg.mode}, N={cfg.steps}, {len(jobs)} solves, threads={threads}"
    )
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as executor:
            results = list(tqdm(executor.map(_solve_point, jobs), total=len(jobs), desc="Solving..."))
    else:
        results = [_solve_point(j) for j in jobs]

    size = len(points)
    values = np.array([r[0] for r in results]).reshape(-1, size)
    times = np.array([r[1] for r in results]).reshape(-1, size)
    limit_values, fine_values, member_values = values[0], values[1], values[2:]
    gaps = np.abs(member_values - limit_values).max(axis=1)
    floor = float(np.abs(fine_values - limit_values).max())
    span = test_set.horizon - test_set.t_min
    analytic = tuple(sequence_analytic_gap(seq, n, span) for n in n_values)

    report = StabilityReport(
        n_values=n_values,
        gaps=tuple(float(g) for g in gaps),
        floor_estimate=floor,
        solver=cfg.to_json(),
        runtime_ms=tuple(float(t) for t in times[2:].sum(axis=1)),
        analytic=analytic,
        values=tuple(tuple(float(v) for v in row) for row in member_values),
        limit_values=tuple(float(v) for v in limit_values),
    )
    elapsed = 1000.0 * (time.perf_counter() - tic)
    logger.info(
        f"stability done: gaps={[f'{g:.3g}' for g in report.gaps]}, floor={floor:.3g}, {elapsed:.1f} ms"
    )
    return report
