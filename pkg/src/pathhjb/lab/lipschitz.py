"""Empirical Lipschitz constant of the value function under the metric d."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd
from rose import block_rng, get_logger
from tqdm import tqdm

from pathhjb.coefficients import (
    CoefficientField,
    make_pairs,
    validate_path_lipschitz,
    validate_terminal_lipschitz,
)
from pathhjb.errors import PathDomainError, ValidationRefusal
from pathhjb.paths import SampledPath, TimedPath, metric_d
from pathhjb.sampling import sample_paths
from pathhjb.solver import SolverConfig, solve

_LOG_LIPSCHITZ = {
    "name": "lipschitz",
    "file": "pathhjb.log",
    "level": logging.INFO,
}

DEGENERATE_TOL = 1e-9
SAFETY = 2.0
PAIR_MODES = ("time", "path", "both")


def lipschitz_budget(c: CoefficientField, horizon: float | None = None, safety: float = SAFETY) -> float:
    """L_ψ · (1 + 2C(1 + √T)) · exp((L + L²/2) T) · safety, from declared constants.

    C is the linear-growth constant, L the path-Lipschitz constant of (b, σ),
    L_ψ that of the terminal.
    """
    T = c.horizon_T if horizon is None else horizon
    L_psi, L, C = c.terminal_lipschitz, c.lipschitz_C, c.growth_C
    if L_psi is None:
        raise ValidationRefusal("terminal_lipschitz", f"{c.name} declares no terminal Lipschitz constant")
    if L is None:
        raise ValidationRefusal("path_lipschitz", f"{c.name} declares no path-Lipschitz constant")
    budget = safety * L_psi * (1.0 + 2.0 * C * (1.0 + np.sqrt(T))) * np.exp((L + 0.5 * L * L) * T)
    logger = get_logger(**_LOG_LIPSCHITZ)
    logger.info(
        f"L_budget = {safety} * {L_psi} * (1 + 2*{C:.6g}*(1 + sqrt({T}))) * "
        f"exp(({L:.6g} + {L:.6g}^2/2)*{T}) = {budget:.6g}"
    )
    return float(budget)


def sample_pairs(
    count: int,
    bound: float,
    horizon: float,
    seed: int = 0,
    modes: tuple[str, ...] = PAIR_MODES,
    dim: int = 1,
) -> list[tuple[TimedPath, TimedPath]]:
    """Seeded pairs cycling through ``modes``.

    ``time`` keeps the path and moves t, ``path`` keeps t and shifts the path
    (or draws an independent one), ``both`` changes everything.
    """
    unknown = set(modes) - set(PAIR_MODES)
    if unknown:
        raise PathDomainError(f"unknown pair modes {sorted(unknown)}")
    rng = block_rng(4, seed)
    firsts = sample_paths(rng, count, horizon, bound, dim=dim)
    seconds = sample_paths(rng, count, horizon, bound, dim=dim)
    pairs = []
    for i, (first, second) in enumerate(zip(firsts, seconds)):
        t, s = (float(u) for u in rng.uniform(0.0, horizon, size=2))
        match modes[i % len(modes)]:
            case "time":
                second = first
            case "path":
                if i % 2 == 0:
                    shifted = first.values + rng.uniform(-0.25, 0.25, size=dim)
                    second = SampledPath(first.grid, np.clip(shifted, -bound, bound))
                s = t
        pairs.append((TimedPath(t, first), TimedPath(s, second)))
    return pairs


# =========================
# EXPERIMENT
# =========================


@dataclass(frozen=True)
class LipschitzPair:
    a: TimedPath
    b: TimedPath
    distance: float
    value_a: float
    value_b: float

    @property
    def ratio(self) -> float:
        return abs(self.value_a - self.value_b) / self.distance


@dataclass(frozen=True)
class LipschitzReport:
    pairs: tuple[LipschitzPair, ...]
    max_ratio: float
    horizon: float
    skipped: int
    L_budget: float
    solver: dict

    @property
    def passed(self) -> bool:
        return self.max_ratio <= self.L_budget

    @property
    def ratios(self) -> np.ndarray:
        return np.array([p.ratio for p in self.pairs])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "t_a": [p.a.t for p in self.pairs],
                "t_b": [p.b.t for p in self.pairs],
                "distance": [p.distance for p in self.pairs],
                "value_a": [p.value_a for p in self.pairs],
                "value_b": [p.value_b for p in self.pairs],
                "ratio": [p.ratio for p in self.pairs],
            }
        )

    def to_json(self) -> dict:
        return {
            "max_ratio": self.max_ratio,
            "L_budget": self.L_budget,
            "passed": self.passed,
            "pairs": len(self.pairs),
            "skipped": self.skipped,
            "horizon": self.horizon,
            "solver": self.solver,
        }


def _solve_at(args: tuple[CoefficientField, SolverConfig, int]) -> float:
    c, cfg, seed = args
    return solve(c, cfg, seed=seed).value


def _check_preconditions(c: CoefficientField, seed: int) -> None:
    pairs = make_pairs(c, seed=seed)
    validate_path_lipschitz(c, pairs).require()
    validate_terminal_lipschitz(c, [(probe.path, other) for probe, other in pairs]).require()


def run_lipschitz(
    c: CoefficientField,
    pairs: list[tuple[TimedPath, TimedPath]],
    cfg: SolverConfig,
    seed: int = 0,
    threads: int = 1,
    L_budget: float | None = None,
) -> LipschitzReport:
    """|v(t, ω) − v(s, α)| / d over the pairs with d > 1e-9; the rest are skipped."""
    logger = get_logger(**_LOG_LIPSCHITZ)
    tic = time.perf_counter()
    try:
        _check_preconditions(c, seed)
    except ValidationRefusal as e:
        logger.error(f"lipschitz refused for {c.name}: {e}")
        raise
    budget = lipschitz_budget(c) if L_budget is None else float(L_budget)
    horizon = c.horizon_T if cfg.horizon is None else cfg.horizon

    kept, distances = [], []
    for a, b in pairs:
        d = metric_d(a, b, horizon)
        if d > DEGENERATE_TOL:
            kept.append((a, b))
            distances.append(d)
    skipped = len(pairs) - len(kept)
    if skipped:
        logger.info(f"skipped {skipped} degenerate pairs (d <= {DEGENERATE_TOL})")
    if not kept:
        raise PathDomainError("every pair is degenerate")

    jobs = [(c, cfg.with_start(p), seed) for pair in kept for p in pair]
    logger.info(f"lipschitz of {c.name}: {len(kept)} pairs, mode={cfg.mode}, N={cfg.steps}")
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as executor:
            values = list(tqdm(executor.map(_solve_at, jobs), total=len(jobs), desc="Solving..."))
    else:
        values = [_solve_at(j) for j in jobs]

    results = tuple(
        LipschitzPair(a, b, d, values[2 * i], values[2 * i + 1])
        for i, ((a, b), d) in enumerate(zip(kept, distances))
    )
    max_ratio = float(max(p.ratio for p in results))
    report = LipschitzReport(results, max_ratio, horizon, skipped, budget, cfg.to_json())
    elapsed = 1000.0 * (time.perf_counter() - tic)
    level = logging.INFO if report.passed else logging.WARNING
    logger.log(level, f"max ratio {max_ratio:.6g} vs L_budget {budget:.6g}, {elapsed:.1f} ms")
    return report
