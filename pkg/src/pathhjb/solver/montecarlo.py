"""Monte Carlo lower bound: best sample mean over a finite family of feedback policies.

All policies see the same Gaussian shocks (common random numbers). Paths are
simulated in blocks of ``BLOCK_SIZE``; block i draws from
``rose.block_rng(i, seed)``, so results do not depend on the worker count.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from rose import batch_generator, block_rng, get_logger
from tqdm import tqdm

from pathhjb.coefficients.field import CoefficientField, ControlGrid
from pathhjb.errors import ConfigError, NumericError, PathDomainError
from pathhjb.paths import KNOT_TOL, SampledPath, TimedPath
from pathhjb.solver.config import SolverConfig, ValueEstimate
from pathhjb.solver.tree import root_path, schedule

_LOG_MONTECARLO = {
    "name": "montecarlo",
    "file": "pathhjb.log",
    "level": logging.INFO,
}

BLOCK_SIZE = 512

# =========================
# POLICIES
# =========================


@dataclass(frozen=True)
class ConstantPolicy:
    index: int
    kind: str = "constant"

    def __call__(self, t: float, x: np.ndarray, running_max: np.ndarray) -> np.ndarray:
        return np.full(x.shape[0], self.index, dtype=int)

    def describe(self, grid: ControlGrid) -> dict:
        return {"kind": self.kind, "control": grid.coords[self.index].tolist()}


@dataclass(frozen=True)
class StateThreshold:
    """``low`` while ω(t) ≤ θ, ``high`` above (first coordinate)."""

    theta: float
    low: int
    high: int
    kind: str = "state_threshold"

    def statistic(self, x: np.ndarray, running_max: np.ndarray) -> np.ndarray:
        return x[:, 0]

    def __call__(self, t: float, x: np.ndarray, running_max: np.ndarray) -> np.ndarray:
        return np.where(self.statistic(x, running_max) <= self.theta, self.low, self.high)

    def describe(self, grid: ControlGrid) -> dict:
        return {
            "kind": self.kind,
            "theta": self.theta,
            "low": grid.coords[self.low].tolist(),
            "high": grid.coords[self.high].tolist(),
        }


@dataclass(frozen=True)
class RunningMaxThreshold(StateThreshold):
    """``low`` while max_{s ≤ t} ω(s) ≤ θ, ``high`` above."""

    kind: str = "running_max_threshold"

    def statistic(self, x: np.ndarray, running_max: np.ndarray) -> np.ndarray:
        return running_max[:, 0]


def _grid_index(grid: ControlGrid, coords, where: str) -> int:
    coords = np.atleast_1d(np.asarray(coords, dtype=float))
    if coords.shape != (grid.action_dim,):
        raise ConfigError(where, f"expected {grid.action_dim} coordinates, got {coords.tolist()}")
    return int(np.argmin(np.linalg.norm(grid.coords - coords, axis=1)))


def make_policies(specs, grid: ControlGrid) -> list:
    """Expand policy specs into concrete policies, in spec order.

    ``{"kind": "constant"}`` gives one policy per grid action (or the one at
    ``control``); threshold kinds take ``theta`` (number or list) and the
    ``low``/``high`` actions (default: the first and last grid points).
    """
    policies = []
    for i, spec in enumerate(specs):
        where = f"solver.policies[{i}]"
        kind = spec.get("kind")
        if kind == "constant":
            if "control" in spec:
                policies.append(ConstantPolicy(_grid_index(grid, spec["control"], where)))
            else:
                policies.extend(ConstantPolicy(j) for j in range(len(grid)))
        elif kind in ("state_threshold", "running_max_threshold"):
            cls = StateThreshold if kind == "state_threshold" else RunningMaxThreshold
            low = _grid_index(grid, spec["low"], where) if "low" in spec else 0
            high = _grid_index(grid, spec["high"], where) if "high" in spec else len(grid) - 1
            for theta in np.atleast_1d(spec.get("theta", 0.0)):
                policies.append(cls(float(theta), low, high))
        else:
            raise ConfigError(f"{where}.kind", f"unknown policy {kind!r}")
    return policies


# =========================
# SIMULATION
# =========================


@dataclass(frozen=True)
class _Block:
    c: CoefficientField
    grid: ControlGrid
    policies: tuple
    start: TimedPath
    times: np.ndarray
    seed: int


def _simulate(job: _Block, block: int, size: int) -> np.ndarray:
    """Payoffs of shape (policies, size) for one block."""
    c, times = job.c, job.times
    steps = times.size - 1
    dt = float(times[1] - times[0])
    # 所有策略共用同一批冲击
    rng = block_rng(block, job.seed)
    shocks = rng.standard_normal((steps, size, c.noise_dim))
    head = root_path(job.start)
    x0 = head.values[-1]
    max0 = head.running_max(job.start.t)
    markov = c.markov if c.dim == 1 else None

    payoffs = np.empty((len(job.policies), size))
    for p, policy in enumerate(job.policies):
        hist = np.empty((size, steps + 1, c.dim))
        hist[:, 0] = x0
        running = np.tile(max0, (size, 1))
        for k in range(steps):
            t, x = float(times[k]), hist[:, k]
            idx = policy(t, x, running)
            drift = np.empty_like(x)
            vol = np.empty((size, c.dim, c.noise_dim))
            for j in np.unique(idx):
                rows = np.flatnonzero(idx == j)
                f = job.grid.coords[j]
                if markov is not None:
                    drift[rows, 0] = np.broadcast_to(markov.b(f, t, x[rows, 0]), rows.shape)
                    vol[rows, 0, 0] = np.broadcast_to(markov.sigma(f, t, x[rows, 0]), rows.shape)
                else:
                    for r in rows:
                        path = _prefix(head, times[: k + 1], hist[r, : k + 1])
                        drift[r] = c.b(f, t, path)
                        vol[r] = c.sigma(f, t, path)
            if not (np.all(np.isfinite(drift)) and np.all(np.isfinite(vol))):
                raise NumericError(f"monte carlo block {block}, step {k}")
            noise = np.einsum("ndr,nr->nd", vol, shocks[k]) * np.sqrt(dt)
            hist[:, k + 1] = x + drift * dt + noise
            running = np.maximum(running, hist[:, k + 1])
        if markov is not None:
            payoffs[p] = markov.psi(hist[:, -1, 0])
        else:
            payoffs[p] = [c.psi(_prefix(head, times, hist[r])) for r in range(size)]
    return payoffs


def _prefix(head: SampledPath, times: np.ndarray, values: np.ndarray) -> SampledPath:
    grid = np.concatenate([head.grid[:-1], times])
    return SampledPath._trusted(grid, np.concatenate([head.values[:-1], values]))


def _run_block(args: tuple[_Block, int, int]) -> np.ndarray:
    return _simulate(*args)


def solve_montecarlo(
    c: CoefficientField,
    cfg: SolverConfig,
    policy_class: list | None = None,
    n_paths: int | None = None,
    seed: int = 0,
    threads: int = 1,
) -> ValueEstimate:
    logger = get_logger(**_LOG_MONTECARLO)
    tic = time.perf_counter()
    start, sched, horizon = schedule(c, cfg)
    grid = c.grid(cfg.control_res)
    policies = make_policies(cfg.policies, grid) if policy_class is None else list(policy_class)
    if not policies:
        raise PathDomainError("the policy class is empty")
    n_paths = cfg.n_paths if n_paths is None else n_paths
    if n_paths < 2:
        raise PathDomainError(f"need at least 2 paths for a standard error, got {n_paths}")

    if horizon - start.t <= KNOT_TOL:
        value = c.psi(root_path(start))
        return ValueEstimate(float(value), 0.0, "montecarlo", 1, _ms(tic))

    job = _Block(c, grid, tuple(policies), start, sched.times, int(seed))
    sizes = [len(b) for b in batch_generator(list(range(n_paths)), BLOCK_SIZE)]
    jobs = [(job, block, size) for block, size in enumerate(sizes)]
    logger.info(
        f"monte carlo on {c.name}: {len(policies)} policies, {n_paths} paths "
        f"in {len(jobs)} blocks, seed={seed}, threads={threads}"
    )
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as executor:
            blocks = list(tqdm(executor.map(_run_block, jobs), total=len(jobs), desc="Simulating..."))
    else:
        blocks = [_run_block(j) for j in jobs]
    payoffs = np.concatenate(blocks, axis=1)

    means = payoffs.mean(axis=1)
    best = int(np.argmax(means))
    stderr = float(payoffs[best].std(ddof=1) / np.sqrt(n_paths))
    runtime = _ms(tic)
    logger.info(f"monte carlo done: value={means[best]:.12g} ± {stderr:.3g}, {runtime:.1f} ms")
    return ValueEstimate(
        float(means[best]),
        stderr,
        "montecarlo",
        n_paths * len(policies),
        runtime,
        {"policy": policies[best].describe(grid), "policies": len(policies)},
    )


def _ms(tic: float) -> float:
    return 1000.0 * (time.perf_counter() - tic)
