"""Exact dynamic programming on the controlled, non-recombining scenario tree.

From a node holding the path prefix up to t_k, action f and shock ξ_j lead to
the child prefix extended by x + b(f, t_k, ω)Δt + σ(f, t_k, ω)√Δt ξ_j at
t_{k+1}. Actions giving the same (b, σ) at a node share their children; the
lowest grid index represents them.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from rose import get_logger

from pathhjb.coefficients.field import CoefficientField, ControlGrid, ControlPoint
from pathhjb.errors import BudgetRefusal, NumericError, PathDomainError
from pathhjb.paths import KNOT_TOL, SampledPath, TimedPath, truncate
from pathhjb.solver.config import Quadrature, SolverConfig, ValueEstimate, make_quadrature

_LOG_TREE = {
    "name": "tree",
    "file": "pathhjb.log",
    "level": logging.INFO,
}

BELLMAN_TOL = 1e-12
MAX_DIGITS = 300


@dataclass(frozen=True)
class Schedule:
    """Step times t_0 < … < t_N = T of one solve."""

    times: np.ndarray

    @property
    def steps(self) -> int:
        return self.times.size - 1

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


def schedule(c: CoefficientField, cfg: SolverConfig) -> tuple[TimedPath, Schedule, float]:
    """Start point, step times and horizon, with the domain checks every mode shares."""
    start = cfg.require_start()
    horizon = c.horizon_T if cfg.horizon is None else cfg.horizon
    if horizon > c.horizon_T + KNOT_TOL:
        raise PathDomainError(
            f"solver horizon {horizon} exceeds the coefficient horizon {c.horizon_T}"
        )
    if start.t > horizon + KNOT_TOL:
        raise PathDomainError(f"start time {start.t} is after the horizon {horizon}")
    if start.path.dim != c.dim:
        raise PathDomainError(f"start path dimension {start.path.dim} != field dimension {c.dim}")
    times = np.linspace(start.t, horizon, cfg.steps + 1)
    times[-1] = horizon
    return start, Schedule(times), horizon


def root_path(start: TimedPath) -> SampledPath:
    return truncate(start.path, start.t)


def _finite(value, where: str):
    if not np.all(np.isfinite(value)):
        raise NumericError(where)
    return value


# =========================
# NODE EXPANSION
# =========================


def distinct_controls(
    c: CoefficientField, grid: ControlGrid, t: float, path: SampledPath, where: str
) -> list[tuple[int, np.ndarray, np.ndarray]]:
    """(grid index, b, σ) for each distinct coefficient pair, lowest index first."""
    seen: dict[bytes, int] = {}
    out = []
    for i, f in enumerate(grid.coords):
        b = _finite(c.b(f, t, path), f"{where} drift f={tuple(f)}")
        s = _finite(c.sigma(f, t, path), f"{where} diffusion f={tuple(f)}")
        key = b.tobytes() + s.tobytes()
        if key not in seen:
            seen[key] = i
            out.append((i, b, s))
    return out


def children(
    path: SampledPath, b: np.ndarray, sigma: np.ndarray, t_next: float, dt: float, quad: Quadrature
) -> list[SampledPath]:
    x = path.values[-1]
    drift = x + b * dt
    root_dt = np.sqrt(dt)
    return [path.extend(t_next, drift + sigma @ xi * root_dt) for xi in quad.nodes]


def tree_nodes(branching: int, steps: int) -> int:
    if branching == 1:
        return steps + 1
    return (branching ** (steps + 1) - 1) // (branching - 1)


def node_count(branching: int, steps: int) -> float:
    """Nodes of a full tree, or inf when the count has more than MAX_DIGITS digits."""
    if branching > 1 and (steps + 1) * math.log10(branching) > MAX_DIGITS:
        return math.inf
    return tree_nodes(branching, steps)


# =========================
# VALUE TREE
# =========================


@dataclass
class TreeNode:
    level: int
    path: SampledPath
    value: float = np.nan
    argmax: ControlPoint | None = None
    # per distinct control: (grid index, child node ids)
    branches: list[tuple[int, list[int]]] = field(default_factory=list)


@dataclass
class ValueTree:
    """Every node of a solved tree, root first; ``levels[k]`` lists node ids at step k."""

    nodes: list[TreeNode]
    levels: list[list[int]]
    weights: np.ndarray
    terminal: object

    @property
    def root(self) -> TreeNode:
        return self.nodes[0]

    def check_bellman(self, tol: float = BELLMAN_TOL) -> float:
        """Largest violation of the leaf and interior-node identities."""
        worst = 0.0
        for node in self.nodes:
            if not node.branches:
                worst = max(worst, abs(node.value - float(self.terminal(node.path))))
                continue
            best = max(
                float(self.weights @ np.array([self.nodes[k].value for k in kids]))
                for _, kids in node.branches
            )
            worst = max(worst, abs(node.value - best))
        if worst > tol:
            logger = get_logger(**_LOG_TREE)
            logger.warning(f"Bellman identity violated by {worst:.3g}")
        return worst


class _Counter:
    def __init__(self, budget: int, branching: int, steps: int):
        self.budget = budget
        self.branching = branching
        self.steps = steps
        self.count = 0

    def add(self, n: int = 1) -> None:
        self.count += n
        if self.count > self.budget:
            required = max(self.count, node_count(self.branching, self.steps))
            raise BudgetRefusal("tree nodes", required, self.budget)


def solve_tree(c: CoefficientField, cfg: SolverConfig, keep_tree: bool = False) -> ValueEstimate:
    """V_N = ψ at the leaves, V_k = max over the control grid of the weighted child average."""
    logger = get_logger(**_LOG_TREE)
    tic = time.perf_counter()
    start, sched, horizon = schedule(c, cfg)
    root = root_path(start)

    if horizon - start.t <= KNOT_TOL:
        value = _finite(c.psi(root), "root terminal")
        return ValueEstimate(float(value), 0.0, "tree", 1, _ms(tic))

    quad = make_quadrature(cfg.quadrature, c.noise_dim)
    grid = c.grid(cfg.control_res)
    width = len(distinct_controls(c, grid, start.t, root, "root"))
    required = node_count(width * len(quad), sched.steps)
    if required > cfg.budget:
        logger.error(f"tree refused: {required:.6g} nodes for budget {cfg.budget}")
        raise BudgetRefusal("tree nodes", required, cfg.budget)
    logger.info(
        f"tree solve of {c.name}: N={sched.steps}, {width} distinct controls, "
        f"{len(quad)} shocks, up to {required} nodes"
    )

    counter = _Counter(cfg.budget, width * len(quad), sched.steps)
    nodes: list[TreeNode] = []
    levels: list[list[int]] = [[] for _ in range(sched.steps + 1)]
    seen = [0] * (sched.steps + 1)
    dt = sched.dt

    def visit(level: int, path: SampledPath) -> tuple[float, int | None, ControlPoint | None]:
        counter.add()
        where = f"tree node (level={level}, index={seen[level]})"
        seen[level] += 1
        node = None
        if keep_tree:
            node = TreeNode(level, path)
            levels[level].append(len(nodes))
            nodes.append(node)
        node_id = len(nodes) - 1 if keep_tree else None
        if level == sched.steps:
            value = float(_finite(c.psi(path), f"{where} terminal"))
            if node is not None:
                node.value = value
            return value, node_id, None

        t, t_next = float(sched.times[level]), float(sched.times[level + 1])
        best, best_idx = -np.inf, None
        for idx, b, s in distinct_controls(c, grid, t, path, where):
            results = [visit(level + 1, p) for p in children(path, b, s, t_next, dt, quad)]
            value = float(quad.weights @ np.array([r[0] for r in results]))
            if node is not None:
                node.branches.append((idx, [r[1] for r in results]))
            if value > best:
                best, best_idx = value, idx
        argmax = ControlPoint(tuple(grid.coords[best_idx]), grid.indices[best_idx])
        if node is not None:
            node.value, node.argmax = best, argmax
        return best, node_id, argmax

    value, _, argmax = visit(0, root)
    tree = ValueTree(nodes, levels, quad.weights, c.terminal) if keep_tree else None
    runtime = _ms(tic)
    logger.info(f"tree solve done: value={value:.12g}, nodes={counter.count}, {runtime:.1f} ms")
    return ValueEstimate(
        value,
        0.0,
        "tree",
        counter.count,
        runtime,
        {"root_control": argmax.to_json()},
        tree=tree,
    )


# =========================
# EXHAUSTIVE ORACLE
# =========================


def strategy_count(controls: int, shocks: int, steps: int) -> float:
    """controls ** (decision nodes), counted in log space; inf past MAX_DIGITS digits."""
    if controls == 1:
        return 1
    decisions = node_count(shocks, steps - 1)
    if decisions * math.log10(controls) > MAX_DIGITS:
        return math.inf
    return controls**decisions


def solve_exhaustive(c: CoefficientField, cfg: SolverConfig) -> ValueEstimate:
    """Enumerate every feedback strategy (a grid action per decision node) and take the best."""
    logger = get_logger(**_LOG_TREE)
    tic = time.perf_counter()
    start, sched, horizon = schedule(c, cfg)
    root = root_path(start)
    if horizon - start.t <= KNOT_TOL:
        return ValueEstimate(float(_finite(c.psi(root), "root terminal")), 0.0, "exhaustive", 1, _ms(tic))

    quad = make_quadrature(cfg.quadrature, c.noise_dim)
    grid = c.grid(cfg.control_res)
    Q, G, N = len(quad), len(grid), sched.steps
    required = strategy_count(G, Q, N)
    if required > cfg.strategy_budget:
        logger.error(f"exhaustive refused: {required:.6g} strategies for budget {cfg.strategy_budget}")
        raise BudgetRefusal("feedback strategies", required, cfg.strategy_budget)
    histories = [h for k in range(N) for h in itertools.product(range(Q), repeat=k)]
    decision = {h: i for i, h in enumerate(histories)}
    logger.info(f"exhaustive solve of {c.name}: {required} strategies over {len(histories)} nodes")

    dt = sched.dt
    root_dt = np.sqrt(dt)
    cache: dict[tuple, SampledPath] = {((), ()): root}
    payoff: dict[tuple, float] = {}

    def prefix(hist: tuple, ctrls: tuple) -> SampledPath:
        key = (hist, ctrls)
        if key not in cache:
            parent = prefix(hist[:-1], ctrls[:-1])
            k = len(hist) - 1
            t = float(sched.times[k])
            f = grid.coords[ctrls[-1]]
            where = f"exhaustive node (level={k}, history={hist[:-1]})"
            b = _finite(c.b(f, t, parent), f"{where} drift")
            s = _finite(c.sigma(f, t, parent), f"{where} diffusion")
            x = parent.values[-1] + b * dt + s @ quad.nodes[hist[-1]] * root_dt
            cache[key] = parent.extend(float(sched.times[k + 1]), x)
        return cache[key]

    leaves = list(itertools.product(range(Q), repeat=N))
    leaf_weights = [float(np.prod(quad.weights[list(h)])) for h in leaves]
    best, best_strategy = -np.inf, None
    for strategy in itertools.product(range(G), repeat=len(histories)):
        total = 0.0
        for hist, w in zip(leaves, leaf_weights):
            ctrls = tuple(strategy[decision[hist[:k]]] for k in range(N))
            key = (hist, ctrls)
            if key not in payoff:
                payoff[key] = float(_finite(c.psi(prefix(hist, ctrls)), f"exhaustive leaf {hist}"))
            total += w * payoff[key]
        if total > best:
            best, best_strategy = total, strategy

    runtime = _ms(tic)
    logger.info(f"exhaustive solve done: value={best:.12g}, {runtime:.1f} ms")
    root_f = grid.points()[best_strategy[0]]
    return ValueEstimate(
        best, 0.0, "exhaustive", len(cache), runtime, {"root_control": root_f.to_json()}
    )


def _ms(tic: float) -> float:
    return 1000.0 * (time.perf_counter() - tic)
