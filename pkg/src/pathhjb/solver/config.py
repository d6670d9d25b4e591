"""Solver configuration, quadrature rules and the value estimate record."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, fields, replace

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from rose import get_logger

from pathhjb.errors import ConfigError, PathDomainError
from pathhjb.paths import TimedPath

_LOG_CONFIG = {
    "name": "solver",
    "file": "pathhjb.log",
    "level": logging.INFO,
}

MODES = ("tree", "markovian", "montecarlo", "exhaustive")
MOMENT_TOL = 1e-12
TREE_BUDGET = 2_000_000
STRATEGY_BUDGET = 1_000_000

# =========================
# QUADRATURE
# =========================


@dataclass(frozen=True, eq=False)
class Quadrature:
    """Shocks ξ_j in R^r with weights w_j: Σw = 1, Σwξ = 0, Σwξξ* = I."""

    nodes: np.ndarray
    weights: np.ndarray
    name: str

    def __len__(self) -> int:
        return int(self.weights.size)

    @property
    def noise_dim(self) -> int:
        return int(self.nodes.shape[1])

    def moment_error(self) -> float:
        w, xi = self.weights, self.nodes
        return float(
            max(
                abs(w.sum() - 1.0),
                np.abs(w @ xi).max(),
                np.abs((xi * w[:, None]).T @ xi - np.eye(self.noise_dim)).max(),
            )
        )


def make_quadrature(name: str, noise_dim: int = 1) -> Quadrature:
    """``binary`` (±1 per axis) or ``gauss_hermite:<k>``; product rule over noise axes.

    Nodes are ordered lexicographically by shock.
    """
    if name == "binary":
        axis_nodes, axis_weights = np.array([-1.0, 1.0]), np.array([0.5, 0.5])
    elif name.startswith("gauss_hermite:"):
        try:
            k = int(name.split(":", 1)[1])
        except ValueError as e:
            raise ConfigError("solver.quadrature", f"bad node count in {name!r}") from e
        if k < 2:
            raise ConfigError("solver.quadrature", f"need at least 2 nodes, got {k}")
        axis_nodes, axis_weights = hermegauss(k)
        axis_weights = axis_weights / axis_weights.sum()
    else:
        raise ConfigError("solver.quadrature", f"unknown quadrature {name!r}")

    combos = list(itertools.product(range(axis_nodes.size), repeat=noise_dim))
    nodes = np.array([[axis_nodes[i] for i in combo] for combo in combos])
    weights = np.array([np.prod([axis_weights[i] for i in combo]) for combo in combos])
    quad = Quadrature(nodes, weights, name)
    err = quad.moment_error()
    if err > MOMENT_TOL:
        raise ConfigError("solver.quadrature", f"{name} misses the moment conditions by {err:.3g}")
    return quad


# =========================
# CONFIG
# =========================


@dataclass(frozen=True)
class StateGrid:
    dx: float = 0.02
    lower: float = -6.0
    upper: float = 6.0


@dataclass(frozen=True)
class SolverConfig:
    mode: str
    steps: int
    quadrature: str = "binary"
    control_res: int | tuple[int, ...] = 3
    horizon: float | None = None
    budget: int = TREE_BUDGET
    strategy_budget: int = STRATEGY_BUDGET
    state_grid: StateGrid = field(default_factory=StateGrid)
    n_paths: int = 4096
    policies: tuple = ({"kind": "constant"},)
    start: TimedPath | None = None

    def with_start(self, start: TimedPath) -> "SolverConfig":
        return replace(self, start=start)

    def with_steps(self, steps: int) -> "SolverConfig":
        return replace(self, steps=steps)

    def require_start(self) -> TimedPath:
        if self.start is None:
            raise PathDomainError("solver config has no start point")
        return self.start

    def to_json(self) -> dict:
        """The numeric content of the config (start point excluded)."""
        return {
            "mode": self.mode,
            "steps": self.steps,
            "quadrature": self.quadrature,
            "control_res": np.atleast_1d(self.control_res).tolist(),
            "horizon": self.horizon,
            "budget": self.budget,
            "strategy_budget": self.strategy_budget,
            "state_grid": {
                "dx": self.state_grid.dx,
                "lower": self.state_grid.lower,
                "upper": self.state_grid.upper,
            },
            "n_paths": self.n_paths,
            "policies": list(self.policies),
        }


def _positive_int(raw: dict, key: str, where: str) -> int:
    value = raw[key]
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(f"{where}.{key}", f"must be a positive integer, got {value!r}")
    return value


def load_solver_config(raw: dict, where: str = "solver") -> SolverConfig:
    if not isinstance(raw, dict):
        raise ConfigError(where, "expected an object")
    raw = dict(raw)
    for key in ("mode", "steps"):
        if key not in raw:
            raise ConfigError(f"{where}.{key}", "missing")
    if raw["mode"] not in MODES:
        raise ConfigError(f"{where}.mode", f"expected one of {MODES}, got {raw['mode']!r}")
    raw["steps"] = _positive_int(raw, "steps", where)
    for key in ("budget", "strategy_budget", "n_paths"):
        if key in raw:
            raw[key] = _positive_int(raw, key, where)

    res = raw.get("control_res", 3)
    if isinstance(res, list):
        res = tuple(res)
    if any(isinstance(r, bool) or not isinstance(r, int) or r < 1 for r in np.atleast_1d(res)):
        raise ConfigError(f"{where}.control_res", f"must be positive integers, got {res!r}")
    raw["control_res"] = res

    if "quadrature" in raw:
        make_quadrature(raw["quadrature"])
    if raw.get("horizon") is not None:
        if float(raw["horizon"]) <= 0:
            raise ConfigError(f"{where}.horizon", "must be positive")
        raw["horizon"] = float(raw["horizon"])

    grid_raw = raw.get("state_grid", {})
    try:
        grid = StateGrid(**{k: float(v) for k, v in grid_raw.items()})
    except TypeError as e:
        raise ConfigError(f"{where}.state_grid", str(e)) from e
    if grid.dx <= 0 or grid.lower >= grid.upper:
        raise ConfigError(f"{where}.state_grid", f"needs dx > 0 and lower < upper, got {grid}")
    raw["state_grid"] = grid

    if "policies" in raw:
        if not isinstance(raw["policies"], list):
            raise ConfigError(f"{where}.policies", "expected a list")
        raw["policies"] = tuple(raw["policies"])

    valid = {f.name for f in fields(SolverConfig)} - {"start"}
    unknown = sorted(set(raw) - valid)
    if unknown:
        logger = get_logger(**_LOG_CONFIG)
        logger.warning(f"ignoring unknown {where} keys {unknown}")
    return SolverConfig(**{k: v for k, v in raw.items() if k in valid})


# =========================
# RESULTS
# =========================


@dataclass(frozen=True)
class ValueEstimate:
    value: float
    stderr: float
    mode: str
    nodes: int = 0
    runtime_ms: float = 0.0
    argmax_policy_summary: dict = field(default_factory=dict)
    tree: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        exact = self.mode in ("tree", "markovian", "exhaustive")
        if exact and self.stderr != 0.0:
            raise PathDomainError(f"{self.mode} estimates are exact, got stderr={self.stderr}")
        if self.stderr < 0:
            raise PathDomainError(f"stderr must be >= 0, got {self.stderr}")

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "stderr": self.stderr,
            "mode": self.mode,
            "nodes": self.nodes,
            "runtime_ms": self.runtime_ms,
            "argmax_policy_summary": self.argmax_policy_summary,
        }
