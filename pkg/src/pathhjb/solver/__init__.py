from pathhjb.coefficients.field import CoefficientField
from pathhjb.solver.config import (
    Quadrature,
    SolverConfig,
    StateGrid,
    ValueEstimate,
    load_solver_config,
    make_quadrature,
)
from pathhjb.solver.lattice import solve_markovian
from pathhjb.solver.montecarlo import make_policies, solve_montecarlo
from pathhjb.solver.tree import ValueTree, solve_exhaustive, solve_tree


def solve(c: CoefficientField, cfg: SolverConfig, seed: int = 0, threads: int = 1) -> ValueEstimate:
    """Dispatch on ``cfg.mode``; ``seed`` and ``threads`` only matter for Monte Carlo."""
    match cfg.mode:
        case "tree":
            return solve_tree(c, cfg)
        case "markovian":
            return solve_markovian(c, cfg)
        case "exhaustive":
            return solve_exhaustive(c, cfg)
        case "montecarlo":
            return solve_montecarlo(c, cfg, seed=seed, threads=threads)
    raise ValueError(f"Unknown mode: {cfg.mode}")


__all__ = [
    "Quadrature",
    "SolverConfig",
    "StateGrid",
    "ValueEstimate",
    "ValueTree",
    "load_solver_config",
    "make_policies",
    "make_quadrature",
    "solve",
    "solve_exhaustive",
    "solve_markovian",
    "solve_montecarlo",
    "solve_tree",
]
