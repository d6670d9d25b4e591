from icecream import ic

from pathhjb.coefficients import CoefficientField
from pathhjb.lab import FDGrid, fd_oracle_markovian
from pathhjb.paths import SampledPath, TimedPath
from pathhjb.solver import SolverConfig, solve_markovian


def check_cross_oracle(c: CoefficientField, cfg: SolverConfig, x0: float = 0.0, grid: FDGrid | None = None) -> dict:
    """Lattice and finite-difference values at (0, x0) side by side."""
    start = TimedPath(0.0, SampledPath.constant([x0], c.horizon_T))
    lattice = solve_markovian(c, cfg.with_start(start)).value
    grid = FDGrid(cfg.state_grid.dx, cfg.state_grid.lower, cfg.state_grid.upper) if grid is None else grid
    fd = fd_oracle_markovian(c, grid_spec=grid, control_res=cfg.control_res).at(0.0, x0)
    rel = abs(lattice - fd) / max(abs(fd), 1e-300)
    ic(c.name, lattice, fd, rel)
    return {"lattice": lattice, "fd": fd, "rel_diff": rel}
