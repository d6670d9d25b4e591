"""Recombining lattice for fields that depend on the path only through its current state.

The state grid is anchored at the start state, x_j = x₀ + jΔx inside
[lower, upper]. Each step projects the one-step law (mean m = x + bΔt,
variance v = σ²Δt) onto a symmetric stencil {c − h, c, c + h} around the node
c nearest to m, with h the smallest multiple of Δx such that v + e² ≤ h²
(e = m − c). The weights match mean and variance exactly; when they would be
negative the step falls back to linear projection onto the two nodes
bracketing m. Indices are clamped at the grid edges.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np
from rose import get_logger

from pathhjb.coefficients.field import CoefficientField, ControlPoint
from pathhjb.errors import NumericError, PathDomainError, ValidationRefusal
from pathhjb.paths import KNOT_TOL
from pathhjb.solver.config import SolverConfig, StateGrid, ValueEstimate
from pathhjb.solver.tree import schedule

_LOG_LATTICE = {
    "name": "lattice",
    "file": "pathhjb.log",
    "level": logging.INFO,
}

# slack when rounding sqrt(v + e²)/Δx up to a whole number of cells
CEIL_TOL = 1e-9
# rounding noise allowed in the stencil weights
WEIGHT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class StateLattice:
    x0: float
    dx: float
    offset: int
    size: int

    @classmethod
    def anchored(cls, x0: float, grid: StateGrid) -> "StateLattice":
        if not grid.lower <= x0 <= grid.upper:
            raise PathDomainError(
                f"start state {x0} outside the state grid [{grid.lower}, {grid.upper}]"
            )
        lo = int(np.ceil((grid.lower - x0) / grid.dx - CEIL_TOL))
        hi = int(np.floor((grid.upper - x0) / grid.dx + CEIL_TOL))
        return cls(float(x0), float(grid.dx), -lo, hi - lo + 1)

    @property
    def states(self) -> np.ndarray:
        return self.x0 + (np.arange(self.size) - self.offset) * self.dx


def expectation(
    lattice: StateLattice, W: np.ndarray, mean: np.ndarray, var: np.ndarray
) -> np.ndarray:
    """E[W(X')] under the projected one-step law, per lattice node."""
    dx, last = lattice.dx, lattice.size - 1
    rel = (mean - lattice.x0) / dx + lattice.offset
    centre = np.rint(rel)
    e = (rel - centre) * dx
    spread = var + e * e
    k = np.maximum(1, np.ceil(np.sqrt(spread) / dx - CEIL_TOL))
    h = k * dx
    p_up = 0.5 * (spread / (h * h) + e / h)
    p_down = 0.5 * (spread / (h * h) - e / h)
    p_mid = 1.0 - spread / (h * h)

    ci = centre.astype(int)
    ki = k.astype(int)
    up = W[np.clip(ci + ki, 0, last)]
    mid = W[np.clip(ci, 0, last)]
    down = W[np.clip(ci - ki, 0, last)]
    three_point = p_up * up + p_mid * mid + p_down * down

    lo = np.floor(rel)
    lam = rel - lo
    li = lo.astype(int)
    two_point = (1.0 - lam) * W[np.clip(li, 0, last)] + lam * W[np.clip(li + 1, 0, last)]

    monotone = (p_down >= -WEIGHT_TOL) & (p_up >= -WEIGHT_TOL) & (p_mid >= -WEIGHT_TOL)
    return np.where(monotone, three_point, two_point)


def solve_markovian(c: CoefficientField, cfg: SolverConfig) -> ValueEstimate:
    logger = get_logger(**_LOG_LATTICE)
    tic = time.perf_counter()
    if not c.markovian_flag:
        logger.error(f"lattice refused: {c.name} is not Markovian")
        raise ValidationRefusal("markovian", f"{c.name} depends on more than the current state")
    if c.dim != 1 or c.noise_dim != 1:
        raise PathDomainError(f"the lattice is one-dimensional, got d={c.dim}, r={c.noise_dim}")
    start, sched, horizon = schedule(c, cfg)
    view = c.markov
    x0 = float(start.state[0])
    if horizon - start.t <= KNOT_TOL:
        value = float(view.psi(np.array([x0]))[0])
        return ValueEstimate(value, 0.0, "markovian", 1, _ms(tic))

    lattice = StateLattice.anchored(x0, cfg.state_grid)
    X = lattice.states
    grid = c.grid(cfg.control_res)
    dt = sched.dt
    W = _checked(view.psi(X), X, "terminal")
    logger.info(
        f"lattice solve of {c.name}: N={sched.steps}, {lattice.size} states, {len(grid)} controls"
    )
    argmax = np.zeros(lattice.size, dtype=int)
    for k in range(sched.steps - 1, -1, -1):
        t = float(sched.times[k])
        candidates = []
        for f in grid.coords:
            b = _checked(np.broadcast_to(view.b(f, t, X), X.shape), X, f"drift at t={t:.6g}")
            s = np.broadcast_to(view.sigma(f, t, X), X.shape)
            s = _checked(s, X, f"diffusion at t={t:.6g}")
            candidates.append(expectation(lattice, W, X + b * dt, s * s * dt))
        stacked = np.vstack(candidates)
        argmax = np.argmax(stacked, axis=0)
        W = stacked[argmax, np.arange(lattice.size)]

    value = float(W[lattice.offset])
    best = int(argmax[lattice.offset])
    runtime = _ms(tic)
    logger.info(f"lattice solve done: value={value:.12g}, {runtime:.1f} ms")
    root_f = ControlPoint(tuple(grid.coords[best]), grid.indices[best])
    return ValueEstimate(
        value,
        0.0,
        "markovian",
        lattice.size * (sched.steps + 1),
        runtime,
        {"root_control": root_f.to_json()},
    )


def _checked(values: np.ndarray, X: np.ndarray, what: str) -> np.ndarray:
    bad = ~np.isfinite(values)
    if np.any(bad):
        raise NumericError(f"lattice point x={X[np.argmax(bad)]:.6g} ({what})")
    return np.asarray(values, dtype=float)


def _ms(tic: float) -> float:
    return 1000.0 * (time.perf_counter() - tic)
