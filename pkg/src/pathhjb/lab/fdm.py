"""Explicit finite differences for w_t + sup_f [b w_x + ½σ² w_xx] = 0, an oracle for the lattice.

Upwinded first derivative, central second derivative, linear extrapolation
at both ends. The step respects Δt ≤ Δx² / (σ²max + |b|max Δx), which keeps
every stencil weight nonnegative.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import pandas as pd
from rose import get_logger
from scipy.interpolate import RectBivariateSpline

from pathhjb.coefficients import CoefficientField
from pathhjb.errors import NumericError, PathDomainError, ValidationRefusal
from pathhjb.hamiltonian import CylindricalTestFunction, ppde_residual
from pathhjb.paths import TimedPath

_LOG_FDM = {
    "name": "fdm",
    "file": "pathhjb.log",
    "level": logging.INFO,
}

# coefficient bounds for the CFL step are sampled at this many times
CFL_TIMES = 5


@dataclass(frozen=True)
class FDGrid:
    dx: float = 0.02
    lower: float = -6.0
    upper: float = 6.0
    steps: int | None = None
    rows: int = 201

    def __post_init__(self):
        if self.dx <= 0 or self.lower >= self.upper:
            raise PathDomainError(f"needs dx > 0 and lower < upper, got {self}")
        if self.rows < 2:
            raise PathDomainError(f"need at least 2 stored rows, got {self.rows}")

    @property
    def states(self) -> np.ndarray:
        count = int(round((self.upper - self.lower) / self.dx)) + 1
        return self.lower + np.arange(count) * self.dx


@dataclass(frozen=True, eq=False)
class ValueTable:
    """w on a (t, x) grid; ``values[i, j]`` = w(times[i], states[j]), times ascending."""

    times: np.ndarray
    states: np.ndarray
    values: np.ndarray

    @cached_property
    def spline(self) -> RectBivariateSpline:
        kx = min(3, self.times.size - 1)
        ky = min(3, self.states.size - 1)
        return RectBivariateSpline(self.times, self.states, self.values, kx=kx, ky=ky)

    def at(self, t: float, x: float) -> float:
        return float(self.spline.ev(t, x))

    def to_frame(self) -> pd.DataFrame:
        tt, xx = np.meshgrid(self.times, self.states, indexing="ij")
        return pd.DataFrame({"t": tt.ravel(), "x": xx.ravel(), "value": self.values.ravel()})

    def interpolant(self) -> CylindricalTestFunction:
        """The spline as a test function of (t, ω(T ∧ t))."""
        spline = self.spline
        horizon = float(self.times[-1])
        return CylindricalTestFunction.from_callables(
            (horizon,),
            lambda t, X: float(spline.ev(t, X[0, 0])),
            dg_dt=lambda t, X: float(spline.ev(t, X[0, 0], dx=1)),
            grad_x=lambda t, X: np.full((1, 1), spline.ev(t, X[0, 0], dy=1)),
            hess_x=lambda t, X: np.full((1, 1, 1, 1), spline.ev(t, X[0, 0], dy=2)),
            name="fd_interpolant",
        )


def _coefficient_bounds(c: CoefficientField, controls: np.ndarray, X: np.ndarray) -> tuple[float, float]:
    view = c.markov
    b_max = s2_max = 0.0
    for t in np.linspace(0.0, c.horizon_T, CFL_TIMES):
        for f in controls:
            b = np.broadcast_to(view.b(f, t, X), X.shape)
            s = np.broadcast_to(view.sigma(f, t, X), X.shape)
            b_max = max(b_max, float(np.abs(b).max()))
            s2_max = max(s2_max, float((s * s).max()))
    return b_max, s2_max


def _hamiltonian(view, controls, t, X, w, dx) -> np.ndarray:
    forward = (w[2:] - w[1:-1]) / dx
    backward = (w[1:-1] - w[:-2]) / dx
    second = (w[2:] - 2.0 * w[1:-1] + w[:-2]) / (dx * dx)
    best = np.full(X.size, -np.inf)
    for f in controls:
        b = np.broadcast_to(view.b(f, t, X), X.shape)
        s = np.broadcast_to(view.sigma(f, t, X), X.shape)
        h = np.maximum(b, 0.0) * forward + np.minimum(b, 0.0) * backward + 0.5 * s * s * second
        best = np.maximum(best, h)
    return best


def fd_oracle_markovian(
    c: CoefficientField,
    psi_state: Callable[[np.ndarray], np.ndarray] | None = None,
    grid_spec: FDGrid | None = None,
    control_res: int = 3,
) -> ValueTable:
    """Backward explicit sweep from w(T, ·) = ψ_state; ``grid_spec.steps`` is reduced to CFL if needed."""
    logger = get_logger(**_LOG_FDM)
    tic = time.perf_counter()
    if not c.markovian_flag:
        raise ValidationRefusal("markovian", f"{c.name} depends on more than the current state")
    if c.dim != 1 or c.noise_dim != 1:
        raise PathDomainError(f"the finite-difference oracle is one-dimensional, got d={c.dim}")
    grid_spec = FDGrid() if grid_spec is None else grid_spec
    view = c.markov
    psi_state = view.psi if psi_state is None else psi_state
    T, dx = c.horizon_T, grid_spec.dx
    X = grid_spec.states
    controls = c.grid(control_res).coords

    b_max, s2_max = _coefficient_bounds(c, controls, X)
    rate = s2_max + b_max * dx
    cfl_steps = int(np.ceil(T * rate / (dx * dx))) if rate > 0 else 1
    steps = cfl_steps if grid_spec.steps is None else grid_spec.steps
    if steps < cfl_steps:
        logger.warning(f"CFL: {steps} steps give dt={T / steps:.3g}, reduced to {cfl_steps} steps")
        steps = cfl_steps
    dt = T / steps
    stride = max(1, int(np.ceil(steps / (grid_spec.rows - 1))))
    logger.info(
        f"fd oracle for {c.name}: {X.size} states, {steps} steps (dt={dt:.3g}), "
        f"{len(controls)} controls, |b|max={b_max:.3g}, σ²max={s2_max:.3g}"
    )

    w = np.asarray(psi_state(X), dtype=float)
    rows, times = [w], [T]
    interior = X[1:-1]
    for k in range(steps - 1, -1, -1):
        t = k * dt
        new = w.copy()
        new[1:-1] = w[1:-1] + dt * _hamiltonian(view, controls, t, interior, w, dx)
        new[0] = 2.0 * new[1] - new[2]
        new[-1] = 2.0 * new[-2] - new[-3]
        if not np.all(np.isfinite(new)):
            bad = int(np.argmax(~np.isfinite(new)))
            raise NumericError(f"fd grid point x={X[bad]:.6g}, t={t:.6g}")
        w = new
        if k % stride == 0:
            rows.append(w)
            times.append(t)

    table = ValueTable(np.array(times[::-1]), X, np.vstack(rows[::-1]))
    logger.info(f"fd oracle done: w(0, ·) stored with {len(times)} rows, {1000.0 * (time.perf_counter() - tic):.1f} ms")
    return table


# =========================
# RESIDUAL
# =========================


@dataclass(frozen=True)
class ResidualStats:
    max_abs: float
    mean_abs: float
    count: int
    worst: dict

    def to_json(self) -> dict:
        return {
            "max_abs": self.max_abs,
            "mean_abs": self.mean_abs,
            "count": self.count,
            "worst": self.worst,
        }


def residual_probe(
    c: CoefficientField,
    v_interp: CylindricalTestFunction,
    probe_points: list[TimedPath],
    grid_res: int = 5,
) -> ResidualStats:
    """|∂_t v + G(t, ω, ∂_ω v, ∂²_ω v)| of an interpolant at interior probes."""
    if not c.markovian_flag:
        raise ValidationRefusal("markovian", f"{c.name} depends on more than the current state")
    if not probe_points:
        raise PathDomainError("no probe points")
    residuals = np.array([abs(ppde_residual(c, v_interp, p, grid_res)) for p in probe_points])
    worst = int(np.argmax(residuals))
    stats = ResidualStats(
        float(residuals.max()),
        float(residuals.mean()),
        len(probe_points),
        {"t": probe_points[worst].t, "x": float(probe_points[worst].state[0])},
    )
    logger = get_logger(**_LOG_FDM)
    logger.info(
        f"residual of {v_interp.name} on {c.name}: max={stats.max_abs:.3g}, "
        f"mean={stats.mean_abs:.3g} over {stats.count} probes"
    )
    return stats
