"""Sampled continuous paths and the path arithmetic shared by all solvers.

A path is stored as values on an ascending time grid starting at 0 and is
read with linear interpolation between knots; after the last knot it stays
constant.  Every formula below (stopping, concatenation, sup-norms and the two
distances on time-path pairs) is evaluated exactly on this representation,
because the maximum of a convex norm along a linear segment sits at a knot.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from pathhjb.errors import PathDomainError

# times closer than this are one knot; the earlier (existing) knot wins
KNOT_TOL = 1e-12


def _check_time(t: float, horizon: float, what: str = "t") -> float:
    t = float(t)
    if not np.isfinite(t) or t < -KNOT_TOL or t > horizon + KNOT_TOL:
        raise PathDomainError(f"{what}={t} outside the path horizon [0, {horizon}]")
    return min(max(t, 0.0), horizon)


@dataclass(frozen=True, eq=False)
class SampledPath:
    """A continuous path on a finite grid.

    Parameters:
        grid: strictly increasing times, first entry 0
        values: one point of R^d per grid time, shape (len(grid), d);
            a 1-d sequence is read as a path in R^1
    """

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if grid.ndim != 1 or grid.size == 0:
            raise PathDomainError("grid must be a non-empty 1-d sequence of times")
        if values.ndim != 2 or values.shape[0] != grid.size or values.shape[1] == 0:
            raise PathDomainError(
                f"values of shape {values.shape} do not match {grid.size} grid times"
            )
        if abs(grid[0]) > KNOT_TOL:
            raise PathDomainError(f"grid must start at 0, got {grid[0]}")
        if np.any(np.diff(grid) <= 0):
            raise PathDomainError("grid must be strictly increasing")
        if not (np.all(np.isfinite(grid)) and np.all(np.isfinite(values))):
            raise PathDomainError("grid and values must be finite")
        grid[0] = 0.0
        self._freeze(grid, values)

    def _freeze(self, grid: np.ndarray, values: np.ndarray) -> None:
        grid.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def _trusted(cls, grid: np.ndarray, values: np.ndarray) -> "SampledPath":
        # solvers build many paths from already-checked pieces
        path = object.__new__(cls)
        path._freeze(grid, values)
        return path

    @classmethod
    def constant(cls, x, horizon: float) -> "SampledPath":
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if horizon <= 0:
            return cls([0.0], [x])
        return cls([0.0, horizon], [x, x])

    @classmethod
    def from_json(cls, raw: dict) -> "SampledPath":
        return cls(raw["grid"], raw["values"])

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    def __len__(self) -> int:
        return int(self.grid.size)

    def at_many(self, times) -> np.ndarray:
        """Values at ``times`` (shape (m, d)), constant after the last knot."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if np.any(times < -KNOT_TOL):
            raise PathDomainError("paths are not defined before time 0")
        grid, values = self.grid, self.values
        last = grid.size - 1
        idx = np.clip(np.searchsorted(grid, times, side="right") - 1, 0, last)
        nxt = np.minimum(idx + 1, last)
        span = grid[nxt] - grid[idx]
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(span > 0, (times - grid[idx]) / span, 0.0)
        w = np.clip(w, 0.0, 1.0)
        return values[idx] + w[:, None] * (values[nxt] - values[idx])

    def at(self, t: float) -> np.ndarray:
        return self.at_many([t])[0]

    def running_max(self, t: float) -> np.ndarray:
        if t < -KNOT_TOL:
            raise PathDomainError("paths are not defined before time 0")
        inside = self.values[self.grid <= t]
        return np.maximum(inside.max(axis=0), self.at(t))

    def extend(self, t: float, x) -> "SampledPath":
        if t <= self.horizon + KNOT_TOL:
            raise PathDomainError(f"cannot append t={t} at or before horizon {self.horizon}")
        x = np.asarray(x, dtype=float).reshape(1, self.dim)
        return SampledPath._trusted(
            np.append(self.grid, float(t)), np.concatenate([self.values, x])
        )

    def equals(self, other: "SampledPath", tol: float = 0.0) -> bool:
        """Knot-for-knot equality (use ``sup_distance`` to compare as functions)."""
        return (
            self.grid.shape == other.grid.shape
            and self.values.shape == other.values.shape
            and bool(np.all(np.abs(self.grid - other.grid) <= tol))
            and bool(np.all(np.abs(self.values - other.values) <= tol))
        )

    def to_json(self) -> dict:
        return {"grid": self.grid.tolist(), "values": self.values.tolist()}


@dataclass(frozen=True, eq=False)
class TimedPath:
    """A pair (t, ω) with t inside the horizon of ω."""

    t: float
    path: SampledPath

    def __post_init__(self):
        object.__setattr__(self, "t", _check_time(self.t, self.path.horizon))

    @property
    def state(self) -> np.ndarray:
        return self.path.at(self.t)

    def stopped(self) -> SampledPath:
        return stop(self.path, self.t)

    def to_json(self) -> dict:
        return {"t": self.t, **self.path.to_json()}

    @classmethod
    def from_json(cls, raw: dict) -> "TimedPath":
        return cls(float(raw["t"]), SampledPath.from_json(raw))


def insert_knots(omega: SampledPath, times: Iterable[float]) -> SampledPath:
    """Add knots at ``times`` without changing the path as a function."""
    existing = omega.grid
    added: list[float] = []
    for t in sorted(float(s) for s in times):
        t = _check_time(t, omega.horizon)
        if np.min(np.abs(existing - t)) <= KNOT_TOL:
            continue
        if added and t - added[-1] <= KNOT_TOL:
            continue
        added.append(t)
    if not added:
        return omega
    grid = np.sort(np.concatenate([existing, added]))
    return SampledPath._trusted(grid, omega.at_many(grid))


def _knot_near(grid: np.ndarray, t: float) -> int:
    return int(np.argmin(np.abs(grid - t)))


def stop(omega: SampledPath, t: float) -> SampledPath:
    """The path ω(· ∧ t) on the horizon of ω, with t as a knot."""
    t = _check_time(t, omega.horizon)
    knotted = insert_knots(omega, [t])
    k = _knot_near(knotted.grid, t)
    values = knotted.values.copy()
    values[k + 1 :] = values[k]
    return SampledPath._trusted(knotted.grid.copy(), values)


def truncate(omega: SampledPath, t: float) -> SampledPath:
    """The restriction of ω to [0, t]; as a function it equals stop(ω, t)."""
    t = _check_time(t, omega.horizon)
    knotted = insert_knots(omega, [t])
    k = _knot_near(knotted.grid, t)
    return SampledPath._trusted(knotted.grid[: k + 1].copy(), knotted.values[: k + 1].copy())


def concat(omega: SampledPath, t: float, tail: SampledPath) -> SampledPath:
    """ω up to t, then ω(t) plus the increments of ``tail``.

    The result equals ω on [0, t) and ω(t) + tail(s - t) - tail(0) for s ≥ t,
    on the horizon max(horizon of ω, t + horizon of tail).
    """
    if omega.dim != tail.dim:
        raise PathDomainError(f"cannot concatenate dimension {omega.dim} with {tail.dim}")
    head = truncate(omega, t)
    t_knot = head.horizon
    x_t = head.values[-1]
    grid = np.concatenate([head.grid[:-1], t_knot + tail.grid])
    values = np.concatenate([head.values[:-1], x_t + tail.values - tail.values[0]])
    end = max(omega.horizon, t_knot + tail.horizon)
    if end > grid[-1] + KNOT_TOL:
        grid = np.append(grid, end)
        values = np.concatenate([values, values[-1:]])
    return SampledPath(grid, values)


def sup_norm(omega: SampledPath, t: float) -> float:
    """sup over [0, t] of the Euclidean norm of ω."""
    t = _check_time(t, omega.horizon)
    inside = omega.values[omega.grid <= t]
    knots = np.linalg.norm(inside, axis=1).max() if inside.size else 0.0
    return float(max(knots, np.linalg.norm(omega.at(t))))


def sup_distance(omega: SampledPath, alpha: SampledPath) -> float:
    times = np.union1d(omega.grid, alpha.grid)
    return float(np.linalg.norm(omega.at_many(times) - alpha.at_many(times), axis=1).max())


def stopped_sup_distance(a: TimedPath, b: TimedPath, horizon: float) -> float:
    """sup over r in [0, T] of ‖ω(r ∧ t) - α(r ∧ s)‖."""
    if a.path.dim != b.path.dim:
        raise PathDomainError(f"dimension mismatch {a.path.dim} != {b.path.dim}")
    times = np.union1d(a.path.grid, b.path.grid)
    times = np.union1d(times[times <= horizon], [a.t, b.t, horizon])
    left = a.path.at_many(np.minimum(times, a.t))
    right = b.path.at_many(np.minimum(times, b.t))
    return float(np.linalg.norm(left - right, axis=1).max())


def _check_pair(a: TimedPath, b: TimedPath, horizon: float) -> None:
    if a.t > horizon + KNOT_TOL or b.t > horizon + KNOT_TOL:
        raise PathDomainError(f"times {a.t}, {b.t} exceed the metric horizon {horizon}")


def metric_d(a: TimedPath, b: TimedPath, horizon: float) -> float:
    """Growth-weighted distance under which value functions are Lipschitz."""
    _check_pair(a, b, horizon)
    weight = 1.0 + (sup_norm(a.path, a.t) + sup_norm(b.path, b.t))
    return weight * abs(a.t - b.t) ** 0.5 + stopped_sup_distance(a, b, horizon)


def metric_dstar(a: TimedPath, b: TimedPath, horizon: float) -> float:
    """|t - s| plus the stopped sup distance."""
    _check_pair(a, b, horizon)
    return abs(a.t - b.t) + stopped_sup_distance(a, b, horizon)

