"""The operator G and functional derivatives of cylindrical test functions.

A cylindrical test function is φ(t, ω) = g(t, ω(t₁ ∧ t), …, ω(t_q ∧ t)).
Its horizontal derivative moves time with the path stopped at t, so only
the explicit time dependence of g survives. Its vertical derivatives bump the
path by h·e_i on [t, T], which moves exactly the anchors with t_i ≥ t.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from rose import get_logger

from pathhjb.coefficients.field import CoefficientField, ControlGrid, ControlPoint
from pathhjb.errors import PathDomainError
from pathhjb.paths import KNOT_TOL, SampledPath, TimedPath

_LOG_HAMILTONIAN = {
    "name": "hamiltonian",
    "file": "pathhjb.log",
    "level": logging.INFO,
}

SYM_TOL = 1e-12
PARTIALS_RTOL = 1e-6


@dataclass(frozen=True)
class CylindricalTestFunction:
    """φ(t, ω) := g(t, X) with X[i] = ω(t_i ∧ t), X of shape (q, d).

    Declared partials take (t, X) and return: ``dg_dt`` a float, ``grad_x``
    shape (q, d), ``hess_x`` shape (q, d, q, d). Missing ones fall back to
    central differences.
    """

    anchor_times: tuple[float, ...]
    g: Callable[[float, np.ndarray], float]
    dg_dt: Callable[[float, np.ndarray], float] | None = None
    grad_x: Callable[[float, np.ndarray], np.ndarray] | None = None
    hess_x: Callable[[float, np.ndarray], np.ndarray] | None = None
    dim: int = 1
    poly_bound: tuple[float, int] = (1.0, 2)
    name: str = "phi"

    def __post_init__(self):
        times = tuple(float(t) for t in self.anchor_times)
        if not times or np.any(np.diff(times) <= 0) or times[0] < 0:
            raise PathDomainError(f"anchor times must be ascending and >= 0, got {times}")
        object.__setattr__(self, "anchor_times", times)

    @classmethod
    def from_callables(
        cls,
        anchor_times,
        g,
        dg_dt=None,
        grad_x=None,
        hess_x=None,
        dim: int = 1,
        poly_bound: tuple[float, int] = (1.0, 2),
        name: str = "phi",
    ) -> "CylindricalTestFunction":
        return cls(tuple(anchor_times), g, dg_dt, grad_x, hess_x, dim, poly_bound, name)

    @property
    def q(self) -> int:
        return len(self.anchor_times)

    def anchors(self, t: float, path: SampledPath) -> np.ndarray:
        if path.dim != self.dim:
            raise PathDomainError(f"path dimension {path.dim} != test function dimension {self.dim}")
        return path.at_many(np.minimum(self.anchor_times, t))

    def active(self, t: float) -> np.ndarray:
        """Anchors moved by a vertical bump at t."""
        return np.asarray(self.anchor_times) >= t - KNOT_TOL

    def __call__(self, t: float, path: SampledPath) -> float:
        return float(self.g(t, self.anchors(t, path)))

    # partials in (t, X), declared or by central differences

    def partial_t(self, t: float, X: np.ndarray) -> float:
        if self.dg_dt is not None:
            return float(self.dg_dt(t, X))
        h = 1e-6 * max(1.0, abs(t))
        return float((self.g(t + h, X) - self.g(t - h, X)) / (2 * h))

    def partial_x(self, t: float, X: np.ndarray) -> np.ndarray:
        if self.grad_x is not None:
            return np.asarray(self.grad_x(t, X), dtype=float).reshape(self.q, self.dim)
        return _fd_grad(lambda Y: self.g(t, Y), X)

    def partial_xx(self, t: float, X: np.ndarray) -> np.ndarray:
        if self.hess_x is not None:
            shape = (self.q, self.dim, self.q, self.dim)
            return np.asarray(self.hess_x(t, X), dtype=float).reshape(shape)
        return _fd_hess(lambda Y: self.g(t, Y), X)


def _fd_grad(fn: Callable[[np.ndarray], float], X: np.ndarray) -> np.ndarray:
    flat = X.astype(float).ravel()
    grad = np.empty_like(flat)
    for k in range(flat.size):
        h = 1e-6 * max(1.0, abs(flat[k]))
        up, down = flat.copy(), flat.copy()
        up[k] += h
        down[k] -= h
        grad[k] = (fn(up.reshape(X.shape)) - fn(down.reshape(X.shape))) / (2 * h)
    return grad.reshape(X.shape)


def _fd_hess(fn: Callable[[np.ndarray], float], X: np.ndarray) -> np.ndarray:
    flat = X.astype(float).ravel()
    n = flat.size
    hess = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            hi = 1e-4 * max(1.0, abs(flat[i]))
            hj = 1e-4 * max(1.0, abs(flat[j]))
            total = 0.0
            for si, sj, sign in ((1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)):
                Y = flat.copy()
                Y[i] += si * hi
                Y[j] += sj * hj
                total += sign * fn(Y.reshape(X.shape))
            hess[i, j] = hess[j, i] = total / (4 * hi * hj)
    return hess.reshape(X.shape + X.shape)


# =========================
# FUNCTIONAL DERIVATIVES
# =========================


def _check_at(phi: CylindricalTestFunction, at: TimedPath) -> None:
    if at.path.dim != phi.dim:
        raise PathDomainError(f"path dimension {at.path.dim} != test function dimension {phi.dim}")


def horizontal_derivative(phi: CylindricalTestFunction, at: TimedPath) -> float:
    """∂_t g at the stopped anchors; at t = T this is the left limit."""
    _check_at(phi, at)
    return phi.partial_t(at.t, phi.anchors(at.t, at.path))


def vertical_gradient(phi: CylindricalTestFunction, at: TimedPath) -> np.ndarray:
    _check_at(phi, at)
    X = phi.anchors(at.t, at.path)
    return phi.partial_x(at.t, X)[phi.active(at.t)].sum(axis=0)


def vertical_hessian(phi: CylindricalTestFunction, at: TimedPath) -> np.ndarray:
    _check_at(phi, at)
    X = phi.anchors(at.t, at.path)
    active = phi.active(at.t)
    hess = phi.partial_xx(at.t, X)[active][:, :, active]
    return hess.sum(axis=(0, 2))


# =========================
# DIFFERENCE-QUOTIENT ORACLES
# =========================


def horizontal_difference_quotient(
    phi: CylindricalTestFunction, at: TimedPath, hs: Iterable[float] = (1e-3, 1e-4, 1e-5)
) -> list[float]:
    """(φ(t + h, ω_t) − φ(t, ω_t)) / h for each h.

    Past the horizon of ω the quotient is backward in t with the anchors held
    at their time-t values.
    """
    stopped = at.stopped()
    horizon = at.path.horizon
    X = phi.anchors(at.t, stopped)
    quotients = []
    for h in hs:
        if at.t + h <= horizon + KNOT_TOL:
            quotients.append((phi(at.t + h, stopped) - phi(at.t, stopped)) / h)
        else:
            quotients.append((phi.g(at.t, X) - phi.g(at.t - h, X)) / h)
    return quotients


def richardson(hs: Iterable[float], quotients: Iterable[float]) -> float:
    """Eliminate the first-order error term using the two smallest steps."""
    hs, quotients = list(hs), list(quotients)
    if len(hs) < 2:
        return float(quotients[-1])
    r = hs[-2] / hs[-1]
    return float((r * quotients[-1] - quotients[-2]) / (r - 1.0))


def _bumped(phi: CylindricalTestFunction, at: TimedPath, vec: np.ndarray) -> np.ndarray:
    X = phi.anchors(at.t, at.path).copy()
    X[phi.active(at.t)] += vec
    return X


def vertical_bump_quotient(
    phi: CylindricalTestFunction, at: TimedPath, i: int, h: float = 1e-5
) -> float:
    """Central quotient of h ↦ φ(t, ω + h·e_i·1_[t,T]) at 0."""
    e = np.zeros(phi.dim)
    e[i] = h
    up = phi.g(at.t, _bumped(phi, at, e))
    down = phi.g(at.t, _bumped(phi, at, -e))
    return float((up - down) / (2 * h))


def vertical_bump_hessian(
    phi: CylindricalTestFunction, at: TimedPath, h: float = 1e-4
) -> np.ndarray:
    d = phi.dim
    hess = np.empty((d, d))
    for i in range(d):
        for j in range(d):
            total = 0.0
            for si, sj, sign in ((1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)):
                vec = np.zeros(d)
                vec[i] += si * h
                vec[j] += sj * h
                total += sign * phi.g(at.t, _bumped(phi, at, vec))
            hess[i, j] = total / (4 * h * h)
    return hess


def _rel(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b)))) if a.size else 0.0


def check_partials(phi: CylindricalTestFunction, probes: Iterable[TimedPath]) -> float:
    """Largest relative disagreement between declared partials and central differences."""
    worst = 0.0
    for at in probes:
        X = phi.anchors(at.t, at.path)
        fd_t = (phi.g(at.t + 1e-6, X) - phi.g(at.t - 1e-6, X)) / 2e-6
        worst = max(worst, _rel(phi.partial_t(at.t, X), fd_t))
        worst = max(worst, _rel(phi.partial_x(at.t, X), _fd_grad(lambda Y: phi.g(at.t, Y), X)))
        worst = max(worst, _rel(phi.partial_xx(at.t, X), _fd_hess(lambda Y: phi.g(at.t, Y), X)))
    return worst


# =========================
# THE OPERATOR G
# =========================


@dataclass(frozen=True)
class GEvaluation:
    value: float
    argmax_control: ControlPoint
    gap_certificate: float

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "argmax_control": self.argmax_control.to_json(),
            "gap_certificate": self.gap_certificate,
        }


def generator(
    c: CoefficientField, f, t: float, path: SampledPath, grad: np.ndarray, hess: np.ndarray
) -> float:
    """⟨grad, b⟩ + ½ tr[hess σσ*] at one action."""
    sigma = c.sigma(f, t, path)
    return float(grad @ c.b(f, t, path) + 0.5 * np.trace(hess @ sigma @ sigma.T))


def _sweep(c, t, path, grad, hess, grid: ControlGrid) -> np.ndarray:
    return np.array([generator(c, f, t, path, grad, hess) for f in grid.coords])


def _full_path(c: CoefficientField, at: TimedPath) -> SampledPath:
    path = at.path
    if path.horizon < c.horizon_T - KNOT_TOL:
        path = path.extend(c.horizon_T, path.values[-1])
    return path


def evaluate_G(
    c: CoefficientField,
    at: TimedPath,
    grad,
    hess,
    grid_res: int | tuple[int, ...] = 5,
) -> GEvaluation:
    """Grid sup of the generator; ties go to the lowest lexicographic grid point."""
    grad = np.atleast_1d(np.asarray(grad, dtype=float))
    hess = np.atleast_2d(np.asarray(hess, dtype=float))
    if grad.shape != (c.dim,) or hess.shape != (c.dim, c.dim):
        raise PathDomainError(f"grad {grad.shape} / hess {hess.shape} do not match d={c.dim}")
    if not np.allclose(hess, hess.T, rtol=0.0, atol=SYM_TOL):
        raise PathDomainError("hess must be symmetric")
    grid = c.grid(grid_res)
    if min(grid.res) < 2:
        raise PathDomainError(f"grid_res must be >= 2 per action axis, got {grid.res}")
    path = _full_path(c, at)
    values = _sweep(c, at.t, path, grad, hess, grid)
    finer = _sweep(c, at.t, path, grad, hess, grid.refined())
    best = int(np.argmax(values))
    f = ControlPoint(tuple(grid.coords[best]), grid.indices[best])
    return GEvaluation(float(values[best]), f, float(abs(finer.max() - values[best])))


def ppde_residual(
    c: CoefficientField,
    phi: CylindricalTestFunction,
    at: TimedPath,
    grid_res: int | tuple[int, ...] = 5,
) -> float:
    """∂_t φ + G(t, ω, ∂_ω φ, ∂²_ω φ); its sign tells sub- from supersolutions."""
    if at.t >= c.horizon_T - KNOT_TOL:
        raise PathDomainError(f"residual needs t < T, got t={at.t}")
    grad = vertical_gradient(phi, at)
    hess = vertical_hessian(phi, at)
    hess = 0.5 * (hess + hess.T)
    G = evaluate_G(c, at, grad, hess, grid_res)
    residual = horizontal_derivative(phi, at) + G.value
    logger = get_logger(**_LOG_HAMILTONIAN)
    logger.debug(f"residual of {phi.name} at t={at.t:.6g}: {residual:.6g}")
    return float(residual)


# =========================
# BUILT-IN TEST FUNCTIONS
# =========================


def time_only(horizon: float) -> CylindricalTestFunction:
    return CylindricalTestFunction.from_callables(
        (horizon,),
        lambda t, X: t,
        dg_dt=lambda t, X: 1.0,
        grad_x=lambda t, X: np.zeros((1, 1)),
        hess_x=lambda t, X: np.zeros((1, 1, 1, 1)),
        name="time_only",
    )


def terminal_state(horizon: float) -> CylindricalTestFunction:
    return CylindricalTestFunction.from_callables(
        (horizon,),
        lambda t, X: X[0, 0],
        dg_dt=lambda t, X: 0.0,
        grad_x=lambda t, X: np.ones((1, 1)),
        hess_x=lambda t, X: np.zeros((1, 1, 1, 1)),
        poly_bound=(1.0, 1),
        name="terminal_state",
    )


def terminal_square(horizon: float) -> CylindricalTestFunction:
    return CylindricalTestFunction.from_callables(
        (horizon,),
        lambda t, X: X[0, 0] ** 2,
        dg_dt=lambda t, X: 0.0,
        grad_x=lambda t, X: 2.0 * X,
        hess_x=lambda t, X: np.full((1, 1, 1, 1), 2.0),
        name="terminal_square",
    )


def heat_solution(a: float, horizon: float) -> CylindricalTestFunction:
    """x² + a(T − t): solves the equation with b ≡ 0 and σ² ≡ a."""
    return CylindricalTestFunction.from_callables(
        (horizon,),
        lambda t, X: X[0, 0] ** 2 + a * (horizon - t),
        dg_dt=lambda t, X: -a,
        grad_x=lambda t, X: 2.0 * X,
        hess_x=lambda t, X: np.full((1, 1, 1, 1), 2.0),
        poly_bound=(1.0 + abs(a) * horizon, 2),
        name="heat_solution",
    )


def anchor_product(t1: float, t2: float) -> CylindricalTestFunction:
    """x₁·x₂ with anchors t₁ < t₂."""

    def hess(t, X):
        out = np.zeros((2, 1, 2, 1))
        out[0, 0, 1, 0] = out[1, 0, 0, 0] = 1.0
        return out

    return CylindricalTestFunction.from_callables(
        (t1, t2),
        lambda t, X: X[0, 0] * X[1, 0],
        dg_dt=lambda t, X: 0.0,
        grad_x=lambda t, X: X[::-1].copy(),
        hess_x=hess,
        name="anchor_product",
    )


def time_state_product(horizon: float) -> CylindricalTestFunction:
    """t·x with the state anchored at the horizon."""
    return CylindricalTestFunction.from_callables(
        (horizon,),
        lambda t, X: t * X[0, 0],
        dg_dt=lambda t, X: X[0, 0],
        grad_x=lambda t, X: np.full((1, 1), t),
        hess_x=lambda t, X: np.zeros((1, 1, 1, 1)),
        name="time_state_product",
    )


BUILTIN_TEST_FUNCTIONS = {
    "time_only": time_only,
    "terminal_state": terminal_state,
    "terminal_square": terminal_square,
    "heat_solution": heat_solution,
    "anchor_product": anchor_product,
    "time_state_product": time_state_product,
}
