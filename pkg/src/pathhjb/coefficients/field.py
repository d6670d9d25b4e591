"""Coefficient fields (b, σ, ψ) over a box action set, and sequences of them."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable

import numpy as np
from rose import block_rng

from pathhjb.coefficients.functionals import Constant, Functional, Sum, Terminal
from pathhjb.errors import PathDomainError, ValidationRefusal
from pathhjb.paths import SampledPath, TimedPath
from pathhjb.sampling import sample_paths

# =========================
# ACTIONS
# =========================


@dataclass(frozen=True)
class ControlPoint:
    """An action f in [0,1]^m, optionally tagged with its control-grid index."""

    coords: tuple[float, ...]
    index: tuple[int, ...] | None = None

    def __post_init__(self):
        coords = tuple(float(c) for c in np.atleast_1d(self.coords))
        if not coords or any(not 0.0 <= c <= 1.0 for c in coords):
            raise PathDomainError(f"control coordinates must lie in [0, 1], got {coords}")
        object.__setattr__(self, "coords", coords)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coords)

    def to_json(self) -> dict:
        return {"coords": list(self.coords), "index": None if self.index is None else list(self.index)}


@dataclass(frozen=True)
class ControlGrid:
    """Uniform per-axis grids on [0,1]; resolution 1 is the single point 0.

    Points are enumerated in lexicographic index order (last axis fastest).
    """

    res: tuple[int, ...]

    def __post_init__(self):
        res = tuple(int(r) for r in np.atleast_1d(self.res))
        if not res or any(r < 1 for r in res):
            raise PathDomainError(f"control resolution must be >= 1 per axis, got {res}")
        object.__setattr__(self, "res", res)

    @classmethod
    def of(cls, res: int | tuple[int, ...], action_dim: int) -> "ControlGrid":
        if np.ndim(res) == 0:
            return cls((int(res),) * action_dim)
        if len(res) != action_dim:
            raise PathDomainError(f"{len(res)} resolutions for {action_dim} action axes")
        return cls(tuple(res))

    @property
    def action_dim(self) -> int:
        return len(self.res)

    def axis(self, i: int) -> np.ndarray:
        r = self.res[i]
        return np.array([0.0]) if r == 1 else np.linspace(0.0, 1.0, r)

    @cached_property
    def indices(self) -> list[tuple[int, ...]]:
        return [tuple(int(i) for i in idx) for idx in np.ndindex(*self.res)]

    @cached_property
    def coords(self) -> np.ndarray:
        axes = [self.axis(i) for i in range(self.action_dim)]
        return np.array([[axes[a][i] for a, i in enumerate(idx)] for idx in self.indices])

    def points(self) -> list[ControlPoint]:
        return [ControlPoint(tuple(c), idx) for c, idx in zip(self.coords, self.indices)]

    def refined(self) -> "ControlGrid":
        """Nested refinement: every old point stays on the grid."""
        return ControlGrid(tuple(2 * r - 1 for r in self.res))

    def __len__(self) -> int:
        return int(np.prod(self.res))


def _coords(f) -> np.ndarray:
    return f.array if isinstance(f, ControlPoint) else np.asarray(f, dtype=float)


# =========================
# FIELDS
# =========================


@dataclass(frozen=True)
class MarkovianView:
    """State evaluators for fields that see (t, ω) only through (t, ω(t)).

    ``drift`` and ``diffusion`` expose ``state(f, t, x)`` on arrays of states and
    return arrays of the same shape (d = r = 1); ``terminal.state(x)`` likewise.
    """

    drift: object
    diffusion: object
    terminal: object

    def b(self, f, t: float, x) -> np.ndarray:
        return self.drift.state(_coords(f), t, np.asarray(x, dtype=float))

    def sigma(self, f, t: float, x) -> np.ndarray:
        return self.diffusion.state(_coords(f), t, np.asarray(x, dtype=float))

    def psi(self, x) -> np.ndarray:
        return self.terminal.state(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class CoefficientField:
    """Drift b(f, t, ω) in R^d, diffusion σ(f, t, ω) in R^{d×r} and terminal ψ(ω).

    The evaluators must be pure, non-anticipative and picklable. Declared
    constants (``growth_C``, ``lipschitz_C``, ``terminal_bound``,
    ``terminal_lipschitz``) are what the validators test against; None means
    not declared.
    """

    drift: Callable[[np.ndarray, float, SampledPath], np.ndarray]
    diffusion: Callable[[np.ndarray, float, SampledPath], np.ndarray]
    terminal: Terminal
    horizon_T: float
    growth_C: float
    dim: int = 1
    noise_dim: int = 1
    action_dim: int = 2
    lipschitz_C: float | None = None
    markov: MarkovianView | None = None
    name: str = "field"

    def __post_init__(self):
        if self.horizon_T <= 0:
            raise PathDomainError(f"horizon_T must be positive, got {self.horizon_T}")
        if not self.growth_C > 0:
            raise PathDomainError(f"growth_C must be positive, got {self.growth_C}")

    @property
    def markovian_flag(self) -> bool:
        return self.markov is not None

    @property
    def terminal_bound(self) -> float | None:
        return self.terminal.sup

    @property
    def terminal_lipschitz(self) -> float | None:
        return self.terminal.lipschitz

    def b(self, f, t: float, path: SampledPath) -> np.ndarray:
        return np.asarray(self.drift(_coords(f), t, path), dtype=float).reshape(self.dim)

    def sigma(self, f, t: float, path: SampledPath) -> np.ndarray:
        raw = np.asarray(self.diffusion(_coords(f), t, path), dtype=float)
        return raw.reshape(self.dim, self.noise_dim)

    def psi(self, path: SampledPath) -> float:
        return float(self.terminal(path))

    def grid(self, res) -> ControlGrid:
        return ControlGrid.of(res, self.action_dim)


# =========================
# RANDOM-G FAMILY
# =========================


@dataclass(frozen=True)
class RandomGDrift:
    """b = b_lo + f₁·(b_hi − b_lo)"""

    b_lo: Functional
    b_hi: Functional

    def __call__(self, f, t, path):
        lo, hi = self.b_lo(t, path), self.b_hi(t, path)
        return np.array([lo + f[0] * (hi - lo)])

    def state(self, f, t, x):
        lo, hi = self.b_lo.state(t, x), self.b_hi.state(t, x)
        return lo + f[0] * (hi - lo)


@dataclass(frozen=True)
class RandomGDiffusion:
    """σ = sqrt(a_lo + f₂·(a_hi − a_lo)); a negative variance gives NaN."""

    a_lo: Functional
    a_hi: Functional

    def __call__(self, f, t, path):
        lo, hi = self.a_lo(t, path), self.a_hi(t, path)
        with np.errstate(invalid="ignore"):
            return np.array([[np.sqrt(lo + f[1] * (hi - lo))]])

    def state(self, f, t, x):
        lo, hi = self.a_lo.state(t, x), self.a_hi.state(t, x)
        with np.errstate(invalid="ignore"):
            return np.sqrt(lo + f[1] * (hi - lo))


@dataclass(frozen=True)
class RandomGSpec:
    """Drift interval [b_lo, b_hi] and variance interval [a_lo, a_hi] over (t, ω)."""

    b_lo: Functional
    b_hi: Functional
    a_lo: Functional
    a_hi: Functional
    bound_C: float
    terminal: Terminal
    name: str = "random_g"

    @property
    def horizon(self) -> float:
        return float(self.terminal.horizon)

    @property
    def bounds(self) -> dict[str, Functional]:
        return {"b_lo": self.b_lo, "b_hi": self.b_hi, "a_lo": self.a_lo, "a_hi": self.a_hi}

    def replace(self, **changes) -> "RandomGSpec":
        return replace(self, **changes)


def default_probes(horizon: float, count: int = 24, bound: float = 2.0, seed: int = 0):
    """Deterministic (t, ω) probes used when the caller supplies none."""
    rng = block_rng(0, seed)
    paths = sample_paths(rng, count, horizon, bound)
    times = np.linspace(0.0, horizon, count, endpoint=False)
    return [TimedPath(float(t), p) for t, p in zip(times, paths)]


def _declared_lipschitz(spec: RandomGSpec) -> float | None:
    consts = {k: f.lipschitz for k, f in spec.bounds.items()}
    if None in consts.values():
        return None
    b_lip = max(consts["b_lo"], consts["b_hi"])
    # sqrt is (sqrt(C)/2)-Lipschitz on [1/C, inf)
    a_lip = 0.5 * np.sqrt(spec.bound_C) * max(consts["a_lo"], consts["a_hi"])
    return float(max(b_lip, a_lip))


def make_random_g(spec: RandomGSpec, probes: list[TimedPath] | None = None) -> CoefficientField:
    """The random-G field: f₁ picks the drift, f₂ the variance, F = [0,1]².

    Raises ValidationRefusal when a_lo is not strictly positive on a probe.
    """
    if not spec.bound_C > 0:
        raise ValidationRefusal("random_g_bounds", f"bound_C must be positive, got {spec.bound_C}")
    probes = default_probes(spec.horizon) if probes is None else probes
    for probe in probes:
        a_lo = spec.a_lo(probe.t, probe.path)
        if not a_lo > 0:
            raise ValidationRefusal(
                "random_g_bounds",
                f"a_lo={a_lo:.6g} is not positive at t={probe.t:.6g}",
                a_lo=a_lo,
                t=probe.t,
            )

    drift = RandomGDrift(spec.b_lo, spec.b_hi)
    diffusion = RandomGDiffusion(spec.a_lo, spec.a_hi)
    markovian = all(f.markovian for f in spec.bounds.values()) and spec.terminal.markovian
    return CoefficientField(
        drift=drift,
        diffusion=diffusion,
        terminal=spec.terminal,
        horizon_T=spec.horizon,
        growth_C=float(spec.bound_C + np.sqrt(spec.bound_C)),
        dim=1,
        noise_dim=1,
        action_dim=2,
        lipschitz_C=_declared_lipschitz(spec),
        markov=MarkovianView(drift, diffusion, spec.terminal) if markovian else None,
        name=spec.name,
    )


# =========================
# UNCONTROLLED FIELDS
# =========================


@dataclass(frozen=True)
class FunctionalDrift:
    """b(f, t, ω) = g(t, ω), the same for every action."""

    g: Functional

    def __call__(self, f, t, path):
        return np.array([self.g(t, path)])

    def state(self, f, t, x):
        return self.g.state(t, x)


@dataclass(frozen=True)
class FunctionalDiffusion:
    """σ(f, t, ω) = g(t, ω), the same for every action."""

    g: Functional

    def __call__(self, f, t, path):
        return np.array([[self.g(t, path)]])

    def state(self, f, t, x):
        return self.g.state(t, x)


def make_uncontrolled(
    drift: Functional | float,
    sigma: Functional | float,
    terminal: Terminal,
    name: str = "uncontrolled",
) -> CoefficientField:
    """A one-dimensional field with a single action (control resolution 1)."""
    drift = Constant(drift) if np.isscalar(drift) else drift
    sigma = Constant(sigma) if np.isscalar(sigma) else sigma
    lips = [drift.lipschitz, sigma.lipschitz]
    markovian = drift.markovian and sigma.markovian and terminal.markovian
    b, s = FunctionalDrift(drift), FunctionalDiffusion(sigma)
    return CoefficientField(
        drift=b,
        diffusion=s,
        terminal=terminal,
        horizon_T=float(terminal.horizon),
        growth_C=max(drift.growth + sigma.growth, 1e-12),
        dim=1,
        noise_dim=1,
        action_dim=1,
        lipschitz_C=None if None in lips else float(max(lips)),
        markov=MarkovianView(b, s, terminal) if markovian else None,
        name=name,
    )


# =========================
# SEQUENCES
# =========================


@dataclass(frozen=True)
class RandomGSequence:
    """Member n is the base family with ``perturbation`` applied at n (n = 0: the base)."""

    base: RandomGSpec
    perturbation: object

    def __call__(self, n: int) -> CoefficientField:
        return make_random_g(self.perturbation.apply(self.base, n))


@dataclass(frozen=True)
class CoefficientSequence:
    """Fields indexed by n ≥ 0; n = 0 is the limit object.

    ``member`` must be picklable to run members in worker processes.
    ``growth_C`` is the shared linear-growth constant claimed for all members.
    """

    member: Callable[[int], CoefficientField]
    growth_C: float | None = None
    name: str = "sequence"
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def at(self, n: int) -> CoefficientField:
        if n < 0:
            raise PathDomainError(f"sequence index must be >= 0, got {n}")
        if n not in self._cache:
            c = self.member(int(n))
            if n:
                _check_shapes(self.at(0), c)
            self._cache[n] = c
        return self._cache[n]

    def __getstate__(self):
        return {"member": self.member, "growth_C": self.growth_C, "name": self.name}

    def __setstate__(self, state):
        for key, value in state.items():
            object.__setattr__(self, key, value)
        object.__setattr__(self, "_cache", {})


def _check_shapes(a: CoefficientField, b: CoefficientField) -> None:
    shape_a = (a.dim, a.noise_dim, a.action_dim, a.horizon_T)
    shape_b = (b.dim, b.noise_dim, b.action_dim, b.horizon_T)
    if shape_a != shape_b:
        raise PathDomainError(
            f"sequence members disagree on (d, r, m, T): {shape_a} vs {shape_b}"
        )


def shift(fn: Functional, amount: float) -> Functional:
    if amount == 0:
        return fn
    return Sum((fn, Constant(float(amount))))
