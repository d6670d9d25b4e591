"""Picklable scalar functionals of (t, ω) and terminal functionals of ω.

Bounds of the random-G family and the terminal payoffs are built from these
small frozen dataclasses so that fields can be shipped to worker processes.
Each one declares what the validators and the Lipschitz budget need:

- ``markovian``: depends on (t, ω) only through (t, ω(t)) (terminals: through
  ω(T)); such functionals also provide a vectorised ``state`` evaluator;
- ``lipschitz``: constant with respect to the stopped sup distance, or None;
- ``sup``: bound on the absolute value, or None when unbounded.
- ``growth`` (bounds only): C with |value| <= C(1 + sup-norm of ω up to t).

Paths are scalar here (first coordinate); the random-G family is one-dimensional.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar, Protocol

import numpy as np

from pathhjb.paths import SampledPath, sup_norm


class Functional(Protocol):
    kind: ClassVar[str]
    markovian: ClassVar[bool]

    def __call__(self, t: float, path: SampledPath) -> float: ...

    @property
    def lipschitz(self) -> float | None: ...

    @property
    def sup(self) -> float | None: ...

    @property
    def growth(self) -> float: ...


class Terminal(Protocol):
    kind: ClassVar[str]
    markovian: ClassVar[bool]
    horizon: float

    def __call__(self, path: SampledPath) -> float: ...

    @property
    def lipschitz(self) -> float | None: ...

    @property
    def sup(self) -> float | None: ...


def _x(path: SampledPath, t: float) -> float:
    return float(path.at(t)[0])


def _clip_sup(lo: float, hi: float) -> float | None:
    if np.isfinite(lo) and np.isfinite(hi):
        return float(max(abs(lo), abs(hi)))
    return None


def _affine_growth(c0: float, c1: float, lo: float, hi: float) -> float:
    # |c0 + c1 x| <= max(|c0|, |c1|) (1 + |x|), and clipping can only help
    growth = max(abs(c0), abs(c1))
    bound = _clip_sup(lo, hi)
    return growth if bound is None else min(growth, bound)


# =========================
# BOUNDS b(t, ω), a(t, ω)
# =========================


@dataclass(frozen=True)
class Constant:
    c: float
    kind: ClassVar[str] = "constant"
    markovian: ClassVar[bool] = True

    def __call__(self, t, path):
        return float(self.c)

    def state(self, t, x):
        return np.full(np.shape(x), float(self.c))

    @property
    def lipschitz(self):
        return 0.0

    @property
    def sup(self):
        return abs(float(self.c))

    @property
    def growth(self):
        return abs(float(self.c))


@dataclass(frozen=True)
class StateAffine:
    """clip(c0 + c1·ω(t), lo, hi)"""

    c0: float
    c1: float
    lo: float = -np.inf
    hi: float = np.inf
    kind: ClassVar[str] = "state_affine"
    markovian: ClassVar[bool] = True

    def __call__(self, t, path):
        return float(np.clip(self.c0 + self.c1 * _x(path, t), self.lo, self.hi))

    def state(self, t, x):
        return np.clip(self.c0 + self.c1 * np.asarray(x, dtype=float), self.lo, self.hi)

    @property
    def lipschitz(self):
        return abs(self.c1)

    @property
    def sup(self):
        return _clip_sup(self.lo, self.hi)

    @property
    def growth(self):
        return _affine_growth(self.c0, self.c1, self.lo, self.hi)


@dataclass(frozen=True)
class Cosine:
    """c0 + c1·cos(ω(t))"""

    c0: float
    c1: float
    kind: ClassVar[str] = "cosine"
    markovian: ClassVar[bool] = True

    def __call__(self, t, path):
        return self.c0 + self.c1 * float(np.cos(_x(path, t)))

    def state(self, t, x):
        return self.c0 + self.c1 * np.cos(np.asarray(x, dtype=float))

    @property
    def lipschitz(self):
        return abs(self.c1)

    @property
    def sup(self):
        return abs(self.c0) + abs(self.c1)

    growth = sup


@dataclass(frozen=True)
class RunningMax:
    """clip(c0 + c1·max_{s ≤ t} ω(s), lo, hi)"""

    c0: float
    c1: float
    lo: float = -np.inf
    hi: float = np.inf
    kind: ClassVar[str] = "running_max"
    markovian: ClassVar[bool] = False

    def __call__(self, t, path):
        return float(np.clip(self.c0 + self.c1 * path.running_max(t)[0], self.lo, self.hi))

    @property
    def lipschitz(self):
        return abs(self.c1)

    @property
    def sup(self):
        return _clip_sup(self.lo, self.hi)

    @property
    def growth(self):
        return _affine_growth(self.c0, self.c1, self.lo, self.hi)


@dataclass(frozen=True)
class Delayed:
    """clip(c0 + c1·ω((t - delay) ∨ 0), lo, hi)"""

    c0: float
    c1: float
    delay: float
    lo: float = -np.inf
    hi: float = np.inf
    kind: ClassVar[str] = "delayed"
    markovian: ClassVar[bool] = False

    def __call__(self, t, path):
        lagged = _x(path, max(t - self.delay, 0.0))
        return float(np.clip(self.c0 + self.c1 * lagged, self.lo, self.hi))

    @property
    def lipschitz(self):
        return abs(self.c1)

    @property
    def sup(self):
        return _clip_sup(self.lo, self.hi)

    @property
    def growth(self):
        return _affine_growth(self.c0, self.c1, self.lo, self.hi)


@dataclass(frozen=True)
class TailReading:
    """clip(c0 + c1·ω(horizon), lo, hi); reads the future, so it is anticipative."""

    c0: float
    c1: float
    horizon: float
    lo: float = -np.inf
    hi: float = np.inf
    kind: ClassVar[str] = "tail_reading"
    markovian: ClassVar[bool] = False

    def __call__(self, t, path):
        return float(np.clip(self.c0 + self.c1 * _x(path, self.horizon), self.lo, self.hi))

    @property
    def lipschitz(self):
        return None

    @property
    def sup(self):
        return _clip_sup(self.lo, self.hi)

    @property
    def growth(self):
        return _affine_growth(self.c0, self.c1, self.lo, self.hi)


@dataclass(frozen=True)
class SupNorm:
    """c1·sup_{s ≤ t} |ω(s)|, or sin of it when ``sine`` is set."""

    c1: float = 1.0
    sine: bool = False
    kind: ClassVar[str] = "sup_norm"
    markovian: ClassVar[bool] = False

    def __call__(self, t, path):
        value = self.c1 * sup_norm(path, min(t, path.horizon))
        return float(np.sin(value)) if self.sine else float(value)

    @property
    def lipschitz(self):
        return abs(self.c1)

    @property
    def sup(self):
        return 1.0 if self.sine else None

    @property
    def growth(self):
        return min(abs(self.c1), 1.0) if self.sine else abs(self.c1)


@dataclass(frozen=True)
class Sum:
    parts: tuple
    kind: ClassVar[str] = "sum"

    @property
    def markovian(self):
        return all(p.markovian for p in self.parts)

    def __call__(self, t, path):
        return float(sum(p(t, path) for p in self.parts))

    def state(self, t, x):
        return sum(p.state(t, x) for p in self.parts)

    @property
    def lipschitz(self):
        consts = [p.lipschitz for p in self.parts]
        return None if None in consts else float(sum(consts))

    @property
    def sup(self):
        sups = [p.sup for p in self.parts]
        return None if None in sups else float(sum(sups))

    @property
    def growth(self):
        return float(sum(p.growth for p in self.parts))


# =========================
# TERMINALS ψ(ω)
# =========================


@dataclass(frozen=True)
class StateTerminal:
    """scale·ω(T) + offset"""

    horizon: float
    scale: float = 1.0
    offset: float = 0.0
    kind: ClassVar[str] = "state"
    markovian: ClassVar[bool] = True

    def __call__(self, path):
        return self.offset + self.scale * _x(path, self.horizon)

    def state(self, x):
        return self.offset + self.scale * np.asarray(x, dtype=float)

    @property
    def lipschitz(self):
        return abs(self.scale)

    @property
    def sup(self):
        return None if self.scale else abs(self.offset)


@dataclass(frozen=True)
class StateSquare:
    horizon: float
    kind: ClassVar[str] = "state_square"
    markovian: ClassVar[bool] = True

    def __call__(self, path):
        return _x(path, self.horizon) ** 2

    def state(self, x):
        return np.asarray(x, dtype=float) ** 2

    lipschitz = None
    sup = None


@dataclass(frozen=True)
class StateAbs:
    horizon: float
    kind: ClassVar[str] = "state_abs"
    markovian: ClassVar[bool] = True

    def __call__(self, path):
        return abs(_x(path, self.horizon))

    def state(self, x):
        return np.abs(np.asarray(x, dtype=float))

    lipschitz = 1.0
    sup = None


@dataclass(frozen=True)
class Sine:
    """scale·sin(freq·ω(T))"""

    horizon: float
    scale: float = 1.0
    freq: float = 1.0
    kind: ClassVar[str] = "sine"
    markovian: ClassVar[bool] = True

    def __call__(self, path):
        return self.scale * float(np.sin(self.freq * _x(path, self.horizon)))

    def state(self, x):
        return self.scale * np.sin(self.freq * np.asarray(x, dtype=float))

    @property
    def lipschitz(self):
        return abs(self.scale * self.freq)

    @property
    def sup(self):
        return abs(self.scale)


@dataclass(frozen=True)
class Clipped:
    horizon: float
    lo: float = -1.0
    hi: float = 1.0
    kind: ClassVar[str] = "clipped"
    markovian: ClassVar[bool] = True

    def __call__(self, path):
        return float(np.clip(_x(path, self.horizon), self.lo, self.hi))

    def state(self, x):
        return np.clip(np.asarray(x, dtype=float), self.lo, self.hi)

    lipschitz = 1.0

    @property
    def sup(self):
        return _clip_sup(self.lo, self.hi)


@dataclass(frozen=True)
class ConstantTerminal:
    horizon: float
    c: float = 0.0
    kind: ClassVar[str] = "constant"
    markovian: ClassVar[bool] = True

    def __call__(self, path):
        return float(self.c)

    def state(self, x):
        return np.full(np.shape(x), float(self.c))

    lipschitz = 0.0

    @property
    def sup(self):
        return abs(float(self.c))


@dataclass(frozen=True)
class RunningMaxTerminal:
    """clip(max_{s ≤ T} ω(s), lo, hi)"""

    horizon: float
    lo: float = -np.inf
    hi: float = np.inf
    kind: ClassVar[str] = "running_max"
    markovian: ClassVar[bool] = False

    def __call__(self, path):
        return float(np.clip(path.running_max(self.horizon)[0], self.lo, self.hi))

    lipschitz = 1.0

    @property
    def sup(self):
        return _clip_sup(self.lo, self.hi)


@dataclass(frozen=True)
class AverageTerminal:
    """(1/T)·∫_0^T ω(s) ds, exact for piecewise-linear paths."""

    horizon: float
    kind: ClassVar[str] = "average"
    markovian: ClassVar[bool] = False

    def __call__(self, path):
        grid = path.grid[path.grid < self.horizon]
        grid = np.append(grid, self.horizon)
        values = path.at_many(grid)[:, 0]
        return float(np.trapz(values, grid) / self.horizon)

    lipschitz = 1.0
    sup = None


@dataclass(frozen=True)
class TerminalSum:
    parts: tuple
    kind: ClassVar[str] = "sum"

    @property
    def horizon(self):
        return self.parts[0].horizon

    @property
    def markovian(self):
        return all(p.markovian for p in self.parts)

    def __call__(self, path):
        return float(sum(p(path) for p in self.parts))

    def state(self, x):
        return sum(p.state(x) for p in self.parts)

    @property
    def lipschitz(self):
        consts = [p.lipschitz for p in self.parts]
        return None if None in consts else float(sum(consts))

    @property
    def sup(self):
        sups = [p.sup for p in self.parts]
        return None if None in sups else float(sum(sups))


BOUND_KINDS = {
    cls.kind: cls
    for cls in (Constant, StateAffine, Cosine, RunningMax, Delayed, TailReading, SupNorm)
}
TERMINAL_KINDS = {
    cls.kind: cls
    for cls in (
        StateTerminal,
        StateSquare,
        StateAbs,
        Sine,
        Clipped,
        ConstantTerminal,
        RunningMaxTerminal,
        AverageTerminal,
    )
}
