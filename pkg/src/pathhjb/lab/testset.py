"""Finite, R-bounded families of (t, ω) standing in for compact sets of path space."""

from __future__ import annotations

from dataclasses import dataclass

from rose import block_rng

from pathhjb.errors import ConfigError, PathDomainError
from pathhjb.paths import KNOT_TOL, TimedPath, sup_norm
from pathhjb.sampling import PATH_KINDS, sample_paths


@dataclass(frozen=True, eq=False)
class CompactTestSet:
    points: tuple[TimedPath, ...]
    bound: float
    horizon: float

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if not self.points:
            raise PathDomainError("a test set needs at least one point")
        for i, p in enumerate(self.points):
            if not -KNOT_TOL <= p.t <= self.horizon + KNOT_TOL:
                raise PathDomainError(f"point {i}: t={p.t} outside [0, {self.horizon}]")
            norm = sup_norm(p.path, p.path.horizon)
            if norm > self.bound + KNOT_TOL:
                raise PathDomainError(f"point {i}: sup-norm {norm:.6g} exceeds R={self.bound}")

    @classmethod
    def sample(
        cls,
        size: int,
        bound: float,
        horizon: float,
        seed: int = 0,
        kinds: tuple[str, ...] = PATH_KINDS,
        time_grid: int = 4,
        dim: int = 1,
    ) -> "CompactTestSet":
        """``size`` paths cycling through ``kinds``; start times cycle through
        k·T/time_grid, k = 0 … time_grid − 1 (the first point starts at 0)."""
        if size < 1 or time_grid < 1:
            raise PathDomainError(f"need size >= 1 and time_grid >= 1, got {size}, {time_grid}")
        paths = sample_paths(block_rng(5, seed), size, horizon, bound, tuple(kinds), dim)
        times = [horizon * (i % time_grid) / time_grid for i in range(size)]
        return cls(tuple(TimedPath(t, p) for t, p in zip(times, paths)), bound, horizon)

    @property
    def t_min(self) -> float:
        return min(p.t for p in self.points)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def to_json(self) -> dict:
        return {
            "bound": self.bound,
            "horizon": self.horizon,
            "points": [p.to_json() for p in self.points],
        }


def load_test_set(raw: dict, horizon: float, seed: int = 0) -> CompactTestSet:
    """``{"size", "bound", "kinds", "time_grid"}`` or explicit ``{"bound", "points": [...]}``."""
    if not isinstance(raw, dict):
        raise ConfigError("test_set", "expected an object")
    bound = float(raw.get("bound", 2.0))
    if bound <= 0:
        raise ConfigError("test_set.bound", f"must be positive, got {bound}")
    try:
        if "points" in raw:
            points = [TimedPath.from_json(p) for p in raw["points"]]
            return CompactTestSet(tuple(points), bound, horizon)
        kinds = tuple(raw.get("kinds", PATH_KINDS))
        return CompactTestSet.sample(
            int(raw.get("size", 12)),
            bound,
            horizon,
            seed=int(raw.get("seed", seed)),
            kinds=kinds,
            time_grid=int(raw.get("time_grid", 4)),
        )
    except (KeyError, PathDomainError) as e:
        raise ConfigError("test_set", str(e)) from e
