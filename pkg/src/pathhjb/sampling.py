"""Seeded families of bounded sampled paths (probes and compact test sets)."""

from __future__ import annotations

import numpy as np

from pathhjb.errors import PathDomainError
from pathhjb.paths import SampledPath

PATH_KINDS = ("walk", "hat", "constant")


def _fit_bound(values: np.ndarray, bound: float) -> np.ndarray:
    peak = np.linalg.norm(values, axis=1).max()
    if peak > bound:
        values = values * (bound / peak)
    return values


def random_walk_path(
    rng: np.random.Generator, horizon: float, bound: float, steps: int = 8, dim: int = 1
) -> SampledPath:
    """Walk with increments uniform in [-2R/steps, 2R/steps], rescaled into the R-ball."""
    grid = np.linspace(0.0, horizon, steps + 1)
    start = rng.uniform(-0.5 * bound, 0.5 * bound, size=(1, dim))
    steps_ = rng.uniform(-1.0, 1.0, size=(steps, dim)) * (2.0 * bound / steps)
    values = np.concatenate([start, start + np.cumsum(steps_, axis=0)])
    return SampledPath(grid, _fit_bound(values, bound))


def hat_path(
    height: float, center: float, width: float, horizon: float, base: float = 0.0
) -> SampledPath:
    """Scaled hat: ``base`` outside (center - width, center + width), peak at center."""
    if width <= 0 or not 0 <= center <= horizon:
        raise PathDomainError(f"bad hat center={center} width={width} on [0, {horizon}]")
    knots = sorted({0.0, max(center - width, 0.0), center, min(center + width, horizon), horizon})
    grid = np.asarray(knots)
    values = base + height * np.clip(1.0 - np.abs(grid - center) / width, 0.0, None)
    return SampledPath(grid, values)


def sample_paths(
    rng: np.random.Generator,
    count: int,
    horizon: float,
    bound: float,
    kinds: tuple[str, ...] = PATH_KINDS,
    dim: int = 1,
) -> list[SampledPath]:
    """``count`` paths with sup-norm at most ``bound``, cycling through ``kinds``."""
    unknown = set(kinds) - set(PATH_KINDS)
    if unknown:
        raise PathDomainError(f"unknown path kinds {sorted(unknown)}")
    paths = []
    for i in range(count):
        kind = kinds[i % len(kinds)]
        if kind == "walk":
            paths.append(random_walk_path(rng, horizon, bound, dim=dim))
        elif kind == "hat" and dim == 1:
            height = rng.uniform(-bound, bound)
            center = rng.uniform(0.0, horizon)
            width = rng.uniform(0.1, 0.5) * horizon
            paths.append(hat_path(height, center, width, horizon))
        else:
            x = rng.uniform(-1.0, 1.0, size=dim)
            x *= rng.uniform(0.0, bound) / max(np.linalg.norm(x), 1e-300)
            paths.append(SampledPath.constant(x, horizon))
    return paths
