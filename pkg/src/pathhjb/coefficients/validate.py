"""Sampling validators for coefficient fields and sequences.

Validators never raise on a failed condition: they return a
``ValidationReport`` and callers that need a hard precondition call
``report.require()``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np
from rose import block_rng, get_logger
from scipy.spatial import ConvexHull, Delaunay, QhullError, cKDTree

from pathhjb.coefficients.field import (
    CoefficientField,
    CoefficientSequence,
    ControlGrid,
    ControlPoint,
    RandomGSpec,
)
from pathhjb.errors import PathDomainError, ValidationRefusal
from pathhjb.paths import (
    KNOT_TOL,
    SampledPath,
    TimedPath,
    insert_knots,
    stopped_sup_distance,
    sup_distance,
    sup_norm,
)
from pathhjb.sampling import sample_paths

_LOG_VALIDATE = {
    "name": "validate",
    "file": "pathhjb.log",
    "level": logging.INFO,
}

EXACT_TOL = 1e-12


class Probe(NamedTuple):
    f: ControlPoint
    t: float
    path: SampledPath


@dataclass(frozen=True)
class ValidationReport:
    condition: str
    passed: bool
    estimate: float
    declared: float | None = None
    probes: int = 0
    worst: dict = field(default_factory=dict)

    def require(self) -> "ValidationReport":
        if not self.passed:
            declared = "undeclared" if self.declared is None else f"{self.declared:.6g}"
            raise ValidationRefusal(
                self.condition,
                f"measured {self.estimate:.6g} against {declared} on {self.probes} probes",
                estimate=self.estimate,
                declared=self.declared,
                **self.worst,
            )
        return self

    def to_json(self) -> dict:
        return {
            "condition": self.condition,
            "passed": self.passed,
            "estimate": self.estimate,
            "declared": self.declared,
            "probes": self.probes,
            "worst": self.worst,
        }


def _full(path: SampledPath, horizon: float) -> SampledPath:
    if path.horizon < horizon - KNOT_TOL:
        return path.extend(horizon, path.values[-1])
    return path


# =========================
# PROBES
# =========================


def make_probes(
    c: CoefficientField,
    count: int = 64,
    bound: float = 2.0,
    seed: int = 0,
    res: int = 3,
) -> list[Probe]:
    """Seeded (f, t, ω) probes: bounded paths, start times spread over [0, T], grid actions."""
    rng = block_rng(1, seed)
    paths = sample_paths(rng, count, c.horizon_T, bound, dim=c.dim)
    grid = c.grid(res).points()
    times = rng.uniform(0.0, c.horizon_T, size=count)
    return [Probe(grid[i % len(grid)], float(t), p) for i, (t, p) in enumerate(zip(times, paths))]


def make_pairs(
    c: CoefficientField,
    count: int = 64,
    bound: float = 2.0,
    seed: int = 0,
    res: int = 3,
) -> list[tuple[Probe, SampledPath]]:
    """Probes paired with a second path: constant shifts and independent draws alternate."""
    rng = block_rng(2, seed)
    probes = make_probes(c, count, bound, seed, res)
    others = sample_paths(rng, count, c.horizon_T, bound, dim=c.dim)
    pairs = []
    for i, (probe, other) in enumerate(zip(probes, others)):
        if i % 2 == 0:
            delta = rng.uniform(-0.5, 0.5, size=c.dim)
            other = SampledPath(probe.path.grid, probe.path.values + delta)
        pairs.append((probe, other))
    return pairs


def _tail_perturbed(path: SampledPath, t: float, rng: np.random.Generator) -> SampledPath:
    horizon = path.horizon
    knotted = insert_knots(path, [t, 0.5 * (t + horizon)])
    grid, values = knotted.grid, knotted.values.copy()
    after = grid > t + KNOT_TOL
    ramp = (grid[after] - t) / (horizon - t)
    amplitude = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.5, size=path.dim)
    noise = rng.uniform(-0.5, 0.5, size=(int(after.sum()), path.dim))
    values[after] += ramp[:, None] * amplitude + noise
    return SampledPath(grid, values)


# =========================
# CONDITIONS ON ONE FIELD
# =========================


def validate_nonanticipativity(
    c: CoefficientField, probes: Iterable[Probe], seed: int = 0
) -> ValidationReport:
    """Coefficients at t must not see the path after t: compare against a tail-perturbed copy."""
    rng = block_rng(3, seed)
    worst, count, worst_probe = 0.0, 0, {}
    for f, t, path in probes:
        path = _full(path, c.horizon_T)
        if t >= path.horizon - KNOT_TOL:
            continue
        count += 1
        other = _tail_perturbed(path, t, rng)
        gap = max(
            float(np.max(np.abs(c.b(f, t, path) - c.b(f, t, other)))),
            float(np.max(np.abs(c.sigma(f, t, path) - c.sigma(f, t, other)))),
        )
        if gap > worst:
            worst, worst_probe = gap, {"t": t, "f": list(f.coords)}
    report = ValidationReport(
        "non_anticipativity", worst <= EXACT_TOL, worst, 0.0, count, worst_probe
    )
    _log(report)
    return report


def validate_growth(c: CoefficientField, probes: Iterable[Probe]) -> ValidationReport:
    """max (‖b‖ + ‖σ‖) / (1 + sup_{s ≤ t} ‖ω(s)‖); passes iff within the declared C."""
    worst, count, worst_probe = 0.0, 0, {}
    for f, t, path in probes:
        count += 1
        path = _full(path, c.horizon_T)
        size = np.linalg.norm(c.b(f, t, path)) + np.linalg.norm(c.sigma(f, t, path))
        ratio = float(size / (1.0 + sup_norm(path, t)))
        if ratio > worst:
            worst, worst_probe = ratio, {"t": t, "f": list(f.coords)}
    passed = worst <= c.growth_C + EXACT_TOL
    report = ValidationReport("linear_growth", passed, worst, c.growth_C, count, worst_probe)
    _log(report)
    return report


def validate_path_lipschitz(
    c: CoefficientField, probe_pairs: Iterable[tuple[Probe, SampledPath]]
) -> ValidationReport:
    """max coefficient discrepancy over sup_{s ≤ t} ‖ω(s) − α(s)‖ on pairs with positive distance."""
    worst, count, worst_probe = 0.0, 0, {}
    for (f, t, path), other in probe_pairs:
        path, other = _full(path, c.horizon_T), _full(other, c.horizon_T)
        dist = stopped_sup_distance(TimedPath(t, path), TimedPath(t, other), t)
        if dist <= EXACT_TOL:
            continue
        count += 1
        gap = max(
            float(np.linalg.norm(c.b(f, t, path) - c.b(f, t, other))),
            float(np.linalg.norm(c.sigma(f, t, path) - c.sigma(f, t, other))),
        )
        ratio = gap / dist
        if ratio > worst:
            worst, worst_probe = ratio, {"t": t, "f": list(f.coords), "distance": dist}
    declared = c.lipschitz_C
    passed = declared is not None and worst <= declared + EXACT_TOL
    report = ValidationReport("path_lipschitz", passed, worst, declared, count, worst_probe)
    _log(report)
    return report


def validate_terminal_bound(c: CoefficientField, paths: Iterable[SampledPath]) -> ValidationReport:
    values = [abs(c.psi(_full(p, c.horizon_T))) for p in paths]
    worst = float(max(values, default=0.0))
    declared = c.terminal_bound
    passed = declared is not None and worst <= declared + EXACT_TOL
    report = ValidationReport("terminal_bound", passed, worst, declared, len(values))
    _log(report)
    return report


def validate_terminal_lipschitz(
    c: CoefficientField, pairs: Iterable[tuple[SampledPath, SampledPath]]
) -> ValidationReport:
    worst, count = 0.0, 0
    for a, b in pairs:
        a, b = _full(a, c.horizon_T), _full(b, c.horizon_T)
        dist = sup_distance(a, b)
        if dist <= EXACT_TOL:
            continue
        count += 1
        worst = max(worst, abs(c.psi(a) - c.psi(b)) / dist)
    declared = c.terminal_lipschitz
    passed = declared is not None and worst <= declared + EXACT_TOL
    report = ValidationReport("terminal_lipschitz", passed, float(worst), declared, count)
    _log(report)
    return report


def validate_random_g(spec: RandomGSpec, probes: Iterable[TimedPath]) -> ValidationReport:
    """Interval order, 1/C ≤ a_lo, a_hi ≤ C and |b| ≤ C; the estimate is the largest violation."""
    C = spec.bound_C
    worst, count, worst_probe = 0.0, 0, {}
    for probe in probes:
        count += 1
        path = _full(probe.path, spec.horizon)
        v = {k: f(probe.t, path) for k, f in spec.bounds.items()}
        violations = {
            "b_order": v["b_lo"] - v["b_hi"],
            "a_order": v["a_lo"] - v["a_hi"],
            "a_lo_floor": 1.0 / C - v["a_lo"],
            "a_hi_floor": 1.0 / C - v["a_hi"],
            "a_lo_cap": v["a_lo"] - C,
            "a_hi_cap": v["a_hi"] - C,
            "b_lo_cap": abs(v["b_lo"]) - C,
            "b_hi_cap": abs(v["b_hi"]) - C,
        }
        name, amount = max(violations.items(), key=lambda kv: kv[1])
        if amount > worst:
            worst, worst_probe = amount, {"t": probe.t, "violation": name}
    report = ValidationReport("random_g_bounds", worst <= 0.0, float(worst), C, count, worst_probe)
    _log(report)
    return report


# =========================
# SEQUENCES
# =========================


def validate_shared_growth(
    seq: CoefficientSequence, n_values: Iterable[int], probes: list[Probe]
) -> ValidationReport:
    """One linear-growth constant for every member, n = 0 included."""
    declared = seq.growth_C if seq.growth_C is not None else seq.at(0).growth_C
    worst, worst_probe = 0.0, {}
    ns = sorted({0, *n_values})
    for n in ns:
        report = validate_growth(seq.at(n), probes)
        if report.estimate > worst:
            worst, worst_probe = report.estimate, {"n": n, **report.worst}
    passed = worst <= declared + EXACT_TOL
    report = ValidationReport(
        "shared_linear_growth", passed, worst, declared, len(probes) * len(ns), worst_probe
    )
    _log(report)
    return report


def compact_convergence_gap(
    seq: CoefficientSequence, n: int, probe_set: Iterable[Probe]
) -> tuple[float, float, float]:
    """Sup discrepancies (drift, diffusion, terminal) between member n and member 0."""
    limit, member = seq.at(0), seq.at(n)
    gap_b = gap_sigma = gap_psi = 0.0
    for f, t, path in probe_set:
        path = _full(path, limit.horizon_T)
        b0, bn = limit.b(f, t, path), member.b(f, t, path)
        s0, sn = limit.sigma(f, t, path), member.sigma(f, t, path)
        if b0.shape != bn.shape or s0.shape != sn.shape:
            raise PathDomainError(f"member {n} shapes {bn.shape}, {sn.shape} differ from the limit")
        gap_b = max(gap_b, float(np.linalg.norm(bn - b0)))
        gap_sigma = max(gap_sigma, float(np.linalg.norm(sn - s0)))
        gap_psi = max(gap_psi, abs(member.psi(path) - limit.psi(path)))
    return gap_b, gap_sigma, gap_psi


# =========================
# ATTAINABLE SET
# =========================


def attainable_set(c: CoefficientField, t: float, path: SampledPath, grid: ControlGrid) -> np.ndarray:
    """Rows (b, vec(σσ*)) for every grid action, in grid order."""
    path = _full(path, c.horizon_T)
    rows = []
    for f in grid.points():
        sigma = c.sigma(f, t, path)
        rows.append(np.concatenate([c.b(f, t, path), (sigma @ sigma.T).ravel()]))
    return np.asarray(rows)


def hull_gap(points: np.ndarray) -> float:
    """Approximate Hausdorff distance between a point set and its convex hull.

    Points are projected on their affine span; the hull is covered by a
    Delaunay triangulation and the gap is the largest distance from a simplex
    centroid or edge midpoint to the nearest sampled point.
    """
    points = np.unique(np.asarray(points, dtype=float), axis=0)
    if len(points) < 2:
        return 0.0
    centered = points - points.mean(axis=0)
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    rank = int(np.sum(s > 1e-10 * max(s[0], 1.0)))
    if rank == 0:
        return 0.0
    proj = centered @ vt[:rank].T
    if rank == 1:
        line = np.sort(proj[:, 0])
        return float(np.max(np.diff(line)) / 2.0)
    try:
        ConvexHull(proj)
        tri = Delaunay(proj)
    except QhullError as e:
        raise PathDomainError(f"cannot triangulate the attainable set: {e}") from e
    simplices = proj[tri.simplices]
    candidates = [simplices.mean(axis=1)]
    k = simplices.shape[1]
    for i in range(k):
        for j in range(i + 1, k):
            candidates.append(0.5 * (simplices[:, i] + simplices[:, j]))
    dist, _ = cKDTree(proj).query(np.concatenate(candidates))
    return float(dist.max())


def theta_convexity(
    c: CoefficientField, t: float, path: SampledPath, res: int = 5
) -> ValidationReport:
    """Hull gap of the attainable set at two nested resolutions; passes when it shrinks."""
    coarse_grid = c.grid(res)
    coarse = hull_gap(attainable_set(c, t, path, coarse_grid))
    fine = hull_gap(attainable_set(c, t, path, coarse_grid.refined()))
    passed = fine < coarse or fine <= EXACT_TOL
    report = ValidationReport(
        "theta_convexity", passed, fine, None, 2, {"coarse": coarse, "fine": fine}
    )
    _log(report)
    return report


def _log(report: ValidationReport) -> None:
    logger = get_logger(**_LOG_VALIDATE)
    level = logging.INFO if report.passed else logging.WARNING
    logger.log(
        level,
        f"{report.condition}: estimate={report.estimate:.6g} declared={report.declared} "
        f"probes={report.probes} passed={report.passed}",
    )
