import numpy as np
import pytest
from conftest import random_g, start_at, variance_sequence

from pathhjb.coefficients import (
    ControlGrid,
    ControlPoint,
    Perturbation,
    Probe,
    compact_convergence_gap,
    family_spec,
    load_family,
    load_functional,
    load_sequence,
    load_terminal,
    make_pairs,
    make_probes,
    theta_convexity,
    validate_growth,
    validate_nonanticipativity,
    validate_path_lipschitz,
    validate_random_g,
    validate_shared_growth,
    validate_terminal_lipschitz,
)
from pathhjb.coefficients.functionals import Clipped, RunningMax, StateAffine
from pathhjb.coefficients.validate import hull_gap
from pathhjb.errors import ConfigError, PathDomainError, ValidationRefusal
from pathhjb.paths import SampledPath


def test_control_grid_is_lexicographic():
    grid = ControlGrid.of(3, 2)
    assert len(grid) == 9
    assert grid.indices[:4] == [(0, 0), (0, 1), (0, 2), (1, 0)]
    np.testing.assert_allclose(grid.coords[1], [0.0, 0.5])
    np.testing.assert_allclose(ControlGrid.of(1, 1).coords, [[0.0]])


def test_refined_grid_contains_the_coarse_one():
    grid = ControlGrid.of((3, 2), 2)
    fine = {tuple(c) for c in grid.refined().coords}
    assert all(tuple(c) in fine for c in grid.coords)
    with pytest.raises(PathDomainError):
        ControlGrid.of((3, 2, 1), 2)


def test_control_point_stays_in_the_unit_box():
    with pytest.raises(PathDomainError):
        ControlPoint((0.5, 1.5))


def test_random_g_interpolates_between_bounds():
    c = random_g(b=(-1.0, 2.0), a=(1.0, 3.0))
    path = SampledPath.constant([0.3], 1.0)
    assert c.b([0.0, 0.0], 0.5, path)[0] == pytest.approx(-1.0)
    assert c.b([1.0, 0.0], 0.5, path)[0] == pytest.approx(2.0)
    assert c.sigma([0.0, 1.0], 0.5, path)[0, 0] == pytest.approx(np.sqrt(3.0))
    assert c.sigma([0.0, 0.5], 0.5, path)[0, 0] == pytest.approx(np.sqrt(2.0))
    assert c.markovian_flag and c.action_dim == 2


def test_random_g_refuses_nonpositive_variance():
    with pytest.raises(ValidationRefusal) as e:
        random_g(a=(0.0, 1.0))
    assert e.value.condition == "random_g_bounds"


def test_path_dependent_builtins_are_not_markovian():
    c = load_family({"family": "builtin:running_max", "terminal": "state"})
    assert not c.markovian_flag
    path = SampledPath([0.0, 0.5, 1.0], [0.0, 1.5, 0.0])
    assert c.b([1.0, 0.0], 1.0, path)[0] == pytest.approx(1.5)


def test_zero_family_is_uncontrolled():
    assert family_spec({"family": "builtin:zero"}) is None
    c = load_family({"family": "builtin:zero", "terminal": {"kind": "constant", "c": 2.0}})
    assert c.action_dim == 1
    assert c.psi(SampledPath.constant([5.0], 1.0)) == 2.0


def test_loaders_name_the_bad_field():
    with pytest.raises(ConfigError) as e:
        load_functional({"kind": "nope"}, 1.0, "params.b_hi")
    assert e.value.field == "params.b_hi.kind"
    with pytest.raises(ConfigError):
        load_family({"family": "random_g", "params": {"b_lo": 0}})
    with pytest.raises(ConfigError):
        load_family({"family": "builtin:unknown"})
    with pytest.raises(ConfigError):
        load_terminal({"kind": "clipped", "width": 3}, 1.0)
    assert isinstance(load_terminal("clipped", 2.0), Clipped)


def test_functional_declarations():
    affine = StateAffine(0.0, 0.5, -2.0, 2.0)
    assert affine.lipschitz == 0.5 and affine.sup == 2.0
    assert RunningMax(0.0, 1.0).sup is None
    assert load_functional(1.5, 1.0).sup == 1.5


def test_nonanticipativity_catches_tail_reading():
    c = load_family({"family": "builtin:tail_reading", "terminal": "state"})
    report = validate_nonanticipativity(c, make_probes(c, seed=3), seed=3)
    assert not report.passed
    assert report.estimate > 0.1
    with pytest.raises(ValidationRefusal):
        report.require()


def test_nonanticipativity_passes_running_max():
    c = load_family({"family": "builtin:running_max", "terminal": "state"})
    report = validate_nonanticipativity(c, make_probes(c))
    assert report.passed
    assert report.estimate == 0.0


def test_nonanticipativity_counts_only_checked_points():
    c = load_family({"family": "builtin:running_max", "terminal": "state"})
    path = SampledPath.constant([0.5], 1.0)
    f = ControlPoint((0.5, 0.5))
    points = [Probe(f, 0.2, path), Probe(f, 0.7, path), Probe(f, 1.0, path)]
    assert validate_nonanticipativity(c, points).probes == 2


def test_growth_and_lipschitz_hold_for_state_affine():
    c = load_family(
        {"family": "builtin:state_affine", "params": {"c1": 0.5}, "terminal": "clipped"}
    )
    assert validate_growth(c, make_probes(c)).passed
    pairs = make_pairs(c)
    report = validate_path_lipschitz(c, pairs)
    assert report.passed and report.declared == pytest.approx(0.5)
    assert validate_terminal_lipschitz(c, [(p.path, o) for p, o in pairs]).passed


def test_path_lipschitz_fails_without_a_declared_constant():
    c = load_family({"family": "builtin:tail_reading", "terminal": "state"})
    report = validate_path_lipschitz(c, make_pairs(c))
    assert report.declared is None and not report.passed


def test_random_g_bounds_report_the_violation():
    spec = family_spec(
        {"family": "random_g", "params": {"b_lo": 1, "b_hi": 0, "a_lo": 1, "a_hi": 2, "bound_C": 3}}
    )
    report = validate_random_g(spec, [start_at(0.0), start_at(1.0, 0.5)])
    assert not report.passed
    assert report.estimate == pytest.approx(1.0)
    assert report.worst["violation"] == "b_order"


def test_shared_growth_refuses_growing_members():
    seq = load_sequence(
        {
            "base": {"family": "random_g", "params": {"b_lo": 0, "b_hi": 0, "a_lo": 1, "a_hi": 2}},
            "perturbation": {"kind": "a_hi_growth", "scale": 10.0},
        }
    )
    probes = make_probes(seq.at(0))
    assert not validate_shared_growth(seq, (1, 2, 4, 16), probes).passed
    assert validate_shared_growth(variance_sequence(), (1, 2, 4), probes).passed


def test_compact_convergence_gap_of_variance_shift():
    seq = variance_sequence()
    gap_b, gap_sigma, gap_psi = compact_convergence_gap(seq, 1, make_probes(seq.at(0)))
    assert gap_b == 0.0 and gap_psi == 0.0
    assert gap_sigma == pytest.approx(np.sqrt(3.0) - np.sqrt(2.0))


def test_sequence_members_and_analytic_gap():
    seq = variance_sequence(scale=2.0)
    assert seq.at(4).sigma([0.0, 1.0], 0.0, SampledPath.constant([0.0], 1.0))[0, 0] == pytest.approx(
        np.sqrt(2.5)
    )
    assert seq.at(4) is seq.at(4)
    with pytest.raises(PathDomainError):
        seq.at(-1)
    spec = family_spec(
        {"family": "random_g", "params": {"b_lo": 0, "b_hi": 0, "a_lo": 1, "a_hi": 2}, "terminal": "state_square"}
    )
    assert Perturbation("a_hi_shift", 2.0).analytic_gap(spec, 4, 1.0) == pytest.approx(0.5)
    assert Perturbation("b_hi_cosine").analytic_gap(spec, 4, 1.0) is None
    with pytest.raises(ConfigError):
        Perturbation("wobble")


def test_theta_convexity_shrinks_on_refinement():
    c = random_g(b=(-1.0, 1.0), a=(1.0, 2.0))
    report = theta_convexity(c, 0.0, SampledPath.constant([0.0], 1.0))
    assert report.passed
    assert report.worst["fine"] < report.worst["coarse"]


def test_hull_gap_of_a_segment():
    points = np.array([[0.0, 0.0], [1.0, 1.0], [3.0, 3.0]])
    assert hull_gap(points) == pytest.approx(np.sqrt(2.0))
    assert hull_gap(points[:1]) == 0.0


def test_probes_are_seeded():
    c = random_g()
    first, again = make_probes(c, seed=5), make_probes(c, seed=5)
    assert [p.t for p in first] == [p.t for p in again]
    assert all(p.path.equals(q.path) for p, q in zip(first, again))
