import math

import numpy as np
import pytest
from conftest import random_g, start_at

from pathhjb.coefficients import load_family
from pathhjb.errors import BudgetRefusal, ConfigError, PathDomainError, ValidationRefusal
from pathhjb.paths import SampledPath, TimedPath
from pathhjb.solver import (
    SolverConfig,
    StateGrid,
    ValueEstimate,
    load_solver_config,
    make_quadrature,
    solve,
    solve_exhaustive,
    solve_markovian,
    solve_montecarlo,
    solve_tree,
)
from pathhjb.solver.tree import strategy_count, tree_nodes

WIDE = StateGrid(0.02, -10.0, 10.0)


@pytest.fixture
def drift():
    return random_g(b=(-1.0, 2.0), a=(1.0, 1.0), terminal="state")


@pytest.fixture
def variance():
    return random_g(b=(0.0, 0.0), a=(1.0, 3.0), terminal="state_square")


def path_dependent():
    return load_family(
        {"family": "builtin:running_max", "params": {"c1": 0.5}, "terminal": "running_max"}
    )


# =========================
# QUADRATURE AND CONFIG
# =========================


@pytest.mark.parametrize("name", ["binary", "gauss_hermite:2", "gauss_hermite:5"])
def test_quadratures_match_two_moments(name):
    assert make_quadrature(name).moment_error() < 1e-12
    assert len(make_quadrature(name, noise_dim=2)) == len(make_quadrature(name)) ** 2


@pytest.mark.parametrize("name", ["gauss_hermite:1", "gauss_hermite:x", "trinomial"])
def test_bad_quadratures_are_config_errors(name):
    with pytest.raises(ConfigError):
        make_quadrature(name)


def test_solver_config_loader():
    cfg = load_solver_config(
        {"mode": "markovian", "steps": 8, "control_res": [3, 2], "state_grid": {"dx": 0.05}}
    )
    assert cfg.control_res == (3, 2)
    assert cfg.state_grid == StateGrid(0.05, -6.0, 6.0)
    assert cfg.to_json()["control_res"] == [3, 2]


@pytest.mark.parametrize(
    "raw, field",
    [
        ({"mode": "tree"}, "solver.steps"),
        ({"mode": "grid", "steps": 2}, "solver.mode"),
        ({"mode": "tree", "steps": 0}, "solver.steps"),
        ({"mode": "tree", "steps": 2, "control_res": True}, "solver.control_res"),
        ({"mode": "tree", "steps": 2, "state_grid": {"lower": 1, "upper": 0}}, "solver.state_grid"),
    ],
)
def test_solver_config_names_the_bad_field(raw, field):
    with pytest.raises(ConfigError) as e:
        load_solver_config(raw)
    assert e.value.field == field


def test_exact_estimates_have_no_stderr():
    with pytest.raises(PathDomainError):
        ValueEstimate(1.0, 0.1, "tree")


# =========================
# TREE
# =========================


def test_tree_drift_closed_form(drift):
    estimate = solve_tree(drift, SolverConfig("tree", 3, start=start_at()))
    assert estimate.value == pytest.approx(2.0, abs=1e-12)
    assert estimate.argmax_policy_summary["root_control"]["coords"][0] == 1.0


def test_tree_variance_closed_form(variance):
    for quadrature in ("binary", "gauss_hermite:3"):
        cfg = SolverConfig("tree", 3, quadrature=quadrature, start=start_at())
        assert solve_tree(variance, cfg).value == pytest.approx(3.0, abs=1e-12)


def test_tree_starts_from_the_path_prefix(drift):
    wave = SampledPath(np.linspace(0.0, 1.0, 11), np.sin(np.linspace(0.0, 3.0, 11)))
    cfg = SolverConfig("tree", 2, start=TimedPath(0.5, wave))
    assert solve_tree(drift, cfg).value == pytest.approx(np.sin(1.5) + 1.0, abs=1e-12)


def test_tree_at_the_horizon_is_the_terminal(variance):
    estimate = solve_tree(variance, SolverConfig("tree", 4, start=start_at(1.5, t=1.0)))
    assert estimate.value == pytest.approx(2.25)
    assert estimate.nodes == 1


def test_tree_satisfies_bellman():
    c = path_dependent()
    estimate = solve_tree(c, SolverConfig("tree", 3, control_res=2, start=start_at(0.2)), keep_tree=True)
    tree = estimate.tree
    assert tree.check_bellman() <= 1e-12
    assert tree.root.value == estimate.value
    assert len(tree.nodes) == estimate.nodes


def test_tree_refuses_over_budget(variance):
    cfg = SolverConfig("tree", 10, start=start_at())
    with pytest.raises(BudgetRefusal) as e:
        solve_tree(variance, cfg)
    assert e.value.required == tree_nodes(6, 10)
    assert e.value.budget == cfg.budget


def test_tree_refuses_astronomical_trees():
    c = random_g(b=(-1.0, 1.0), a=(0.5, 1.5))
    with pytest.raises(BudgetRefusal) as e:
        solve_tree(c, SolverConfig("tree", 300, budget=10**6, start=start_at()))
    assert math.isinf(e.value.required)
    assert "inf" in str(e.value)


def test_budget_refusal_formats_huge_counts():
    assert "~10^376.6" in str(BudgetRefusal("tree nodes", 18**300, 10**6))
    assert "1e+06" in str(BudgetRefusal("tree nodes", 18**300, 10**6))


def test_tree_nodes_closed_form():
    for branching in (1, 2, 6, 18):
        for steps in range(6):
            assert tree_nodes(branching, steps) == sum(branching**k for k in range(steps + 1))


@pytest.mark.parametrize("x0", [-1.3, 0.0, 0.7, 2.1])
def test_tree_is_translation_equivariant(drift, x0):
    cfg = SolverConfig("tree", 3, start=start_at(x0))
    base = solve_tree(drift, SolverConfig("tree", 3, start=start_at())).value
    assert solve_tree(drift, cfg).value - x0 == pytest.approx(base, abs=1e-12)


@pytest.mark.parametrize("terminal", ["state", "state_square", "sine", "running_max"])
def test_tree_is_monotone_in_the_uncertainty_set(terminal):
    # the outer control grid contains every inner grid point
    inner = random_g(b=(0.0, 1.0), a=(1.0, 1.5), terminal=terminal)
    outer = random_g(b=(-1.0, 2.0), a=(0.5, 2.0), terminal=terminal)
    start = start_at(0.3)
    small = solve_tree(inner, SolverConfig("tree", 2, control_res=(2, 2), start=start)).value
    large = solve_tree(outer, SolverConfig("tree", 2, control_res=(4, 4), start=start)).value
    assert large >= small - 1e-12


@pytest.mark.parametrize(
    "cfg",
    [
        SolverConfig("tree", 3, start=start_at(0.4)),
        SolverConfig("exhaustive", 2, control_res=2, start=start_at(0.4)),
        SolverConfig("markovian", 20, start=start_at(0.4)),
        SolverConfig("montecarlo", 4, n_paths=512, start=start_at(0.4)),
    ],
    ids=lambda cfg: cfg.mode,
)
def test_constant_terminal_is_preserved(cfg):
    c = random_g(b=(-1.0, 2.0), a=(0.5, 2.0), terminal={"kind": "constant", "c": 2.5})
    estimate = solve(c, cfg)
    assert estimate.value == pytest.approx(2.5, abs=1e-12)
    assert estimate.stderr == pytest.approx(0.0, abs=1e-12)


def test_tree_checks_the_horizon(drift):
    with pytest.raises(PathDomainError):
        solve_tree(drift, SolverConfig("tree", 2, horizon=2.0, start=start_at()))
    with pytest.raises(PathDomainError):
        solve_tree(drift, SolverConfig("tree", 2))


def test_exhaustive_oracle_agrees_with_the_tree():
    c = path_dependent()
    cfg = SolverConfig("tree", 2, control_res=2, start=start_at(0.1))
    tree = solve_tree(c, cfg).value
    oracle = solve_exhaustive(c, cfg).value
    assert oracle == pytest.approx(tree, abs=1e-12)


@pytest.mark.parametrize("seed", range(50))
def test_tree_equals_exhaustive_on_random_instances(seed):
    rng = np.random.default_rng(seed)
    name = ("state_affine", "running_max", "delayed")[seed % 3]
    terminal = ("state_square", "running_max", "state_abs", "state")[seed % 4]
    params = {"c0": rng.uniform(-1.0, 1.0), "c1": rng.uniform(-1.0, 1.0), "a_hi": rng.uniform(1.0, 3.0)}
    c = load_family({"family": f"builtin:{name}", "params": params, "terminal": terminal})
    cfg = SolverConfig("tree", 1 + seed % 3, control_res=(3, 1), start=start_at(rng.uniform(-1.0, 1.0)))
    assert solve_exhaustive(c, cfg).value == pytest.approx(solve_tree(c, cfg).value, abs=1e-12)


def test_exhaustive_refuses_over_budget(drift):
    with pytest.raises(BudgetRefusal):
        solve_exhaustive(drift, SolverConfig("exhaustive", 4, start=start_at()))


def test_exhaustive_refuses_before_enumerating():
    c = random_g(b=(-1.0, 1.0), a=(0.5, 1.5))
    for steps in (10, 30):
        with pytest.raises(BudgetRefusal) as e:
            solve_exhaustive(c, SolverConfig("exhaustive", steps, strategy_budget=10**6, start=start_at()))
        assert math.isinf(e.value.required)


def test_strategy_count():
    assert strategy_count(2, 2, 2) == 8
    assert strategy_count(1, 2, 50) == 1
    assert strategy_count(9, 2, 3) == 9**7
    assert math.isinf(strategy_count(9, 2, 10))


# =========================
# LATTICE
# =========================


def test_lattice_variance_closed_form(variance):
    cfg = SolverConfig("markovian", 10, state_grid=WIDE, start=start_at(0.5))
    assert solve_markovian(variance, cfg).value == pytest.approx(3.25, abs=1e-10)


def test_lattice_drift_closed_form(drift):
    cfg = SolverConfig("markovian", 20, state_grid=WIDE, start=start_at())
    assert solve(drift, cfg).value == pytest.approx(2.0, abs=1e-10)


@pytest.mark.parametrize("terminal", ["state_square", "state_abs"])
def test_lattice_single_step_equals_the_tree(terminal):
    # σ ∈ {1, 2} lands both shocks on grid states, so the projection is exact
    c = random_g(b=(0.0, 0.0), a=(1.0, 4.0), terminal=terminal)
    cfg = SolverConfig("markovian", 1, control_res=(2, 2), state_grid=StateGrid(0.02, -6.0, 6.0), start=start_at())
    lattice = solve_markovian(c, cfg).value
    tree = solve_tree(c, cfg).value
    assert lattice == pytest.approx(tree, abs=1e-12)
    assert tree == pytest.approx(4.0 if terminal == "state_square" else 2.0, abs=1e-12)


def test_lattice_refuses_path_dependent_fields():
    with pytest.raises(ValidationRefusal) as e:
        solve_markovian(path_dependent(), SolverConfig("markovian", 4, start=start_at()))
    assert e.value.condition == "markovian"


def test_lattice_start_outside_the_grid(variance):
    with pytest.raises(PathDomainError):
        solve_markovian(variance, SolverConfig("markovian", 4, start=start_at(7.0)))


# =========================
# MONTE CARLO
# =========================


def test_montecarlo_is_a_lower_bound(drift):
    cfg = SolverConfig("montecarlo", 8, n_paths=4096, start=start_at())
    estimate = solve_montecarlo(drift, cfg, seed=11)
    assert estimate.stderr > 0
    assert abs(estimate.value - 2.0) <= 3 * estimate.stderr
    assert estimate.argmax_policy_summary["policy"]["control"][0] == 1.0


def test_montecarlo_threshold_policies():
    c = path_dependent()
    cfg = SolverConfig(
        "montecarlo",
        6,
        control_res=2,
        n_paths=1024,
        policies=({"kind": "constant"}, {"kind": "running_max_threshold", "theta": [0.0, 0.5]}),
        start=start_at(),
    )
    estimate = solve(c, cfg, seed=2)
    assert estimate.argmax_policy_summary["policies"] == 6
    assert np.isfinite(estimate.value)


def test_montecarlo_ignores_worker_count(variance):
    cfg = SolverConfig("montecarlo", 5, n_paths=2048, start=start_at())
    one = solve_montecarlo(variance, cfg, seed=3, threads=1)
    four = solve_montecarlo(variance, cfg, seed=3, threads=4)
    assert one.value == four.value
    assert one.stderr == four.stderr


@pytest.mark.slow
def test_montecarlo_running_max_stays_below_the_tree():
    c = random_g(a=(1.0, 2.0), terminal="running_max")
    cfg = SolverConfig("tree", 10, control_res=(1, 2), start=start_at())
    tree = solve_tree(c, cfg).value
    estimate = solve_montecarlo(c, cfg, n_paths=4096, seed=5)
    assert estimate.stderr > 0
    assert estimate.value <= tree + 3 * estimate.stderr


def test_montecarlo_rejects_unknown_policies(drift):
    cfg = SolverConfig("montecarlo", 2, policies=({"kind": "bandit"},), start=start_at())
    with pytest.raises(ConfigError):
        solve_montecarlo(drift, cfg)
