import pandas as pd
import pytest
from conftest import random_g

from halo import check_cross_oracle, check_stability, diff_runs, gap_decays, hello
from pathhjb.report import prepare_run, write_run
from pathhjb.solver import SolverConfig, StateGrid


def gap_frame(gaps, floor=0.0):
    return pd.DataFrame({"n": [2**i for i in range(len(gaps))], "gap": gaps, "floor": floor})


def test_hello():
    assert hello() == "Halo pathhjb."


@pytest.mark.parametrize(
    "gaps, floor, decays",
    [
        ([1.0, 0.5, 0.25], 0.0, True),
        ([1.0, 0.5, 0.6], 0.0, False),
        ([1.0, 0.1, 0.12, 0.11], 0.2, True),
        ([1.0, 0.1, 0.3], 0.2, False),
        ([0.01, 0.02], 0.1, True),
    ],
)
def test_gap_decays(gaps, floor, decays):
    assert gap_decays(gap_frame(gaps, floor)) is decays


def test_gap_decays_with_slack():
    assert not gap_decays(gap_frame([1.0, 0.5, 0.51]))
    assert gap_decays(gap_frame([1.0, 0.5, 0.51]), slack=0.6)


def test_check_stability_joins_the_references(tmp_path):
    ctx = prepare_run(tmp_path, {"experiment": "stability"}, 0)
    table = gap_frame([1.0, 0.5])
    curve = pd.DataFrame({"n": [1, 2], "gap": [1.0, 0.5], "analytic_reference": [1.0, 0.5]})
    write_run(ctx, "stability", {"stability.csv": table, "gap_curve.csv": curve})
    merged = check_stability(ctx.path)
    assert merged["excess"].tolist() == [0.0, 0.0]


def test_diff_runs_reports_changed_tables(tmp_path):
    runs = []
    for root, value in (("a", 2.0), ("b", 2.0), ("c", 2.5)):
        ctx = prepare_run(tmp_path / root, {"experiment": "solve"}, 0)
        frame = pd.DataFrame({"value": [value], "runtime_ms": [float(len(root))]})
        write_run(ctx, "solve", {"values.csv": frame}, {"value_000.json": {"value": value, "runtime_ms": 1.0}})
        runs.append(ctx.path)
    assert diff_runs(runs[0], runs[1]) == []
    assert diff_runs(runs[0], runs[2]) == ["value_000.json", "values.csv"]


def test_lattice_and_fd_agree_on_the_heat_equation():
    c = random_g(terminal="state_square")
    cfg = SolverConfig("markovian", 50, state_grid=StateGrid(0.02, -10.0, 10.0))
    result = check_cross_oracle(c, cfg)
    assert result["lattice"] == pytest.approx(1.0, abs=1e-10)
    assert result["rel_diff"] < 1e-4
