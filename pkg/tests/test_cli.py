import json
from pathlib import Path

import pytest

from halo import diff_runs, load_manifest, load_table
from pathhjb.cli import exit_code, main
from pathhjb.errors import BudgetRefusal, ConfigError, ValidationRefusal

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write_config(tmp_path, name: str, raw: dict) -> Path:
    path = tmp_path / name
    path.write_text(json.dumps(raw), encoding="utf-8")
    return path


def only_run(out: Path) -> Path:
    runs = [p for p in out.iterdir() if p.is_dir()]
    assert len(runs) == 1
    return runs[0]


def without_timings(path: Path) -> list[str]:
    # runtime_ms is the last column
    lines = path.read_text(encoding="utf-8").splitlines()
    return lines[:1] + [line.rsplit(",", 1)[0] for line in lines[1:]]


def small_stability() -> dict:
    with open(CONFIGS / "stability_variance.json", encoding="utf-8") as f:
        raw = json.load(f)
    raw["test_set"]["size"] = 4
    raw["n_values"] = [1, 2, 4]
    return raw


def test_exit_codes():
    assert exit_code(ConfigError("solver.steps", "missing")) == 2
    assert exit_code(ValidationRefusal("markovian", "path-dependent")) == 2
    assert exit_code(BudgetRefusal("tree nodes", 10, 5)) == 3
    assert exit_code(RuntimeError("boom")) == 1


def test_solve_writes_values(tmp_path):
    out = tmp_path / "runs"
    code = main(["solve", "--config", str(CONFIGS / "solve_drift.json"), "--out", str(out), "--threads", "1"])
    assert code == 0
    run = only_run(out)
    values = load_table(run, "values.csv")
    assert values["value"].tolist() == pytest.approx([2.0, 1.7], abs=1e-12)
    assert (values["stderr"] == 0.0).all()
    manifest = load_manifest(run)
    assert manifest["command"] == "solve"
    assert "value_001.json" in manifest["outputs"]


def test_stability_is_independent_of_threads(tmp_path):
    config = write_config(tmp_path, "stability.json", small_stability())
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["stability", "--config", str(config), "--out", str(a), "--threads", "1"]) == 0
    assert main(["stability", "--config", str(config), "--out", str(b), "--threads", "4"]) == 0
    run_a, run_b = only_run(a), only_run(b)
    assert run_a.name == run_b.name
    assert diff_runs(run_a, run_b) == []
    assert (run_a / "gap_curve.csv").read_bytes() == (run_b / "gap_curve.csv").read_bytes()
    assert without_timings(run_a / "stability.csv") == without_timings(run_b / "stability.csv")
    gaps = load_table(run_a, "stability.csv")["gap"].tolist()
    assert gaps == pytest.approx([1.0, 0.5, 0.25], abs=1e-10)


def test_seed_changes_the_run_directory(tmp_path):
    config = write_config(tmp_path, "stability.json", small_stability())
    out = tmp_path / "runs"
    main(["stability", "--config", str(config), "--out", str(out), "--threads", "1", "--seed", "1"])
    main(["stability", "--config", str(config), "--out", str(out), "--threads", "1", "--seed", "2"])
    assert len([p for p in out.iterdir() if p.is_dir()]) == 2


def test_malformed_config_exits_2(tmp_path):
    config = tmp_path / "broken.json"
    config.write_text("{\"family\": ", encoding="utf-8")
    out = tmp_path / "runs"
    assert main(["solve", "--config", str(config), "--out", str(out)]) == 2
    assert "ConfigError" in (out / "errors.txt").read_text(encoding="utf-8")


def test_missing_section_exits_2(tmp_path):
    raw = {"family": {"family": "random_g", "params": {"b_lo": 0, "b_hi": 0, "a_lo": 1, "a_hi": 1}}}
    config = write_config(tmp_path, "solve.json", raw)
    out = tmp_path / "runs"
    assert main(["solve", "--config", str(config), "--out", str(out)]) == 2
    assert "solver" in (out / "errors.txt").read_text(encoding="utf-8")


def test_tree_over_budget_exits_3(tmp_path):
    with open(CONFIGS / "solve_drift.json", encoding="utf-8") as f:
        raw = json.load(f)
    raw["solver"]["steps"] = 10
    config = write_config(tmp_path, "solve.json", raw)
    out = tmp_path / "runs"
    assert main(["solve", "--config", str(config), "--out", str(out), "--threads", "1"]) == 3
    assert "BudgetRefusal" in (out / "errors.txt").read_text(encoding="utf-8")


def test_astronomical_tree_exits_3(tmp_path):
    with open(CONFIGS / "solve_drift.json", encoding="utf-8") as f:
        raw = json.load(f)
    raw["family"]["params"].update({"b_lo": -1, "b_hi": 1, "a_lo": 0.5, "a_hi": 1.5})
    raw["solver"].update({"steps": 300, "budget": 1000000})
    config = write_config(tmp_path, "solve.json", raw)
    out = tmp_path / "runs"
    assert main(["solve", "--config", str(config), "--out", str(out), "--threads", "1"]) == 3
    assert "inf" in (out / "errors.txt").read_text(encoding="utf-8")


def test_validate_refuses_anticipative_coefficients(tmp_path):
    out = tmp_path / "runs"
    code = main(["validate", "--config", str(CONFIGS / "validate_tail_reading.json"), "--out", str(out)])
    assert code == 2
    assert "non_anticipativity" in (out / "errors.txt").read_text(encoding="utf-8")
    table = load_table(only_run(out), "validation.csv")
    assert not table.set_index("condition").loc["non_anticipativity", "passed"]


def test_validate_passes_running_max(tmp_path):
    raw = {"horizon": 1.0, "family": {"family": "builtin:running_max", "terminal": "state"}, "seed": 0}
    config = write_config(tmp_path, "validate.json", raw)
    out = tmp_path / "runs"
    assert main(["validate", "--config", str(config), "--out", str(out)]) == 0
    assert not (out / "errors.txt").exists()
