import json

import numpy as np
import pandas as pd

from pathhjb.report import VERSION, config_hash, prepare_run, read_csv, write_csv, write_json, write_run


def test_config_hash_ignores_key_order():
    a = config_hash({"solver": {"mode": "tree", "steps": 4}, "horizon": 1.0}, 0)
    b = config_hash({"horizon": 1.0, "solver": {"steps": 4, "mode": "tree"}}, 0)
    assert a == b
    assert a != config_hash({"horizon": 1.0, "solver": {"steps": 4, "mode": "tree"}}, 1)
    assert len(a) == 64


def test_run_directory_is_the_hash_prefix(tmp_path):
    ctx = prepare_run(tmp_path, {"horizon": 1.0}, 7)
    assert ctx.path == tmp_path / ctx.config_hash[:12]
    assert ctx.path.is_dir()
    assert ctx.provenance == {"config_hash": ctx.config_hash, "seed": 7, "version": VERSION}


def test_csv_has_a_provenance_line_and_full_precision(tmp_path):
    ctx = prepare_run(tmp_path, {"horizon": 1.0}, 0)
    path = write_csv(ctx, "t.csv", pd.DataFrame({"n": [1, 2], "gap": [0.1, 1.0 / 3.0]}))
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == f"# config_hash={ctx.config_hash}, seed=0"
    assert lines[1] == "n,gap"
    assert lines[2] == "1,0.10000000000000001"
    back = read_csv(path)
    assert back["gap"].tolist() == [0.1, 1.0 / 3.0]


def test_json_carries_provenance_and_nulls(tmp_path):
    ctx = prepare_run(tmp_path, {"horizon": 1.0}, 3)
    path = write_json(ctx, "d.json", {"gap": float("nan"), "values": np.array([1.0, 2.0])})
    document = json.loads(path.read_text(encoding="utf-8"))
    assert document["gap"] is None
    assert document["values"] == [1.0, 2.0]
    assert document["provenance"]["seed"] == 3


def test_manifest_lists_outputs(tmp_path):
    ctx = prepare_run(tmp_path, {"horizon": 1.0}, 0)
    manifest = write_run(
        ctx,
        "solve",
        {"values.csv": pd.DataFrame({"value": [2.0]})},
        {"value_000.json": {"value": 2.0}},
        {"solve": 1.5},
    )
    assert manifest.outputs == ["values.csv", "value_000.json"]
    on_disk = json.loads((ctx.path / "manifest.json").read_text(encoding="utf-8"))
    assert on_disk["command"] == "solve"
    assert on_disk["timings"] == {"solve": 1.5}
