import json
from pathlib import Path

import pandas as pd
from icecream import ic

from pathhjb.report import read_csv

TIMING_KEYS = ("runtime_ms", "timings")


def _strip_timings(obj):
    if isinstance(obj, dict):
        return {k: _strip_timings(v) for k, v in obj.items() if k not in TIMING_KEYS}
    if isinstance(obj, list):
        return [_strip_timings(v) for v in obj]
    return obj


def load_manifest(run_dir) -> dict:
    with open(Path(run_dir) / "manifest.json", encoding="utf-8") as f:
        return json.load(f)


def load_table(run_dir, name: str) -> pd.DataFrame:
    return read_csv(Path(run_dir) / name)


def diff_runs(run_a, run_b) -> list[str]:
    """Output files whose numeric content differs, timing fields and columns ignored."""
    run_a, run_b = Path(run_a), Path(run_b)
    outputs_a = load_manifest(run_a)["outputs"]
    outputs_b = load_manifest(run_b)["outputs"]
    differ = sorted(set(outputs_a) ^ set(outputs_b))
    for name in sorted(set(outputs_a) & set(outputs_b)):
        if name.endswith(".csv"):
            a = load_table(run_a, name).drop(columns=["runtime_ms"], errors="ignore")
            b = load_table(run_b, name).drop(columns=["runtime_ms"], errors="ignore")
            same = a.equals(b)
        else:
            with open(run_a / name, encoding="utf-8") as fa, open(run_b / name, encoding="utf-8") as fb:
                same = _strip_timings(json.load(fa)) == _strip_timings(json.load(fb))
        if not same:
            differ.append(name)
    ic(f"{len(differ)} differing outputs between {run_a.name} and {run_b.name}")
    return differ
