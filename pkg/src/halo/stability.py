from pathlib import Path

import numpy as np
import pandas as pd
from icecream import ic

from halo.runs import load_table


def check_stability(run_dir) -> pd.DataFrame:
    """Gap table of a stability run joined with its analytic references."""
    run_dir = Path(run_dir)
    table = load_table(run_dir, "stability.csv")
    curve = load_table(run_dir, "gap_curve.csv")
    merged = table.merge(curve[["n", "analytic_reference"]], on="n", how="left")
    merged["excess"] = merged["gap"] - merged["analytic_reference"]
    ic(merged[["n", "gap", "floor", "analytic_reference"]])
    return merged


def gap_decays(frame: pd.DataFrame, slack: float = 0.0) -> bool:
    """Gaps strictly decrease in n until they reach the floor (plus ``slack``)."""
    frame = frame.sort_values("n")
    gaps = frame["gap"].to_numpy()
    floor = float(frame["floor"].iloc[0]) + slack
    above = gaps > floor
    if not above.any():
        return True
    last = int(np.flatnonzero(above)[-1])
    return bool(np.all(np.diff(gaps[: last + 1]) < 0) and np.all(gaps[last + 1:] <= floor))
