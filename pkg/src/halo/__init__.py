from halo.oracle import check_cross_oracle
from halo.runs import diff_runs, load_manifest, load_table
from halo.stability import check_stability, gap_decays


def hello() -> str:
    return "Halo pathhjb."


__all__ = [
    "check_cross_oracle",
    "check_stability",
    "diff_runs",
    "gap_decays",
    "load_manifest",
    "load_table",
    "hello",
]
