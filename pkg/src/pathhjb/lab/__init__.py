from pathhjb.lab.fdm import FDGrid, ResidualStats, ValueTable, fd_oracle_markovian, residual_probe
from pathhjb.lab.lipschitz import (
    LipschitzPair,
    LipschitzReport,
    lipschitz_budget,
    run_lipschitz,
    sample_pairs,
)
from pathhjb.lab.stability import N_VALUES, StabilityReport, run_stability
from pathhjb.lab.testset import CompactTestSet, load_test_set

__all__ = [
    "N_VALUES",
    "CompactTestSet",
    "FDGrid",
    "LipschitzPair",
    "LipschitzReport",
    "ResidualStats",
    "StabilityReport",
    "ValueTable",
    "fd_oracle_markovian",
    "lipschitz_budget",
    "load_test_set",
    "residual_probe",
    "run_lipschitz",
    "run_stability",
    "sample_pairs",
]
