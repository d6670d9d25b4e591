from pathhjb import coefficients, hamiltonian, lab, paths, solver
from pathhjb.cli import main
from pathhjb.errors import (
    BudgetRefusal,
    ConfigError,
    NumericError,
    PathDomainError,
    ValidationRefusal,
)
from pathhjb.paths import SampledPath, TimedPath
from pathhjb.report import VERSION as __version__

__all__ = [
    "__version__",
    "main",
    "paths",
    "coefficients",
    "hamiltonian",
    "solver",
    "lab",
    "SampledPath",
    "TimedPath",
    "BudgetRefusal",
    "ConfigError",
    "NumericError",
    "PathDomainError",
    "ValidationRefusal",
]
