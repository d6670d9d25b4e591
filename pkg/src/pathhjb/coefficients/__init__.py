from pathhjb.coefficients.field import (
    CoefficientField,
    CoefficientSequence,
    ControlGrid,
    ControlPoint,
    MarkovianView,
    RandomGSpec,
    make_random_g,
    make_uncontrolled,
)
from pathhjb.coefficients.library import (
    Perturbation,
    family_spec,
    load_family,
    load_functional,
    load_sequence,
    load_terminal,
)
from pathhjb.coefficients.validate import (
    Probe,
    ValidationReport,
    attainable_set,
    compact_convergence_gap,
    make_pairs,
    make_probes,
    theta_convexity,
    validate_growth,
    validate_nonanticipativity,
    validate_path_lipschitz,
    validate_random_g,
    validate_shared_growth,
    validate_terminal_bound,
    validate_terminal_lipschitz,
)

__all__ = [
    "CoefficientField",
    "CoefficientSequence",
    "ControlGrid",
    "ControlPoint",
    "MarkovianView",
    "Perturbation",
    "Probe",
    "RandomGSpec",
    "ValidationReport",
    "attainable_set",
    "compact_convergence_gap",
    "family_spec",
    "load_family",
    "load_functional",
    "load_sequence",
    "load_terminal",
    "make_pairs",
    "make_probes",
    "make_random_g",
    "make_uncontrolled",
    "theta_convexity",
    "validate_growth",
    "validate_nonanticipativity",
    "validate_path_lipschitz",
    "validate_random_g",
    "validate_shared_growth",
    "validate_terminal_bound",
    "validate_terminal_lipschitz",
]
