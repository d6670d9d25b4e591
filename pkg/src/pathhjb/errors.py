"""Exceptions raised by pathhjb.

The command line maps them to exit codes: configuration, validation and
domain errors exit with 2, budget refusals with 3, everything else with 1.
"""

from __future__ import annotations

import math


class PathDomainError(ValueError):
    """Input outside the domain of an operation (horizon, dimension, shape)."""


class ConfigError(ValueError):
    """Malformed configuration; ``field`` is the dotted path of the bad entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ValidationRefusal(ValueError):
    """A coefficient or sequence condition failed on the probe set."""

    def __init__(self, condition: str, message: str, **measured):
        self.condition = condition
        self.measured = measured
        super().__init__(f"[{condition}] {message}")


class BudgetRefusal(RuntimeError):
    """A node or strategy guardrail fired; nothing was truncated."""

    def __init__(self, what: str, required: float, budget: float):
        self.what = what
        self.required = required
        self.budget = budget
        super().__init__(f"{what} needs {_count(required)}, budget is {_count(budget)}")


def _count(x) -> str:
    if isinstance(x, int) and x.bit_length() > 1000:
        return f"~10^{math.log10(x):.1f}"
    return f"{x:.6g}"


class NumericError(ArithmeticError):
    """A coefficient or terminal produced NaN or inf at ``where``."""

    def __init__(self, where: str, message: str = "non-finite value"):
        self.where = where
        super().__init__(f"{message} at {where}")
