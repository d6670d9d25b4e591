"""Built-in families, sequence perturbations and their JSON loaders.

A functional is written either as a number (a constant) or as
``{"kind": <name>, ...params}``; a family as

    {"family": "random_g", "horizon": 1.0,
     "params": {"b_lo": ..., "b_hi": ..., "a_lo": ..., "a_hi": ..., "bound_C": 3.0},
     "terminal": {"kind": "state_square"}}

or ``{"family": "builtin:<name>", "params": {...}, "terminal": ...}``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from rose import get_logger

from pathhjb.coefficients.field import (
    CoefficientField,
    CoefficientSequence,
    RandomGSequence,
    RandomGSpec,
    make_random_g,
    make_uncontrolled,
    shift,
)
from pathhjb.coefficients.functionals import (
    BOUND_KINDS,
    TERMINAL_KINDS,
    Constant,
    Cosine,
    Sine,
    Sum,
    TerminalSum,
)
from pathhjb.errors import ConfigError

_LOG_LIBRARY = {
    "name": "library",
    "file": "pathhjb.log",
    "level": logging.INFO,
}

BUILTINS = ("constant", "state_affine", "running_max", "delayed", "tail_reading", "zero")
PERTURBATIONS = (
    "none",
    "b_hi_shift",
    "b_shift",
    "a_hi_shift",
    "b_hi_cosine",
    "terminal_sine",
    "a_hi_growth",
)


# =========================
# FUNCTIONALS
# =========================


def load_functional(raw, horizon: float, where: str = "functional"):
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return Constant(float(raw))
    if not isinstance(raw, dict) or "kind" not in raw:
        raise ConfigError(where, f"expected a number or an object with 'kind', got {raw!r}")
    params = {k: v for k, v in raw.items() if k != "kind"}
    kind = raw["kind"]
    if kind not in BOUND_KINDS:
        raise ConfigError(f"{where}.kind", f"unknown functional {kind!r}, known: {sorted(BOUND_KINDS)}")
    if kind == "tail_reading":
        params.setdefault("horizon", horizon)
    try:
        return BOUND_KINDS[kind](**params)
    except TypeError as e:
        raise ConfigError(where, str(e)) from e


def load_terminal(raw, horizon: float, where: str = "terminal"):
    if isinstance(raw, str):
        raw = {"kind": raw}
    if not isinstance(raw, dict) or "kind" not in raw:
        raise ConfigError(where, f"expected an object with 'kind', got {raw!r}")
    kind = raw["kind"]
    if kind not in TERMINAL_KINDS:
        raise ConfigError(f"{where}.kind", f"unknown terminal {kind!r}, known: {sorted(TERMINAL_KINDS)}")
    params = {k: v for k, v in raw.items() if k != "kind"}
    params["horizon"] = float(params.get("horizon", horizon))
    try:
        return TERMINAL_KINDS[kind](**params)
    except TypeError as e:
        raise ConfigError(where, str(e)) from e


def _default_bound(b_lo, b_hi, a_lo, a_hi) -> float:
    candidates = [1.0]
    for f in (b_lo, b_hi, a_hi):
        if f.sup is not None:
            candidates.append(f.sup)
    if a_lo.sup is not None and isinstance(a_lo, Constant) and a_lo.c > 0:
        candidates.append(1.0 / a_lo.c)
    return float(max(candidates))


# =========================
# FAMILIES
# =========================


def random_g_spec(params: dict, terminal, horizon: float, name: str = "random_g") -> RandomGSpec:
    missing = {"b_lo", "b_hi", "a_lo", "a_hi"} - set(params)
    if missing:
        raise ConfigError("params", f"random_g needs {sorted(missing)}")
    bounds = {
        key: load_functional(params[key], horizon, f"params.{key}")
        for key in ("b_lo", "b_hi", "a_lo", "a_hi")
    }
    bound_C = params.get("bound_C")
    if bound_C is None:
        bound_C = _default_bound(**bounds)
    return RandomGSpec(**bounds, bound_C=float(bound_C), terminal=terminal, name=name)


def builtin_spec(name: str, params: dict, terminal, horizon: float) -> RandomGSpec:
    """Random-G families whose upper drift bound is a functional of the named kind.

    ``constant`` takes plain ``b_lo``, ``b_hi``, ``a_lo``, ``a_hi``; the others
    take ``c0``, ``c1`` (and ``delay``) for b_hi, clipped to [lo, hi] (default
    [-2, 2]), with constant b_lo (default lo) and variance bounds.
    """
    params = dict(params)
    if name == "constant":
        spec_params = {
            "b_lo": params.pop("b_lo", 0.0),
            "b_hi": params.pop("b_hi", 0.0),
            "a_lo": params.pop("a_lo", 1.0),
            "a_hi": params.pop("a_hi", 1.0),
        }
    else:
        lo, hi = float(params.pop("lo", -2.0)), float(params.pop("hi", 2.0))
        b_hi = {
            "kind": name,
            "c0": params.pop("c0", 0.0),
            "c1": params.pop("c1", 1.0),
            "lo": lo,
            "hi": hi,
        }
        if name == "delayed":
            b_hi["delay"] = params.pop("delay", 0.25 * horizon)
        spec_params = {
            "b_lo": params.pop("b_lo", lo),
            "b_hi": b_hi,
            "a_lo": params.pop("a_lo", 1.0),
            "a_hi": params.pop("a_hi", 2.0),
        }
    if "bound_C" in params:
        spec_params["bound_C"] = params.pop("bound_C")
    if params:
        raise ConfigError("params", f"unknown parameters for builtin:{name}: {sorted(params)}")
    return random_g_spec(spec_params, terminal, horizon, name=name)


def family_spec(raw: dict, horizon: float = 1.0) -> RandomGSpec | None:
    """The random-G spec behind a family config, or None for ``builtin:zero``."""
    if not isinstance(raw, dict) or "family" not in raw:
        raise ConfigError("family", "expected an object with a 'family' key")
    horizon = float(raw.get("horizon", horizon))
    if horizon <= 0:
        raise ConfigError("family.horizon", f"must be positive, got {horizon}")
    terminal = load_terminal(raw.get("terminal", "state"), horizon, "family.terminal")
    params = raw.get("params", {})
    family = raw["family"]
    if family == "random_g":
        return random_g_spec(params, terminal, horizon)
    if family.startswith("builtin:"):
        name = family.split(":", 1)[1]
        if name not in BUILTINS:
            raise ConfigError("family", f"unknown builtin {name!r}, known: {list(BUILTINS)}")
        if name == "zero":
            return None
        return builtin_spec(name, params, terminal, horizon)
    raise ConfigError("family", f"unknown family {family!r}")


def load_family(raw: dict, horizon: float = 1.0) -> CoefficientField:
    spec = family_spec(raw, horizon)
    if spec is None:
        horizon = float(raw.get("horizon", horizon))
        terminal = load_terminal(raw.get("terminal", "state"), horizon, "family.terminal")
        return make_uncontrolled(0.0, 0.0, terminal, name="zero")
    return make_random_g(spec)


# =========================
# SEQUENCES
# =========================


@dataclass(frozen=True)
class Perturbation:
    """Member-n modification of a random-G spec; n = 0 leaves the spec unchanged.

    kinds:
        none: every member equals the base
        b_hi_shift: b̄ⁿ = b̄⁰ + s/n
        b_shift: both drift bounds shifted by s/n
        a_hi_shift: āⁿ = ā⁰ + s/n
        b_hi_cosine: b̄ⁿ = b̄⁰ + s·cos(ω(t))/n
        terminal_sine: ψⁿ = ψ⁰ + s·sin(ω(T))/n
        a_hi_growth: āⁿ = ā⁰ + s·n (members outgrow any shared bound)
    """

    kind: str = "none"
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in PERTURBATIONS:
            raise ConfigError("perturbation.kind", f"unknown perturbation {self.kind!r}")

    def apply(self, spec: RandomGSpec, n: int) -> RandomGSpec:
        if n == 0 or self.kind == "none":
            return spec
        step = self.scale / n
        match self.kind:
            case "b_hi_shift":
                return spec.replace(b_hi=shift(spec.b_hi, step))
            case "b_shift":
                return spec.replace(b_lo=shift(spec.b_lo, step), b_hi=shift(spec.b_hi, step))
            case "a_hi_shift":
                return spec.replace(a_hi=shift(spec.a_hi, step))
            case "b_hi_cosine":
                return spec.replace(b_hi=Sum((spec.b_hi, Cosine(0.0, step))))
            case "terminal_sine":
                bump = Sine(spec.horizon, scale=step)
                return spec.replace(terminal=TerminalSum((spec.terminal, bump)))
            case "a_hi_growth":
                return spec.replace(a_hi=shift(spec.a_hi, self.scale * n))
        raise ConfigError("perturbation.kind", self.kind)

    def analytic_gap(self, spec: RandomGSpec, n: int, span: float) -> float | None:
        """Closed-form sup gap over start times with T - t <= span, when one exists.

        Known for constant bounds with b ≡ 0, ψ = ω(T)² under ``a_hi_shift``, and
        for constant a, ψ = ω(T) under ``b_hi_shift``/``b_shift``.
        """
        if self.kind == "none" or n == 0:
            return 0.0
        constant = all(isinstance(f, Constant) for f in spec.bounds.values())
        if not constant:
            return None
        kind = spec.terminal.kind
        if self.kind == "a_hi_shift" and kind == "state_square":
            if spec.b_lo.c == spec.b_hi.c == 0.0 and self.scale > 0:
                return span * self.scale / n
        if self.kind in ("b_hi_shift", "b_shift") and kind == "state":
            if spec.terminal.scale == 1.0 and self.scale > 0 and spec.b_hi.c >= spec.b_lo.c:
                return span * self.scale / n
        return None


def load_sequence(raw: dict, horizon: float = 1.0) -> CoefficientSequence:
    """``{"base": <family>, "perturbation": {"kind", "scale"}, "growth_C": float}``"""
    if not isinstance(raw, dict) or "base" not in raw:
        raise ConfigError("sequence.base", "missing")
    base = family_spec(raw["base"], horizon)
    if base is None:
        raise ConfigError("sequence.base", "builtin:zero cannot be perturbed")
    pert_raw = raw.get("perturbation", {"kind": "none"})
    try:
        perturbation = Perturbation(**pert_raw)
    except TypeError as e:
        raise ConfigError("sequence.perturbation", str(e)) from e
    growth_C = raw.get("growth_C")
    logger = get_logger(**_LOG_LIBRARY)
    logger.info(f"sequence {base.name} with perturbation {perturbation}, {growth_C=}")
    return CoefficientSequence(
        member=RandomGSequence(base, perturbation),
        growth_C=None if growth_C is None else float(growth_C),
        name=f"{base.name}/{perturbation.kind}",
    )


def sequence_analytic_gap(seq: CoefficientSequence, n: int, span: float) -> float | None:
    member = seq.member
    if isinstance(member, RandomGSequence):
        return member.perturbation.analytic_gap(member.base, n, span)
    return None
