"""Gradient pairs (g, f) and the registry of named example pairs.

A pair couples the gradient-term coefficient g(t) >= 0 with the source
nonlinearity f(t).  The named entries cover the standard model families:
power-type g with sub/superlinear sources, pairs whose transformed source
becomes an exact power, and the -s + s^p uniqueness prototype.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import dsl
from .errors import EvalDomainError, InvalidInputError


@dataclass(frozen=True)
class GradientPair:
    """Parsed pair of scalar functions with late-bound parameters."""

    g: dsl.Expr
    f: dsl.Expr
    params: dict = field(default_factory=dict)
    label: str = "custom"

    def g_at(self, t: float) -> float:
        return dsl.eval_expr(self.g, t, self.params)

    def f_at(self, t: float) -> float:
        return dsl.eval_expr(self.f, t, self.params)

    def with_params(self, **updates) -> "GradientPair":
        merged = dict(self.params)
        merged.update(updates)
        return GradientPair(self.g, self.f, merged, self.label)

    def describe(self) -> dict:
        return {
            "label": self.label,
            "g": dsl.format_expr(self.g),
            "f": dsl.format_expr(self.f),
            "params": {k: float(v) for k, v in sorted(self.params.items())},
        }


def check_g_nonnegative(pair: GradientPair, lo: float = 1e-8, hi: float = 1e8, samples: int = 49) -> None:
    """Sample g on a log-spaced grid and reject any negative value."""
    ratio = (hi / lo) ** (1.0 / (samples - 1))
    t = lo
    for _ in range(samples):
        val = pair.g_at(t)
        if val < 0.0 or math.isnan(val):
            raise InvalidInputError(f"g must be nonnegative on [0, inf); g({t:.3g}) = {val:.3g} for pair {pair.label!r}")
        t *= ratio


def _positive(name):
    return name, lambda v: v > 0.0, "must be > 0"


def _nonnegative(name):
    return name, lambda v: v >= 0.0, "must be >= 0"


def _greater_than_one(name):
    return name, lambda v: v > 1.0, "must be > 1"


# registry entries: (g text, f text, [(param, check, hint)...], cross-param checks)
_REGISTRY = {
    "power-m": (
        "m*t^(m-1)",
        "t^p*exp(-(t^m))",
        [_positive("m"), _positive("p")],
        [],
    ),
    "texp": (
        "m*t^(m-1)",
        "nu*t*exp(t^q - t^m)",
        [_positive("m"), _positive("q"), _positive("nu")],
        [("q", "m", lambda q, m: q > m, "q must exceed m")],
    ),
    "exp-one": (
        "1",
        "a*(exp(t)-1)^p*exp(-t)",
        [_positive("a"), _positive("p")],
        [],
    ),
    "mu-over-1+t": (
        "mu/(1+t)",
        "(a/(mu+1)^p)*((1+t)^(mu+1)-1)^p*(1+t)^(-mu)",
        [_positive("a"), _positive("mu"), _positive("p")],
        [],
    ),
    "sinh-cosh": (
        # tanh(t/2) == sinh(t)/(cosh(t)+1), stable at large t
        "tanh(t/2)",
        "(a/(1+cosh(t)))*((sinh(t)+t)^p - gamma*(sinh(t)+t))",
        [_positive("a"), _positive("p"), _nonnegative("gamma")],
        [],
    ),
    "regular-log": (
        "1/((t+euler)*log(t+euler))",
        "((t+euler)^p/log(t+euler))*(log(t+euler)-1)^p",
        [_positive("p")],
        [],
    ),
    "tanh-psi": (
        "tanh(t)",
        "(-gamma+mu+sinh(t)^(p-1))*tanh(t)",
        [_nonnegative("gamma"), _nonnegative("mu"), _greater_than_one("p")],
        [],
    ),
    "two-t-rational": (
        "2*t/(1+t^2)",
        "(1/(1+t^2))*(t+t^3/3)^p",
        [_positive("p")],
        [],
    ),
    "proto-uniq": (
        # 1/(1+exp(-t)) == exp(t)/(1+exp(t)), stable at large t
        "1/(1+exp(-t))",
        "(2/(1+exp(t)))*(((exp(t)+t-1)/2)^p - (exp(t)+t-1)/2)",
        [_greater_than_one("p")],
        [],
    ),
}

BUILTIN_NAMES = tuple(sorted(_REGISTRY))


def builtin_pair(name: str, params: dict) -> GradientPair:
    """Instantiate a named pair from the registry with validated parameters."""
    if name not in _REGISTRY:
        raise InvalidInputError(f"unknown pair {name!r}; known: {', '.join(BUILTIN_NAMES)}")
    g_text, f_text, checks, cross = _REGISTRY[name]
    params = {k: float(v) for k, v in params.items()}
    declared = {c[0] for c in checks}
    unknown = set(params) - declared
    if unknown:
        raise InvalidInputError(f"pair {name!r} does not take parameter(s) {sorted(unknown)}")
    for pname, ok, hint in checks:
        if pname not in params:
            raise InvalidInputError(f"pair {name!r} requires parameter {pname!r}")
        if not ok(params[pname]):
            raise InvalidInputError(f"pair {name!r}: parameter {pname!r} {hint}, got {params[pname]}")
    for a, b, ok, hint in cross:
        if not ok(params[a], params[b]):
            raise InvalidInputError(f"pair {name!r}: {hint} (got {a}={params[a]}, {b}={params[b]})")
    pair = GradientPair(dsl.parse_expr(g_text), dsl.parse_expr(f_text), params, name)
    check_g_nonnegative(pair)
    return pair


def pair_from_exprs(g_text: str, f_text: str, params: dict | None = None,
                    label: str = "custom", validate: bool = True) -> GradientPair:
    """Build a pair from expression strings, optionally checking g >= 0."""
    pair = GradientPair(dsl.parse_expr(g_text), dsl.parse_expr(f_text),
                        {k: float(v) for k, v in (params or {}).items()}, label)
    if validate:
        check_g_nonnegative(pair)
    return pair


def pair_from_json(obj: dict, validate: bool = True) -> GradientPair:
    """Read {"g": "...", "f": "...", "params": {...}, "label": "..."}."""
    if not isinstance(obj, dict):
        raise InvalidInputError("pair JSON must be an object")
    extra = set(obj) - {"g", "f", "params", "label"}
    if extra:
        raise InvalidInputError(f"unknown pair JSON keys: {sorted(extra)}")
    if "g" not in obj or "f" not in obj:
        raise InvalidInputError("pair JSON needs both 'g' and 'f'")
    return pair_from_exprs(obj["g"], obj["f"], obj.get("params") or {},
                           obj.get("label", "custom"), validate=validate)
