"""Experiment configuration: JSON schema, validation and object builders."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import jsonschema

from . import functions as fn
from . import weights as wt
from .carleson import AtomicMeasure, DensityMeasure, DiscMeasure
from .geometry import InvalidParameterError
from .quadrature import QuadratureSpec

EXPERIMENTS = ("weight-class", "carleson", "maximal", "lp-ratio", "tilde-equivalence",
               "volterra", "resolvent-scan", "selftest")


class ConfigError(ValueError):
    """Malformed configuration or violated precondition."""


_POS = {"type": "number", "exclusiveMinimum": 0}
_REAL = {"type": "number"}
_COMPLEX = {"oneOf": [{"type": "number"},
                      {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}]}


def _obj(kind: str, props: dict, required=()) -> dict:
    return {"type": "object",
            "properties": {"kind": {"const": kind}, **props},
            "required": ["kind", *required],
            "additionalProperties": False}


def _fobj(family: str, props: dict, required=()) -> dict:
    return {"type": "object",
            "properties": {"family": {"const": family}, **props},
            "required": ["family", *required],
            "additionalProperties": False}


# catalog: label -> (schema properties, required, description)
WEIGHT_CATALOG = {
    "constant": ({"c": _POS}, (), "constant weight c"),
    "standard": ({"alpha": {"type": "number", "exclusiveMinimum": -1}}, ("alpha",),
                 "(alpha + 1)(1 - |z|^2)^alpha"),
    "radial_power": ({"alpha": {"type": "number", "exclusiveMinimum": -1}}, ("alpha",),
                     "(1 - |z|)^alpha"),
    "exponential": ({"rate": _POS}, (), "exp(-rate / (1 - |z|))"),
    "spiral_w": ({"epsilon": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
                 ("epsilon",), "separable weight singular along the positive radius"),
    "stolz_indicator": ({}, (), "indicator of the disc minus the Stolz angle at 1"),
    "beta_shift": ({"weight": {"$ref": "#/$defs/weight"}, "beta": _REAL}, ("weight", "beta"),
                   "weight times (1 - |z|)^beta"),
    "tilde": ({"weight": {"$ref": "#/$defs/weight"}}, ("weight",),
              "square mass w(S(z)) / (1 - |z|)^2"),
    "horizontal": ({"weight": {"$ref": "#/$defs/weight"},
                    "radius": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
                   ("weight", "radius"), "average of w over the pseudo-hyperbolic disc"),
    "exp_twist": ({"weight": {"$ref": "#/$defs/weight"}, "g": {"$ref": "#/$defs/function"},
                   "lambda": _COMPLEX, "p": _POS}, ("weight", "g", "lambda", "p"),
                  "w exp(p Re(g / lambda))"),
    "product": ({"weights": {"type": "array", "items": {"$ref": "#/$defs/weight"}, "minItems": 1}},
                ("weights",), "pointwise product"),
    "user": ({"expression": {"type": "string"}, "radial": {"type": "boolean"},
              "boundary_exponent": _REAL}, ("expression",),
             "expression in z, r, theta"),
}

FUNCTION_CATALOG = {
    "polynomial": ({"coefficients": {"type": "array", "items": _COMPLEX, "minItems": 1,
                                     "maxItems": 513}}, ("coefficients",), "sum c_n z^n"),
    "monomial": ({"n": {"type": "integer", "minimum": 0, "maximum": 512}}, ("n",), "z^n"),
    "kernel_power": ({"a": _COMPLEX, "exponent": _POS}, ("a", "exponent"),
                     "((1 - |a|^2) / (1 - conj(a) z))^exponent"),
    "log_kernel": ({"a": _COMPLEX}, ("a",), "log(1 / (1 - conj(a) z))"),
    "test_function": ({"a": _COMPLEX, "p": _POS, "gamma": _POS}, ("a", "p", "gamma"),
                      "kernel power with exponent gamma / p"),
    "exp_of": ({"inner": {"$ref": "#/$defs/function"}, "scale": _COMPLEX}, ("inner",),
               "exp(scale * inner)"),
    "scale": ({"inner": {"$ref": "#/$defs/function"}, "c": _COMPLEX}, ("inner", "c"), "c * inner"),
    "sum": ({"terms": {"type": "array", "items": {"$ref": "#/$defs/function"}, "minItems": 1}},
            ("terms",), "sum of terms"),
    "product": ({"factors": {"type": "array", "items": {"$ref": "#/$defs/function"}, "minItems": 2,
                             "maxItems": 2}}, ("factors",), "product of two functions"),
}

_MEASURE = {"oneOf": [
    {"type": "object", "properties": {"kind": {"const": "density"}, "weight": {"$ref": "#/$defs/weight"}},
     "required": ["kind", "weight"], "additionalProperties": False},
    {"type": "object", "properties": {"kind": {"const": "atoms"},
                                      "points": {"type": "array", "items": _COMPLEX},
                                      "masses": {"type": "array", "items": _POS}},
     "required": ["kind", "points", "masses"], "additionalProperties": False},
]}

_SUITE = {"oneOf": [
    {"type": "object", "properties": {"kind": {"const": "default"}, "depth": {"type": "integer", "minimum": 1},
                                      "per_level": {"type": "integer", "minimum": 1},
                                      "max_degree": {"type": "integer", "minimum": 0, "maximum": 512},
                                      "gamma": _POS},
     "required": ["kind"], "additionalProperties": False},
    {"type": "object", "properties": {"kind": {"const": "monomials"},
                                      "max_degree": {"type": "integer", "minimum": 0, "maximum": 512}},
     "required": ["kind", "max_degree"], "additionalProperties": False},
    {"type": "object", "properties": {"kind": {"const": "list"},
                                      "functions": {"type": "array", "items": {"$ref": "#/$defs/function"},
                                                    "minItems": 1}},
     "required": ["kind", "functions"], "additionalProperties": False},
]}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["experiment"],
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "weight": {"$ref": "#/$defs/weight"},
        "nu": {"$ref": "#/$defs/weight"},
        "measure": _MEASURE,
        "suite": _SUITE,
        "f": {"$ref": "#/$defs/function"},
        "g": {"$ref": "#/$defs/function"},
        "h": {"$ref": "#/$defs/function"},
        "p": _POS, "q": _POS,
        "k": {"type": "integer", "minimum": 1},
        "K": {"type": "number", "exclusiveMinimum": 1},
        "alpha": _POS,
        "s": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "gamma": _POS,
        "lambda": _COMPLEX,
        "lambda_grid": {"type": "object", "additionalProperties": False,
                        "required": ["re", "im", "resolution"],
                        "properties": {"re": {"type": "array", "items": _REAL, "minItems": 2, "maxItems": 2},
                                       "im": {"type": "array", "items": _REAL, "minItems": 2, "maxItems": 2},
                                       "resolution": {"type": "integer", "minimum": 1, "maximum": 64}}},
        "p_grid": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 1}, "minItems": 1},
        "depth": {"type": "integer", "minimum": 1, "maximum": 16},
        "levels": {"type": "integer", "minimum": 4, "maximum": 16},
        "quadrature": {"type": "object", "additionalProperties": False,
                       "properties": {"relative_tolerance": {"type": "number", "exclusiveMinimum": 0,
                                                             "maximum": 0.1},
                                      "max_annuli": {"type": "integer", "minimum": 8},
                                      "nodes_per_cell": {"type": "integer", "minimum": 4},
                                      "subdivision_depth": {"type": "integer", "minimum": 0}}},
        "output": {"type": "object", "additionalProperties": False,
                   "properties": {"dir": {"type": "string"}, "stem": {"type": "string"}}},
        "seed": {"type": "integer", "minimum": 0},
        "threads": {"type": "integer", "minimum": 1},
    },
    "$defs": {
        "weight": {"oneOf": [_obj(k, props, req) for k, (props, req, _) in sorted(WEIGHT_CATALOG.items())]},
        "function": {"oneOf": [_fobj(k, props, req) for k, (props, req, _) in sorted(FUNCTION_CATALOG.items())]},
    },
}


def validate(config: dict) -> dict:
    """Schema validation; raises :class:`ConfigError` naming the failing field."""
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        best = jsonschema.exceptions.best_match([exc]) or exc
        raise ConfigError(f"invalid config at {where}: {best.message}") from None
    return config


def load(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return validate(config)


# ---------------------------------------------------------------------------
# builders


def to_complex(x) -> complex:
    if isinstance(x, (list, tuple)):
        return complex(float(x[0]), float(x[1]))
    return complex(float(x))


def build_function(spec: dict) -> fn.AnalyticFunction:
    fam = spec["family"]
    try:
        if fam == "polynomial":
            return fn.Polynomial([to_complex(c) for c in spec["coefficients"]])
        if fam == "monomial":
            return fn.monomial(int(spec["n"]))
        if fam == "kernel_power":
            return fn.KernelPower(to_complex(spec["a"]), float(spec["exponent"]))
        if fam == "log_kernel":
            return fn.LogKernel(to_complex(spec["a"]))
        if fam == "test_function":
            return fn.kernel_test_function(to_complex(spec["a"]), float(spec["p"]), float(spec["gamma"]))
        if fam == "exp_of":
            return fn.ExpOf(build_function(spec["inner"]), to_complex(spec.get("scale", 1.0)))
        if fam == "scale":
            return fn.Scale(build_function(spec["inner"]), to_complex(spec["c"]))
        if fam == "sum":
            return fn.Sum([build_function(t) for t in spec["terms"]])
        if fam == "product":
            a, b = spec["factors"]
            return fn.Product(build_function(a), build_function(b))
    except (InvalidParameterError, ValueError) as exc:
        raise ConfigError(f"function {fam}: {exc}") from None
    raise ConfigError(f"unknown function family {fam!r}")


def build_weight(spec: dict) -> wt.Weight:
    kind = spec["kind"]
    try:
        if kind == "constant":
            return wt.constant(float(spec.get("c", 1.0)))
        if kind == "standard":
            return wt.standard(float(spec["alpha"]))
        if kind == "radial_power":
            return wt.radial_power(float(spec["alpha"]))
        if kind == "exponential":
            return wt.exponential(float(spec.get("rate", 1.0)))
        if kind == "spiral_w":
            return wt.spiral_w(float(spec["epsilon"]))
        if kind == "stolz_indicator":
            return wt.stolz_indicator()
        if kind == "beta_shift":
            return wt.beta_shift(build_weight(spec["weight"]), float(spec["beta"]))
        if kind == "tilde":
            return wt.tilde_average(build_weight(spec["weight"]))
        if kind == "horizontal":
            return wt.horizontal_average(build_weight(spec["weight"]), float(spec["radius"]))
        if kind == "exp_twist":
            return wt.exponential_twist(build_weight(spec["weight"]), build_function(spec["g"]),
                                        to_complex(spec["lambda"]), float(spec["p"]))
        if kind == "product":
            return wt.product(*(build_weight(s) for s in spec["weights"]))
        if kind == "user":
            return wt.user_weight(spec["expression"], radial=bool(spec.get("radial", False)),
                                  boundary_exponent=float(spec.get("boundary_exponent", 0.0)))
    except (InvalidParameterError, wt.InvalidWeightError, ValueError) as exc:
        raise ConfigError(f"weight {kind}: {exc}") from None
    raise ConfigError(f"unknown weight kind {kind!r}")


def build_measure(spec: dict) -> DiscMeasure:
    try:
        if spec["kind"] == "density":
            return DensityMeasure(build_weight(spec["weight"]))
        return AtomicMeasure([to_complex(z) for z in spec["points"]], spec["masses"])
    except InvalidParameterError as exc:
        raise ConfigError(f"measure: {exc}") from None


def build_spec(config: dict, tolerance: float | None = None) -> QuadratureSpec:
    q = dict(config.get("quadrature", {}))
    if tolerance is not None:
        q["relative_tolerance"] = tolerance
    return QuadratureSpec(**q)


def require(config: dict, *names: str) -> list[Any]:
    missing = [n for n in names if n not in config]
    if missing:
        raise ConfigError(f"experiment {config['experiment']!r} needs field(s): {', '.join(missing)}")
    return [config[n] for n in names]


def check(condition: bool, message: str):
    if not condition:
        raise ConfigError(message)


def catalog_lines() -> list[str]:
    """Catalog entries sorted by label: 'weight spiral_w: epsilon (...) - description'."""
    lines = []
    for kind, table in (("weight", WEIGHT_CATALOG), ("function", FUNCTION_CATALOG)):
        for label, (props, req, desc) in table.items():
            fields = []
            for name in props:
                tag = "" if name in req else "?"
                fields.append(f"{name}{tag}")
            lines.append((label, kind, f"{kind} {label}: {', '.join(fields) or '(none)'} -- {desc}"))
    return [text for _, _, text in sorted(lines)]


def finite_or_str(x: float):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x
