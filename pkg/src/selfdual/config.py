"""Run configuration: a versioned JSON document validated against a JSON schema.

Every validation failure is reported as a :class:`ConfigError` that carries the
1-based line of the offending entry.
"""
from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass
from pathlib import Path as FsPath

import jsonschema

from .boundary import lambda_from_alpha
from .errors import ConfigError

__all__ = ["SCHEMA_VERSION", "SCHEMA", "DEFAULTS", "RunConfig", "load_config", "parse_config"]

SCHEMA_VERSION = 1
SCENARIOS = ("gradient_flow_1mode", "stokes_decay", "ns2d", "ns3d", "ns_stationary")
PRESETS = ("zero", "taylor_green", "shear", "taylor_green_shear", "random_seeded")

_number = {"type": "number"}
_preset = {
    "type": "object",
    "additionalProperties": False,
    "required": ["preset"],
    "properties": {
        "preset": {"enum": list(PRESETS)},
        "amplitude": _number,
        "seed": {"type": "integer"},
        "kmax": {"type": "number", "exclusiveMinimum": 0},
        "mode": {"type": "integer", "minimum": 1},
        "mix": _number,
    },
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["schema", "scenario"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "scenario": {"enum": list(SCENARIOS)},
        "seed": {"type": "integer"},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "d": {"enum": [2, 3]},
                "n": {"type": "integer", "minimum": 8},
                "nu": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "time": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "T": {"type": "number", "exclusiveMinimum": 0},
                "N": {"type": "integer", "minimum": 2},
            },
        },
        "boundary": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["initial_value", "periodic", "anti_periodic", "alpha_periodic"]},
                "alpha": {"type": "number", "exclusiveMinimum": -1, "exclusiveMaximum": 1},
                "lambda": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "initial": _preset,
        "forcing": _preset,
        "target": _preset,
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "value_tol": {"type": "number", "exclusiveMinimum": 0},
                "grad_tol": {"type": "number", "minimum": 0},
                "max_iters": {"type": "integer", "minimum": 1},
                "memory": {"type": "integer", "minimum": 1},
                "c1": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "shrink": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "continuation": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "epsilon": {"type": "number", "minimum": 0},
            },
        },
        "oracle": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "enabled": {"type": "boolean"},
                "scheme": {"enum": ["crank_nicolson_picard", "implicit_euler_diffusion_explicit_advection"]},
                "inner_tol": {"type": "number", "exclusiveMinimum": 0},
                "max_inner": {"type": "integer", "minimum": 1},
            },
        },
        "thresholds": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                name: {"type": "number", "exclusiveMinimum": 0}
                for name in ("total", "energy", "oracle", "pde", "boundary", "alpha_relation", "exact", "recovery")
            },
        },
        "output_dir": {"type": "string", "minLength": 1},
    },
}

DEFAULTS = {
    "seed": 0,
    "grid": {"d": 2, "n": 32, "nu": 0.1},
    "time": {"T": 1.0, "N": 64},
    "boundary": {"kind": "initial_value"},
    "initial": {"preset": "taylor_green", "amplitude": 1.0},
    "forcing": {"preset": "zero"},
    "target": {"preset": "taylor_green_shear", "amplitude": 1.0, "mix": 0.5, "mode": 2},
    "solver": {
        "value_tol": 1e-16,
        "grad_tol": 1e-15,
        "max_iters": 500,
        "memory": 10,
        "c1": 1e-4,
        "shrink": 0.5,
        "continuation": [1e-1, 1e-2, 1e-3],
        "epsilon": 1e-3,
    },
    "oracle": {"enabled": True, "scheme": "crank_nicolson_picard", "inner_tol": 1e-12, "max_inner": 50},
    "thresholds": {
        "total": 1e-6,
        "energy": 1e-4,
        "oracle": 5e-3,
        "pde": 1e-3,
        "boundary": 1e-6,
        "alpha_relation": 1e-5,
        "exact": 1e-5,
        "recovery": 1e-5,
    },
    "output_dir": "selfdual-run",
}


SCENARIO_DEFAULTS = {
    "ns3d": {
        "grid": {"d": 3, "n": 8},
        "time": {"N": 16},
        "thresholds": {"total": 1e-3, "energy": 1e-3},
    },
    "ns_stationary": {"initial": {"preset": "zero"}, "solver": {"value_tol": 1e-18, "max_iters": 3000}},
    "gradient_flow_1mode": {"initial": {"preset": "shear", "amplitude": 1.0, "mode": 1}, "oracle": {"enabled": False}},
    "stokes_decay": {"oracle": {"enabled": False}},
}


@dataclass(frozen=True)
class RunConfig:
    """A validated configuration with defaults filled in."""

    data: dict
    source: str | None = None

    def __getitem__(self, key):
        return self.data[key]

    @property
    def scenario(self) -> str:
        return self.data["scenario"]

    @property
    def lam(self) -> float | None:
        """Boundary parameter ``lambda`` for the alpha-periodic kind."""
        b = self.data["boundary"]
        if b["kind"] != "alpha_periodic":
            return None
        if "lambda" in b:
            return float(b["lambda"])
        a = float(b["alpha"])
        return lambda_from_alpha(a)


def _locate(text: str, path) -> int | None:
    """Line of the JSON entry addressed by ``path`` (keys and indices), best effort."""
    pos = 0
    line = None
    for key in path:
        if isinstance(key, int):
            continue
        m = re.compile(r'"%s"\s*:' % re.escape(str(key))).search(text, pos)
        if m is None:
            break
        pos = m.start()
        line = text.count("\n", 0, pos) + 1
    return line


def _merge(defaults, given):
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k not in ("initial", "forcing", "target"):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_config(text: str, source: str | None = None) -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {err.message}", line=_locate(text, list(err.absolute_path)) or 1)
    data = _merge(_merge(DEFAULTS, SCENARIO_DEFAULTS.get(raw["scenario"], {})), raw)
    data["scenario"] = raw["scenario"]
    _semantic_checks(data, raw, text)
    return RunConfig(data, source)


def _semantic_checks(data, raw, text):
    n = data["grid"]["n"]
    if n & (n - 1):
        raise ConfigError("grid/n: must be a power of two", line=_locate(text, ["grid", "n"]))
    b = data["boundary"]
    if b["kind"] == "alpha_periodic" and "alpha" not in b and "lambda" not in b:
        raise ConfigError("boundary: alpha_periodic needs alpha or lambda", line=_locate(text, ["boundary"]))
    if "alpha" in b and "lambda" in b:
        raise ConfigError("boundary: give either alpha or lambda, not both", line=_locate(text, ["boundary", "lambda"]))
    scen = data["scenario"]
    if scen == "ns3d" and data["grid"]["d"] != 3:
        raise ConfigError("grid/d: the ns3d scenario needs d = 3", line=_locate(text, ["grid", "d"]) or _locate(text, ["scenario"]))
    if scen in ("ns2d", "ns_stationary") and data["grid"]["d"] != 2:
        raise ConfigError(f"grid/d: the {scen} scenario needs d = 2", line=_locate(text, ["grid", "d"]))
    if scen in ("gradient_flow_1mode", "stokes_decay") and data["forcing"]["preset"] != "zero":
        raise ConfigError(f"forcing: the {scen} scenario is unforced", line=_locate(text, ["forcing"]))


def load_config(path) -> RunConfig:
    try:
        text = FsPath(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, str(path))
