"""Run configuration: strict JSON schema, explicit defaults, canonical hashing."""

from __future__ import annotations

import copy
import hashlib
import json
import math
import os
from dataclasses import dataclass

import jsonschema

from .diagnostics import DiagnosticOptions
from .errors import ConfigError, DomainError
from .laws import make_law
from .solver import FORMULATIONS, TIME_SCHEMES, SolverConfig
from .state import InitialProfile, build_grid

SCENARIOS = {
    "constant": "constant",
    "gaussian": "gaussian_bump",
    "gaussian_bump": "gaussian_bump",
    "jump": "density_jump",
    "density_jump": "density_jump",
    "custom_table": "custom_table",
}

_number = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["scenario", "alpha", "gamma", "c"],
    "properties": {
        "scenario": {"enum": sorted(SCENARIOS)},
        "profile": {"type": "object"},
        "mollification": {"type": ["integer", "null"], "minimum": 1},
        "velocity_mode": {"enum": ["direct", "effective"]},
        "admissibility": {"type": "boolean"},
        "alpha": _pos,
        "gamma": {"type": "number", "exclusiveMinimum": 1},
        "a": _pos,
        "eta": _pos,
        "c": {"type": "number", "minimum": 0, "maximum": 0.25},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "m_min": _number,
                "m_max": _number,
                "n_cells": {"type": "integer", "minimum": 8},
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "formulation": {"enum": list(FORMULATIONS)},
                "time_scheme": {"enum": list(TIME_SCHEMES)},
                "cfl": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "t_end": _pos,
                "output_times": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "energy_guard_tol": {"type": "number", "minimum": 0},
                "max_dt_halvings": {"type": "integer", "minimum": 0},
            },
        },
        "diagnostics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "theta_list": {
                    "type": "array",
                    "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                    "minItems": 1,
                },
                "window_origins": {"type": ["array", "null"], "items": _number},
                "window_step": _pos,
                "L": {"type": ["number", "null"], "exclusiveMinimum": 0},
            },
        },
        "out_dir": {"type": ["string", "null"]},
    },
}

DEFAULTS = {
    "profile": {},
    "mollification": None,
    "velocity_mode": "direct",
    "admissibility": True,
    "a": 1.0,
    "eta": 0.1,
    "grid": {"m_min": -10.0, "m_max": 10.0, "n_cells": 1024},
    "solver": {
        "formulation": "effective_v1",
        "time_scheme": "explicit_rk2",
        "cfl": 0.25,
        "t_end": 1.0,
        "output_times": [],
        "energy_guard_tol": 1e-6,
        "max_dt_halvings": 20,
    },
    "diagnostics": {"theta_list": [0.5, 1.0], "window_origins": None, "window_step": 0.5, "L": None},
    "out_dir": None,
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


def _pointer(path):
    return "/" + "/".join(str(p) for p in path)


def _message(err):
    where = _pointer(err.absolute_path)
    name = str(err.absolute_path[-1]) if err.absolute_path else "config"
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        return where, f"unknown key(s) {extra}"
    if err.validator in ("minimum", "maximum", "exclusiveMinimum", "exclusiveMaximum"):
        s = err.schema
        lo = s.get("minimum", s.get("exclusiveMinimum", "-inf"))
        hi = s.get("maximum", s.get("exclusiveMaximum", "inf"))
        lb = "[" if "minimum" in s else "("
        rb = "]" if "maximum" in s else ")"
        return where, f"{err.instance!r} out of range, need {name} ∈ {lb}{lo}, {hi}{rb}"
    return where, err.message


def validate(doc):
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        where, msg = _message(errors[0])
        raise ConfigError(where, msg)


def _fill(doc, defaults):
    out = copy.deepcopy(doc)
    for key, value in defaults.items():
        if key not in out:
            out[key] = copy.deepcopy(value)
        elif isinstance(value, dict) and value and isinstance(out[key], dict):
            out[key] = _fill(out[key], value)
    return out


def _floatify(doc):
    """Numbers that are physically real-valued are stored as floats."""
    for key in ("alpha", "gamma", "a", "eta", "c"):
        doc[key] = float(doc[key])
    g = doc["grid"]
    g["m_min"], g["m_max"] = float(g["m_min"]), float(g["m_max"])
    s = doc["solver"]
    for key in ("cfl", "t_end", "energy_guard_tol"):
        s[key] = float(s[key])
    s["output_times"] = [float(t) for t in s["output_times"]]
    d = doc["diagnostics"]
    d["theta_list"] = [float(t) for t in d["theta_list"]]
    d["window_step"] = float(d["window_step"])
    if d["window_origins"] is not None:
        d["window_origins"] = [float(t) for t in d["window_origins"]]
    if d["L"] is not None:
        d["L"] = float(d["L"])
    return doc


def canonical_json(doc):
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration with every default recorded explicitly."""

    doc: dict

    def to_json(self):
        return canonical_json(self.doc)

    @property
    def hash(self):
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    @property
    def c(self):
        return self.doc["c"]

    def with_updates(self, **changes):
        doc = copy.deepcopy(self.doc)
        for dotted, value in changes.items():
            target = doc
            *head, last = dotted.split(".")
            for part in head:
                target = target[part]
            target[last] = value
        return parse_config(doc)

    def grid(self):
        g = self.doc["grid"]
        return build_grid(g["m_min"], g["m_max"], g["n_cells"])

    def profile(self):
        return InitialProfile(
            kind=SCENARIOS[self.doc["scenario"]],
            params=dict(self.doc["profile"]),
            mollification=self.doc["mollification"],
            velocity_mode=self.doc["velocity_mode"],
        )

    def law(self):
        d = self.doc
        return make_law(d["alpha"], d["gamma"], a=d["a"], eta=d["eta"])

    def solver_config(self):
        s = dict(self.doc["solver"])
        s["output_times"] = tuple(s["output_times"])
        return SolverConfig(**s)

    def diagnostic_options(self):
        d = self.doc["diagnostics"]
        origins = d["window_origins"]
        return DiagnosticOptions(
            theta_list=tuple(d["theta_list"]),
            window_origins=tuple(origins) if origins is not None else None,
            window_step=d["window_step"],
            L=d["L"],
        )

    def build(self):
        """Construct every runtime object, surfacing domain errors as config errors."""
        try:
            return self.grid(), self.profile(), self.law(), self.solver_config(), self.diagnostic_options()
        except ConfigError:
            raise
        except DomainError as exc:
            raise ConfigError(exc.field, str(exc)) from exc


def parse_config(source):
    """Parse a path, a JSON string or a dict into a ``RunConfig``."""
    if isinstance(source, RunConfig):
        return source
    if isinstance(source, dict):
        doc = copy.deepcopy(source)
    else:
        text = str(source)
        if not text.lstrip().startswith("{"):
            if not os.path.exists(text):
                raise FileNotFoundError(text)
            with open(text, encoding="utf-8") as fh:
                text = fh.read()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("/", f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("/", "config must be a JSON object")
    validate(doc)
    doc = _floatify(_fill(doc, DEFAULTS))
    validate(doc)
    for t in doc["solver"]["output_times"]:
        if not math.isfinite(t) or t > doc["solver"]["t_end"]:
            raise ConfigError("/solver/output_times", f"{t!r} lies outside [0, t_end]")
    cfg = RunConfig(doc)
    cfg.build()
    return cfg
