"""Experiment configuration: JSON schema, loading, and object builders."""

from __future__ import annotations

import json
from typing import Optional

import numpy as np

try:
    import jsonschema
except ImportError:  # pragma: no cover - declared dependency
    jsonschema = None

from .potentials import FIConstants, SmoothnessRecord, make_builtin
from .planner import PlanRequest
from .divergence import GaussianLaw


class ConfigError(ValueError):
    """Malformed or out-of-range experiment configuration."""


_POTENTIAL_SCHEMA = {
    "type": "object",
    "required": ["family", "d"],
    "properties": {
        "family": {"type": "string",
                   "enum": ["power", "smoothed_power", "smoothed_norm", "product",
                            "quadratic", "perturbed_power", "perturbed_quadratic"]},
        "d": {"type": "integer", "minimum": 1},
        "alpha": {"type": "number"},
        "s": {"type": "number"},
        "A": {},
    },
    "additionalProperties": False,
}

_INIT_SCHEMA = {
    "type": "object",
    "properties": {
        "mean": {},
        "var": {"type": "number", "exclusiveMinimum": 0},
        "cov": {},
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "langevin-lab experiment configuration",
    "type": "object",
    "required": ["command"],
    "properties": {
        "command": {"type": "string",
                    "enum": ["plan", "sample", "bias-scan", "decay-curve",
                             "init-check", "verify"]},
        "seed": {"type": "integer", "minimum": 0},
        "plan": {
            "type": "object",
            "required": ["kind", "eps", "q", "d", "C", "L", "s", "R0"],
            "properties": {
                "kind": {"type": "string", "enum": ["lsi", "log_concave", "lo", "mlsi"]},
                "eps": {"type": "number", "exclusiveMinimum": 0},
                "q": {"type": "number", "minimum": 2},
                "d": {"type": "integer", "minimum": 1},
                "C": {"type": "number", "exclusiveMinimum": 0},
                "L": {"type": "number", "exclusiveMinimum": 0},
                "s": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "alpha": {"type": "number"},
                "alpha0": {"type": "number"},
                "alpha1": {"type": "number"},
                "C_tail": {"type": "number"},
                "R0": {"type": "number", "minimum": 0},
                "R0_hat": {"type": "number", "minimum": 0},
                "m": {"type": "number", "exclusiveMinimum": 0},
                "log_concave": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "sample": {
            "type": "object",
            "required": ["potential", "h", "n_steps", "n_particles"],
            "properties": {
                "potential": _POTENTIAL_SCHEMA,
                "h": {"type": "number", "exclusiveMinimum": 0},
                "n_steps": {"type": "integer", "minimum": 0},
                "n_particles": {"type": "integer", "minimum": 1},
                "init": _INIT_SCHEMA,
                "track_norms": {"type": "boolean"},
                "snapshot": {"type": "boolean"},
                "oracle_check": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "bias_scan": {
            "type": "object",
            "required": ["d", "q", "h"],
            "properties": {
                "d": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "q": {"type": "array", "items": {"type": "number", "minimum": 2}},
                "h": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
            },
            "additionalProperties": False,
        },
        "decay_curve": {
            "type": "object",
            "required": ["potential", "window", "n", "q", "mode", "h", "T"],
            "properties": {
                "potential": _POTENTIAL_SCHEMA,
                "window": {"type": "array", "minItems": 2, "maxItems": 2,
                           "items": {"type": "number"}},
                "n": {"type": "integer", "minimum": 16},
                "q": {"type": "number", "exclusiveMinimum": 1},
                "mode": {"type": "string", "enum": ["diffusion", "lmc"]},
                "h": {"type": "number", "exclusiveMinimum": 0},
                "T": {"type": "number", "exclusiveMinimum": 0},
                "save_every": {"type": "integer", "minimum": 1},
                "init": _INIT_SCHEMA,
                "predict": {
                    "type": "object",
                    "required": ["kind", "C"],
                    "properties": {
                        "kind": {"type": "string", "enum": ["PI", "LSI", "LO"]},
                        "C": {"type": "number", "exclusiveMinimum": 0},
                        "alpha": {"type": "number"},
                    },
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
        "init_check": {
            "type": "object",
            "required": ["potential", "variant", "window", "n"],
            "properties": {
                "potential": _POTENTIAL_SCHEMA,
                "variant": {"type": "string", "enum": ["convex", "general", "modified"]},
                "gamma": {"type": "number", "exclusiveMinimum": 0},
                "R": {"type": "number", "exclusiveMinimum": 0},
                "window": {"type": "array", "minItems": 2, "maxItems": 2,
                           "items": {"type": "number"}},
                "n": {"type": "integer", "minimum": 16},
            },
            "additionalProperties": False,
        },
        "verify": {
            "type": "object",
            "properties": {
                "n_instances": {"type": "integer", "minimum": 10},
                "n_paths": {"type": "integer", "minimum": 1000},
                "grid_n": {"type": "integer", "minimum": 32},
                "negative_control": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

_COMMAND_SECTION = {
    "plan": "plan",
    "sample": "sample",
    "bias-scan": "bias_scan",
    "decay-curve": "decay_curve",
    "init-check": "init_check",
    "verify": "verify",
}


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    if jsonschema is not None:
        try:
            jsonschema.validate(cfg, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"invalid config: {exc.message}") from exc
    section = _COMMAND_SECTION[cfg["command"]]
    if section != "verify" and section not in cfg:
        raise ConfigError(f"command {cfg['command']!r} requires a {section!r} section")


def build_potential(obj: dict):
    kwargs = {}
    if "alpha" in obj:
        kwargs["alpha"] = float(obj["alpha"])
    if "s" in obj:
        kwargs["s"] = float(obj["s"])
    if "A" in obj:
        kwargs["A"] = np.asarray(obj["A"], dtype=float)
    try:
        return make_builtin(obj["family"], int(obj["d"]), **kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_init(obj: Optional[dict], d: int, default_var: float = 1.0) -> GaussianLaw:
    obj = obj or {}
    mean = obj.get("mean", 0.0)
    mean = np.full(d, float(mean)) if np.isscalar(mean) else np.asarray(mean, dtype=float)
    if "cov" in obj:
        cov = np.asarray(obj["cov"], dtype=float)
    else:
        cov = float(obj.get("var", default_var)) * np.eye(d)
    try:
        return GaussianLaw(mean=mean, cov=cov)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_plan_request(obj: dict) -> PlanRequest:
    kind = obj["kind"]
    smooth = SmoothnessRecord(s=float(obj["s"]), L=float(obj["L"]))
    try:
        if kind == "lsi":
            fi = FIConstants(kind="LSI", C=float(obj["C"]))
        elif kind == "log_concave":
            fi = FIConstants(kind="PI", C=float(obj["C"]))
        elif kind == "lo":
            fi = FIConstants(kind="LO", C=float(obj["C"]), alpha=float(obj.get("alpha", 1.0)))
        else:
            fi = FIConstants(kind="MLSI", C=float(obj["C"]),
                             alpha0=float(obj.get("alpha0", 2.0)),
                             alpha1=float(obj.get("alpha1", 1.0)),
                             C_tail=float(obj.get("C_tail", 1.0)))
        return PlanRequest(
            eps=float(obj["eps"]), q=float(obj["q"]), d=int(obj["d"]), fi=fi,
            smooth=smooth, R0=float(obj["R0"]),
            m=float(obj["m"]) if "m" in obj else None,
            R0_hat=float(obj["R0_hat"]) if "R0_hat" in obj else None,
            log_concave=bool(obj.get("log_concave", kind == "log_concave")),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
