"""Experiment configuration: defaults, JSON schema, validation and hashing.

A configuration is one JSON document; every field has a default matching
the reference simulation study, so an empty config reproduces it. The
run identifier is a prefix of the SHA-256 hash of the canonical
(sorted-keys) dump, making artifact directories content-addressed.
"""

import copy
import hashlib
import json

import jsonschema

from .exceptions import ConfigError

DEFAULT_CONFIG = {
    "seed": 20240901,
    "model": {
        "R": 2,
        "Q_star": [[0.7, 0.3], [0.2, 0.8]],
        "emissions": [
            {"type": "normal", "mean": -1.0, "sd": 1.0},
            {"type": "normal", "mean": 1.0, "sd": 1.0},
        ],
    },
    "data": {"n": 10000},
    "partition": {"M": [1, 2, 3, 4, 6, 7], "transform": "sigmoid-linear"},
    "pi1": {"iterations": 150000, "burn_in": 10000, "thin": 20, "gamma": 1.0, "beta": 1.0},
    "pi2": {
        "C": 10,
        "M0": 1.0,
        "mu_c": 0.0,
        "sigma_c2": 1.0,
        "alpha_sigma": 1.0,
        "beta_sigma": 1.0,
        "S_max": None,
        "kappa": None,
        "max_draws": None,
    },
    "full_bayes": {"iterations": 70000, "burn_in": 10000, "thin": 10},
    "spectral": {"kappa": 8, "restarts": 50, "iterations": 100, "replications": 1},
    "diagnostics": {"fisher_step": 1e-4, "fisher_max_kappa": 16, "reference_kappa": 4},
    "outputs": {"directory": "out", "grid_points": 512},
    "reproduce": {"n_values": [1000, 2500, 5000, 10000], "scale": "desk"},
}

_POSITIVE_INT = {"type": "integer", "minimum": 1}
_POSITIVE_NUM = {"type": "number", "exclusiveMinimum": 0}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "model": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "R": _POSITIVE_INT,
                "Q_star": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                "emissions": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {
                            "type": {"enum": ["normal"]},
                            "mean": {"type": "number"},
                            "sd": _POSITIVE_NUM,
                        },
                        "required": ["type", "mean", "sd"],
                    },
                },
            },
        },
        "data": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"n": _POSITIVE_INT},
        },
        "partition": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "M": {
                    "anyOf": [
                        _POSITIVE_INT,
                        {"type": "array", "items": _POSITIVE_INT, "minItems": 1},
                    ]
                },
                "transform": {"enum": ["sigmoid-linear", "pure-sigmoid"]},
            },
        },
        "pi1": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "iterations": _POSITIVE_INT,
                "burn_in": {"type": "integer", "minimum": 0},
                "thin": _POSITIVE_INT,
                "gamma": _POSITIVE_NUM,
                "beta": _POSITIVE_NUM,
            },
        },
        "pi2": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "C": _POSITIVE_INT,
                "M0": _POSITIVE_NUM,
                "mu_c": {"type": "number"},
                "sigma_c2": _POSITIVE_NUM,
                "alpha_sigma": _POSITIVE_NUM,
                "beta_sigma": _POSITIVE_NUM,
                "S_max": {"anyOf": [_POSITIVE_INT, {"type": "null"}]},
                "kappa": {"anyOf": [_POSITIVE_INT, {"type": "null"}]},
                "max_draws": {"anyOf": [_POSITIVE_INT, {"type": "null"}]},
            },
        },
        "full_bayes": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "iterations": _POSITIVE_INT,
                "burn_in": {"type": "integer", "minimum": 0},
                "thin": _POSITIVE_INT,
            },
        },
        "spectral": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kappa": _POSITIVE_INT,
                "restarts": _POSITIVE_INT,
                "iterations": _POSITIVE_INT,
                "replications": _POSITIVE_INT,
            },
        },
        "diagnostics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "fisher_step": _POSITIVE_NUM,
                "fisher_max_kappa": _POSITIVE_INT,
                "reference_kappa": _POSITIVE_INT,
            },
        },
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "directory": {"type": "string"},
                "grid_points": {"type": "integer", "minimum": 16},
            },
        },
        "reproduce": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_values": {"type": "array", "items": _POSITIVE_INT, "minItems": 1},
                "scale": {"enum": ["smoke", "desk", "full"]},
            },
        },
    },
}


def _deep_merge(base, override):
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_config(path=None, overrides=None) -> dict:
    """Merge the user config (if any) and CLI overrides into the defaults."""
    user = {}
    if path is not None:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except FileNotFoundError as err:
            raise ConfigError(f"config file not found: {path}") from err
        except json.JSONDecodeError as err:
            raise ConfigError(f"config file is not valid JSON: {err}") from err
    cfg = _deep_merge(DEFAULT_CONFIG, user)
    if overrides:
        cfg = _deep_merge(cfg, overrides)
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict):
    """Schema validation plus the cross-field invariants."""
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as err:
        raise ConfigError(f"config does not match schema: {err.message}") from err
    r = cfg["model"]["R"]
    q = cfg["model"]["Q_star"]
    if len(q) != r or any(len(row) != r for row in q):
        raise ConfigError("model.Q_star must be an R x R matrix")
    if any(abs(sum(row) - 1.0) > 1e-9 or min(row) < 0 for row in q):
        raise ConfigError("model.Q_star rows must be probability vectors")
    if len(cfg["model"]["emissions"]) != r:
        raise ConfigError("model.emissions must list one spec per state")
    if cfg["pi1"]["burn_in"] >= cfg["pi1"]["iterations"]:
        raise ConfigError("pi1.burn_in must be smaller than pi1.iterations")
    if cfg["full_bayes"]["burn_in"] >= cfg["full_bayes"]["iterations"]:
        raise ConfigError("full_bayes.burn_in must be smaller than full_bayes.iterations")


def config_hash(cfg: dict) -> str:
    """First 12 hex digits of the SHA-256 of the canonical config dump."""
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]


def partition_levels(cfg: dict) -> list:
    m = cfg["partition"]["M"]
    return [m] if isinstance(m, int) else list(m)


def default_pi2_kappa(n: int) -> int:
    """Refinement rule used in the reference study when fitting emissions."""
    if n < 2500:
        return 4
    if n < 10000:
        return 8
    return 16
