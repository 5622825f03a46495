"""Run configuration: scenario presets, the toy-training config and their JSON schemas.

Configs travel as plain JSON dicts. ``resolve_*`` merges a preset, an optional
file and flag overrides, validates the result against the schema and returns a
dataclass.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Optional

import jsonschema


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key when known."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_UNIT_OPEN = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}
_SEED = {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1}

_NORMAL = {
    "type": "object",
    "properties": {"kind": {"const": "normal"}, "mean": {"type": "number"}, "var": _NONNEG},
    "required": ["kind", "mean", "var"],
    "additionalProperties": False,
}
_CLUSTER = {
    "type": "object",
    "properties": {"mean": {"type": "number"}, "var": _NONNEG, "count": {"type": "integer", "minimum": 1}},
    "required": ["mean", "var", "count"],
    "additionalProperties": False,
}
_TWO_CLUSTER = {
    "type": "object",
    "properties": {"kind": {"const": "two_cluster"},
                   "clusters": {"type": "array", "items": _CLUSTER, "minItems": 2, "maxItems": 2}},
    "required": ["kind", "clusters"],
    "additionalProperties": False,
}
_SPARSE_GAUSSIAN = {
    "type": "object",
    "properties": {"kind": {"const": "sparse_gaussian"}, "density": {"type": "number", "minimum": 0, "maximum": 1},
                   "var": _NONNEG},
    "required": ["kind", "density", "var"],
    "additionalProperties": False,
}
_PHASE_COSINE = {
    "type": "object",
    "properties": {"kind": {"const": "phase_cosine"}, "noise_var": _NONNEG},
    "required": ["kind", "noise_var"],
    "additionalProperties": False,
}

SCENARIO_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "hocl scenario config",
    "type": "object",
    "properties": {
        "scenario": {"enum": ["fig2", "fig3", "fig4"]},
        "n": {"type": "integer", "minimum": 1},
        "dt": _POS,
        "steps": {"type": "integer", "minimum": 1},
        "coupling": _POS,
        "eta": _NONNEG,
        "gamma": _POS,
        "beta": _POS,
        "r_c": _UNIT_OPEN,
        "lam": _POS,
        "sigma_c": _POS,
        "gate_mode": {"enum": ["smooth", "hard"]},
        "alpha_s": _POS,
        "frequencies": {"oneOf": [_NORMAL, _TWO_CLUSTER]},
        "centered": {"type": "boolean"},
        "variant": {"enum": ["mean_field", "order_gated"]},
        "activation": {"oneOf": [_SPARSE_GAUSSIAN, _PHASE_COSINE]},
        "w_init_var": _NONNEG,
        "act_bound": _POS,
        "trajectories": {"type": "integer", "minimum": 1},
        "window": {"type": "integer", "minimum": 1},
        "cluster_cut": {"type": "number", "exclusiveMinimum": 0, "maximum": math.pi},
        "surface_w_max": _POS,
        "surface_points": {"type": "integer", "minimum": 3},
        "seed": _SEED,
    },
    "required": ["scenario", "n", "dt", "steps", "coupling", "eta", "gamma", "beta", "r_c", "lam",
                 "sigma_c", "gate_mode", "alpha_s", "frequencies", "centered", "variant", "activation",
                 "w_init_var", "act_bound", "trajectories", "window", "cluster_cut", "surface_w_max",
                 "surface_points", "seed"],
    "additionalProperties": False,
}

TRAIN_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "hocl toy training config",
    "type": "object",
    "properties": {
        "n": {"type": "integer", "minimum": 2},
        "d": {"type": "integer", "minimum": 1},
        "d_in": {"type": "integer", "minimum": 1},
        "coupling": _POS,
        "sigma_c": _POS,
        "sigma_omega": _NONNEG,
        "eta": _NONNEG,
        "gamma": _POS,
        "beta": _POS,
        "r_c": _UNIT_OPEN,
        "lam": _POS,
        "delta": {"oneOf": [_POS, {"type": "null"}]},
        "target_density": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "k_cap": {"oneOf": [{"type": "integer", "minimum": 1}, {"type": "null"}]},
        "t_sync": {"type": "integer", "minimum": 1},
        "dt": _POS,
        "alpha_f": _NONNEG,
        "alpha_s": _NONNEG,
        "alpha_z": _NONNEG,
        "lr_schedule": {"type": "boolean"},
        "schedule_p": _POS,
        "schedule_q": _POS,
        "grad_clip": _POS,
        "h_fd": _POS,
        "eps_conv": _POS,
        "max_iters": {"type": "integer", "minimum": 1},
        "nonlinearity": {"enum": ["relu", "identity"]},
        "w_init_density": {"type": "number", "minimum": 0, "maximum": 1},
        "act_bound": _POS,
        "seed": _SEED,
    },
    "required": ["n", "d", "d_in", "coupling", "sigma_c", "sigma_omega", "eta", "gamma", "beta", "r_c",
                 "lam", "delta", "target_density", "k_cap", "t_sync", "dt", "alpha_f", "alpha_s",
                 "alpha_z", "lr_schedule", "schedule_p", "schedule_q", "grad_clip", "h_fd", "eps_conv",
                 "max_iters", "nonlinearity", "w_init_density", "act_bound", "seed"],
    "additionalProperties": False,
}


_FIG2 = {
    "scenario": "fig2", "n": 50, "dt": 0.05, "steps": 1000, "coupling": 2.0,
    "eta": 0.01, "gamma": 0.001, "beta": 20.0, "r_c": 0.5, "lam": 0.3, "sigma_c": 1.0,
    "gate_mode": "smooth", "alpha_s": 1.0,
    "frequencies": {"kind": "normal", "mean": 0.0, "var": 1.0}, "centered": True,
    "variant": "mean_field",
    "activation": {"kind": "sparse_gaussian", "density": 0.3, "var": 0.25},
    "w_init_var": 1e-4, "act_bound": 4.0, "trajectories": 1, "window": 25,
    "cluster_cut": math.pi / 4, "surface_w_max": 0.5, "surface_points": 41, "seed": 42,
}
_FIG3 = {
    **_FIG2,
    "scenario": "fig3", "n": 8, "dt": 0.02, "steps": 2000, "coupling": 3.0,
    "eta": 0.02, "gamma": 0.002, "beta": 20.0,
    "frequencies": {"kind": "two_cluster", "clusters": [{"mean": 0.0, "var": 0.09, "count": 5},
                                                         {"mean": 3.0, "var": 0.09, "count": 3}]},
    "activation": {"kind": "phase_cosine", "noise_var": 0.0025},
    "w_init_var": 0.0, "act_bound": 1.0, "seed": 123,
}
_FIG4 = {
    **_FIG2,
    "scenario": "fig4", "n": 20, "dt": 0.02, "steps": 600, "coupling": 2.0,
    "eta": 0.01, "gamma": 0.001, "beta": 15.0, "lam": 0.3,
    "frequencies": {"kind": "normal", "mean": 0.0, "var": 0.25},
    "w_init_var": 0.01, "trajectories": 8, "seed": 42,
}
PRESETS: dict[str, dict[str, Any]] = {"fig2": _FIG2, "fig3": _FIG3, "fig4": _FIG4}

TRAIN_DEFAULTS: dict[str, Any] = {
    "n": 16, "d": 4, "d_in": 4, "coupling": 2.0, "sigma_c": 1.0, "sigma_omega": 0.1,
    "eta": 0.01, "gamma": 0.01, "beta": 20.0, "r_c": 0.5, "lam": 0.3,
    "delta": None, "target_density": 0.5, "k_cap": None, "t_sync": 5, "dt": 0.05,
    "alpha_f": 0.1, "alpha_s": 0.5, "alpha_z": 0.01, "lr_schedule": False,
    "schedule_p": 2.0 / 3.0, "schedule_q": 1.0, "grad_clip": 1.0, "h_fd": 1e-5,
    "eps_conv": 1e-10, "max_iters": 200, "nonlinearity": "relu", "w_init_density": 0.5,
    "act_bound": 1.0, "seed": 7,
}


def _validate(doc: dict, schema: dict) -> None:
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (list(e.absolute_path), e.message))
    if not errors:
        return
    err = errors[0]
    path = [str(p) for p in err.absolute_path]
    name = path[0] if path else None
    if name is None and err.validator in ("additionalProperties", "required"):
        # "'foo' was unexpected" / "'foo' is a required property"
        name = err.message.split("'")[1] if "'" in err.message else None
    where = ".".join(path) if path else (name or "<config>")
    raise ConfigError(f"{where}: {err.message}", field=name)


def load_json(path) -> dict:
    """Read a config document. A run manifest is accepted too; its ``config`` is used."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    if "config" in doc and isinstance(doc["config"], dict) and "artifact_version" in doc:
        doc = doc["config"]
    return doc


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    n: int
    dt: float
    steps: int
    coupling: float
    eta: float
    gamma: float
    beta: float
    r_c: float
    lam: float
    sigma_c: float
    gate_mode: str
    alpha_s: float
    frequencies: dict
    centered: bool
    variant: str
    activation: dict
    w_init_var: float
    act_bound: float
    trajectories: int
    window: int
    cluster_cut: float
    surface_w_max: float
    surface_points: int
    seed: int

    def __post_init__(self):
        if self.frequencies["kind"] == "two_cluster":
            total = sum(c["count"] for c in self.frequencies["clusters"])
            if total != self.n:
                raise ConfigError(f"frequencies: cluster sizes sum to {total}, expected n={self.n}", "frequencies")

    def to_dict(self) -> dict:
        return copy.deepcopy(asdict(self))


@dataclass(frozen=True)
class TrainConfig:
    n: int
    d: int
    d_in: int
    coupling: float
    sigma_c: float
    sigma_omega: float
    eta: float
    gamma: float
    beta: float
    r_c: float
    lam: float
    delta: Optional[float]
    target_density: float
    k_cap: Optional[int]
    t_sync: int
    dt: float
    alpha_f: float
    alpha_s: float
    alpha_z: float
    lr_schedule: bool
    schedule_p: float
    schedule_q: float
    grad_clip: float
    h_fd: float
    eps_conv: float
    max_iters: int
    nonlinearity: str
    w_init_density: float
    act_bound: float
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


def resolve_scenario(name: str, doc: Optional[dict] = None, **overrides) -> ScenarioConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown scenario {name!r}; choose from {sorted(PRESETS)}", "scenario")
    merged = copy.deepcopy(PRESETS[name])
    if doc:
        merged.update(copy.deepcopy(doc))
    merged.update({k: v for k, v in overrides.items() if v is not None})
    if merged.get("scenario") != name:
        raise ConfigError(f"scenario: config is for {merged.get('scenario')!r}, not {name!r}", "scenario")
    _validate(merged, SCENARIO_SCHEMA)
    return ScenarioConfig(**merged)


def resolve_train(doc: Optional[dict] = None, **overrides) -> TrainConfig:
    merged = copy.deepcopy(TRAIN_DEFAULTS)
    if doc:
        merged.update(copy.deepcopy(doc))
    merged.update({k: v for k, v in overrides.items() if v is not None})
    _validate(merged, TRAIN_SCHEMA)
    if merged["lr_schedule"] and not (0.5 < merged["schedule_p"] < merged["schedule_q"] <= 1.0):
        raise ConfigError("schedule_p: need 1/2 < schedule_p < schedule_q <= 1", "schedule_p")
    return TrainConfig(**merged)
