"""Scenario configuration: JSON schema, defaults, and builders."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .equilibrium import EquilibriumProblem
from .model import ModelError, SpacecraftModel, build_model
from .sim import FRONT_ONLY, FULL_FACES, LQR, OPEN_LOOP, SimConfig
from .srp import LIGHT_SPEED, SOLAR_CONSTANT, SrpEnvironment


class ConfigError(ValueError):
    """Schema or semantic validation failure; maps to CLI exit code 3."""


_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_NUMS = {"type": "array", "items": {"type": "number"}}
_OPTICS = {
    "type": "object",
    "properties": {"spe": {"type": "number"}, "dif": {"type": "number"}, "abs": {"type": "number"}},
    "required": ["spe", "dif", "abs"],
    "additionalProperties": False,
}
_BOUNDS = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

_SURFACE = {
    "type": "object",
    "properties": {
        "offset_m": _VEC3, "normal": _VEC3, "area_m2": {"type": "number"},
        "material": {"type": "string"}, "optics": _OPTICS, "front": {"type": "boolean"},
    },
    "required": ["offset_m", "normal", "area_m2"],
    "additionalProperties": False,
}

_BODY = {
    "type": "object",
    "properties": {
        "mass_kg": {"type": "number"},
        "dimensions_m": _VEC3,
        "inertia_kgm2": {"type": "array", "items": _VEC3, "minItems": 3, "maxItems": 3},
        "material": {"type": "string"},
        "optics": _OPTICS,
        "back_material": {"type": "string"},
        "back_optics": _OPTICS,
        "surfaces": {"type": "array", "items": _SURFACE},
    },
    "required": ["mass_kg", "dimensions_m"],
    "additionalProperties": False,
}

_JOINT = {
    "type": "object",
    "properties": {
        "parent": {"type": "integer", "minimum": 0},
        "child": {"type": "integer", "minimum": 0},
        "hinge_parent_m": _VEC3,
        "hinge_child_m": _VEC3,
        "axis": _VEC3,
        "bounds_deg": _BOUNDS,
    },
    "required": ["parent", "child", "hinge_parent_m", "hinge_child_m", "axis"],
    "additionalProperties": False,
}

_MATERIALS = {
    "type": "object",
    "additionalProperties": {"oneOf": [_OPTICS, {"type": "array", "items": {"type": "number"},
                                                 "minItems": 3, "maxItems": 3}]},
}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "properties": {
        "model": {
            "type": "object",
            "properties": {
                "preset": {"enum": ["canonical9"]},
                "body_materials": {"type": "array", "items": {"type": "string"}},
                "bounds_deg": _BOUNDS,
                "bodies": {"type": "array", "items": _BODY, "minItems": 1},
                "joints": {"type": "array", "items": _JOINT},
                "materials": _MATERIALS,
            },
            "additionalProperties": False,
        },
        "environment": {
            "type": "object",
            "properties": {
                "distance_au": {"type": "number", "exclusiveMinimum": 0},
                "solar_constant": {"type": "number", "minimum": 0},
                "light_speed": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "target": {
            "type": "object",
            "properties": {"f_target_N": _VEC3, "t_target_Nm": _VEC3},
            "required": ["f_target_N"],
            "additionalProperties": False,
        },
        "optimizer": {
            "type": "object",
            "properties": {
                "umbrella_deg": {"type": "number"},
                "roll_step_deg": {"type": "number", "exclusiveMinimum": 0},
                "initial_roll_deg": {"type": "number"},
                "seeds": {"type": "integer", "minimum": 1},
                "bounds_deg": _BOUNDS,
                "min_sun_cos": {"type": "number", "minimum": 0, "maximum": 1},
                "max_iter": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "lqr": {
            "type": "object",
            "properties": {"angle_scale_deg": {"type": "number", "exclusiveMinimum": 0}},
            "additionalProperties": False,
        },
        "sim": {
            "type": "object",
            "properties": {
                "duration_s": {"type": "number", "exclusiveMinimum": 0},
                "duration_periods": {"type": "number", "exclusiveMinimum": 0},
                "abs_tol": {"type": "number", "exclusiveMinimum": 0},
                "rel_tol": {"type": "number", "exclusiveMinimum": 0},
                "dphi0_deg": _VEC3,
                "omega0_degps": _VEC3,
                "dtheta0_deg": _NUMS,
                "control": {"enum": [OPEN_LOOP, LQR]},
                "wrench_model": {"enum": [FULL_FACES, FRONT_ONLY]},
                "sample_interval_s": {"type": "number", "exclusiveMinimum": 0},
                "u_max_radps2": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {
                "solution": {"type": "string"},
                "gain": {"type": "string"},
                "trajectory": {"type": "string"},
            },
            "additionalProperties": False,
        },
    },
    "required": ["target"],
    "additionalProperties": False,
}

DEFAULTS: dict[str, Any] = {
    "model": {"preset": "canonical9"},
    "environment": {"distance_au": 1.0, "solar_constant": SOLAR_CONSTANT, "light_speed": LIGHT_SPEED},
    "target": {"t_target_Nm": [0.0, 0.0, 0.0]},
    "optimizer": {"umbrella_deg": 30.0, "roll_step_deg": 15.0, "initial_roll_deg": 0.0,
                  "min_sun_cos": 0.1, "max_iter": 300},
    "lqr": {"angle_scale_deg": 1.0},
    "sim": {"abs_tol": 1e-5, "rel_tol": 1e-6, "dphi0_deg": [0.0, 0.0, 0.0],
            "omega0_degps": [0.0, 0.0, 0.0], "control": LQR, "wrench_model": FULL_FACES,
            "sample_interval_s": 100.0, "u_max_radps2": 1e-5},
    "output": {"solution": "solution.json", "gain": "gain.json", "trajectory": "trajectory.csv"},
}

_SECTIONS = ("model", "environment", "target", "optimizer", "lqr", "sim", "output")


def validate(raw: Any) -> None:
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None


@dataclass(frozen=True)
class ScenarioConfig:
    """A validated scenario with defaults filled in (plain JSON-able dicts)."""

    data: dict

    @classmethod
    def from_dict(cls, raw: Any) -> "ScenarioConfig":
        validate(raw)
        data = {}
        for key in _SECTIONS:
            if key == "model" and "model" in raw:
                section = copy.deepcopy(raw["model"])
            else:
                section = copy.deepcopy(DEFAULTS.get(key, {}))
                section.update(copy.deepcopy(raw.get(key, {})))
            data[key] = section
        if "duration_s" in data["sim"] and "duration_periods" in data["sim"]:
            raise ConfigError("sim: give duration_s or duration_periods, not both")
        if not ("duration_s" in data["sim"] or "duration_periods" in data["sim"]):
            data["sim"]["duration_periods"] = 20.0
        cfg = cls(data)
        try:
            cfg.build_model()
        except ModelError as exc:
            raise ConfigError(f"model: {exc}") from None
        return cfg

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def build_model(self) -> SpacecraftModel:
        return build_model(self.data["model"])

    def environment(self) -> SrpEnvironment:
        e = self.data["environment"]
        return SrpEnvironment(e["solar_constant"], e["light_speed"], e["distance_au"])

    def problem(self, model: SpacecraftModel) -> EquilibriumProblem:
        o = self.data["optimizer"]
        bounds = None
        if "bounds_deg" in o:
            lo, hi = np.deg2rad(o["bounds_deg"])
            if not lo < hi:
                raise ConfigError("optimizer/bounds_deg: lower bound must be below upper bound")
            bounds = (np.full(model.n_joints, lo), np.full(model.n_joints, hi))
        return EquilibriumProblem(
            f_target_inertial=np.asarray(self.data["target"]["f_target_N"], dtype=float),
            t_target_body=np.asarray(self.data["target"]["t_target_Nm"], dtype=float),
            theta_bounds=bounds,
            roll_search_step=np.deg2rad(o["roll_step_deg"]),
            umbrella_angle=np.deg2rad(o["umbrella_deg"]),
            initial_roll=np.deg2rad(o["initial_roll_deg"]),
            n_seeds=o.get("seeds"),
            min_sun_cos=o["min_sun_cos"],
            max_iter=o["max_iter"],
        )

    def angle_scale(self) -> float:
        return float(np.deg2rad(self.data["lqr"]["angle_scale_deg"]))

    def sim_config(self, model: SpacecraftModel, omega_n: float | None = None) -> SimConfig:
        s = self.data["sim"]
        if "duration_s" in s:
            duration = s["duration_s"]
        else:
            if not omega_n:
                raise ConfigError("sim/duration_periods needs a natural frequency")
            duration = s["duration_periods"] * 2 * np.pi / omega_n
        dtheta0 = None
        if "dtheta0_deg" in s:
            if len(s["dtheta0_deg"]) != model.n_joints:
                raise ConfigError(f"sim/dtheta0_deg: expected {model.n_joints} entries")
            dtheta0 = np.deg2rad(s["dtheta0_deg"])
        return SimConfig(
            duration=float(duration), abs_tol=s["abs_tol"], rel_tol=s["rel_tol"],
            dphi0=np.deg2rad(s["dphi0_deg"]), omega0=np.deg2rad(s["omega0_degps"]),
            dtheta0=dtheta0, control=s["control"], wrench_model=s["wrench_model"],
            sample_interval=s["sample_interval_s"], u_max=s["u_max_radps2"],
        )


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return ScenarioConfig.from_dict(raw)


def dump_config(cfg: ScenarioConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2) + "\n"
