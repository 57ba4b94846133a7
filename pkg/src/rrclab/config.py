"""Run configuration: flat-section key/value files (INI) or JSON.

Sections: ``plant`` (preset name or explicit constants), ``controller``
(preset name or explicit settings, plus an optional nominal-mass
multiplier), ``scenario`` (experiment kind and its parameters) and
``sim`` (timing/actuator/sensor toggles).  Unknown keys are rejected
with their full path so config typos never pass silently.
"""

from __future__ import annotations

import configparser
import io
import json
from dataclasses import dataclass, field

from .controllers import ControllerConfig
from .plant import PlantParams
from .presets import CONTROLLER_PRESETS, PLANT_PRESETS
from .sim import SimConfig


class ConfigError(ValueError):
    """Invalid or missing configuration; message carries the field path."""


_PLANT_KEYS = {"preset", "motor_mass", "load_mass", "spring_coeff",
               "force_coeff", "viscous_damping_motor", "viscous_damping_load"}
_CTRL_KEYS = {"preset", "variant", "ratio", "dob_cutoff", "diff_cutoff",
              "pole", "nominal_motor_mass", "nominal_mass_multiplier"}
_SCEN_KEYS = {"kind", "step_height", "step_time", "chirp_amplitude",
              "chirp_f0", "chirp_f1", "chirp_sweep_time", "chirp_start",
              "dist_m_value", "dist_m_t0", "dist_m_t1",
              "dist_l_value", "dist_l_t0", "dist_l_t1",
              "prbs_low", "prbs_high", "prbs_bit_period", "prbs_length"}
_SIM_KEYS = {"control_period", "substeps", "duration", "actuator_limit",
             "encoder_resolution", "quantization_enabled"}
_SECTIONS = {"plant": _PLANT_KEYS, "controller": _CTRL_KEYS,
             "scenario": _SCEN_KEYS, "sim": _SIM_KEYS}


@dataclass(frozen=True)
class RunConfig:
    """Parsed but unresolved configuration (string-valued leaves)."""

    plant: dict = field(default_factory=dict)
    controller: dict = field(default_factory=dict)
    scenario: dict = field(default_factory=dict)
    sim: dict = field(default_factory=dict)

    def section(self, name: str) -> dict:
        return getattr(self, name)


def _validate(sections: dict[str, dict]) -> RunConfig:
    for name, content in sections.items():
        if name not in _SECTIONS:
            raise ConfigError(f"unknown section [{name}]")
        for key in content:
            if key not in _SECTIONS[name]:
                raise ConfigError(f"unknown key {name}.{key}")
    cleaned = {name: {k: str(v) for k, v in sections.get(name, {}).items()}
               for name in _SECTIONS}
    return RunConfig(**cleaned)


def parse_config(text: str) -> RunConfig:
    """Parse INI-style or JSON configuration text."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from None
        if not isinstance(data, dict) or not all(
                isinstance(v, dict) for v in data.values()):
            raise ConfigError("JSON config must map section names to objects")
        return _validate(data)
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"invalid INI config: {exc}") from None
    return _validate({s: dict(parser.items(s)) for s in parser.sections()})


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def serialize_config(cfg: RunConfig) -> str:
    parser = configparser.ConfigParser()
    for name in _SECTIONS:
        content = cfg.section(name)
        if content:
            parser[name] = {k: str(v) for k, v in content.items()}
    out = io.StringIO()
    parser.write(out)
    return out.getvalue()


def _get_float(section: dict, section_name: str, key: str,
               default: float | None = None) -> float | None:
    if key not in section:
        return default
    try:
        return float(section[key])
    except ValueError:
        raise ConfigError(
            f"{section_name}.{key} is not a number: {section[key]!r}") from None


def resolve_plant(cfg: RunConfig) -> PlantParams:
    sec = cfg.plant
    if not sec:
        raise ConfigError("missing section plant (set plant.preset or "
                          "explicit constants)")
    if "preset" in sec:
        name = sec["preset"]
        if name not in PLANT_PRESETS:
            raise ConfigError(f"plant.preset must be one of "
                              f"{sorted(PLANT_PRESETS)}, got {name!r}")
        base = PLANT_PRESETS[name]()
        overrides = {k: _get_float(sec, "plant", k) for k in sec
                     if k != "preset"}
        if overrides:
            from dataclasses import replace
            base = replace(base, **overrides)
        return base
    required = ("motor_mass", "load_mass", "spring_coeff")
    for key in required:
        if key not in sec:
            raise ConfigError(f"missing plant.{key}")
    kwargs = {k: _get_float(sec, "plant", k) for k in sec}
    try:
        return PlantParams(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"plant: {exc}") from None


def resolve_controller(cfg: RunConfig, plant: PlantParams) -> ControllerConfig:
    sec = cfg.controller
    if not sec:
        raise ConfigError("missing section controller (set controller.preset "
                          "or explicit settings)")
    if "preset" in sec:
        name = sec["preset"]
        if name not in CONTROLLER_PRESETS:
            raise ConfigError(f"controller.preset must be one of "
                              f"{sorted(CONTROLLER_PRESETS)}, got {name!r}")
        ctrl = CONTROLLER_PRESETS[name](plant)
    else:
        for key in ("variant", "ratio", "dob_cutoff", "diff_cutoff", "pole"):
            if key not in sec:
                raise ConfigError(f"missing controller.{key}")
        try:
            ctrl = ControllerConfig(
                variant=sec["variant"],
                ratio=_get_float(sec, "controller", "ratio"),
                dob_cutoff=_get_float(sec, "controller", "dob_cutoff"),
                diff_cutoff=_get_float(sec, "controller", "diff_cutoff"),
                pole=_get_float(sec, "controller", "pole"),
                nominal_motor_mass=_get_float(sec, "controller",
                                              "nominal_motor_mass",
                                              plant.motor_mass))
        except ValueError as exc:
            raise ConfigError(f"controller: {exc}") from None
    if "nominal_motor_mass" in sec and "preset" in sec:
        ctrl = ctrl.with_nominal_mass(
            _get_float(sec, "controller", "nominal_motor_mass"))
    mult = _get_float(sec, "controller", "nominal_mass_multiplier")
    if mult is not None:
        if mult <= 0:
            raise ConfigError("controller.nominal_mass_multiplier must be "
                              "positive")
        ctrl = ctrl.with_nominal_mass(mult * plant.motor_mass)
    return ctrl


def resolve_sim(cfg: RunConfig, default_duration: float = 2.0) -> SimConfig:
    sec = cfg.sim
    kwargs = {}
    for key in ("control_period", "duration", "actuator_limit",
                "encoder_resolution"):
        val = _get_float(sec, "sim", key)
        if val is not None:
            kwargs[key] = val
    if "substeps" in sec:
        try:
            kwargs["substeps"] = int(sec["substeps"])
        except ValueError:
            raise ConfigError(
                f"sim.substeps is not an integer: {sec['substeps']!r}") from None
    if "quantization_enabled" in sec:
        raw = sec["quantization_enabled"].strip().lower()
        if raw not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError("sim.quantization_enabled must be boolean")
        kwargs["quantization_enabled"] = raw in ("true", "1", "yes")
    kwargs.setdefault("duration", default_duration)
    try:
        return SimConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"sim: {exc}") from None
