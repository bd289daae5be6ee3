"""Toolkit configuration: JSON in boundary units (kPa, mm, deg), SI inside."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .controller import ControllerConfig
from .design_explorer import DesignConstraints
from .emg_pipeline import DEFAULT_FS, FilterSpec
from .errors import ConfigError, ExosuitError
from .pneumatic_sim import DEFAULT_DT, T_REF, Chamber, ValveModel
from .torque_model import ActuatorGeometry
from .units import deg_to_rad, kpa_to_pa, mm_to_m

DEFAULT_CONFIG = "default.json"


@dataclass(frozen=True)
class PlantConfig:
    chamber: Chamber
    valve: ValveModel
    dt: float = DEFAULT_DT
    anchor_target: float = 100_000.0
    anchor_time: float = 0.5


@dataclass(frozen=True)
class ToolkitConfig:
    geometry: ActuatorGeometry
    design: DesignConstraints
    plant: PlantConfig
    controller: ControllerConfig
    emg: FilterSpec
    emg_default_fs: float = DEFAULT_FS
    notes: dict = field(default_factory=dict)


def _num(section, key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key}: expected a number, got {value!r}")
    return float(value)


def _section(raw, name, allowed, required=()):
    sec = raw.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"{name}: expected an object")
    unknown = sorted(set(sec) - set(allowed))
    if unknown:
        raise ConfigError(f"{name}: unknown key(s) {', '.join(unknown)}")
    missing = [k for k in required if k not in sec]
    if missing:
        raise ConfigError(f"{name}: missing key(s) {', '.join(missing)}")
    return sec


def _geometry(raw):
    sec = _section(raw, "geometry", ("n", "d_mm", "l_dz_mm", "l_hold_upper_mm", "l_hold_lower_mm"),
                   required=("n", "d_mm", "l_dz_mm"))
    n = sec["n"]
    if isinstance(n, bool) or not isinstance(n, int):
        raise ConfigError(f"geometry.n: expected an integer, got {n!r}")
    return ActuatorGeometry(
        n=n,
        d=mm_to_m(_num("geometry", "d_mm", sec["d_mm"])),
        l_dz=mm_to_m(_num("geometry", "l_dz_mm", sec["l_dz_mm"])),
        l_hold_upper=mm_to_m(_num("geometry", "l_hold_upper_mm", sec.get("l_hold_upper_mm", 0.0))),
        l_hold_lower=mm_to_m(_num("geometry", "l_hold_lower_mm", sec.get("l_hold_lower_mm", 0.0))),
    )


def _design(raw, geom):
    allowed = ("p_design_kpa", "theta_design_deg", "torque_min_nm", "profile_max_mm",
               "n_range", "d_range_mm", "contact_length_mm", "l_dz_mm")
    sec = _section(raw, "design", allowed)
    kw = {}
    g = lambda k, d: _num("design", k, sec.get(k, d))  # noqa: E731
    kw["p_design"] = kpa_to_pa(g("p_design_kpa", 100.0))
    kw["theta_design"] = deg_to_rad(g("theta_design_deg", 80.0))
    kw["torque_min"] = g("torque_min_nm", 0.0)
    prof = sec.get("profile_max_mm")
    kw["profile_max"] = math.inf if prof is None else mm_to_m(_num("design", "profile_max_mm", prof))
    n_range = sec.get("n_range", [1, 10])
    if (not isinstance(n_range, list) or len(n_range) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in n_range)):
        raise ConfigError("design.n_range: expected [n_min, n_max] integers")
    kw["n_range"] = tuple(n_range)
    d_range = sec.get("d_range_mm", [10, 60, 1])
    if not isinstance(d_range, list) or len(d_range) != 3:
        raise ConfigError("design.d_range_mm: expected [start, stop, step]")
    kw["d_range"] = tuple(round(mm_to_m(_num("design", "d_range_mm", v)), 12) for v in d_range)
    kw["contact_length"] = mm_to_m(g("contact_length_mm", 11.72))
    kw["l_dz"] = mm_to_m(g("l_dz_mm", geom.l_dz * 1e3))
    return DesignConstraints(**kw)


def _plant(raw, geom):
    allowed = ("volume_m3", "temperature_k", "sonic_conductance", "critical_ratio", "laminar_ratio",
               "dt_s", "anchor_target_kpa", "anchor_time_s")
    sec = _section(raw, "plant", allowed)
    g = lambda k, d: _num("plant", k, sec.get(k, d))  # noqa: E731
    temp = g("temperature_k", T_REF)
    if "volume_m3" in sec:
        chamber = Chamber(g("volume_m3", 0.0), temp)
    else:
        chamber = Chamber.from_geometry(geom, temp)
    valve = ValveModel(
        sonic_conductance=g("sonic_conductance", 1e-9),
        critical_ratio=g("critical_ratio", 0.5),
        laminar_ratio=g("laminar_ratio", 0.999),
    )
    return PlantConfig(chamber, valve, g("dt_s", DEFAULT_DT),
                       kpa_to_pa(g("anchor_target_kpa", 100.0)), g("anchor_time_s", 0.5))


def _controller(raw):
    allowed = ("assist_pressure_kpa", "hold_pressure_kpa", "stand_onset_deg", "stand_complete_deg",
               "debounce_s", "hold_settle_s", "vent_s")
    sec = _section(raw, "controller", allowed)
    g = lambda k, d: _num("controller", k, sec.get(k, d))  # noqa: E731
    return ControllerConfig(
        assist_pressure=kpa_to_pa(g("assist_pressure_kpa", 100.0)),
        hold_pressure=kpa_to_pa(g("hold_pressure_kpa", 120.0)),
        stand_onset_angle=deg_to_rad(g("stand_onset_deg", 20.0)),
        stand_complete_angle=deg_to_rad(g("stand_complete_deg", 80.0)),
        debounce=g("debounce_s", 0.1),
        hold_settle_time=g("hold_settle_s", 0.5),
        vent_time=g("vent_s", 0.3),
    )


def _emg(raw):
    sec = _section(raw, "emg", ("order", "low_cut_hz", "high_cut_hz", "zero_phase", "default_fs_hz"))
    order = sec.get("order", 4)
    if isinstance(order, bool) or not isinstance(order, int):
        raise ConfigError(f"emg.order: expected an integer, got {order!r}")
    zero_phase = sec.get("zero_phase", False)
    if not isinstance(zero_phase, bool):
        raise ConfigError("emg.zero_phase: expected true/false")
    spec = FilterSpec(order, _num("emg", "low_cut_hz", sec.get("low_cut_hz", 10.0)),
                      _num("emg", "high_cut_hz", sec.get("high_cut_hz", 400.0)), zero_phase)
    return spec, _num("emg", "default_fs_hz", sec.get("default_fs_hz", DEFAULT_FS))


def config_from_dict(raw: dict) -> ToolkitConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be a JSON object")
    unknown = sorted(set(raw) - {"geometry", "design", "plant", "controller", "emg", "notes"})
    if unknown:
        raise ConfigError(f"unknown top-level key(s) {', '.join(unknown)}")
    try:
        geom = _geometry(raw)
        design = _design(raw, geom)
        plant = _plant(raw, geom)
        ctrl = _controller(raw)
        emg, fs = _emg(raw)
    except ConfigError:
        raise
    except ExosuitError as exc:
        raise ConfigError(str(exc)) from exc
    return ToolkitConfig(geom, design, plant, ctrl, emg, fs, raw.get("notes", {}))


def load_json(path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def load_config(path=None) -> ToolkitConfig:
    """Load a config file, or the bundled defaults when ``path`` is None."""
    if path is None:
        raw = json.loads(resources.files("exosuit.data").joinpath(DEFAULT_CONFIG).read_text("utf-8"))
        return config_from_dict(raw)
    try:
        return config_from_dict(load_json(path))
    except ConfigError as exc:
        if str(exc).startswith(str(path)):
            raise
        raise ConfigError(f"{path}: {exc}") from exc


def bundled_path(name: str):
    return resources.files("exosuit.data").joinpath(name)
