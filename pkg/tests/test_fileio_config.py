import json
import logging
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from exosuit import units
from exosuit.config import bundled_path, config_from_dict, load_config, load_json
from exosuit.controller import PostureSample
from exosuit.emg_pipeline import QUEST_DIMENSIONS, EmgTrace
from exosuit.errors import ConfigError
from exosuit.fileio import (
    candidates_csv,
    imu_csv,
    read_emg,
    read_imu,
    read_measured,
    read_quest,
    read_trace,
    read_valve,
    sidecar_path,
    trace_csv,
    valve_json,
    write_emg,
)
from exosuit.design_explorer import enumerate_designs, pareto_front
from exosuit.pneumatic_sim import PressureTrace, ValveModel


def default_raw():
    return json.loads(bundled_path("default.json").read_text("utf-8"))


@given(st.floats(-1e6, 1e6))
def test_unit_round_trips(x):
    tol = 1e-12 * max(1.0, abs(x))
    assert abs(units.pa_to_kpa(units.kpa_to_pa(x)) - x) <= tol
    assert abs(units.m_to_mm(units.mm_to_m(x)) - x) <= tol
    assert abs(units.rad_to_deg(units.deg_to_rad(x)) - x) <= tol
    assert abs(units.abs_to_gauge(units.gauge_to_abs(x)) - x) <= 1e-9


def test_bundled_config_values():
    cfg = load_config()
    assert cfg.geometry.n == 4
    assert cfg.geometry.d == pytest.approx(0.032)
    assert cfg.design.theta_design == pytest.approx(math.radians(80))
    assert cfg.design.contact_length == pytest.approx(0.01172)
    assert cfg.controller.hold_pressure == pytest.approx(120e3)
    assert cfg.emg.order == 4 and cfg.emg_default_fs == 2000.0
    # chamber volume defaults to the cylinders over the inflation-deflation length
    assert cfg.plant.chamber.volume == pytest.approx(4 * math.pi * 0.016**2 * 0.060)


@pytest.mark.parametrize("section", ["geometry", "design", "plant", "controller", "emg"])
def test_unknown_key_rejected_with_context(section):
    raw = default_raw()
    raw[section]["bogus_key"] = 1
    with pytest.raises(ConfigError, match=rf"{section}: unknown key\(s\) bogus_key"):
        config_from_dict(raw)


def test_unknown_top_level_and_bad_types():
    raw = default_raw()
    raw["extra"] = {}
    with pytest.raises(ConfigError, match="extra"):
        config_from_dict(raw)
    raw = default_raw()
    raw["geometry"]["n"] = 4.5
    with pytest.raises(ConfigError, match="geometry.n"):
        config_from_dict(raw)
    raw = default_raw()
    raw["plant"]["dt_s"] = "fast"
    with pytest.raises(ConfigError, match="plant.dt_s"):
        config_from_dict(raw)


def test_domain_errors_surface_as_config_errors():
    raw = default_raw()
    raw["geometry"]["d_mm"] = -1
    with pytest.raises(ConfigError):
        config_from_dict(raw)


def test_malformed_json_reports_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "geometry": {,}\n}\n')
    with pytest.raises(ConfigError, match="line 2 column"):
        load_json(p)
    with pytest.raises(ConfigError, match=str(p).replace("\\", "\\\\")):
        load_config(p)


def test_measured_csv(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("theta_deg,p_kpa,torque_nm\n80,100,9.1\n\n40,50,3.0\n")
    pts = read_measured(p)
    assert len(pts) == 2
    assert pts[0].theta == pytest.approx(math.radians(80)) and pts[0].p == 100e3
    p.write_text("theta,p,torque\n80,100,9.1\n")
    with pytest.raises(ConfigError, match="expected header"):
        read_measured(p)
    p.write_text("theta_deg,p_kpa,torque_nm\n80,100\n")
    with pytest.raises(ConfigError, match="row 2"):
        read_measured(p)
    p.write_text("theta_deg,p_kpa,torque_nm\n80,100,9.1\n80,abc,9.1\n")
    with pytest.raises(ConfigError, match="row 3"):
        read_measured(p)
    p.write_text("theta_deg,p_kpa,torque_nm\n200,100,9.1\n")
    with pytest.raises(ConfigError, match="row 2"):
        read_measured(p)


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        read_measured(tmp_path / "nope.csv")


def test_trace_round_trip(tmp_path):
    tr = PressureTrace(1e-3, np.linspace(0, 100e3, 51))
    p = tmp_path / "t.csv"
    p.write_text(trace_csv(tr))
    assert p.read_text().splitlines()[0] == "t_s,p_kpa_gauge"
    back = read_trace(p)
    assert back.dt == pytest.approx(1e-3)
    np.testing.assert_allclose(back.samples, tr.samples, atol=1e-3)


def test_trace_must_be_uniform(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("t_s,p_kpa_gauge\n0,0\n0.1,1\n0.3,2\n")
    with pytest.raises(ConfigError, match="uniformly"):
        read_trace(p)


def test_valve_json_round_trip(tmp_path):
    v = ValveModel(2.1575e-9, 0.45, 0.998)
    p = tmp_path / "v.json"
    p.write_text(valve_json(v))
    assert read_valve(p) == v
    p.write_text('{"sonic_conductance": 1e-9, "cv": 3}')
    with pytest.raises(ConfigError):
        read_valve(p)
    p.write_text('{"sonic_conductance": -1}')
    with pytest.raises(ConfigError):
        read_valve(p)


def test_imu_round_trip_and_order(tmp_path):
    samples = [PostureSample(0.01 * k, math.radians(k)) for k in range(50)]
    p = tmp_path / "imu.csv"
    p.write_text(imu_csv(samples))
    back = read_imu(p)
    assert [s.t for s in back] == pytest.approx([s.t for s in samples])
    assert [s.thigh_angle for s in back] == pytest.approx([s.thigh_angle for s in samples], abs=1e-8)
    p.write_text("t_s,thigh_angle_deg\n0,0\n0.1,5\n0.1,6\n")
    with pytest.raises(ConfigError, match="row 4"):
        read_imu(p)


def test_emg_sidecar_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    tr = EmgTrace(2000.0, rng.normal(size=3000), "with_exosuit", [(0, 1000), (1200, 2999)])
    p = tmp_path / "s1.csv"
    write_emg(p, tr)
    assert sidecar_path(p).exists()
    back = read_emg(p)
    assert back.fs == 2000.0 and back.condition == "with_exosuit"
    assert back.cycle_marks == tr.cycle_marks
    np.testing.assert_array_equal(back.samples, tr.samples)


def test_emg_missing_fs_warns(tmp_path, caplog):
    tr = EmgTrace(1500.0, np.zeros(100), "without_exosuit", [(0, 100)])
    p = tmp_path / "s.csv"
    write_emg(p, tr)
    meta = json.loads(sidecar_path(p).read_text())
    del meta["fs_hz"]
    sidecar_path(p).write_text(json.dumps(meta))
    with caplog.at_level(logging.WARNING):
        back = read_emg(p, default_fs=2000.0)
    assert back.fs == 2000.0
    assert "no fs_hz" in caplog.text


def test_emg_sidecar_errors(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("t_s,emg_mv\n0,1\n0.0005,2\n")
    with pytest.raises(ConfigError, match="missing sidecar"):
        read_emg(p)
    sidecar_path(p).write_text('{"fs_hz": 2000, "cycles": []}')
    with pytest.raises(ConfigError, match="cycles"):
        read_emg(p)
    sidecar_path(p).write_text('{"fs_hz": 2000, "cycles": [[0, 1]], "gain": 3}')
    with pytest.raises(ConfigError, match="sidecar accepts"):
        read_emg(p)


def test_quest_csv(tmp_path):
    p = tmp_path / "q.csv"
    p.write_text(",".join(QUEST_DIMENSIONS) + "\n" + "5,4,4,4,5,4,4,4\n" + "4,4,4,4,4,4,4,4\n")
    sheets = read_quest(p)
    assert [s.scores for s in sheets] == [(5, 4, 4, 4, 5, 4, 4, 4), (4,) * 8]
    p.write_text(",".join(QUEST_DIMENSIONS) + "\n" + "6,4,4,4,5,4,4,4\n")
    with pytest.raises(ConfigError, match="row 2"):
        read_quest(p)


def test_candidates_csv_star_row_and_determinism():
    cfg = load_config()
    cands = enumerate_designs(cfg.design)
    front = pareto_front(cands)
    text = candidates_csv(cands, front)
    assert text.splitlines()[0] == "n,d_mm,torque_nm,profile_mm,stress_area_mm2,feasible,on_front"
    assert "4,32,8.77126,32,1500.16,1,0" in text.splitlines()
    assert candidates_csv(cands, front) == text
    assert "\r" not in text
