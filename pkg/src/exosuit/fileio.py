"""CSV/JSON readers and writers.

Files carry boundary units (kPa, mm, deg) and a mandatory header row.
Writers return text with LF line endings so output is byte-stable.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .controller import PostureSample
from .emg_pipeline import QUEST_DIMENSIONS, EmgTrace, QuestScores
from .errors import ConfigError, ExosuitError
from .pneumatic_sim import PressureTrace, ValveModel
from .torque_model import MeasuredPoint
from .units import deg_to_rad, kpa_to_pa, m2_to_mm2, m_to_mm, pa_to_kpa, rad_to_deg

log = logging.getLogger(__name__)


def _read_rows(path, header):
    """Rows of ``path`` as float tuples after checking the header."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    reader = csv.reader(io.StringIO(text))
    got = next(reader, None)
    if got is None or [h.strip() for h in got] != list(header):
        raise ConfigError(f"{path}: expected header {','.join(header)}, got {got!r}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ConfigError(f"{path}: row {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            vals = tuple(float(c) for c in row)
        except ValueError as exc:
            raise ConfigError(f"{path}: row {lineno}: {exc}") from exc
        if not all(math.isfinite(v) for v in vals):
            raise ConfigError(f"{path}: row {lineno}: non-finite value")
        rows.append((lineno, vals))
    return rows


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x, digits=6):
    return f"{x:.{digits}g}"


# -- torque -----------------------------------------------------------------

MEASURED_HEADER = ("theta_deg", "p_kpa", "torque_nm")
SURFACE_HEADER = ("p_kpa", "theta_deg", "torque_nm")


def read_measured(path) -> list[MeasuredPoint]:
    out = []
    for lineno, (theta, p, torque) in _read_rows(path, MEASURED_HEADER):
        try:
            out.append(MeasuredPoint(deg_to_rad(theta), kpa_to_pa(p), torque))
        except ExosuitError as exc:
            raise ConfigError(f"{path}: row {lineno}: {exc}") from exc
    return out


def surface_csv(p_grid, theta_grid, surface) -> str:
    rows = []
    for i, p in enumerate(p_grid):
        for j, th in enumerate(theta_grid):
            rows.append((_fmt(pa_to_kpa(p)), _fmt(rad_to_deg(th)), _fmt(surface[i][j])))
    return _csv_text(SURFACE_HEADER, rows)


# -- design -----------------------------------------------------------------

CANDIDATE_HEADER = ("n", "d_mm", "torque_nm", "profile_mm", "stress_area_mm2", "feasible", "on_front")


def candidates_csv(candidates, front) -> str:
    on_front = {id(c) for c in front}
    rows = [
        (c.n, _fmt(m_to_mm(c.d)), _fmt(c.torque), _fmt(m_to_mm(c.profile)),
         _fmt(m2_to_mm2(c.stress_area)), int(c.feasible), int(id(c) in on_front))
        for c in candidates
    ]
    return _csv_text(CANDIDATE_HEADER, rows)


# -- pneumatics -------------------------------------------------------------

TRACE_HEADER = ("t_s", "p_kpa_gauge")


def trace_csv(trace: PressureTrace) -> str:
    rows = [(f"{t:.6f}", f"{pa_to_kpa(p):.6f}") for t, p in zip(trace.times, trace.samples)]
    return _csv_text(TRACE_HEADER, rows)


def read_trace(path) -> PressureTrace:
    rows = _read_rows(path, TRACE_HEADER)
    if len(rows) < 2:
        raise ConfigError(f"{path}: a trace needs at least two samples")
    t = np.array([r[1][0] for r in rows])
    p = np.array([r[1][1] for r in rows])
    steps = np.diff(t)
    dt = float(np.mean(steps))
    if not dt > 0 or np.max(np.abs(steps - dt)) > 1e-6 * max(dt, 1.0) + 1e-9:
        raise ConfigError(f"{path}: trace must be uniformly sampled with increasing time")
    return PressureTrace(dt, kpa_to_pa(p), t0=float(t[0]))


def valve_json(valve: ValveModel) -> str:
    return json.dumps(asdict(valve), indent=2, sort_keys=True) + "\n"


def read_valve(path) -> ValveModel:
    from .config import load_json

    raw = load_json(path)
    allowed = {"sonic_conductance", "critical_ratio", "laminar_ratio"}
    if not isinstance(raw, dict) or set(raw) - allowed:
        raise ConfigError(f"{path}: valve JSON accepts only {sorted(allowed)}")
    try:
        return ValveModel(**raw)
    except (TypeError, ExosuitError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


# -- controller -------------------------------------------------------------

IMU_HEADER = ("t_s", "thigh_angle_deg")


def read_imu(path) -> list[PostureSample]:
    out = []
    for lineno, (t, angle) in _read_rows(path, IMU_HEADER):
        if out and not t > out[-1].t:
            raise ConfigError(f"{path}: row {lineno}: timestamps must be strictly increasing")
        out.append(PostureSample(t, deg_to_rad(angle)))
    return out


def imu_csv(samples) -> str:
    return _csv_text(IMU_HEADER, [(f"{s.t:.6f}", f"{rad_to_deg(s.thigh_angle):.6f}") for s in samples])


# -- EMG --------------------------------------------------------------------

EMG_HEADER = ("t_s", "emg_mv")


def sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def read_emg(path, default_fs=2000.0) -> EmgTrace:
    """EMG CSV plus its sidecar JSON ``{fs_hz, condition, cycles}``.

    Cycles are ``[start_s, end_s]`` pairs mapped onto sample indices
    ``start <= t < end``.
    """
    from .config import load_json

    rows = _read_rows(path, EMG_HEADER)
    t = np.array([r[1][0] for r in rows])
    x = np.array([r[1][1] for r in rows])
    side = sidecar_path(path)
    if not side.exists():
        raise ConfigError(f"{path}: missing sidecar {side.name}")
    meta = load_json(side)
    if not isinstance(meta, dict) or set(meta) - {"fs_hz", "condition", "cycles"}:
        raise ConfigError(f"{side}: sidecar accepts only fs_hz, condition, cycles")
    fs = meta.get("fs_hz")
    if fs is None:
        log.warning("%s: no fs_hz given, assuming %g Hz", side, default_fs)
        fs = default_fs
    cycles = meta.get("cycles")
    if not isinstance(cycles, list) or not cycles:
        raise ConfigError(f"{side}: cycles must be a non-empty list of [start_s, end_s]")
    marks = []
    for k, c in enumerate(cycles):
        if not (isinstance(c, list) and len(c) == 2):
            raise ConfigError(f"{side}: cycles[{k}] must be [start_s, end_s]")
        start, end = np.searchsorted(t, c[0], side="left"), np.searchsorted(t, c[1], side="left")
        marks.append((int(start), int(end)))
    try:
        return EmgTrace(float(fs), x, meta.get("condition", "without_exosuit"), marks)
    except ExosuitError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def write_emg(path, trace: EmgTrace):
    """Write an EMG CSV and its sidecar; mainly for building test fixtures."""
    path = Path(path)
    t = np.arange(len(trace.samples)) / trace.fs
    path.write_text(_csv_text(EMG_HEADER, [(repr(float(a)), repr(float(b))) for a, b in zip(t, trace.samples)]),
                    encoding="utf-8")
    # half-sample offsets make the index mapping robust to rounding
    cycles = [[(s - 0.5) / trace.fs, (e - 0.5) / trace.fs] for s, e in trace.cycle_marks]
    meta = {"fs_hz": trace.fs, "condition": trace.condition, "cycles": cycles}
    sidecar_path(path).write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


def read_quest(path) -> list[QuestScores]:
    rows = _read_rows(path, QUEST_DIMENSIONS)
    out = []
    for lineno, vals in rows:
        try:
            out.append(QuestScores(tuple(int(v) if v == int(v) else v for v in vals)))
        except ExosuitError as exc:
            raise ConfigError(f"{path}: row {lineno}: {exc}") from exc
    return out
