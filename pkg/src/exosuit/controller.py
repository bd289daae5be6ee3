"""Sit-to-stand valve controller.

Thigh angle is measured from the horizontal: about 0 rad seated, about
pi/2 standing.  Standing therefore means the angle *rises* through the
onset threshold.

Phase graph::

    Idle --activate--> HoldPressurizing --hold_at_pressure--> Ready
    Ready --stand_onset--> Assisting --stand_complete--> Venting
    Venting --vent_complete--> Ready
    any --session_end--> Idle

SV1 feeds the inflation-deflation zone, SV2 vents it.  The holding zones
are commanded to ``hold_pressure`` from activation until the session ends.
"""

from __future__ import annotations

import enum
import heapq
import io
import logging
import math
from dataclasses import dataclass

from .errors import DomainError

log = logging.getLogger(__name__)


class Phase(str, enum.Enum):
    IDLE = "Idle"
    HOLD_PRESSURIZING = "HoldPressurizing"
    READY = "Ready"
    ASSISTING = "Assisting"
    VENTING = "Venting"


class Event(str, enum.Enum):
    ACTIVATE = "activate"
    HOLD_AT_PRESSURE = "hold_at_pressure"
    STAND_ONSET = "stand_onset"
    STAND_COMPLETE = "stand_complete"
    VENT_COMPLETE = "vent_complete"
    SESSION_END = "session_end"


@dataclass(frozen=True)
class ValveState:
    sv1_open: bool = False
    sv2_open: bool = False

    def __post_init__(self):
        if self.sv1_open and self.sv2_open:
            raise AssertionError("SV1 and SV2 must never be open together")


CLOSED = ValveState(False, False)
INFLATE = ValveState(True, False)
DEFLATE = ValveState(False, True)


@dataclass(frozen=True)
class PostureSample:
    t: float
    thigh_angle: float


@dataclass(frozen=True)
class ControllerConfig:
    assist_pressure: float = 100_000.0
    hold_pressure: float = 120_000.0
    stand_onset_angle: float = math.radians(20.0)
    stand_complete_angle: float = math.radians(80.0)
    debounce: float = 0.1
    # open-loop stand-ins for pressure feedback
    hold_settle_time: float = 0.5
    vent_time: float = 0.3

    def __post_init__(self):
        if self.stand_onset_angle == self.stand_complete_angle:
            raise DomainError("stand_onset_angle and stand_complete_angle must differ")
        if self.debounce < 0 or self.hold_settle_time < 0 or self.vent_time < 0:
            raise DomainError("debounce and timing parameters must be non-negative")
        if self.hold_pressure < 0 or self.assist_pressure < 0:
            raise DomainError("pressures must be non-negative")

    @property
    def rising(self) -> bool:
        """True when standing up moves the angle upward."""
        return self.stand_complete_angle > self.stand_onset_angle


@dataclass(frozen=True)
class Step:
    phase: Phase
    valves: ValveState
    hold_cmd: float
    diagnostic: str | None = None


# (phase, event) -> (next phase, valve state or None to keep, hold command or None to keep)
_TRANSITIONS = {
    (Phase.IDLE, Event.ACTIVATE): (Phase.HOLD_PRESSURIZING, CLOSED, "hold"),
    (Phase.HOLD_PRESSURIZING, Event.HOLD_AT_PRESSURE): (Phase.READY, CLOSED, None),
    (Phase.READY, Event.STAND_ONSET): (Phase.ASSISTING, INFLATE, None),
    (Phase.ASSISTING, Event.STAND_COMPLETE): (Phase.VENTING, DEFLATE, None),
    (Phase.VENTING, Event.VENT_COMPLETE): (Phase.READY, CLOSED, None),
}


def step_phase(phase: Phase, event: Event, valves: ValveState = CLOSED, hold_cmd: float = 0.0,
               config: ControllerConfig | None = None) -> Step:
    """Pure transition function.

    Undefined ``(phase, event)`` pairs leave the state untouched and carry a
    diagnostic string.
    """
    phase, event = Phase(phase), Event(event)
    if event is Event.SESSION_END:
        return Step(Phase.IDLE, CLOSED, 0.0)
    try:
        nxt, new_valves, hold = _TRANSITIONS[(phase, event)]
    except KeyError:
        return Step(phase, valves, hold_cmd, f"ignored {event.value} in {phase.value}")
    if hold == "hold":
        hold_cmd = (config or ControllerConfig()).hold_pressure
    return Step(nxt, new_valves, hold_cmd)


def _crossings(trace, threshold, rising, debounce):
    """Yield ``(crossing_time, confirm_time)`` for debounced threshold crossings.

    A crossing is a move from the seated side to the standing side; it is
    confirmed once every later sample up to ``crossing_time + debounce`` has
    stayed on the standing side.
    """
    def across(a):
        return a >= threshold if rising else a <= threshold

    pending = None
    prev = None
    for s in trace:
        if prev is not None and not across(prev.thigh_angle) and across(s.thigh_angle):
            da = s.thigh_angle - prev.thigh_angle
            frac = (threshold - prev.thigh_angle) / da if da else 1.0
            pending = prev.t + frac * (s.t - prev.t)
        elif pending is not None and not across(s.thigh_angle):
            pending = None
        if pending is not None and s.t - pending >= debounce - 1e-12:
            yield pending, max(s.t, pending)
            pending = None
        prev = s


def _check_trace(trace):
    for a, b in zip(trace, trace[1:]):
        if not b.t > a.t:
            raise DomainError(f"posture timestamps must be strictly increasing (t={b.t!r})")


def detect_stand_onset(trace, config: ControllerConfig) -> float | None:
    """Time the thigh angle first crosses the onset threshold and stays across for ``debounce`` s."""
    _check_trace(trace)
    for t_cross, _ in _crossings(trace, config.stand_onset_angle, config.rising, config.debounce):
        return t_cross
    return None


@dataclass(frozen=True)
class LogEntry:
    t: float
    phase: Phase
    sv1: bool
    sv2: bool
    hold_cmd: float
    event: str


def run_session(trace, config: ControllerConfig | None = None) -> list[LogEntry]:
    """Replay a posture trace through the controller.

    Posture events are acted on when their debounce completes.  Hold-zone
    settling and venting are open-loop timers.  The session is activated at
    the first sample time (0 for an empty trace) and ends at the last.
    """
    config = config or ControllerConfig()
    trace = list(trace)
    _check_trace(trace)
    t_start = trace[0].t if trace else 0.0
    t_end = trace[-1].t if trace else 0.0

    queue = []
    seq = 0

    def push(t, ev):
        nonlocal seq
        heapq.heappush(queue, (t, seq, ev))
        seq += 1

    push(t_start, Event.ACTIVATE)
    for _, t_conf in _crossings(trace, config.stand_onset_angle, config.rising, config.debounce):
        push(t_conf, Event.STAND_ONSET)
    for _, t_conf in _crossings(trace, config.stand_complete_angle, config.rising, config.debounce):
        push(t_conf, Event.STAND_COMPLETE)

    phase, valves, hold = Phase.IDLE, CLOSED, 0.0
    entries = []
    while queue:
        t, _, ev = heapq.heappop(queue)
        if t > t_end:
            break
        st = step_phase(phase, ev, valves, hold, config)
        if st.diagnostic:
            log.debug("t=%.4f %s", t, st.diagnostic)
            continue
        phase, valves, hold = st.phase, st.valves, st.hold_cmd
        entries.append(LogEntry(t, phase, valves.sv1_open, valves.sv2_open, hold, ev.value))
        if phase is Phase.HOLD_PRESSURIZING:
            push(t + config.hold_settle_time, Event.HOLD_AT_PRESSURE)
        elif phase is Phase.VENTING:
            push(t + config.vent_time, Event.VENT_COMPLETE)

    st = step_phase(phase, Event.SESSION_END, valves, hold, config)
    entries.append(LogEntry(t_end, st.phase, False, False, st.hold_cmd, Event.SESSION_END.value))
    return entries


def assisting_intervals(entries) -> list[tuple[float, float]]:
    out = []
    start = None
    for e in entries:
        if e.phase is Phase.ASSISTING and start is None:
            start = e.t
        elif e.phase is not Phase.ASSISTING and start is not None:
            out.append((start, e.t))
            start = None
    return out


def format_log(entries) -> str:
    """CSV text ``t_s,phase,sv1,sv2,hold_cmd_kpa`` with LF endings."""
    buf = io.StringIO()
    buf.write("t_s,phase,sv1,sv2,hold_cmd_kpa\n")
    for e in entries:
        buf.write(f"{e.t:.6f},{e.phase.value},{int(e.sv1)},{int(e.sv2)},{e.hold_cmd / 1e3:.3f}\n")
    return buf.getvalue()
