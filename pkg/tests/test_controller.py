import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from exosuit.controller import (
    CLOSED,
    ControllerConfig,
    Event,
    Phase,
    PostureSample,
    ValveState,
    assisting_intervals,
    detect_stand_onset,
    format_log,
    run_session,
    step_phase,
)
from exosuit.errors import DomainError

CFG = ControllerConfig()  # onset 20 deg, complete 80 deg, debounce 0.1 s
DT = 0.01


def samples(fn, t_end, dt=DT):
    n = int(round(t_end / dt)) + 1
    return [PostureSample(k * dt, math.radians(fn(k * dt))) for k in range(n)]


def ramp(t_cross, rate=40.0, hi=90.0):
    """Thigh angle rising from 0 deg, crossing 20 deg at ``t_cross``."""
    t0 = t_cross - 20.0 / rate
    return lambda t: min(hi, max(0.0, rate * (t - t0)))


def sit_stand_cycles(starts, rate=60.0):
    """Stand up at each start, hold standing 1 s, sit back down."""
    def fn(t):
        for s in starts:
            up = s + 90.0 / rate
            if s <= t < up:
                return rate * (t - s)
            if up <= t < up + 1.0:
                return 90.0
            if up + 1.0 <= t < up + 1.0 + 90.0 / rate:
                return 90.0 - rate * (t - up - 1.0)
        return 0.0
    return fn


def test_valve_mutual_exclusion():
    with pytest.raises(AssertionError):
        ValveState(True, True)


def test_constant_seated_angle_has_no_onset():
    assert detect_stand_onset(samples(lambda t: 0.0, 5.0), CFG) is None


def test_clean_ramp_onset_time():
    assert detect_stand_onset(samples(ramp(2.0), 5.0), CFG) == pytest.approx(2.0, abs=1e-9)


def test_onset_interpolates_between_samples():
    # crossing at 2.005 s falls between the 10 ms samples
    assert detect_stand_onset(samples(ramp(2.005), 5.0), CFG) == pytest.approx(2.005, abs=1e-9)


def test_glitch_shorter_than_debounce_is_rejected():
    base = ramp(2.0)

    def fn(t):
        if 2.03 <= t < 2.08:
            return 10.0
        return base(t)

    onset = detect_stand_onset(samples(fn, 5.0), CFG)
    assert onset is not None and onset > 2.07
    # the glitch ends at the 2.08 s sample, which is already back above 20 deg
    assert onset == pytest.approx(2.07 + (20 - 10) / (base(2.08) - 10) * DT, abs=1e-9)


def test_crossing_that_ends_before_debounce_is_not_an_onset():
    tr = samples(lambda t: 25.0 if 1.0 <= t < 1.05 else 0.0, 3.0)
    assert detect_stand_onset(tr, CFG) is None


def test_unsorted_trace_rejected():
    with pytest.raises(DomainError):
        detect_stand_onset([PostureSample(1.0, 0.0), PostureSample(0.5, 0.0)], CFG)


@pytest.mark.parametrize("phase, event, expected, valves", [
    (Phase.READY, Event.STAND_ONSET, Phase.ASSISTING, ValveState(True, False)),
    (Phase.ASSISTING, Event.STAND_COMPLETE, Phase.VENTING, ValveState(False, True)),
    (Phase.IDLE, Event.STAND_ONSET, Phase.IDLE, CLOSED),
    (Phase.IDLE, Event.ACTIVATE, Phase.HOLD_PRESSURIZING, CLOSED),
    (Phase.HOLD_PRESSURIZING, Event.HOLD_AT_PRESSURE, Phase.READY, CLOSED),
    (Phase.VENTING, Event.VENT_COMPLETE, Phase.READY, CLOSED),
    (Phase.ASSISTING, Event.SESSION_END, Phase.IDLE, CLOSED),
])
def test_transition_table(phase, event, expected, valves):
    st_ = step_phase(phase, event, CLOSED, 120e3 if phase is not Phase.IDLE else 0.0, CFG)
    assert st_.phase is expected
    assert st_.valves == valves


def test_activation_commands_hold_pressure():
    assert step_phase(Phase.IDLE, Event.ACTIVATE, config=CFG).hold_cmd == 120e3
    assert step_phase(Phase.READY, Event.SESSION_END, CLOSED, 120e3).hold_cmd == 0.0


def test_undefined_pair_is_noop_with_diagnostic():
    st_ = step_phase(Phase.IDLE, Event.STAND_ONSET, CLOSED, 0.0)
    assert st_.phase is Phase.IDLE and st_.valves == CLOSED and st_.diagnostic


def test_empty_trace_bookkeeping_only():
    log = run_session([], CFG)
    assert [e.phase for e in log] == [Phase.HOLD_PRESSURIZING, Phase.IDLE]
    assert assisting_intervals(log) == []


def test_one_cycle_gives_one_assist_interval():
    log = run_session(samples(sit_stand_cycles([2.0]), 8.0), CFG)
    intervals = assisting_intervals(log)
    assert len(intervals) == 1
    start, end = intervals[0]
    # onset confirmed one debounce after the 20 deg crossing, completion likewise at 80 deg
    assert start == pytest.approx(2.0 + 20 / 60 + 0.1, abs=DT)
    assert end == pytest.approx(2.0 + 80 / 60 + 0.1, abs=DT)


def test_two_cycles_give_two_ordered_intervals():
    log = run_session(samples(sit_stand_cycles([2.0, 7.0]), 12.0), CFG)
    intervals = assisting_intervals(log)
    assert len(intervals) == 2
    assert intervals[0][1] < intervals[1][0]


def test_log_is_byte_identical_on_replay():
    tr = samples(sit_stand_cycles([2.0, 7.0]), 12.0)
    assert format_log(run_session(tr, CFG)) == format_log(run_session(list(tr), CFG))


def test_log_format():
    text = format_log(run_session(samples(sit_stand_cycles([2.0]), 8.0), CFG))
    lines = text.splitlines()
    assert lines[0] == "t_s,phase,sv1,sv2,hold_cmd_kpa"
    assert lines[1] == "0.000000,HoldPressurizing,0,0,120.000"
    assert lines[-1].endswith(",Idle,0,0,0.000")
    assert any(",Assisting,1,0,120.000" in ln for ln in lines)
    assert any(",Venting,0,1,120.000" in ln for ln in lines)


def _check_invariants(log, cfg):
    for e in log[:-1]:
        assert not (e.sv1 and e.sv2)
        assert not e.sv1 or e.phase is Phase.ASSISTING
        assert e.hold_cmd == cfg.hold_pressure
    assert log[-1].phase is Phase.IDLE and log[-1].hold_cmd == 0.0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-30.0, 120.0), min_size=0, max_size=300), st.floats(0.001, 0.1))
def test_random_traces_keep_invariants(angles, dt):
    tr = [PostureSample(k * dt, math.radians(a)) for k, a in enumerate(angles)]
    _check_invariants(run_session(tr, CFG), CFG)


@given(st.lists(st.sampled_from(list(Event)), max_size=40))
def test_random_event_sequences_keep_invariants(events):
    phase, valves, hold = Phase.IDLE, CLOSED, 0.0
    for ev in events:
        s = step_phase(phase, ev, valves, hold, CFG)
        phase, valves, hold = s.phase, s.valves, s.hold_cmd
        assert not (valves.sv1_open and valves.sv2_open)
        assert not valves.sv1_open or phase is Phase.ASSISTING
        assert hold == (0.0 if phase is Phase.IDLE else CFG.hold_pressure)


def test_falling_convention_supported():
    cfg = ControllerConfig(stand_onset_angle=math.radians(70), stand_complete_angle=math.radians(10))
    tr = samples(lambda t: 90.0 - min(90.0, 40.0 * max(0.0, t - 1.0)), 6.0)
    onset = detect_stand_onset(tr, cfg)
    assert onset == pytest.approx(1.0 + 20 / 40, abs=1e-9)
    assert len(assisting_intervals(run_session(tr, cfg))) == 1


def test_config_invariants():
    with pytest.raises(DomainError):
        ControllerConfig(stand_onset_angle=0.5, stand_complete_angle=0.5)
    with pytest.raises(DomainError):
        ControllerConfig(debounce=-1.0)


def test_session_with_noise_is_deterministic():
    rng = np.random.default_rng(0)
    base = sit_stand_cycles([2.0])
    tr = [PostureSample(k * DT, math.radians(base(k * DT) + rng.normal(0, 2.0))) for k in range(800)]
    assert format_log(run_session(tr, CFG)) == format_log(run_session(tr, CFG))
