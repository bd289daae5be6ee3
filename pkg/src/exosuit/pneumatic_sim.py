"""Fill and vent dynamics of the inflation-deflation zone.

The zone is a rigid isothermal chamber fed through a solenoid valve from an
ideal regulated source.  Valve flow follows the sonic-conductance model:

* choked (``r = p_down / p_up <= b``)::

      m_dot = C * rho0 * p_up * sqrt(T0 / T_up)

* subsonic: the choked value times ``sqrt(1 - ((r - b) / (1 - b))**2)``;
* for ``r`` above ``laminar_ratio`` the flow is linearised down to zero at
  ``r = 1``, which keeps the explicit scheme well posed at equalisation.

Chamber pressure obeys ``dP/dt = (R T / V) * m_dot`` and is integrated with
fixed-step forward Euler on gauge pressure; absolute pressure enters only
through the flow law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConvergenceError, DomainError, InstabilityError, NotReachedError
from .units import P_ATM

R_AIR = 287.05  # J/(kg K)
T_REF = 293.15  # K, standard reference temperature for conductance
RHO_REF = 1.185  # kg/m^3, air density at standard reference conditions

DEFAULT_DT = 1e-4


@dataclass(frozen=True)
class Chamber:
    volume: float
    temperature: float = T_REF

    def __post_init__(self):
        if not (math.isfinite(self.volume) and self.volume > 0):
            raise DomainError(f"chamber volume must be positive, got {self.volume!r}")
        if not self.temperature > 0:
            raise DomainError("chamber temperature must be positive")

    @classmethod
    def from_geometry(cls, geom, temperature=T_REF):
        return cls(chamber_volume(geom), temperature)


@dataclass(frozen=True)
class ValveModel:
    sonic_conductance: float = 1e-9  # m^3/(s Pa)
    critical_ratio: float = 0.5
    laminar_ratio: float = 0.999

    def __post_init__(self):
        if not (math.isfinite(self.sonic_conductance) and self.sonic_conductance > 0):
            raise DomainError("sonic_conductance must be positive")
        if not 0 < self.critical_ratio < 1:
            raise DomainError("critical_ratio must lie in (0, 1)")
        if not self.critical_ratio < self.laminar_ratio < 1:
            raise DomainError("laminar_ratio must lie in (critical_ratio, 1)")


@dataclass(frozen=True)
class FillScenario:
    supply_pressure: float  # Pa gauge, the regulated target
    initial_pressure: float = 0.0  # Pa gauge
    band: float = 0.10

    def __post_init__(self):
        if self.supply_pressure < self.initial_pressure:
            raise DomainError("fill needs supply_pressure >= initial_pressure")
        if self.initial_pressure <= -P_ATM:
            raise DomainError("initial pressure below vacuum")
        if not 0 < self.band < 1:
            raise DomainError("band must lie in (0, 1)")


@dataclass(frozen=True)
class VentScenario:
    initial_pressure: float  # Pa gauge
    sink_pressure: float = 0.0  # Pa gauge; negative for a vacuum pump inlet

    def __post_init__(self):
        if self.initial_pressure < self.sink_pressure:
            raise DomainError("vent needs initial_pressure >= sink_pressure")
        if self.sink_pressure <= -P_ATM:
            raise DomainError("sink pressure must be above absolute vacuum")


@dataclass
class PressureTrace:
    """Uniformly sampled gauge pressure; ``samples[k]`` is at ``t0 + k * dt``.

    ``mass_flow[k]`` (simulation output only) is the flow into the chamber
    used over step ``k -> k + 1``.
    """

    dt: float
    samples: np.ndarray
    t0: float = 0.0
    mass_flow: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if not self.dt > 0:
            raise DomainError("trace dt must be positive")
        if self.samples.ndim != 1:
            raise DomainError("trace samples must be one-dimensional")
        if not np.all(np.isfinite(self.samples)):
            raise DomainError("trace samples must be finite")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.samples))

    def __len__(self):
        return len(self.samples)


def chamber_volume(geom) -> float:
    """Volume of the ``n`` cylinders over the inflation-deflation length."""
    return geom.n * math.pi * (geom.d / 2.0) ** 2 * geom.l_dz


def _flow_factor(r, b, r_lam):
    if r <= b:
        return 1.0
    if r >= 1.0:
        return 0.0
    if r > r_lam:
        x = (r_lam - b) / (1.0 - b)
        return math.sqrt(1.0 - x * x) * (1.0 - r) / (1.0 - r_lam)
    x = (r - b) / (1.0 - b)
    return math.sqrt(1.0 - x * x)


def mass_flow(valve: ValveModel, p_up: float, p_down: float, T: float = T_REF) -> float:
    """Mass flow in kg/s through the valve; pressures are absolute Pa."""
    if not p_down > 0:
        raise DomainError("downstream absolute pressure must be positive")
    if p_down > p_up:
        raise DomainError("p_down exceeds p_up; the caller selects the flow direction")
    r = p_down / p_up
    choked = valve.sonic_conductance * RHO_REF * p_up * math.sqrt(T_REF / T)
    return choked * _flow_factor(r, valve.critical_ratio, valve.laminar_ratio)


def stability_limit(chamber: Chamber, valve: ValveModel) -> float:
    """Largest step for which forward Euler cannot overshoot equalisation.

    The relaxation rate of the pressure difference peaks at the laminar
    breakpoint, for fill and vent alike.
    """
    k = R_AIR * chamber.temperature / chamber.volume * valve.sonic_conductance * RHO_REF
    k *= math.sqrt(T_REF / chamber.temperature)
    f_lam = _flow_factor(valve.laminar_ratio, valve.critical_ratio, 1.0)
    return (1.0 - valve.laminar_ratio) / (k * f_lam)


def _check_step(dt, t_max, chamber, valve):
    if not dt > 0 or not t_max > 0:
        raise DomainError("dt and t_max must be positive")
    limit = stability_limit(chamber, valve)
    if dt > limit:
        raise InstabilityError(f"dt = {dt:.3g} s exceeds the stability limit {limit:.3g} s")
    return int(round(t_max / dt))


def _integrate(p0, p_ext, filling, chamber, valve, dt, steps, p_atm):
    """Forward Euler on gauge pressure; absolute values feed the flow law.

    Below the stability limit the step cannot cross ``p_ext``; the clamp
    only absorbs rounding at equalisation.
    """
    gain = R_AIR * chamber.temperature / chamber.volume
    T = chamber.temperature
    ext_abs = p_ext + p_atm
    p = p0
    pressures = np.empty(steps + 1)
    flows = np.empty(steps)
    pressures[0] = p
    for k in range(steps):
        if filling:
            m = mass_flow(valve, ext_abs, p + p_atm, T) if p < p_ext else 0.0
            p = min(p + dt * gain * m, p_ext)
        else:
            m = -mass_flow(valve, p + p_atm, ext_abs, T) if p > p_ext else 0.0
            p = max(p + dt * gain * m, p_ext)
        flows[k] = m
        pressures[k + 1] = p
    return pressures, flows


def simulate_fill(scenario: FillScenario, chamber: Chamber, valve: ValveModel,
                  dt: float = DEFAULT_DT, t_max: float = 2.0, p_atm: float = P_ATM) -> PressureTrace:
    steps = _check_step(dt, t_max, chamber, valve)
    pressures, flows = _integrate(scenario.initial_pressure, scenario.supply_pressure,
                                  True, chamber, valve, dt, steps, p_atm)
    return PressureTrace(dt, pressures, mass_flow=flows)


def simulate_vent(scenario: VentScenario, chamber: Chamber, valve: ValveModel,
                  dt: float = DEFAULT_DT, t_max: float = 2.0, p_atm: float = P_ATM) -> PressureTrace:
    steps = _check_step(dt, t_max, chamber, valve)
    pressures, flows = _integrate(scenario.initial_pressure, scenario.sink_pressure,
                                  False, chamber, valve, dt, steps, p_atm)
    return PressureTrace(dt, pressures, mass_flow=flows)


def response_time(trace: PressureTrace, target: float, band: float = 0.10) -> float:
    """Time after which every sample stays within ``target * (1 +/- band)``."""
    if len(trace) == 0:
        raise DomainError("empty trace")
    if not target > 0:
        raise DomainError("target must be positive")
    if not 0 < band < 1:
        raise DomainError("band must lie in (0, 1)")
    s = trace.samples
    outside = np.flatnonzero((s < target * (1.0 - band)) | (s > target * (1.0 + band)))
    if outside.size == 0:
        return trace.t0
    last = outside[-1]
    if last == len(s) - 1:
        raise NotReachedError(f"trace never settles within +/-{band:.0%} of {target:g} Pa")
    return trace.t0 + (last + 1) * trace.dt


def mass_balance_error(trace: PressureTrace, chamber: Chamber, p_atm: float = P_ATM) -> float:
    """Worst per-step mismatch between chamber mass change and valve flow.

    Relative to the step's flow, floored at 1e-9 of the chamber mass: below
    that the stored absolute pressure cannot resolve the increment.
    """
    if trace.mass_flow is None:
        raise DomainError("trace carries no mass-flow record")
    to_mass = chamber.volume / (R_AIR * chamber.temperature)
    mass = (trace.samples + p_atm) * to_mass
    dm = np.diff(trace.samples) * to_mass
    flow = trace.mass_flow * trace.dt
    scale = np.maximum(np.abs(flow), 1e-9 * mass[:-1])
    return float(np.max(np.abs(dm - flow) / scale)) if len(flow) else 0.0


def crossing_time(trace: PressureTrace, level: float, falling: bool = True) -> float:
    """First sample time at which the trace reaches ``level``."""
    s = trace.samples
    hit = np.flatnonzero(s <= level if falling else s >= level)
    if hit.size == 0:
        raise NotReachedError(f"trace never reaches {level:g} Pa")
    return trace.t0 + hit[0] * trace.dt


def fill_response_time(target: float, chamber: Chamber, valve: ValveModel, band: float = 0.10,
                       initial: float = 0.0, dt: float = DEFAULT_DT, t_max: float = 2.0) -> float:
    trace = simulate_fill(FillScenario(target, initial, band), chamber, valve, dt, t_max)
    return response_time(trace, target, band)


def calibrate_conductance(anchor_target: float, anchor_time: float, chamber: Chamber,
                          valve_template: ValveModel | None = None, band: float = 0.10,
                          dt: float = DEFAULT_DT, rtol: float = 1e-3, max_iter: int = 200) -> ValveModel:
    """Fit the sonic conductance so a fill to ``anchor_target`` settles in ``anchor_time``.

    Response time falls monotonically with conductance, so the root is
    bracketed by geometric expansion from the template value and then
    bisected in log space.
    """
    if not anchor_time > 0 or not anchor_target > 0:
        raise DomainError("anchor target and time must be positive")
    valve_template = valve_template or ValveModel()
    t_max = 4.0 * anchor_time

    def time_for(c):
        valve = replace(valve_template, sonic_conductance=c)
        try:
            return fill_response_time(anchor_target, chamber, valve, band, dt=dt, t_max=t_max)
        except NotReachedError:
            return math.inf

    lo = hi = valve_template.sonic_conductance
    t_lo = t_hi = time_for(lo)
    iters = 0
    while t_hi > anchor_time:
        hi *= 2.0
        t_hi = time_for(hi)
        iters += 1
        if iters > max_iter:
            raise ConvergenceError("could not bracket the conductance from above")
    while t_lo < anchor_time:
        lo /= 2.0
        t_lo = time_for(lo)
        iters += 1
        if iters > max_iter:
            raise ConvergenceError("could not bracket the conductance from below")

    for _ in range(max_iter):
        mid = math.sqrt(lo * hi)
        t_mid = time_for(mid)
        if abs(t_mid - anchor_time) <= rtol * anchor_time:
            return replace(valve_template, sonic_conductance=mid)
        if t_mid > anchor_time:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError(f"conductance bisection did not converge in {max_iter} iterations")
