"""Grid sweep over actuator count and diameter, with Pareto ranking.

Objectives for ranking: maximize torque, minimize profile (the radial
height added to the limb, equal to the actuator diameter), maximize the
stress area pressed onto the limb.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .torque_model import _torque, min_dz_length

# contact strip that reproduces a 1500 mm^2 stress area for n=4, d=32 mm
DEFAULT_CONTACT_LENGTH = 0.01172


@dataclass(frozen=True)
class DesignConstraints:
    p_design: float = 100_000.0
    theta_design: float = math.radians(80.0)
    torque_min: float = 0.0
    profile_max: float = math.inf
    n_range: tuple[int, int] = (1, 10)
    d_range: tuple[float, float, float] = (0.010, 0.060, 0.001)  # start, stop (inclusive), step
    contact_length: float = DEFAULT_CONTACT_LENGTH
    l_dz: float = 0.060

    def __post_init__(self):
        n_lo, n_hi = self.n_range
        if int(n_lo) != n_lo or int(n_hi) != n_hi or n_lo < 1 or n_hi < n_lo:
            raise DomainError(f"empty or invalid n_range {self.n_range!r}")
        d_lo, d_hi, d_step = self.d_range
        if not (d_lo > 0 and d_hi >= d_lo and d_step > 0):
            raise DomainError(f"empty or invalid d_range {self.d_range!r}")
        if self.torque_min < 0 or math.isnan(self.torque_min):
            raise DomainError("torque_min must be >= 0")
        if not self.profile_max > 0:
            raise DomainError("profile_max must be positive")
        if self.p_design < 0:
            raise DomainError("p_design must be >= 0")
        if not 0 <= self.theta_design < math.pi:
            raise DomainError("theta_design must lie in [0, pi)")
        if self.contact_length < 0 or not self.l_dz > 0:
            raise DomainError("contact_length must be >= 0 and l_dz > 0")

    def n_values(self) -> list[int]:
        return list(range(int(self.n_range[0]), int(self.n_range[1]) + 1))

    def d_values(self) -> list[float]:
        d_lo, d_hi, d_step = self.d_range
        count = int(math.floor((d_hi - d_lo) / d_step + 1e-9)) + 1
        # rounding keeps mm grids exact (0.032, not 0.032000000000000001)
        return [round(d_lo + k * d_step, 12) for k in range(count)]


@dataclass(frozen=True)
class DesignCandidate:
    n: int
    d: float
    torque: float
    profile: float
    stress_area: float
    feasible: bool
    l_dz_min: float

    def objectives(self) -> tuple[float, float, float]:
        """Objective vector oriented so that larger is better everywhere."""
        return (self.torque, -self.profile, self.stress_area)


def stress_area(n: int, d: float, contact_length: float) -> float:
    """Projected contact-strip area ``n * d * contact_length`` in m^2."""
    if n < 1 or d <= 0 or contact_length < 0:
        raise DomainError("stress_area needs n >= 1, d > 0, contact_length >= 0")
    return n * d * contact_length


def enumerate_designs(constraints: DesignConstraints) -> list[DesignCandidate]:
    """One candidate per grid point, ordered by ascending n then d."""
    c = constraints
    out = []
    for n in c.n_values():
        for d in c.d_values():
            l_min = min_dz_length(d, c.theta_design)
            out.append(
                DesignCandidate(
                    n=n,
                    d=d,
                    torque=_torque(n, d, c.p_design, c.theta_design),
                    profile=d,
                    stress_area=stress_area(n, d, c.contact_length),
                    feasible=c.l_dz > l_min,
                    l_dz_min=l_min,
                )
            )
    if not out:
        raise DomainError("design grid is empty")
    return out


def dominates(a: DesignCandidate, b: DesignCandidate) -> bool:
    oa, ob = a.objectives(), b.objectives()
    return all(x >= y for x, y in zip(oa, ob)) and any(x > y for x, y in zip(oa, ob))


def pareto_front(candidates: list[DesignCandidate]) -> list[DesignCandidate]:
    """Non-dominated subset, input order preserved; exact duplicates all kept."""
    if not candidates:
        return []
    obj = np.array([c.objectives() for c in candidates])
    # ge[i, j]: j is at least as good as i on every objective
    ge = np.all(obj[None, :, :] >= obj[:, None, :], axis=2)
    gt = np.any(obj[None, :, :] > obj[:, None, :], axis=2)
    dominated = np.any(ge & gt, axis=1)
    return [c for c, dom in zip(candidates, dominated) if not dom]


def filter_feasible(candidates, constraints: DesignConstraints) -> list[DesignCandidate]:
    return [
        c
        for c in candidates
        if c.feasible and c.torque >= constraints.torque_min and c.profile <= constraints.profile_max
    ]
