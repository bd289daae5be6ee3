"""Closed-form static model of a zone-inflated exosuit.

Output torque of ``n`` parallel cylindrical actuators of diameter ``d`` at
internal gauge pressure ``p`` and bending angle ``theta``::

    T = pi * n * p * d**3 / (8 * cos(theta / 2)**2)

and the zone-length condition that keeps the holding zones at constant
volume while the joint bends::

    l_dz > 2 * d * tan(theta_max / 2)

All quantities are SI (Pa, m, rad, N*m).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# pi / 8 prefactor of the torque law; kept as a module constant so the
# validation harness can run a perturbed negative control.
_TORQUE_COEFF = math.pi / 8.0


def _check_finite(name, value):
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")


def _check_theta(theta, name="theta"):
    _check_finite(name, theta)
    if theta < 0.0 or theta >= math.pi:
        raise DomainError(f"{name} must lie in [0, pi) rad, got {theta!r}")


@dataclass(frozen=True)
class ActuatorGeometry:
    """Actuator layout of the exosuit.

    ``l_hold_upper`` / ``l_hold_lower`` describe the inflation-holding zones
    and are informational only; they do not enter the torque law.
    """

    n: int
    d: float
    l_dz: float
    l_hold_upper: float = 0.0
    l_hold_lower: float = 0.0

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        for name in ("d", "l_dz", "l_hold_upper", "l_hold_lower"):
            _check_finite(name, getattr(self, name))
        if self.d <= 0:
            raise DomainError(f"d must be positive, got {self.d!r}")
        if self.l_dz <= 0:
            raise DomainError(f"l_dz must be positive, got {self.l_dz!r}")
        if self.l_hold_upper < 0 or self.l_hold_lower < 0:
            raise DomainError("holding-zone lengths must be non-negative")


@dataclass(frozen=True)
class OperatingPoint:
    p: float
    theta: float

    def __post_init__(self):
        _check_finite("p", self.p)
        if self.p < 0:
            raise DomainError(f"gauge pressure must be >= 0, got {self.p!r}")
        _check_theta(self.theta)


@dataclass(frozen=True)
class TorquePrediction:
    torque: float
    geometry: ActuatorGeometry
    operating_point: OperatingPoint


@dataclass(frozen=True)
class MeasuredPoint:
    theta: float
    p: float
    torque_measured: float

    def __post_init__(self):
        _check_finite("torque_measured", self.torque_measured)
        _check_finite("p", self.p)
        if self.p < 0:
            raise DomainError(f"gauge pressure must be >= 0, got {self.p!r}")
        _check_theta(self.theta)


def _torque(n, d, p, theta):
    c = math.cos(theta / 2.0)
    return _TORQUE_COEFF * n * p * d**3 / (c * c)


def predict_torque(geom: ActuatorGeometry, op: OperatingPoint) -> float:
    """Output torque in N*m at the given operating point."""
    return _torque(geom.n, geom.d, op.p, op.theta)


def predict(geom: ActuatorGeometry, op: OperatingPoint) -> TorquePrediction:
    return TorquePrediction(predict_torque(geom, op), geom, op)


def min_dz_length(d: float, theta_max: float) -> float:
    """Lower bound on the inflation-deflation zone length.

    The zone must be *strictly* longer than the returned value.
    """
    _check_finite("d", d)
    if d <= 0:
        raise DomainError(f"d must be positive, got {d!r}")
    _check_theta(theta_max, "theta_max")
    return 2.0 * d * math.tan(theta_max / 2.0)


def is_feasible(geom: ActuatorGeometry, theta_max: float, margin: float = 1.0) -> bool:
    """True iff ``geom.l_dz`` exceeds ``margin`` times the minimum length."""
    if not margin > 0:
        raise DomainError(f"margin must be positive, got {margin!r}")
    return geom.l_dz > margin * min_dz_length(geom.d, theta_max)


def required_pressure(torque_target: float, geom: ActuatorGeometry, theta: float) -> float:
    """Gauge pressure (Pa) at which the exosuit produces ``torque_target``."""
    _check_finite("torque_target", torque_target)
    if torque_target < 0:
        raise DomainError(f"torque_target must be >= 0, got {torque_target!r}")
    _check_theta(theta)
    c = math.cos(theta / 2.0)
    return torque_target * c * c / (_TORQUE_COEFF * geom.n * geom.d**3)


def relative_model_error(predicted: float, measured: float) -> float:
    """``|measured - predicted| / measured``, as a fraction."""
    if not measured > 0:
        raise DomainError(f"measured torque must be positive, got {measured!r}")
    return abs(measured - predicted) / measured


def compare_measurements(geom: ActuatorGeometry, points) -> list[tuple[MeasuredPoint, float, float]]:
    """Pair each measured point with its prediction and relative error.

    Points with a non-positive measured torque get ``nan`` as error.
    """
    out = []
    for pt in points:
        pred = predict_torque(geom, OperatingPoint(pt.p, pt.theta))
        err = relative_model_error(pred, pt.torque_measured) if pt.torque_measured > 0 else math.nan
        out.append((pt, pred, err))
    return out


def torque_surface(geom: ActuatorGeometry, p_grid, theta_grid) -> np.ndarray:
    """Torque grid; element ``[i, j]`` is evaluated at ``(p_grid[i], theta_grid[j])``."""
    p_grid = list(p_grid)
    theta_grid = list(theta_grid)
    if not p_grid or not theta_grid:
        raise DomainError("pressure and angle grids must be non-empty")
    out = np.empty((len(p_grid), len(theta_grid)))
    for i, p in enumerate(p_grid):
        for j, th in enumerate(theta_grid):
            out[i, j] = predict_torque(geom, OperatingPoint(float(p), float(th)))
    return out
