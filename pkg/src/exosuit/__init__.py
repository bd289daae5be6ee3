"""Design, simulation and analysis toolkit for zone-inflated fabric pneumatic exosuits."""

from .errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    ExosuitError,
    InstabilityError,
    NotReachedError,
    NumericalError,
)
from .torque_model import (
    ActuatorGeometry,
    MeasuredPoint,
    OperatingPoint,
    TorquePrediction,
    is_feasible,
    min_dz_length,
    predict,
    predict_torque,
    relative_model_error,
    required_pressure,
    torque_surface,
)

__version__ = "0.1.0"
