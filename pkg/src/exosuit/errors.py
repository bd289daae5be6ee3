"""Exception hierarchy.

The CLI maps these onto exit codes: input problems (``DomainError``,
``ConfigError``) exit 2, numerical failures (``NumericalError`` and its
subclasses) exit 3.
"""


class ExosuitError(Exception):
    """Base class for all toolkit errors."""


class DomainError(ExosuitError, ValueError):
    """An argument lies outside the domain of the model."""


class ConfigError(ExosuitError, ValueError):
    """A configuration or data file is malformed."""


class NumericalError(ExosuitError, ArithmeticError):
    """A numerical procedure could not produce a trustworthy result."""


class InstabilityError(NumericalError):
    """The integration step exceeds the stability bound of the scheme."""


class ConvergenceError(NumericalError):
    """An iterative solve ran out of iterations."""


class NotReachedError(NumericalError):
    """A trace never settled inside the requested band."""
