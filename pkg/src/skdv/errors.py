class SKdVError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(SKdVError, ValueError):
    """Invalid configuration or violated precondition."""


class NumericError(SKdVError, ArithmeticError):
    """Non-finite values appeared in a computation.

    ``t`` carries the simulation time of the failure when known.
    """

    def __init__(self, message, t=None):
        super().__init__(message if t is None else f"{message} (t = {t:.6g})")
        self.t = t


class MeasurementError(SKdVError):
    """A derived measurement (e.g. a pulse speed) could not be made reliably."""
