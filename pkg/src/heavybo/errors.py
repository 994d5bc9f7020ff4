"""Exception hierarchy.

CLI exit codes key off these classes: configuration problems exit 1, bad
input data exits 2, numerical/runtime failures exit 3.
"""


class HeavyBOError(Exception):
    exit_code = 3


class ConfigError(HeavyBOError, ValueError):
    exit_code = 1


class DomainError(HeavyBOError, ValueError):
    """Argument outside the mathematical domain of a function."""

    exit_code = 1


class DataError(HeavyBOError, ValueError):
    exit_code = 2


class FitError(DataError):
    pass


class NotSeparableError(DataError):
    pass


class ConvergenceError(HeavyBOError, RuntimeError):
    pass


class DivergenceError(HeavyBOError, FloatingPointError):
    def __init__(self, epoch, message=None):
        self.epoch = epoch
        super().__init__(message or f"loss became non-finite at epoch {epoch}")
