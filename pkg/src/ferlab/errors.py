"""Exception types shared across the package."""


class FerError(Exception):
    """Base class for all package errors."""


class ShapeError(FerError, ValueError):
    pass


class NumericError(FerError, ArithmeticError):
    pass


class ConfigError(FerError, ValueError):
    pass


class ModeError(FerError, RuntimeError):
    pass


class ParseError(FerError, ValueError):
    pass


class ScheduleError(FerError, ValueError):
    pass


class StratificationError(FerError, ValueError):
    pass


class PairingError(FerError, ValueError):
    pass


class InvariantError(FerError, ValueError):
    pass
