"""Exception hierarchy shared by every module."""


class OverspecError(Exception):
    """Base class for all errors raised by this package."""


class InputError(OverspecError, ValueError):
    """Malformed user input: instances, programs, scenario or TM files."""


class ParseError(InputError):
    """Program text does not follow the pipeline grammar."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class ConfigurationError(OverspecError):
    """An evaluation referenced something the environment does not provide,
    e.g. an oracle name missing from the registry."""


class FitError(OverspecError):
    """Pairwise score fitting cannot proceed on the given data."""


class InvariantViolation(OverspecError):
    """An internal consistency check failed (a bug, not bad input)."""
