"""Exception hierarchy shared by all reslab modules."""


class ReslabError(Exception):
    """Base class for every error raised by the package."""


class ResourceError(ReslabError):
    """A computation would exceed a configured memory or term cap."""


class ConfigurationError(ReslabError):
    """Parameters are inconsistent or describe an unusable setup."""


class ValidationError(ReslabError, ValueError):
    """An input violates a documented precondition."""


class PrecisionError(ReslabError):
    """The requested accuracy cannot be reached in double precision."""


class GapError(ReslabError):
    """Coefficient data is missing for a prime that is required."""

    def __init__(self, p: int, message: str | None = None):
        self.p = int(p)
        super().__init__(message or f"missing coefficient data for prime p={self.p}")


class ParseError(ReslabError, ValueError):
    """A coefficient or config file is malformed."""

    def __init__(self, lineno: int, message: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


class DegenerateInputError(ReslabError, ZeroDivisionError):
    """A ratio was requested with a vanishing denominator."""


class RangeError(ReslabError, OverflowError):
    """A numerical parameter drives an intermediate quantity out of range."""


class InvariantViolation(ReslabError, AssertionError):
    """A checked mathematical invariant failed on computed data."""
