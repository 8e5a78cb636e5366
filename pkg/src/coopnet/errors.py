"""Exception hierarchy shared across the package."""


class CoopNetError(Exception):
    """Base class for all package errors."""


class UnknownEdge(CoopNetError, KeyError):
    pass


class UnknownNode(CoopNetError, KeyError):
    pass


class RebuildExisting(CoopNetError, ValueError):
    pass


class FrequencyOverflow(CoopNetError, ValueError):
    pass


class BigMViolation(CoopNetError, ValueError):
    """Frequency assigned to an edge that has no rail connection."""


class InvalidBounds(CoopNetError, ValueError):
    pass


class Unreachable(CoopNetError):
    pass


class TooLarge(CoopNetError):
    """Instance exceeds the limits of an exhaustive routine."""


class NoAgreement(CoopNetError):
    """Bargaining has no solution; parties fall back to the disagreement point."""


class ZeroCoinvestment(CoopNetError, ZeroDivisionError):
    """Return on co-investment is undefined because nothing was pooled."""

    def __init__(self, cir: float):
        super().__init__("no budget was pooled for co-investment; ROC is undefined")
        self.cir = cir


class ZeroRoadCapacity(CoopNetError, ValueError):
    pass


class Infeasible(CoopNetError):
    pass


class ParseError(CoopNetError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class ConfigError(CoopNetError, ValueError):
    pass
