"""Exception hierarchy shared by all modules.

Every exception's class name doubles as the machine-readable prefix the
CLI prints on failure, so keep names stable.
"""


class CobwebError(Exception):
    """Base class for all package errors."""

    exit_code = 2

    def diagnostic(self):
        return f"{type(self).__name__}: {self}"


class HyperbolicityViolation(CobwebError, ValueError):
    pass


class AsymmetricOrthoscheme(CobwebError, ValueError):
    pass


class NonIntersectingPlanes(CobwebError, ValueError):
    pass


class ImproperPoint(CobwebError, ValueError):
    pass


class DegeneratePlane(CobwebError, ValueError):
    pass


class FootImproper(CobwebError, ArithmeticError):
    pass


class NegativeRadius(CobwebError, ValueError):
    pass


class UnknownSite(CobwebError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class UnknownGenerator(CobwebError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class WrongSeries(CobwebError, ValueError):
    pass


class EvenZ(CobwebError, ValueError):
    pass


class HorizonTooLarge(CobwebError, RuntimeError):
    pass


class ImproperSite(CobwebError, ValueError):
    pass


class DuplicateSite(CobwebError, ValueError):
    pass


class HorizonExhausted(CobwebError, RuntimeError):
    exit_code = 3


class UnknownTable(CobwebError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class SharedOrbit(DuplicateSite):
    """Two listed sites are images of each other under W."""
