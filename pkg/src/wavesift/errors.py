"""Exception types raised across the package."""


class WavesiftError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class NonConformingMesh(WavesiftError, ValueError):
    exit_code = 3


class EmptyActiveSet(WavesiftError, ValueError):
    exit_code = 4


class DomainError(WavesiftError, ValueError):
    exit_code = 3


class SingularPoint(WavesiftError, ValueError):
    exit_code = 3


class ReceiverInsideDomain(WavesiftError, ValueError):
    exit_code = 3


class DimensionMismatch(WavesiftError, ValueError):
    exit_code = 3


class SingularSystem(WavesiftError, ArithmeticError):
    exit_code = 5


class InverseCrime(WavesiftError, ValueError):
    exit_code = 3


class AllEqual(WavesiftError, ValueError):
    exit_code = 3


class TooShort(WavesiftError, ValueError):
    exit_code = 3


class EmptyThresholdSet(WavesiftError, ValueError):
    exit_code = 4


class NoScattererDetected(WavesiftError):
    exit_code = 6


class UnknownPhantom(WavesiftError, KeyError):
    exit_code = 2


class UnknownFormat(WavesiftError, ValueError):
    exit_code = 2


class IterationOutOfRange(WavesiftError, IndexError):
    exit_code = 2


class ConfigError(WavesiftError, ValueError):
    exit_code = 2
