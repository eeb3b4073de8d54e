"""Exception hierarchy shared by every module of the toolkit."""


class AfaError(Exception):
    """Base class for all domain errors raised by :mod:`afa`."""


class InvalidDims(AfaError, ValueError):
    pass


class NotRealSpectrum(AfaError, ValueError):
    pass


class InvalidRange(AfaError, ValueError):
    pass


class InvalidParam(AfaError, ValueError):
    pass


class NotTensorFile(AfaError, ValueError):
    pass


class CorruptFile(AfaError, ValueError):
    pass


class InvalidFrequency(AfaError, ValueError):
    pass


class DegenerateWave(AfaError, ValueError):
    pass


class ShapeMismatch(AfaError, ValueError):
    pass


class NotVerifiable(AfaError, ValueError):
    """Frequency pair is off the integer lattice, so spectral leakage is expected."""


class InsufficientBatch(AfaError, ValueError):
    pass


class InvalidLabel(AfaError, ValueError):
    pass


class NotADistribution(AfaError, ValueError):
    pass


class NoTape(AfaError, RuntimeError):
    pass


class UnknownCorruption(AfaError, ValueError):
    pass


class EmptySplit(AfaError, ValueError):
    pass


class BaselineDegenerate(AfaError, ZeroDivisionError):
    pass


class SequenceTooShort(AfaError, ValueError):
    pass


class NotEnoughClasses(AfaError, ValueError):
    pass


class InvalidBin(AfaError, ValueError):
    pass


class NotPnm(AfaError, ValueError):
    pass


class UnsupportedMaxval(AfaError, ValueError):
    pass


class ConfigError(AfaError, ValueError):
    pass
