"""Exception and warning types raised across the package."""


class CavgateError(Exception):
    """Base class for all package errors."""


class ConfigError(CavgateError, ValueError):
    """Invalid or inconsistent run configuration."""


class NumericalError(CavgateError, ArithmeticError):
    """Base class for failures of a numerical procedure."""


# model
class GridTooLarge(ConfigError):
    pass


class InfeasibleGrid(ConfigError):
    pass


class PoorNormalization(NumericalError):
    pass


class IndexOutOfRange(CavgateError, IndexError):
    pass


class LatticeMismatch(ConfigError):
    """Pulse-cavity detuning does not sit on the mode lattice."""


# dynamics
class DimensionMismatch(CavgateError, ValueError):
    pass


class StepSizeUnderflow(NumericalError):
    pass


class QuantizationTimeExceeded(ConfigError):
    pass


class IncompleteScattering(UserWarning):
    """The excited-state amplitude has not decayed by the end of a run."""


# analytic
class SingularDenominator(NumericalError, ZeroDivisionError):
    pass


class ZeroCoupling(CavgateError, ValueError):
    pass


class NoRealRoot(NumericalError):
    pass


# observables / experiments
class ZeroInput(CavgateError, ValueError):
    pass


class NonPositivePoint(CavgateError, ValueError):
    pass
