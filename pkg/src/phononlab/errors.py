"""Exception hierarchy shared by every phononlab module."""


class PhononLabError(Exception):
    """Base class for all physics and pipeline errors raised by phononlab."""


class UnstableResonator(PhononLabError, ValueError):
    """Plano-curved resonator with length >= radius of curvature."""


class EmptySpan(PhononLabError, ValueError):
    pass


class NoResonanceInSpan(PhononLabError, ValueError):
    pass


class NoPairFound(PhononLabError, LookupError):
    pass


class SuppressionTooLow(PhononLabError, LookupError):
    pass


class EmptyInput(PhononLabError, ValueError):
    pass


class EmptyGrid(PhononLabError, ValueError):
    pass


class SelfOscillation(PhononLabError, ValueError):
    """Blue-detuned drive at or beyond the anti-damping threshold C >= 1."""


class NoPeakFound(PhononLabError, ValueError):
    pass


class NoConvergence(PhononLabError, RuntimeError):
    pass


class InsufficientData(PhononLabError, ValueError):
    pass


class NegativeSlope(PhononLabError, ValueError):
    pass


class UnphysicalLinewidth(PhononLabError, ValueError):
    pass


class ConfigError(PhononLabError, ValueError):
    """Invalid scenario configuration; ``key`` names the offending entry."""

    def __init__(self, message, key=None, line=None):
        super().__init__(message)
        self.key = key
        self.line = line
