class ZenoOttoError(Exception):
    """Base class for every error raised by the simulator."""


class ConfigError(ZenoOttoError):
    """Invalid experiment configuration, unknown preset or unknown sweep parameter."""


class NumericalInvariantError(ZenoOttoError):
    """A physical or numerical invariant (trace, positivity, unitarity...) was violated."""


class NonHermitianError(NumericalInvariantError):
    """An operator expected to be Hermitian is not, within tolerance."""


class GridResolutionError(NumericalInvariantError):
    """A supremum estimated on a time grid moved by more than 1% under grid doubling."""


class DimensionError(ZenoOttoError, ValueError):
    """Operator dimensions do not match what the operation requires."""


class StageError(ZenoOttoError, ValueError):
    """A stroke-specific operation received the wrong stage or a time out of range."""


# Exit codes used by the command line
EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ERROR = 3
