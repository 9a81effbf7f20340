"""Exception types shared across the package."""


class MfgLpfpError(Exception):
    """Base class for all package errors."""


class GridError(MfgLpfpError):
    """Invalid discretization parameters."""


class ModelError(MfgLpfpError):
    """Invalid model definition or model/grid mismatch."""


class CflError(MfgLpfpError):
    """The time step violates the Markov-chain stability bound."""


class LpError(MfgLpfpError):
    """Malformed linear program or assembly failure."""


class SolverError(MfgLpfpError):
    """The LP solver failed to return an optimal solution.

    When raised from the fictitious-play driver, ``trace`` carries the
    partial run recorded up to the failing iteration.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class ConfigError(MfgLpfpError):
    """Run-configuration parse or validation failure."""

    def __init__(self, message, line=None, field=None):
        super().__init__(message)
        self.line = line
        self.field = field
