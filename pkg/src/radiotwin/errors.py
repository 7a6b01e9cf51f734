"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration errors exit 2,
infeasible precoder targets exit 3, numerical failures exit 4.
"""


class ConfigurationError(ValueError):
    """A config object or file violates its invariants."""


class DegenerateInputError(ValueError):
    """Geometry or algebra input with no well-defined answer (zero-length path, zero quaternion)."""


class InfeasibleProblemError(RuntimeError):
    """Rate targets cannot be met at any finite power.

    Carries a human-readable certificate describing why.
    """

    def __init__(self, message: str, certificate: dict | None = None):
        super().__init__(message)
        self.certificate = certificate or {}


class NumericalError(RuntimeError):
    """A solver or gradient computation produced unusable numbers."""
