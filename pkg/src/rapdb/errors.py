"""Exception types shared across the solver."""


class InputError(ValueError):
    """Malformed or dimensionally inconsistent problem data."""


class ConfigurationError(ValueError):
    """Invalid solver/policy configuration."""


class DataError(ValueError):
    """Bad external data (e.g. degenerate kernel normalization)."""


class SlaterViolation(ValueError):
    """Candidate Slater point is not strictly feasible."""


class NonConvergence(RuntimeError):
    """Inner loop or iteration budget exhausted without meeting criteria."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state
