"""rapdb: restarted accelerated primal-dual solver with backtracking for
convex QCQPs and nonlinear conic programs."""

from .engine import ApdbEngine, SolverConfig, TraceRecord, initial_iterate, run
from .errors import (ConfigurationError, DataError, InputError, NonConvergence,
                     SlaterViolation)
from .problem import (Iterate, LipschitzConstants, ProblemInstance,
                      compute_constants, coupling_value, grad_x_coupling,
                      grad_y_coupling)
from .restarts import (AdaptiveRestart, FixedRestart, NoRestart, RunResult,
                       run_restarted)

__all__ = [
    "ApdbEngine", "SolverConfig", "TraceRecord", "initial_iterate", "run",
    "ConfigurationError", "DataError", "InputError", "NonConvergence",
    "SlaterViolation",
    "Iterate", "LipschitzConstants", "ProblemInstance", "compute_constants",
    "coupling_value", "grad_x_coupling", "grad_y_coupling",
    "AdaptiveRestart", "FixedRestart", "NoRestart", "RunResult",
    "run_restarted",
]

__version__ = "0.1.0"
