"""Exception types shared across the package."""


class RegflowError(Exception):
    """Base class for package-specific errors."""


class NonFiniteError(RegflowError):
    """An evaluation produced or received NaN or Inf entries."""


class SolveFailedError(RegflowError):
    """A dense linear solve hit an (effectively) singular operator."""


class EigFailedError(RegflowError):
    """The symmetric eigensolver did not converge."""


class NoConvergenceError(RegflowError):
    """An iterative solver exhausted its iteration budget."""


class MissingConstantsError(RegflowError):
    """An operation needs operator bounds or reference data that were not provided."""


class MissingMonitorError(RegflowError):
    """Trajectory post-processing needs a monitor column that was not recorded."""


class QuadratureFailedError(RegflowError):
    """Adaptive quadrature exceeded its refinement depth."""


class ConditionViolatedError(RegflowError):
    """A precondition of a closed-form estimate is violated."""


class PreconditionSampleFailedError(RegflowError):
    """Sampled verification of a comparison precondition found a counterexample.

    The offending sample is kept in ``witness`` as ``(t, w, u)``.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NoConcaveSolutionError(RegflowError):
    """Continuation found no acceptable concave solution branch."""


class ConfigError(RegflowError):
    """Invalid run configuration."""
