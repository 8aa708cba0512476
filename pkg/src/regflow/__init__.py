"""Regularized continuous methods for ill-posed operator equations.

The package solves F(z) = 0 on a finite-dimensional space by integrating a
solution flow dz/dt = Phi(z, t). Classical flows (Newton, Gauss-Newton) fail
when F' is singular near the solution; the regularized flows blend in a
decaying weight eps(t) and a pull toward the start point, and converge under
checkable conditions on the schedule and on the operator bounds.

Layout:

    problem      the equation container F, F', z0 and operator bounds
    benchmarks   built-in problems with certified bounds and known solutions
    schedules    eps(t) families, admissibility checks, distance envelopes
    flows        the flow right-hand sides and their margin certificates
    integrate    embedded Runge-Kutta driver with monitor recording
    inequalities Riccati majorant, comparison and decay lemma scenarios
    feigenbaum   period-doubling constants via dimension continuation
    cli          the `regflow` command-line front end
"""

from .benchmarks import (
    Benchmark,
    admissible_power_schedule,
    benchmark_names,
    get_benchmark,
)
from .errors import (
    ConditionViolatedError,
    ConfigError,
    EigFailedError,
    MissingConstantsError,
    MissingMonitorError,
    NoConcaveSolutionError,
    NoConvergenceError,
    NonFiniteError,
    PreconditionSampleFailedError,
    QuadratureFailedError,
    RegflowError,
    SolveFailedError,
)
from .feigenbaum import (
    ContinuationResult,
    FeigenbaumSystem,
    accepted_digits,
    alpha_from_coefficients,
    continuation_solve,
    eval_jacobian,
    eval_system,
    run_experiment,
    seed_roots_quintic,
)
from .flows import auxiliary_solution, make_flow, semimonotonicity_margin
from .inequalities import (
    AppendixSetup,
    RiccatiSetup,
    appendix_decay_check,
    comparison_check,
    riccati_majorant,
    run_all_scenarios,
    run_scenario,
)
from .integrate import (
    IntegratorConfig,
    OdeSystem,
    Trajectory,
    envelope_violations,
    integrate,
    load_trajectory_json,
)
from .problem import Problem, estimate_bounds
from .schedules import (
    Admissibility,
    Envelope,
    ExpSchedule,
    FunctionEnvelope,
    LogSchedule,
    PowerSchedule,
    QuadratureEnvelope,
    ReciprocalEnvelope,
    Schedule,
    check_projector_gauss_newton,
    check_regularized_newton,
    check_regularized_simple,
    check_riccati_conditions,
    check_sourcewise_gauss_newton,
    mu_ode_envelope,
    newton_flow_envelope,
    projector_envelope,
    sourcewise_envelope,
)

__version__ = "0.1.0"

__all__ = [
    "Admissibility",
    "AppendixSetup",
    "Benchmark",
    "ConditionViolatedError",
    "ConfigError",
    "ContinuationResult",
    "EigFailedError",
    "Envelope",
    "ExpSchedule",
    "FeigenbaumSystem",
    "FunctionEnvelope",
    "IntegratorConfig",
    "LogSchedule",
    "MissingConstantsError",
    "MissingMonitorError",
    "NoConcaveSolutionError",
    "NoConvergenceError",
    "NonFiniteError",
    "OdeSystem",
    "PowerSchedule",
    "PreconditionSampleFailedError",
    "Problem",
    "QuadratureEnvelope",
    "QuadratureFailedError",
    "ReciprocalEnvelope",
    "RegflowError",
    "RiccatiSetup",
    "Schedule",
    "SolveFailedError",
    "Trajectory",
    "accepted_digits",
    "admissible_power_schedule",
    "alpha_from_coefficients",
    "appendix_decay_check",
    "auxiliary_solution",
    "benchmark_names",
    "check_projector_gauss_newton",
    "check_regularized_newton",
    "check_regularized_simple",
    "check_riccati_conditions",
    "check_sourcewise_gauss_newton",
    "comparison_check",
    "continuation_solve",
    "envelope_violations",
    "estimate_bounds",
    "eval_jacobian",
    "eval_system",
    "get_benchmark",
    "integrate",
    "load_trajectory_json",
    "make_flow",
    "mu_ode_envelope",
    "newton_flow_envelope",
    "projector_envelope",
    "riccati_majorant",
    "run_all_scenarios",
    "run_experiment",
    "run_scenario",
    "seed_roots_quintic",
    "semimonotonicity_margin",
    "sourcewise_envelope",
]
