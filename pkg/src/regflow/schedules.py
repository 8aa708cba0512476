"""Regularization schedules eps(t) and their admissibility diagnostics.

A schedule is a positive, nonincreasing weight t -> eps(t) driving the
regularized flows. Each convergence test for a flow reduces to a small set
of inequalities on the schedule and on the problem's operator bounds; the
check_* functions below evaluate those inequalities and report the margins.

The module also builds envelope functions mu(t): certified upper bounds
1/mu(t) on the distance between the trajectory and its target, used by the
integrator's violation monitor.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConditionViolatedError
from .quadrature import adaptive_simpson

#: Log-spaced scan grid used by generic (non closed-form) suprema.
_SCAN_GRID = np.concatenate([[0.0], np.logspace(-3.0, 8.0, 1024)])


class Schedule:
    """Base class: positive, nonincreasing regularization weight.

    Subclasses provide eps/deps (vectorized) and, where available, closed
    forms for the integral and the decay constants. The generic fallbacks
    scan a fixed log-spaced grid and are documented as heuristic.
    """

    def eps(self, t):
        raise NotImplementedError

    def deps(self, t):
        """Derivative d eps / dt."""
        raise NotImplementedError

    def eps_integral(self, t):
        """Integral of eps over [0, t]."""
        return adaptive_simpson(self.eps, 0.0, float(t), seed_panels=8)

    def rel_decay(self, t):
        """|deps(t)| / eps(t), the relative decay speed."""
        return np.abs(self.deps(t)) / self.eps(t)

    def decay_ratio(self, t):
        """|deps(t)| / eps(t)^2, the decay speed in units of eps itself."""
        return np.abs(self.deps(t)) / self.eps(t) ** 2

    def decay_sup(self):
        """sup_t eps(0) * |deps(t)| / eps(t)^2 (grid scan fallback)."""
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            vals = self.eps(0.0) * self.decay_ratio(_SCAN_GRID)
        # A probe the ratio cannot be evaluated at (eps underflowed to zero)
        # leaves nothing to certify: treat it as unbounded.
        if not np.all(np.isfinite(vals)):
            return math.inf
        sup = float(np.max(vals))
        # Treat a supremum still growing at the far end of the grid as +inf.
        if vals[-1] >= vals[-2] and vals[-1] == sup:
            return math.inf
        return sup

    def rel_decay_sup(self):
        """sup_t |deps(t)| / eps(t) (grid scan fallback)."""
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            vals = self.rel_decay(_SCAN_GRID)
        if not np.all(np.isfinite(vals)):
            return math.inf
        sup = float(np.max(vals))
        if vals[-1] >= vals[-2] and vals[-1] == sup:
            return math.inf
        return sup

    def decay_ratio_vanishes(self):
        """Whether |deps|/eps^2 -> 0 as t -> inf (heuristic fallback)."""
        probes = self.decay_ratio(np.logspace(4.0, 8.0, 5))
        return bool(np.all(np.diff(probes) < 0) and probes[-1] < 0.1 * probes[0])

    def vanishes(self):
        """Whether eps(t) -> 0 as t -> inf (heuristic fallback)."""
        probes = self.eps(np.logspace(4.0, 8.0, 5))
        return bool(np.all(np.diff(probes) < 0) and probes[-1] < 0.1 * probes[0])

    def describe(self):
        return type(self).__name__


@dataclass(frozen=True)
class PowerSchedule(Schedule):
    """eps(t) = eps0 * (t0 + t)^(-nu) with eps0, t0, nu > 0."""

    eps0: float
    t0: float
    nu: float

    def __post_init__(self):
        if not (self.eps0 > 0 and self.t0 > 0 and self.nu > 0):
            raise ValueError("power schedule needs eps0, t0, nu all positive")

    def eps(self, t):
        return self.eps0 * (self.t0 + np.asarray(t, dtype=float)) ** (-self.nu)

    def deps(self, t):
        return -self.nu * self.eps0 * (self.t0 + np.asarray(t, dtype=float)) ** (
            -self.nu - 1.0
        )

    def eps_integral(self, t):
        t = float(t)
        if self.nu == 1.0:
            return self.eps0 * math.log((self.t0 + t) / self.t0)
        p = 1.0 - self.nu
        return self.eps0 * ((self.t0 + t) ** p - self.t0**p) / p

    def decay_sup(self):
        # eps(0)|deps|/eps^2 = nu * t0^-nu * (t0+t)^(nu-1): nonincreasing
        # for nu <= 1 (max at t=0), unbounded for nu > 1.
        if self.nu > 1.0:
            return math.inf
        return self.nu / self.t0

    def rel_decay_sup(self):
        # |deps|/eps = nu/(t0+t), max at t=0.
        return self.nu / self.t0

    def decay_ratio_vanishes(self):
        return self.nu < 1.0

    def vanishes(self):
        return True

    def describe(self):
        return f"power(eps0={self.eps0:g}, t0={self.t0:g}, nu={self.nu:g})"


@dataclass(frozen=True)
class LogSchedule(Schedule):
    """eps(t) = eps0 / log(t0 + t) with eps0 > 0, t0 > 1."""

    eps0: float
    t0: float

    def __post_init__(self):
        if not (self.eps0 > 0 and self.t0 > 1):
            raise ValueError("log schedule needs eps0 > 0 and t0 > 1")

    def eps(self, t):
        return self.eps0 / np.log(self.t0 + np.asarray(t, dtype=float))

    def deps(self, t):
        s = self.t0 + np.asarray(t, dtype=float)
        return -self.eps0 / (s * np.log(s) ** 2)

    def decay_sup(self):
        # eps(0)|deps|/eps^2 = 1/((t0+t) log t0), decreasing in t, so the
        # supremum sits at t=0: 1/(t0 log t0).
        return 1.0 / (self.t0 * math.log(self.t0))

    def rel_decay_sup(self):
        # |deps|/eps = 1/((t0+t) log(t0+t)), max at t=0.
        return 1.0 / (self.t0 * math.log(self.t0))

    def decay_ratio_vanishes(self):
        # |deps|/eps^2 = 1/(eps0 (t0+t)) -> 0.
        return True

    def vanishes(self):
        return True

    def describe(self):
        return f"log(eps0={self.eps0:g}, t0={self.t0:g})"


@dataclass(frozen=True)
class ExpSchedule(Schedule):
    """eps(t) = eps0 * exp(-nu t) with eps0, nu > 0.

    Decays too fast for every convergence test here (|deps|/eps^2 grows
    without bound), but remains useful as a driver when the flow itself is
    strongly contracting.
    """

    eps0: float
    nu: float

    def __post_init__(self):
        if not (self.eps0 > 0 and self.nu > 0):
            raise ValueError("exp schedule needs eps0, nu positive")

    def eps(self, t):
        return self.eps0 * np.exp(-self.nu * np.asarray(t, dtype=float))

    def deps(self, t):
        return -self.nu * self.eps(t)

    def eps_integral(self, t):
        return self.eps0 / self.nu * (1.0 - math.exp(-self.nu * float(t)))

    def decay_sup(self):
        return math.inf

    def rel_decay_sup(self):
        return self.nu

    def decay_ratio_vanishes(self):
        return False

    def vanishes(self):
        return True

    def describe(self):
        return f"exp(eps0={self.eps0:g}, nu={self.nu:g})"


# ---------------------------------------------------------------------------
# Admissibility checks


@dataclass
class Admissibility:
    """Outcome of one schedule admissibility check.

    decay_sup   sup_t eps(0)|deps|/eps^2 (must be < 1 for the Newton flow)
    damping_min min_t (gamma(t) - zeta*|deps|/eps) for the Gauss-Newton flows
    drift_sup   eps(0) * sup_t alpha(t)/eps(t) for the projector flow
    threshold   required lower bound on eps(0), when the check has one
    margin      eps(0) - threshold
    """

    check: str
    passed: bool
    reason: str = ""
    decay_sup: float = math.nan
    damping_min: float = math.nan
    drift_sup: float = math.nan
    eps0: float = math.nan
    threshold: float = math.nan
    margin: float = math.nan


def check_regularized_newton(schedule, curvature, dist0):
    """Admissibility of a schedule for the regularized Newton flow.

    Needs decay_sup < 1 and a large enough starting weight:
    eps(0) > curvature * dist0 / (1 - d) * max(1, 2d/(1-d)), d = decay_sup.

    curvature is a bound on the second derivative of the operator, dist0 a
    bound on the distance from the start to the solution.
    """
    if curvature < 0 or dist0 < 0:
        raise ValueError("curvature and dist0 must be nonnegative")
    d = schedule.decay_sup()
    eps0 = float(schedule.eps(0.0))
    out = Admissibility(check="regularized-newton", passed=False, decay_sup=d, eps0=eps0)
    if not d < 1.0:
        out.reason = f"decay_sup = {d:g} is not < 1"
        return out
    out.threshold = curvature * dist0 / (1.0 - d) * max(1.0, 2.0 * d / (1.0 - d))
    out.margin = eps0 - out.threshold
    if not eps0 > out.threshold:
        out.reason = f"eps(0) = {eps0:g} does not exceed threshold {out.threshold:g}"
        return out
    out.passed = True
    return out


def check_regularized_simple(schedule):
    """Admissibility for the regularized simple flow.

    Needs eps positive, nonincreasing with eps -> 0, and |deps|/eps^2 -> 0.
    """
    d = schedule.decay_sup()
    out = Admissibility(check="regularized-simple", passed=False, decay_sup=d,
                        eps0=float(schedule.eps(0.0)))
    if not schedule.vanishes():
        out.reason = "eps(t) does not tend to zero"
        return out
    if not schedule.decay_ratio_vanishes():
        out.reason = "|deps|/eps^2 does not tend to zero"
        return out
    out.passed = True
    return out


def zeta_factor(zeta):
    """zeta^zeta * (1-zeta)^(1-zeta) on [1/2, 1], with the limit value 1 at zeta=1."""
    if not 0.5 <= zeta <= 1.0:
        raise ValueError(f"source exponent must lie in [1/2, 1], got {zeta!r}")
    if zeta == 1.0:
        return 1.0
    return zeta**zeta * (1.0 - zeta) ** (1.0 - zeta)


def check_sourcewise_gauss_newton(schedule, n1, n2, v_norm, zeta, dist0):
    """Admissibility for the Gauss-Newton flow under a sourcewise start.

    The start offset must satisfy z0 - y = T(y)^zeta v. The damping
    coefficient gamma(t) depends on the schedule through eps(t); its margin
    over zeta*|deps|/eps is scanned on a log grid.
    """
    zf = zeta_factor(zeta)
    eps0 = float(schedule.eps(0.0))
    eps_g = schedule.eps(_SCAN_GRID)
    gamma = (
        1.0
        - 0.5 * eps_g ** (zeta - 0.5) * n2 * zf * v_norm
        - n1 ** (2.0 * (zeta + 0.5)) * n2 * v_norm / (n1**2 + eps_g)
    )
    damping = gamma - zeta * schedule.rel_decay(_SCAN_GRID)
    c0 = float(np.min(damping))
    out = Admissibility(check="sourcewise-gauss-newton", passed=False,
                        damping_min=c0, eps0=eps0)
    if not c0 > 0.0:
        out.reason = f"damping margin min(gamma - zeta|deps|/eps) = {c0:g} <= 0"
        return out
    lhs = n2 * eps0 ** (zeta - 0.5) / (2.0 * c0)
    rhs = min(c0 / (2.0 * zf * v_norm), eps0**zeta / dist0) if v_norm > 0 else (
        eps0**zeta / dist0
    )
    out.threshold = rhs
    out.margin = rhs - lhs
    if not lhs < rhs:
        out.reason = f"size condition fails: {lhs:g} !< {rhs:g}"
        return out
    out.passed = True
    return out


def check_projector_gauss_newton(schedule, contraction, n1, n2, drift_sup, dist0):
    """Admissibility for the Gauss-Newton flow with a spectral cutoff projector.

    contraction is the sup-norm constant from the projected-perturbation
    condition (must be < 1/2); drift_sup is eps(0)*sup_t alpha(t)/eps(t) with
    alpha(t) the norm of the start offset removed by the projector.
    """
    eps0 = float(schedule.eps(0.0))
    out = Admissibility(check="projector-gauss-newton", passed=False,
                        drift_sup=drift_sup, eps0=eps0)
    if not contraction < 0.5:
        out.reason = f"projected-perturbation constant {contraction:g} is not < 1/2"
        return out
    gamma = 0.5 - contraction
    c0 = gamma - schedule.rel_decay_sup()
    out.damping_min = c0
    if not c0 > 0.0:
        out.reason = f"damping margin gamma - sup|deps|/eps = {c0:g} <= 0"
        return out
    lhs = (4.0 * n1 * n2 + n2 * math.sqrt(eps0)) / (2.0 * c0)
    cap = c0 / (2.0 * drift_sup) if drift_sup > 0 else math.inf
    rhs = eps0 * min(cap, 1.0 / dist0 if dist0 > 0 else math.inf)
    out.threshold = rhs
    out.margin = rhs - lhs
    if not lhs < rhs:
        out.reason = f"size condition fails: {lhs:g} !< {rhs:g}"
        return out
    out.passed = True
    return out


# ---------------------------------------------------------------------------
# Envelopes


class Envelope:
    """A weight function mu(t) > 0 certifying the bound dist(t) < 1/mu(t)."""

    def mu(self, t):
        raise NotImplementedError

    def mu_dot(self, t):
        raise NotImplementedError

    def bound(self, t):
        """The certified distance bound 1/mu(t)."""
        return 1.0 / self.mu(t)


@dataclass(frozen=True)
class FunctionEnvelope(Envelope):
    """Envelope assembled from explicit callables for mu and its derivative."""

    mu_fn: object
    mu_dot_fn: object

    def mu(self, t):
        return self.mu_fn(t)

    def mu_dot(self, t):
        return self.mu_dot_fn(t)


@dataclass(frozen=True)
class ReciprocalEnvelope(Envelope):
    """mu(t) = lam / eps(t)^zeta, the envelope shape of the Newton-type flows."""

    schedule: Schedule
    lam: float
    zeta: float = 1.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("envelope scale lam must be positive")

    def mu(self, t):
        return self.lam * self.schedule.eps(t) ** (-self.zeta)

    def mu_dot(self, t):
        e = self.schedule.eps(t)
        return -self.lam * self.zeta * e ** (-self.zeta - 1.0) * self.schedule.deps(t)


class QuadratureEnvelope(Envelope):
    """Envelope for the simple flow, defined through a linear comparison ODE.

    rho = 1/mu solves rho' + eps(t) rho = forcing * |deps|/eps with
    rho(0) = 1/mu0, giving

        rho(t) = [forcing * int_0^t (|deps|/eps) e^{E(s)} ds + rho(0)] e^{-E(t)},

    E(t) = int_0^t eps. The integral is evaluated with the exponent shifted
    (e^{E(s)-E(t)}) so it never overflows; contributions with
    E(t) - E(s) > 60 are dropped (bounded by sup(|deps|/eps) e^-60 t).
    """

    _CUTOFF = 60.0

    def __init__(self, schedule, forcing, mu0):
        if not mu0 > 0:
            raise ValueError("mu0 must be positive")
        if forcing < 0:
            raise ValueError("forcing coefficient must be nonnegative")
        self.schedule = schedule
        self.forcing = forcing
        self.mu0 = float(mu0)

    def rho(self, t):
        t = float(t)
        if t == 0.0:
            return 1.0 / self.mu0
        sched = self.schedule
        et = sched.eps_integral(t)
        lo = 0.0
        if et > self._CUTOFF:
            # bisect for E(s) = E(t) - cutoff; E is increasing
            target = et - self._CUTOFF
            a, b = 0.0, t
            for _ in range(80):
                m = 0.5 * (a + b)
                if sched.eps_integral(m) < target:
                    a = m
                else:
                    b = m
            lo = a

        def integrand(s):
            return float(
                abs(sched.deps(s)) / sched.eps(s) * math.exp(sched.eps_integral(s) - et)
            )

        part = adaptive_simpson(integrand, lo, t, seed_panels=8)
        return self.forcing * part + math.exp(-et) / self.mu0

    def mu(self, t):
        return 1.0 / self.rho(t)

    def mu_dot(self, t):
        r = self.rho(t)
        rdot = self.forcing * float(self.schedule.rel_decay(t)) - float(
            self.schedule.eps(t)
        ) * r
        return -rdot / r**2

    def bound(self, t):
        return self.rho(t)


def mu_ode_envelope(schedule, forcing, mu0, t_grid=None):
    """Build the simple-flow envelope and verify positivity on a grid.

    forcing is twice the start-to-solution distance bound; mu0 must satisfy
    mu0 * dist(0) < 1 for the certificate to apply.
    """
    env = QuadratureEnvelope(schedule, forcing, mu0)
    if t_grid is not None:
        for t in np.asarray(t_grid, dtype=float):
            if not env.rho(float(t)) > 0.0:
                raise ConditionViolatedError(f"envelope lost positivity at t={t:g}")
    return env


def newton_flow_envelope(schedule, curvature):
    """Envelope mu = lam/eps certified for the regularized Newton flow.

    lam = curvature/(1 - decay_sup). Returns None for curvature 0 (linear
    operators: the tracking bound collapses to zero and needs no monitor).
    """
    if curvature == 0.0:
        return None
    d = schedule.decay_sup()
    if not d < 1.0:
        raise ConditionViolatedError("schedule decay_sup must be < 1 for this envelope")
    return ReciprocalEnvelope(schedule, lam=curvature / (1.0 - d), zeta=1.0)


def sourcewise_envelope(schedule, n2, zeta, damping_min):
    """Envelope mu = lam/eps^zeta for the sourcewise Gauss-Newton flow."""
    if not damping_min > 0:
        raise ConditionViolatedError("damping margin must be positive")
    eps0 = float(schedule.eps(0.0))
    lam = n2 * eps0 ** (zeta - 0.5) / (2.0 * damping_min)
    return ReciprocalEnvelope(schedule, lam=lam, zeta=zeta)


def projector_envelope(schedule, n1, n2, damping_min):
    """Envelope mu = lam/eps for the projector Gauss-Newton flow.

    Returns None for n2 = 0 (linear operators: the tracking bound collapses
    to zero and needs no monitor), matching newton_flow_envelope.
    """
    if not damping_min > 0:
        raise ConditionViolatedError("damping margin must be positive")
    if n2 == 0.0:
        return None
    eps0 = float(schedule.eps(0.0))
    lam = (4.0 * n1 * n2 + n2 * math.sqrt(eps0)) / (2.0 * damping_min)
    return ReciprocalEnvelope(schedule, lam=lam, zeta=1.0)


# ---------------------------------------------------------------------------
# Pointwise damping conditions for the majorant certificate


@dataclass
class DampingReport:
    """Outcome of the pointwise damping-condition check."""

    passed: bool
    mu0_v0: float
    first_violation: tuple | None = None  # (t, condition name, lhs, rhs)

    def __bool__(self):
        return self.passed


def check_riccati_conditions(gamma, sigma, beta, envelope, v0, t_grid):
    """Check the damping conditions that make 1/mu a certified bound.

    Pointwise on the grid:

        0 <= sigma(t) <= (mu/2) (gamma - mu'/mu)
        beta(t) <= (1/(2 mu)) (gamma - mu'/mu)

    together with mu(0) v0 < 1. gamma, sigma, beta are scalar callables of t;
    envelope carries mu and mu'. Comparisons get a 1e-9 relative slack so
    exact-equality parameter sets (common in hand-built examples) pass.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    mu0v0 = float(envelope.mu(float(t_grid[0]))) * v0
    report = DampingReport(passed=True, mu0_v0=mu0v0)
    if not mu0v0 < 1.0:
        report.passed = False
        report.first_violation = (float(t_grid[0]), "mu(0)*v0 < 1", mu0v0, 1.0)
        return report
    for t in t_grid:
        t = float(t)
        mu = float(envelope.mu(t))
        drive = float(gamma(t)) - float(envelope.mu_dot(t)) / mu
        s, b = float(sigma(t)), float(beta(t))
        checks = (
            ("sigma >= 0", -s, 0.0),
            ("sigma <= (mu/2)(gamma - mu'/mu)", s, 0.5 * mu * drive),
            ("beta <= (1/(2 mu))(gamma - mu'/mu)", b, 0.5 * drive / mu),
        )
        for name, lhs, rhs in checks:
            if lhs > rhs + 1e-9 * (1.0 + abs(rhs)):
                report.passed = False
                report.first_violation = (t, name, lhs, rhs)
                return report
    return report
