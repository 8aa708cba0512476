"""Right-hand sides Phi(h, t) of the continuous solution flows dz/dt = Phi.

Classical flows (simple, Newton, Gauss-Newton) use the raw operator and fail
loudly on singular derivatives. Regularized flows blend in a schedule
eps(t) and a pull toward the start point z0; their defining property is the
semimonotonicity estimate

    (Phi(h,t), h - x_t) <= alpha ||d|| - gamma ||d||^2 + sigma ||d||^3,

d = h - x_t, where x_t is the flow's comparison target (the auxiliary
solution for the monotone flows, the exact solution for the Gauss-Newton
ones). Each flow exposes its certified (alpha, gamma, sigma) through
margin_coefficients, and semimonotonicity_margin measures the slack of that
estimate at a point.
"""

import math

import numpy as np

from . import linalg
from .errors import MissingConstantsError, NoConvergenceError
from .schedules import zeta_factor


class Flow:
    """Base class. Subclasses define rhs(h, t) and their margin coefficients."""

    kind = "?"
    schedule = None

    def __init__(self, problem):
        self.problem = problem

    @property
    def start(self):
        return self.problem.z0

    def rhs(self, h, t):
        raise NotImplementedError

    def residual(self, h):
        return self.problem.residual(h)

    def margin_coefficients(self, t):
        """(alpha, gamma, sigma) of the certified semimonotonicity estimate."""
        raise MissingConstantsError(f"{self.kind} flow has no certified margin")

    def _require(self, **named):
        for label, value in named.items():
            if value is None:
                raise MissingConstantsError(
                    f"{self.kind} flow margin needs {label}, which is not set"
                )


class SimpleFlow(Flow):
    """Phi = -F(h)."""

    kind = "classical-simple"

    def rhs(self, h, t):
        return -self.problem.eval_f(h)


class NewtonFlow(Flow):
    """Phi = -F'(h)^{-1} F(h); raises SolveFailedError on singular derivative."""

    kind = "classical-newton"

    def rhs(self, h, t):
        return -linalg.solve_plain(self.problem.eval_jacobian(h), self.problem.eval_f(h))


class GaussNewtonFlow(Flow):
    """Phi = -(J^T J)^{-1} J^T F(h); fails on rank-deficient J."""

    kind = "classical-gauss-newton"

    def rhs(self, h, t):
        jac = self.problem.eval_jacobian(h)
        return -linalg.solve_plain(linalg.gram_map(jac), jac.T @ self.problem.eval_f(h))


class RegularizedSimpleFlow(Flow):
    """Phi = -(F(h) + eps(t)(h - z0)); for monotone F."""

    kind = "simple"

    def __init__(self, problem, schedule):
        super().__init__(problem)
        self.schedule = schedule

    def rhs(self, h, t):
        h = linalg.as_vector(h, dim=self.problem.dim)
        eps = float(self.schedule.eps(t))
        return -(self.problem.eval_f(h) + eps * (h - self.problem.z0))

    def margin_coefficients(self, t):
        # Monotonicity alone gives alpha = sigma = 0, gamma = eps(t),
        # anchored at the auxiliary solution.
        return 0.0, float(self.schedule.eps(t)), 0.0


class RegularizedNewtonFlow(Flow):
    """Phi = -(F'(h) + eps(t) I)^{-1} (F(h) + eps(t)(h - z0))."""

    kind = "newton"

    def __init__(self, problem, schedule):
        super().__init__(problem)
        self.schedule = schedule

    def rhs(self, h, t):
        h = linalg.as_vector(h, dim=self.problem.dim)
        eps = float(self.schedule.eps(t))
        return -linalg.regularized_solve(
            self.problem.eval_jacobian(h),
            eps,
            self.problem.eval_f(h) + eps * (h - self.problem.z0),
        )

    def margin_coefficients(self, t):
        # Taylor remainder through the damped inverse: sigma = n2/(2 eps),
        # gamma = 1, anchored at the auxiliary solution.
        self._require(n2=self.problem.n2)
        eps = float(self.schedule.eps(t))
        return 0.0, 1.0, self.problem.n2 / (2.0 * eps)


class SourcewiseGaussNewtonFlow(Flow):
    """Phi = -(T(h) + eps I)^{-1} (J^T F(h) + eps(t)(h - z0)), T = J^T J.

    The margin certificate assumes a sourcewise start: y - z0 in the range of
    T(y)^zeta with source element of norm v_norm, 1/2 <= zeta <= 1. The flow
    itself runs without that data.
    """

    kind = "gn-sourcewise"

    def __init__(self, problem, schedule, v_norm=None, zeta=1.0):
        super().__init__(problem)
        self.schedule = schedule
        self.v_norm = v_norm
        self.zeta = zeta

    def rhs(self, h, t):
        h = linalg.as_vector(h, dim=self.problem.dim)
        eps = float(self.schedule.eps(t))
        jac = self.problem.eval_jacobian(h)
        return -linalg.regularized_solve(
            linalg.gram_map(jac),
            eps,
            jac.T @ self.problem.eval_f(h) + eps * (h - self.problem.z0),
        )

    def margin_coefficients(self, t):
        self._require(n1=self.problem.n1, n2=self.problem.n2, v_norm=self.v_norm)
        n1, n2 = self.problem.n1, self.problem.n2
        zeta, v = self.zeta, self.v_norm
        zf = zeta_factor(zeta)
        eps = float(self.schedule.eps(t))
        alpha = eps**zeta * zf * v
        sigma = n2 / (4.0 * math.sqrt(eps))
        gamma = (
            1.0
            - 0.5 * eps ** (zeta - 0.5) * n2 * zf * v
            - n1 ** (2.0 * (zeta + 0.5)) * n2 * v / (n1**2 + eps)
        )
        return alpha, gamma, sigma


class ProjectorGaussNewtonFlow(Flow):
    """Phi = (P - I)(h - z0) - P (T(h) + eps I)^{-1} J^T F(h).

    P = P_eps(xi) is the spectral projector of the frozen Gram operator
    T(xi) onto eigenvalues >= eps(t). The eigendecomposition of T(xi) is
    cached; the projector is reassembled only when eps crosses an eigenvalue.
    """

    kind = "gn-projector"

    def __init__(self, problem, schedule, anchor=None, contraction=None):
        super().__init__(problem)
        self.schedule = schedule
        self.anchor = problem.z0 if anchor is None else linalg.as_vector(anchor, problem.dim)
        jac = problem.eval_jacobian(self.anchor)
        self._eigvals, self._eigvecs = linalg.eig_sym(linalg.gram_map(jac))
        self._cached_count = -1
        self._cached_projector = None
        self.contraction = contraction  # sup-norm constant of the frozen-point perturbation

    def projector(self, eps):
        # eigenvalues ascending: the kept set is a suffix
        count = int(np.searchsorted(self._eigvals, eps, side="left"))
        if count != self._cached_count:
            keep = self._eigvecs[:, count:]
            self._cached_projector = keep @ keep.T
            self._cached_count = count
        return self._cached_projector

    def rhs(self, h, t):
        h = linalg.as_vector(h, dim=self.problem.dim)
        eps = float(self.schedule.eps(t))
        proj = self.projector(eps)
        jac = self.problem.eval_jacobian(h)
        newton_term = linalg.regularized_solve(
            linalg.gram_map(jac), eps, jac.T @ self.problem.eval_f(h)
        )
        d = h - self.problem.z0
        return (proj @ d - d) - proj @ newton_term

    def margin_coefficients(self, t):
        self._require(
            n1=self.problem.n1,
            n2=self.problem.n2,
            contraction=self.contraction,
            known_solution=self.problem.known_solution,
        )
        n1, n2 = self.problem.n1, self.problem.n2
        eps = float(self.schedule.eps(t))
        gamma = 0.5 - self.contraction
        sigma = n1 * n2 / eps + n2 / (4.0 * math.sqrt(eps))
        offset = self.problem.known_solution - self.problem.z0
        proj = self.projector(eps)
        alpha = float(np.linalg.norm(proj @ offset - offset))
        return alpha, gamma, sigma


def make_flow(method, problem, schedule=None, **kwargs):
    """Construct a flow by CLI method name."""
    classical = {
        "classical-simple": SimpleFlow,
        "classical-newton": NewtonFlow,
        "classical-gauss-newton": GaussNewtonFlow,
    }
    regularized = {
        "simple": RegularizedSimpleFlow,
        "newton": RegularizedNewtonFlow,
        "gn-sourcewise": SourcewiseGaussNewtonFlow,
        "gn-projector": ProjectorGaussNewtonFlow,
    }
    if method in classical:
        if schedule is not None:
            raise ValueError(f"{method} takes no schedule")
        return classical[method](problem)
    if method in regularized:
        if schedule is None:
            raise ValueError(f"{method} needs a schedule")
        return regularized[method](problem, schedule, **kwargs)
    raise ValueError(f"unknown flow method {method!r}")


def auxiliary_solution(problem, eps, warm_start=None, max_iter=200):
    """Solve F(x) + eps (x - z0) = 0 by damped Newton iteration.

    The stopping target is 1e-10 * (1 + ||F(z0)||); steps are backtracked
    by halving until the Armijo decrease of ||F + eps(x - z0)||^2 with slope
    constant 1e-4 holds. For monotone F the regularized map is strongly
    monotone and the iteration converges from any start; warm_start (the
    previous point of a schedule sweep) just shortens it.
    """
    z0 = problem.z0
    x = z0.copy() if warm_start is None else linalg.as_vector(warm_start, dim=problem.dim)
    if not eps > 0.0:
        raise ValueError("eps must be positive")
    tol = 1e-10 * (1.0 + problem.residual(z0))

    def g(pt):
        return problem.eval_f(pt) + eps * (pt - z0)

    gx = g(x)
    for _ in range(max_iter):
        gnorm2 = float(gx @ gx)
        if math.sqrt(gnorm2) <= tol:
            return x
        step = -linalg.regularized_solve(problem.eval_jacobian(x), eps, gx)
        # Newton direction: directional derivative of ||g||^2 is -2 ||g||^2.
        damp = 1.0
        while damp >= 1e-12:
            x_new = x + damp * step
            g_new = g(x_new)
            if float(g_new @ g_new) <= (1.0 - 2.0e-4 * damp) * gnorm2:
                x, gx = x_new, g_new
                break
            damp *= 0.5
        else:
            raise NoConvergenceError(
                f"auxiliary solve stalled at residual {math.sqrt(gnorm2):.3e} (eps={eps:g})"
            )
    raise NoConvergenceError(
        f"auxiliary solve did not reach {tol:.3e} in {max_iter} iterations (eps={eps:g})"
    )


def semimonotonicity_margin(flow, h, t, x_t):
    """Slack of the flow's semimonotonicity estimate at (h, t).

    Returns (Phi, h - x_t) - [alpha ||d|| - gamma ||d||^2 + sigma ||d||^3],
    which must be <= 0 (up to rounding) wherever the certificate applies.
    """
    h = linalg.as_vector(h, dim=flow.problem.dim)
    x_t = linalg.as_vector(x_t, dim=flow.problem.dim)
    d = h - x_t
    nd = float(np.linalg.norm(d))
    alpha, gamma, sigma = flow.margin_coefficients(t)
    lhs = float(flow.rhs(h, t) @ d)
    return lhs - (alpha * nd - gamma * nd**2 + sigma * nd**3)


def projector_contraction(problem, anchor, eps_values):
    """sup over eps of ||P_eps(xi) (T(xi)+eps I)^{-1} (T(y) - T(xi))||.

    The frozen-point perturbation constant entering the projector flow's
    damping coefficient (must be < 1/2). Needs the known solution y; only
    benchmarks can evaluate it.
    """
    if problem.known_solution is None:
        raise MissingConstantsError("projector contraction needs a known solution")
    anchor = linalg.as_vector(anchor, dim=problem.dim)
    t_anchor = linalg.gram_map(problem.eval_jacobian(anchor))
    t_sol = linalg.gram_map(problem.eval_jacobian(problem.known_solution))
    w, u = linalg.eig_sym(t_anchor)
    delta = u.T @ (t_sol - t_anchor)
    best = 0.0
    for eps in np.asarray(eps_values, dtype=float):
        if not eps > 0.0:
            raise ValueError("eps grid must be positive")
        weights = np.where(w >= eps, 1.0 / (w + eps), 0.0)
        best = max(best, float(np.linalg.norm(u @ (weights[:, None] * delta), 2)))
    return best
