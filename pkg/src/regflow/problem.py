"""Problem container: the equation F(z) = 0 on a finite-dimensional space.

A Problem bundles the operator, its derivative (analytic, or a central
difference fallback), the start point, the optional known solution used by
benchmark diagnostics, and optional operator bounds:

    n1 >= sup ||F'(x)||,   n2 >= sup ||F''(x)||

over the region the flows visit. The bounds enter every admissibility check;
when absent they can be estimated on a user-given box (flagged heuristic).
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import linalg


@dataclass(frozen=True)
class Problem:
    dim: int
    f: Callable
    z0: np.ndarray
    jacobian: Callable | None = None
    n1: float | None = None
    n2: float | None = None
    known_solution: np.ndarray | None = None
    monotone: bool = False
    name: str = ""

    def __post_init__(self):
        z0 = linalg.as_vector(self.z0, dim=self.dim)
        z0.flags.writeable = False
        object.__setattr__(self, "z0", z0)
        if self.known_solution is not None:
            y = linalg.as_vector(self.known_solution, dim=self.dim)
            y.flags.writeable = False
            object.__setattr__(self, "known_solution", y)
        for bound in (self.n1, self.n2):
            if bound is not None and bound < 0:
                raise ValueError("operator bounds must be nonnegative")

    def eval_f(self, x):
        return linalg.as_vector(self.f(linalg.as_vector(x, dim=self.dim)), dim=self.dim)

    def eval_jacobian(self, x):
        x = linalg.as_vector(x, dim=self.dim)
        if self.jacobian is not None:
            return linalg.as_matrix(self.jacobian(x), dim=self.dim)
        return linalg.central_difference_jacobian(self.f, x)

    def residual(self, x):
        return float(np.linalg.norm(self.eval_f(x)))

    def dist0(self):
        """||z0 - known_solution||, or None when no solution is recorded."""
        if self.known_solution is None:
            return None
        return float(np.linalg.norm(self.z0 - self.known_solution))


@dataclass(frozen=True)
class BoundsEstimate:
    """Sampled operator bounds; heuristic, not certified."""

    n1: float
    n2: float
    samples: int
    heuristic: bool = True


def estimate_bounds(problem, lower, upper, samples=48, directions=6, seed=12345):
    """Estimate n1 and n2 by sampling a box.

    n1 samples the spectral norm of the Jacobian; n2 samples the norm of the
    directional Jacobian derivative (J(x+h u) - J(x-h u)) / 2h over random
    unit directions u. The generator seed is fixed so runs are reproducible.
    """
    lower = linalg.as_vector(lower, dim=problem.dim)
    upper = linalg.as_vector(upper, dim=problem.dim)
    if np.any(upper < lower):
        raise ValueError("box bounds are inverted")
    rng = np.random.default_rng(seed)
    n1 = 0.0
    n2 = 0.0
    h = 1e-5
    for _ in range(samples):
        x = lower + rng.random(problem.dim) * (upper - lower)
        jac = problem.eval_jacobian(x)
        n1 = max(n1, float(np.linalg.norm(jac, 2)))
        for _ in range(directions):
            u = rng.standard_normal(problem.dim)
            u /= np.linalg.norm(u)
            dj = (
                problem.eval_jacobian(x + h * u) - problem.eval_jacobian(x - h * u)
            ) / (2.0 * h)
            n2 = max(n2, float(np.linalg.norm(dj, 2)))
    return BoundsEstimate(n1=n1, n2=n2, samples=samples)
