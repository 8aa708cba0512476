"""Built-in benchmark problems with known solutions and certified bounds.

Each benchmark records the operator bounds n1, n2 valid on the stated box
(which contains the start, the solution, and the tube the flows travel in),
an expected distance-vs-eps rate exponent where one is known, and the source
element v (with z0 - y = F'(y) v) where the start was built sourcewise.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .problem import Problem
from .schedules import PowerSchedule, check_regularized_newton


@dataclass(frozen=True)
class Benchmark:
    problem: Problem
    box: float  # bounds certified on the cube |x_i| <= box
    rate_exponent: float | None = None
    source_element: tuple | None = None
    source_exponent: float | None = None
    notes: str = ""

    @property
    def name(self):
        return self.problem.name


def _scalar_linear():
    return Benchmark(
        problem=Problem(
            dim=1,
            f=lambda x: x.copy(),
            jacobian=lambda x: np.array([[1.0]]),
            z0=[1.0],
            n1=1.0,
            n2=0.0,
            known_solution=[0.0],
            monotone=True,
            name="scalar-linear",
        ),
        box=2.0,
        rate_exponent=1.0,
        notes="well-posed scalar identity; tracking is exact up to solver noise",
    )


def _odd_power(m):
    def f(x):
        return np.sign(x) * np.abs(x) ** m

    def jac(x):
        return np.diag(m * np.abs(x) ** (m - 1.0))

    return f, jac


def _scalar_power(m=3):
    m = float(m)
    if m < 2 or m != int(m):
        raise ConfigError("scalar-power-m needs an integer m >= 2")
    f, jac = _odd_power(m)
    box = 2.0
    return Benchmark(
        problem=Problem(
            dim=1,
            f=f,
            jacobian=jac,
            z0=[1.0],
            n1=m * box ** (m - 1.0),
            n2=m * (m - 1.0) * box ** (m - 2.0),
            known_solution=[0.0],
            monotone=True,
            name=f"scalar-power-{int(m)}",
        ),
        box=box,
        rate_exponent=1.0 / m,
        notes="sign(x)|x|^m: root of multiplicity m at 0, dist ~ eps^(1/m)",
    )


def _scalar_cubic():
    bench = _scalar_power(3)
    prob = bench.problem
    return Benchmark(
        problem=Problem(
            dim=1,
            f=prob.f,
            jacobian=prob.jacobian,
            z0=[1.0],
            n1=prob.n1,
            n2=prob.n2,
            known_solution=[0.0],
            monotone=True,
            name="scalar-cubic",
        ),
        box=bench.box,
        rate_exponent=1.0 / 3.0,
        notes="x^3: derivative vanishes at the root, mildly ill-posed",
    )


_B2 = np.array([[1.0, 0.5], [-0.5, 0.3]])


def _monotone_2d():
    def f(x):
        return _B2 @ x + 0.5 * x**3

    def jac(x):
        return _B2 + np.diag(1.5 * x**2)

    box = 1.5
    return Benchmark(
        problem=Problem(
            dim=2,
            f=f,
            jacobian=jac,
            z0=[0.6, 0.8],
            n1=float(np.linalg.norm(_B2, 2) + 1.5 * box**2),
            n2=3.0 * box,
            known_solution=[0.0, 0.0],
            monotone=True,
            name="monotone-2d",
        ),
        box=box,
        notes="nonsymmetric monotone map with cubic saturation",
    )


def _rank_deficient_2d():
    a = np.array([[1.0, -1.0], [-1.0, 1.0]])

    def f(x):
        return a @ x

    def jac(x):
        return a.copy()

    return Benchmark(
        problem=Problem(
            dim=2,
            f=f,
            jacobian=jac,
            z0=[1.0, 2.0],
            n1=2.0,
            n2=0.0,
            known_solution=[1.5, 1.5],
            monotone=True,
            name="rank-deficient-2d",
        ),
        box=3.0,
        notes="derivative singular everywhere; classical Newton flows must fail, "
        "regularized flows converge to the solution nearest the start",
    )


def _sourcewise_2d():
    a = np.diag([1.0, 0.1])

    def f(x):
        return a @ x + 0.1 * x**3

    def jac(x):
        return a + np.diag(0.3 * x**2)

    box = 2.0
    # z0 = F'(0) v with v = (0.15, 0.15). The source norm must be small for
    # the sourcewise damping margin: asymptotically gamma -> 1 - ||v|| n2
    # (1 + zf/2), so ||v|| = 0.212 leaves margin ~0.68, while ||v|| ~ 0.7
    # (a start twice as far out) already drives it negative. ||v|| < 2/n2
    # also keeps the rate-bound constant finite.
    v = (0.15, 0.15)
    return Benchmark(
        problem=Problem(
            dim=2,
            f=f,
            jacobian=jac,
            z0=[0.15, 0.015],
            n1=1.0 + 0.3 * box**2,
            n2=0.6 * box,
            known_solution=[0.0, 0.0],
            monotone=True,
            name="sourcewise-2d",
        ),
        box=box,
        rate_exponent=1.0,
        source_element=v,
        source_exponent=0.5,
        notes="start offset lies in the range of F'(y) = T(y)^(1/2), so the "
        "linear-in-eps distance bound applies",
    )


_REGISTRY = {
    "scalar-linear": _scalar_linear,
    "scalar-cubic": _scalar_cubic,
    "scalar-power-m": _scalar_power,
    "monotone-2d": _monotone_2d,
    "rank-deficient-2d": _rank_deficient_2d,
    "sourcewise-2d": _sourcewise_2d,
}


def benchmark_names():
    return sorted(_REGISTRY)


def get_benchmark(name, m=None):
    """Look up a built-in benchmark; `m` only applies to scalar-power-m."""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ConfigError(
            f"unknown benchmark {name!r}; available: {', '.join(benchmark_names())}"
        ) from None
    if name == "scalar-power-m":
        return factory(3 if m is None else m)
    if m is not None:
        raise ConfigError(f"benchmark {name!r} takes no exponent parameter")
    return factory()


def admissible_power_schedule(bench, nu=0.5, t0=5.0, slack=1.1):
    """Power schedule scaled so the regularized Newton check passes for `bench`.

    Exploits the invariance of decay_sup under scaling of eps: pick eps(0)
    above the size threshold by the factor `slack`.
    """
    d = nu / t0
    if not d < 1.0:
        raise ValueError("need nu/t0 < 1")
    dist0 = bench.problem.dist0()
    if dist0 is None:
        raise ValueError("benchmark has no recorded solution")
    n2 = bench.problem.n2
    threshold = n2 * dist0 / (1.0 - d) * max(1.0, 2.0 * d / (1.0 - d))
    eps_at_0 = max(threshold * slack, 0.5)
    sched = PowerSchedule(eps0=eps_at_0 * t0**nu, t0=t0, nu=nu)
    report = check_regularized_newton(sched, n2, dist0)
    if not report.passed:
        raise AssertionError(f"internal: scaled schedule still inadmissible: {report.reason}")
    return sched
