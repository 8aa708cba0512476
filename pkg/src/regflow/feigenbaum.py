"""Computation of the period-doubling rescaling constants alpha_z.

The fixed-point equation g(x) = -alpha g(g(x/alpha)) with g(0) = 1 and
alpha = -1/g(1) is discretized by collocation: g is an even polynomial
1 + sum_i q_i |x|^{z i} and the equation is imposed at n nodes in (0, 1].
For small z the nodes are uniform in x; for larger z they are placed
uniformly in |x|^z (x_j = (j/n)^{1/z}), since plain uniform nodes then
bunch all powers |x_j|^{zi} near zero and the system degenerates. The
system F(q) = 0 is severely ill-conditioned either way (the condition
number grows roughly tenfold per unit increase of z), which makes it a
natural target for the regularized flows.

The solve strategy is dimension continuation: solve at n = 1, use the
solution padded with a zero as the seed for n = 2, and keep increasing n
while the collocation discrepancy on a refined grid improves. Across z the
n = 1 solution of the previous z seeds the next one.

Note the whole hyperplane sum(q) = -1 consists of exact roots (g(1) = 0
makes every collocation residual vanish identically), so candidate
solutions are screened by a degeneracy guard on |g(1)| and by concavity of
g on [0, 1].
"""

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import NoConcaveSolutionError, NoConvergenceError
from .flows import make_flow
from .integrate import REACHED_RESIDUAL, REACHED_TMAX, IntegratorConfig, integrate
from .problem import Problem
from .schedules import ExpSchedule

EXPERIMENT_SCHEMA = "dsm-feig/1"

DEGENERACY_FLOOR = 1e-12

#: Largest |g(1)| still treated as a landing on the degenerate branch. On the
#: physical branch |g(1)| = 1/|alpha| >= 0.39 for every z >= 2, while a flow
#: that falls onto the g(1) = 0 hyperplane stops within convergence tolerance
#: of it (|g(1)| ~ residual_stop), so anything below this is the bad branch.
DEGENERATE_BRANCH_TOL = 1e-6

METHODS = ("newton", "gn-sourcewise")


class FeigenbaumSystem:
    """Collocation system for the rescaling equation at exponent z, size n.

    partition: "uniform" nodes j/n, "power" nodes (j/n)^{1/z}, or "auto"
    (uniform up to z = 3, power beyond, where node clustering matters).
    """

    def __init__(self, z, n, partition="auto"):
        if z < 2:
            raise ValueError("exponent z must be >= 2")
        if n < 1:
            raise ValueError("need at least one collocation node")
        self.z = float(z)
        self.n = int(n)
        if partition == "auto":
            partition = "uniform" if self.z <= 3 else "power"
        if partition not in ("uniform", "power"):
            raise ValueError("partition must be 'auto', 'uniform' or 'power'")
        self.partition = partition
        j = np.arange(1, self.n + 1, dtype=float)
        frac = j / self.n
        self.nodes = frac if partition == "uniform" else frac ** (1.0 / self.z)
        self.exponents = self.z * j

    def poly(self, q, x):
        """g(x) = 1 + sum_i q_i |x|^{z i} for scalar or array x."""
        q = np.asarray(q, dtype=float)
        ax = np.abs(np.asarray(x, dtype=float))
        return 1.0 + ax[..., None] ** self.exponents @ q

    def eval(self, q):
        """Collocation residuals F_j(q) = S g(x_j) - g(g(S x_j)), S = g(1).

        High powers overflow for transient states far off the solution
        manifold; the resulting inf/nan residuals are rejected by the step
        controller, so the overflow itself is not worth a warning.
        """
        q = np.asarray(q, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            s = 1.0 + q.sum()
            g_x = self.poly(q, self.nodes)
            inner = self.poly(q, s * self.nodes)  # A_j = g(S x_j)
            outer = 1.0 + np.abs(inner)[:, None] ** self.exponents @ q
            return s * g_x - outer

    def jacobian(self, q):
        q = np.asarray(q, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            s = 1.0 + q.sum()
            x = self.nodes
            e = self.exponents
            qe = q * e

            x_pow = x[:, None] ** e
            g_x = 1.0 + x_pow @ q
            u = s * x
            au = np.abs(u)
            u_pow = au[:, None] ** e
            inner = 1.0 + u_pow @ q
            a_abs = np.abs(inner)
            a_pow = a_abs[:, None] ** e

            # d g(A)/dA and d A/dq_l; |.|^{zi} derivative zi |.|^{zi-1} sign(.)
            outer_slope = (a_abs[:, None] ** (e - 1.0) @ qe) * np.sign(inner)
            inner_slope = (au[:, None] ** (e - 1.0) @ qe) * np.sign(u)
            a_partial = u_pow + inner_slope[:, None] * x[:, None]

            return (
                g_x[:, None]
                + s * x_pow
                - a_pow
                - outer_slope[:, None] * a_partial
            )

    def problem(self, seed):
        seed = np.asarray(seed, dtype=float)
        if seed.shape != (self.n,):
            raise ValueError(f"seed must have shape ({self.n},)")
        return Problem(
            dim=self.n,
            f=self.eval,
            z0=seed,
            jacobian=self.jacobian,
            name=f"feigenbaum-z{self.z:g}-n{self.n}",
        )

    def discrepancy(self, q, refine=4):
        """Max collocation residual on a grid refined by the given factor."""
        m = refine * self.n
        frac = np.arange(1, m + 1, dtype=float) / m
        grid = frac if self.partition == "uniform" else frac ** (1.0 / self.z)
        q = np.asarray(q, dtype=float)
        s = 1.0 + q.sum()
        pows = grid[:, None] ** self.exponents
        g_x = 1.0 + pows @ q
        inner = self.poly(q, s * grid)
        outer = 1.0 + np.abs(inner)[:, None] ** self.exponents @ q
        return float(np.max(np.abs(s * g_x - outer)))


def eval_system(system, q):
    """Collocation residual vector F(q) of the given system."""
    return system.eval(q)


def eval_jacobian(system, q):
    """Analytic Jacobian dF/dq of the given system."""
    return system.jacobian(q)


def seed_roots_quintic():
    """Negative roots of q^5 + 3q^4 + 3q^3 + 3q^2 + 2q - 1, ascending.

    The single-node system at z = 2 factors as q (q + 1) p(q) = 0 with this
    quintic p; its negative roots are the candidate seeds (q = 0 is the
    trivial fixed point and q = -1 is degenerate). Roots are found by sign
    scan plus bisection, accurate to 1e-12.
    """
    p = lambda q: ((((q + 3.0) * q + 3.0) * q + 3.0) * q + 2.0) * q - 1.0
    roots = []
    grid = np.linspace(-3.0, 0.0, 3001)
    vals = p(grid)
    for k in range(len(grid) - 1):
        if vals[k] == 0.0:
            roots.append(float(grid[k]))
            continue
        if vals[k] * vals[k + 1] < 0.0:
            lo, hi = float(grid[k]), float(grid[k + 1])
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if p(lo) * p(mid) <= 0.0:
                    hi = mid
                else:
                    lo = mid
            roots.append(0.5 * (lo + hi))
    return sorted(roots)


def alpha_from_coefficients(q):
    """Rescaling constant -1/g(1) = -1/(1 + sum q); positive at solutions."""
    s = 1.0 + float(np.sum(q))
    if abs(s) < DEGENERACY_FLOOR:
        raise ZeroDivisionError("degenerate solution: g(1) = 0")
    return -1.0 / s


def is_concave(q, z, points=200, tol=1e-8):
    """Concavity of g on [0, 1] via second differences (g is even, so this
    covers [-1, 1])."""
    sys = FeigenbaumSystem(z, len(np.atleast_1d(q)))
    xs = np.linspace(0.0, 1.0, points)
    g = sys.poly(np.atleast_1d(q), xs)
    return bool(np.all(np.diff(g, 2) <= tol))


def default_schedule():
    # The collocation operator is not monotone: F' carries small negative
    # eigenvalues (down to ~ -6e-7 near the deep-level roots), and wherever
    # eps(t) sweeps through -lambda the shifted matrix F' + eps I is
    # singular and the flow blows up. Starting eps below that band keeps
    # every resonance out of the path while still flooring the conditioning
    # of the solves; geometric decay then drops it out of the way at an
    # O(1) rate the flows can follow.
    return ExpSchedule(eps0=1e-8, nu=0.5)


def default_config():
    # Loose per-step tolerances on purpose: the flows are contractive, so
    # endpoint accuracy is set by residual_stop, not by step error. Tight
    # tolerances make the integrator resolve the rounding noise of the
    # ill-conditioned solves (amplified by 1/(sigma^2 + eps) on the
    # Gauss-Newton field) and stall in microscopic steps.
    return IntegratorConfig(
        rel_tol=1e-5,
        abs_tol=1e-8,
        residual_stop=1e-10,
        t_max=150.0,
        max_steps=120000,
    )


@dataclass
class LevelResult:
    n: int
    q: np.ndarray
    discrepancy: float
    status: str
    concave: bool


def solve_level(z, n, seed, method="newton", schedule=None, cfg=None):
    """Drive one collocation level to a root with the requested flow."""
    system = FeigenbaumSystem(z, n)
    problem = system.problem(seed)
    flow = make_flow(method, problem, schedule or default_schedule())
    traj = integrate(flow, cfg or default_config())
    if traj.status not in (REACHED_RESIDUAL, REACHED_TMAX):
        raise NoConvergenceError(
            f"level n={n} at z={z:g} did not converge: {traj.status}"
            + (f" ({traj.error})" if traj.error else "")
        )
    q = traj.final_state()
    return LevelResult(
        n=n,
        q=q,
        discrepancy=system.discrepancy(q),
        status=traj.status,
        concave=is_concave(q, z),
    )


@dataclass
class ContinuationResult:
    z: float
    method: str
    q: np.ndarray
    n_final: int
    discrepancy: float
    concave: bool
    levels: list

    @property
    def alpha(self):
        """1/g(1), negative at physical solutions (the sign convention used
        for tabulated sweeps); the positive rescaling constant is -alpha."""
        return -alpha_from_coefficients(self.q)


#: Non-improving levels tolerated before the dimension chain stops. The
#: discrepancy does not decay monotonically (a level can be worse than its
#: predecessor and the next one much better), so a single bad level must not
#: end the chain.
STALL_PATIENCE = 2


def continuation_solve(z, n_max=12, method="newton", schedule=None, seed_n1=None, cfg=None):
    """Increase the collocation dimension while the discrepancy improves.

    Every level must land off the degenerate g(1) = 0 hyperplane; a level
    that fails to converge, or STALL_PATIENCE consecutive levels that fail
    to improve the refined-grid discrepancy, stop the chain, and the best
    level seen is returned. Without an explicit seed the n = 1 start is the
    concave quintic root; concavity of each level is recorded (the boundary
    layer of a truncated ansatz may dip convex even on the correct branch),
    so branch selection rests on the seed, not on rejecting levels.
    """
    if seed_n1 is None:
        seed_n1 = seed_roots_quintic()[-1]
    level = solve_level(z, 1, np.atleast_1d(seed_n1), method, schedule, cfg)
    _screen_degenerate(level.q, z)
    best = level
    history = [level]
    stalls = 0
    prev = best
    for n in range(2, n_max + 1):
        seed = np.concatenate([prev.q, [0.0]])
        try:
            level = solve_level(z, n, seed, method, schedule, cfg)
            _screen_degenerate(level.q, z)
        except (NoConvergenceError, NoConcaveSolutionError):
            break
        history.append(level)
        prev = level
        if level.discrepancy < best.discrepancy:
            best = level
            stalls = 0
        else:
            stalls += 1
            if stalls >= STALL_PATIENCE:
                break
    return ContinuationResult(
        z=float(z),
        method=method,
        q=best.q,
        n_final=best.n,
        discrepancy=best.discrepancy,
        concave=best.concave,
        levels=history,
    )


def _screen_degenerate(q, z):
    s = 1.0 + float(np.sum(q))
    if abs(s) < DEGENERATE_BRANCH_TOL:
        raise NoConcaveSolutionError(
            f"level at z={z:g} landed on the degenerate branch g(1) = 0 "
            "(the whole hyperplane solves the system); reseed required"
        )


def accepted_digits(a, b):
    """Significant digits on which two values agree (0 if signs differ)."""
    if a == b:
        return 12
    if a * b < 0.0:
        return 0
    rel = abs(a - b) / max(abs(a), abs(b))
    if rel <= 0.0:
        return 12
    return max(0, min(12, int(math.floor(-math.log10(rel)))))


def _chain_seeds(z_values, method, schedule, cfg):
    """n = 1 solutions for every integer exponent from 2 up to max(z_values).

    The chain is sequential by construction: each z is seeded with the
    previous solution. Returns {z: scalar q}.
    """
    roots = seed_roots_quintic()
    prev = roots[-1]  # the concave branch at z = 2
    seeds = {}
    top = int(max(z_values))
    for z in range(2, top + 1):
        if z == 2:
            q1 = prev  # exact root of the reduced scalar equation
        else:
            q1 = float(
                solve_level(z, 1, np.array([prev]), method, schedule, cfg).q[0]
            )
        seeds[z] = q1
        prev = q1
    return seeds


def _run_one(args):
    z, method, seed_n1, schedule, cfg, n_max = args
    start = time.perf_counter()
    try:
        result = continuation_solve(z, n_max, method, schedule, seed_n1, cfg)
        error = None
    except Exception as exc:  # noqa: BLE001 - sweeps record per-job failures
        result = None
        error = str(exc)
    return z, method, result, error, time.perf_counter() - start


def run_experiment(
    z_values,
    methods=METHODS,
    schedule=None,
    cfg=None,
    n_max=12,
    workers=1,
):
    """Sweep the exponent range with every requested flow.

    Returns a report dict (schema dsm-feig/1). Per z the report carries the
    per-method alpha values, the count of digits on which the methods agree
    (the accepted accuracy), and per-method diagnostics. Failures are
    recorded per (z, method) and do not abort the sweep.
    """
    z_values = sorted(int(z) for z in z_values)
    if not z_values or z_values[0] < 2:
        raise ValueError("z values must be integers >= 2")
    schedule = schedule or default_schedule()
    cfg = cfg or default_config()

    jobs = []
    failures = []
    for method in methods:
        try:
            seeds = _chain_seeds(z_values, method, schedule, cfg)
        except Exception as exc:  # noqa: BLE001 - record, then try other methods
            failures.append({"z": None, "method": method, "error": str(exc)})
            continue
        jobs += [(z, method, seeds[z], schedule, cfg, n_max) for z in z_values]

    outcomes = {}
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_run_one, jobs))
    else:
        raw = [_run_one(job) for job in jobs]
    for z, method, result, error, elapsed in raw:
        if result is None:
            failures.append({"z": z, "method": method, "error": error})
        else:
            outcomes[(z, method)] = (result, elapsed)

    rows = []
    for z in z_values:
        present = {
            m: outcomes[(z, m)] for m in methods if (z, m) in outcomes
        }
        if not present:
            continue
        alphas = {m: res.alpha for m, (res, _) in present.items()}
        values = list(alphas.values())
        digits = (
            min(
                accepted_digits(values[i], values[j])
                for i in range(len(values))
                for j in range(i + 1, len(values))
            )
            if len(values) > 1
            else 0
        )
        # the row's headline alpha comes from the best-resolved run (smallest
        # final discrepancy); the per-method values stay alongside it
        lead = min(present, key=lambda m: present[m][0].discrepancy)
        rows.append(
            {
                "z": z,
                "alpha": alphas[lead],
                "digits": digits,
                "n_final": present[lead][0].n_final,
                "runtime_s": sum(v[1] for v in present.values()),
                "concave": present[lead][0].concave,
                "alpha_by_method": alphas,
                "n_final_by_method": {m: res.n_final for m, (res, _) in present.items()},
                "discrepancy_by_method": {
                    m: res.discrepancy for m, (res, _) in present.items()
                },
                "levels_by_method": {
                    m: [
                        {
                            "n": lev.n,
                            "discrepancy": lev.discrepancy,
                            "concave": lev.concave,
                        }
                        for lev in res.levels
                    ]
                    for m, (res, _) in present.items()
                },
                "coefficients_by_method": {
                    m: [float(v) for v in res.q] for m, (res, _) in present.items()
                },
                "scaling_constant": -alphas[lead],
            }
        )

    return {
        "schema": EXPERIMENT_SCHEMA,
        "methods": list(methods),
        "n_max": n_max,
        "schedule": schedule.describe(),
        "rows": rows,
        "failures": failures,
    }


def write_experiment_json(report, path):
    with open(path, "w") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
        fh.write("\n")


def write_experiment_csv(report, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["z", "alpha", "digits", "n_final", "runtime_s"])
        for row in report["rows"]:
            writer.writerow(
                [
                    row["z"],
                    f"{row['alpha']:.17g}",
                    row["digits"],
                    row["n_final"],
                    f"{row['runtime_s']:.6f}",
                ]
            )
