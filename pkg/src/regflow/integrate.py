"""Adaptive integration of flow trajectories with monitor columns.

The stepper is an explicit embedded Runge-Kutta 4(5) pair (Dormand-Prince
coefficients, first-same-as-last) with a PI step-size controller: safety
0.9, exponents 0.7 and 0.4 divided by the order. Integration is strictly
sequential and allocation-stable, so repeated runs with the same inputs are
bit-identical.

At every accepted step the integrator records monitor columns: the operator
residual ||F(z)||, eps(t), the envelope bound 1/mu(t) when an envelope is
attached, the distance to the auxiliary solution when tracking is on, and
the distance to the known solution when one is recorded.
"""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import flows as _flows
from .errors import MissingMonitorError

REACHED_RESIDUAL = "reached_residual"
REACHED_TMAX = "reached_tmax"
STEP_UNDERFLOW = "step_underflow"
FLOW_ERROR = "flow_error"
MAX_STEPS = "max_steps"

TRAJECTORY_SCHEMA = "dsm-traj/1"

# Dormand-Prince 5(4) tableau; the 5th-order weights equal the last stage row.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_ERR = np.array(
    [
        71 / 57600,
        0.0,
        -71 / 16695,
        71 / 1920,
        -17253 / 339200,
        22 / 525,
        -1 / 40,
    ]
)


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    t_max: float = 1e4
    residual_stop: float = 1e-9
    h_init: float = 1e-3
    h_min: float = 1e-14
    h_max: float = 100.0
    max_steps: int = 200000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not (0 < self.h_min <= self.h_init <= self.h_max):
            raise ValueError("need 0 < h_min <= h_init <= h_max")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")


@dataclass
class Trajectory:
    """Accepted-step samples of one integration run.

    Columns that were never recorded are None; recorded columns may contain
    NaN where a monitor failed at a single step.
    """

    t: np.ndarray
    z: np.ndarray
    status: str
    residual: np.ndarray | None = None
    eps: np.ndarray | None = None
    envelope: np.ndarray | None = None
    dist_aux: np.ndarray | None = None
    dist_sol: np.ndarray | None = None
    error: str | None = None
    meta: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.z.shape[1]

    def final_state(self):
        return self.z[-1].copy()

    def _columns(self):
        cols = [("t", self.t)]
        cols += [(f"z_{i}", self.z[:, i]) for i in range(self.dim)]
        for name in ("residual", "eps", "envelope", "dist_aux", "dist_sol"):
            vals = getattr(self, name)
            if vals is not None:
                cols.append((name, vals))
        return cols

    def to_csv(self, path):
        cols = self._columns()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([name for name, _ in cols])
            for k in range(len(self.t)):
                writer.writerow([f"{vals[k]:.17g}" for _, vals in cols])

    def to_json(self, path):
        cols = self._columns()
        rows = [
            [None if math.isnan(float(vals[k])) else float(vals[k]) for _, vals in cols]
            for k in range(len(self.t))
        ]
        doc = {
            "schema": TRAJECTORY_SCHEMA,
            "status": self.status,
            "error": self.error,
            "dim": self.dim,
            "columns": [name for name, _ in cols],
            "rows": rows,
            "meta": self.meta,
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")


def load_trajectory_json(path):
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema") != TRAJECTORY_SCHEMA:
        raise ValueError(f"not a {TRAJECTORY_SCHEMA} document")
    return doc


def envelope_violations(traj):
    """Samples where the monitored distance reaches or exceeds the envelope.

    Returns a list of (t, dist - bound) with dist >= bound (strict
    certificate: equality already counts as a violation).
    """
    if traj.envelope is None:
        raise MissingMonitorError("trajectory has no envelope column")
    target = traj.meta.get("envelope_target", "aux")
    dist = traj.dist_aux if target == "aux" else traj.dist_sol
    if dist is None:
        raise MissingMonitorError(f"trajectory has no dist_{target} column")
    out = []
    for k in range(len(traj.t)):
        if not math.isnan(dist[k]) and dist[k] >= traj.envelope[k]:
            out.append((float(traj.t[k]), float(dist[k] - traj.envelope[k])))
    return out


def _error_norm(err, y_old, y_new, cfg):
    scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y_old), np.abs(y_new))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def integrate(flow, cfg=None, *, envelope=None, envelope_target="aux", track_auxiliary=False):
    """Integrate dz/dt = flow.rhs(z, t) from flow.start.

    Stops when the operator residual drops to cfg.residual_stop (status
    reached_residual), at cfg.t_max (reached_tmax), when the step size
    underflows (step_underflow), when the step budget is exhausted
    (max_steps), or when the flow raises (flow_error; the exception text is
    kept and the partial trajectory returned).
    """
    cfg = cfg or IntegratorConfig()
    z = np.array(flow.start, dtype=float)
    schedule = getattr(flow, "schedule", None)
    problem = getattr(flow, "problem", None)
    resid_fn = flow.residual if callable(getattr(flow, "residual", None)) else None
    known = problem.known_solution if problem is not None else None
    if track_auxiliary and (schedule is None or problem is None):
        raise ValueError("auxiliary tracking needs a regularized flow over a problem")

    ts, zs = [], []
    residuals = [] if resid_fn else None
    eps_col = [] if schedule is not None else None
    env_col = [] if envelope is not None else None
    aux_col = [] if track_auxiliary else None
    sol_col = [] if known is not None else None
    aux_state = {"warm": None}

    def record(t, zval):
        ts.append(t)
        zs.append(zval.copy())
        if residuals is not None:
            residuals.append(resid_fn(zval))
        if eps_col is not None:
            eps_col.append(float(schedule.eps(t)))
        if env_col is not None:
            env_col.append(float(envelope.bound(t)))
        if aux_col is not None:
            try:
                aux = _flows.auxiliary_solution(
                    problem, float(schedule.eps(t)), warm_start=aux_state["warm"]
                )
                aux_state["warm"] = aux
                aux_col.append(float(np.linalg.norm(zval - aux)))
            except Exception:
                aux_col.append(math.nan)
        if sol_col is not None:
            sol_col.append(float(np.linalg.norm(zval - known)))

    def build(status, error=None):
        meta = {
            "flow": getattr(flow, "kind", type(flow).__name__),
            "schedule": schedule.describe() if schedule is not None else None,
            "envelope_target": envelope_target if envelope is not None else None,
            "residual_stop": cfg.residual_stop if resid_fn else None,
            "t_max": cfg.t_max,
        }
        return Trajectory(
            t=np.array(ts),
            z=np.array(zs),
            status=status,
            residual=np.array(residuals) if residuals is not None else None,
            eps=np.array(eps_col) if eps_col is not None else None,
            envelope=np.array(env_col) if env_col is not None else None,
            dist_aux=np.array(aux_col) if aux_col is not None else None,
            dist_sol=np.array(sol_col) if sol_col is not None else None,
            error=error,
            meta=meta,
        )

    t = 0.0
    record(t, z)
    if resid_fn and residuals[-1] <= cfg.residual_stop:
        return build(REACHED_RESIDUAL)

    stages = [np.empty_like(z) for _ in range(7)]
    try:
        stages[0] = np.asarray(flow.rhs(z, t), dtype=float)
    except Exception as exc:  # noqa: BLE001 - flow errors become a status
        return build(FLOW_ERROR, error=f"t=0: {exc}")

    h = min(cfg.h_init, cfg.t_max)
    err_prev = 1.0
    steps = 0
    while True:
        if steps >= cfg.max_steps:
            return build(MAX_STEPS)
        steps += 1
        h = min(h, cfg.h_max, cfg.t_max - t)
        try:
            for i in range(1, 7):
                yi = z + h * (np.stack(stages[:i], axis=0).T @ _A[i])
                stages[i] = np.asarray(flow.rhs(yi, t + _C[i] * h), dtype=float)
        except Exception as exc:  # noqa: BLE001
            return build(FLOW_ERROR, error=f"t={t:.6g}: {exc}")

        k_mat = np.stack(stages, axis=0).T
        z_new = z + h * (k_mat @ _B5)
        err_vec = h * (k_mat @ _ERR)
        if np.all(np.isfinite(z_new)) and np.all(np.isfinite(err_vec)):
            err = _error_norm(err_vec, z, z_new, cfg)
        else:
            err = math.inf

        if err <= 1.0:
            t = t + h
            z = z_new
            stages[0] = stages[6].copy()  # first-same-as-last
            record(t, z)
            if resid_fn and residuals[-1] <= cfg.residual_stop:
                return build(REACHED_RESIDUAL)
            if t >= cfg.t_max * (1.0 - 1e-14):
                return build(REACHED_TMAX)
            if err == 0.0:
                factor = 5.0
            else:
                factor = 0.9 * err ** (-0.7 / 5.0) * err_prev ** (0.4 / 5.0)
            h *= min(5.0, max(0.2, factor))
            err_prev = max(err, 1e-4)
        else:
            if math.isinf(err):
                h *= 0.1
            else:
                h *= min(0.9, max(0.1, 0.9 * err ** (-0.2)))
        if h < cfg.h_min:
            return build(STEP_UNDERFLOW)


class OdeSystem:
    """Adapter exposing a plain callable rhs(t, u) as an integrable flow."""

    kind = "ode-system"
    schedule = None
    problem = None
    residual = None

    def __init__(self, rhs, start):
        self._rhs = rhs
        self.start = np.atleast_1d(np.asarray(start, dtype=float))

    def rhs(self, h, t):
        return np.atleast_1d(np.asarray(self._rhs(t, h), dtype=float))
