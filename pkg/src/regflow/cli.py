"""Command-line front end: config ingestion, orchestration, result files.

Commands read a flat INI config (one section per concern, unknown keys
rejected, flags override the file), print a schedule admissibility table
before any long computation, and write CSV/JSON results under the output
directory. For a fixed config every command is deterministic; wall-clock
runtime fields are the only bytes that differ between repeats.

Exit codes: 0 success (a run that merely reached t_max still counts),
2 config error or --strict with an inadmissible schedule, 3 flow failure,
4 every exponent of the alpha sweep failed, 5 an inequality scenario failed,
6 too few tail samples for a rate fit.
"""

import argparse
import configparser
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import feigenbaum as feig
from . import inequalities as ineq
from .benchmarks import admissible_power_schedule, benchmark_names, get_benchmark
from .errors import ConfigError, RegflowError
from .flows import auxiliary_solution, make_flow, projector_contraction
from .integrate import FLOW_ERROR, IntegratorConfig, envelope_violations, integrate
from .linalg import gram_map, spectral_projector
from .schedules import (
    ExpSchedule,
    LogSchedule,
    PowerSchedule,
    check_projector_gauss_newton,
    check_regularized_newton,
    check_regularized_simple,
    check_sourcewise_gauss_newton,
    mu_ode_envelope,
    newton_flow_envelope,
    sourcewise_envelope,
)

RATES_SCHEMA = "dsm-rates/1"

_CLASSICAL = ("classical-simple", "classical-newton", "classical-gauss-newton")
_REGULARIZED = ("simple", "newton", "gn-sourcewise", "gn-projector")

#: Which admissibility check gates which flow under --strict.
_CHECK_BY_METHOD = {
    "simple": "regularized-simple",
    "newton": "regularized-newton",
    "gn-sourcewise": "sourcewise-gauss-newton",
    "gn-projector": "projector-gauss-newton",
}

#: Recognized config keys per section, with their value parsers.
_SCHEMA = {
    "solve": {
        "benchmark": str,
        "method": str,
        "m": int,
        "zeta": float,
        "envelope": ("auto", "none"),
    },
    "schedule": {
        "kind": ("power", "log", "exp"),
        "eps0": float,
        "t0": float,
        "nu": float,
    },
    "integrator": {
        "rel_tol": float,
        "abs_tol": float,
        "t_max": float,
        "residual_stop": float,
        "h_init": float,
        "h_min": float,
        "h_max": float,
        "max_steps": int,
    },
    "feigenbaum": {
        "z": str,
        "n_max": int,
        "methods": str,
        "eps0": float,
        "nu": float,
        "residual_stop": float,
        "t_max": float,
    },
    "inequality": {"scenario": str},
    "rates": {"benchmark": str, "m": int, "nu": float, "t0": float, "t_max": float},
}


# ---------------------------------------------------------------------------
# Config handling


def read_config(path):
    """Parse and validate an INI config; returns {section: {key: raw string}}."""
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";")
    )
    try:
        loaded = parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    if not loaded:
        raise ConfigError(f"cannot read config file {path!r}")
    out = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(
                f"unknown config section [{section}]; known: "
                + ", ".join(sorted(_SCHEMA))
            )
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(
                    f"unknown key {key!r} in [{section}]; known: "
                    + ", ".join(sorted(_SCHEMA[section]))
                )
        out[section] = dict(parser[section])
    return out


def _get(cfg, section, key, default=None):
    raw = cfg.get(section, {}).get(key)
    if raw is None:
        return default
    spec = _SCHEMA[section][key]
    if isinstance(spec, tuple):
        if raw not in spec:
            raise ConfigError(f"[{section}] {key} must be one of: " + ", ".join(spec))
        return raw
    try:
        return spec(raw)
    except ValueError:
        raise ConfigError(
            f"[{section}] {key}: cannot parse {raw!r} as {spec.__name__}"
        ) from None


def _benchmark(cfg, args, section):
    name = args.seed_bench or _get(cfg, section, "benchmark")
    if name is None:
        name = "scalar-cubic" if section == "solve" else "scalar-power-m"
    m = _get(cfg, section, "m")
    return get_benchmark(name, m=m)


def build_schedule(cfg, bench=None):
    """Schedule from the [schedule] section, or an auto-scaled admissible
    power schedule for the benchmark when the section is absent."""
    section = cfg.get("schedule")
    if not section:
        if bench is None or bench.problem.dist0() is None:
            raise ConfigError("no [schedule] section and no benchmark to derive one from")
        return admissible_power_schedule(bench)
    kind = _get(cfg, "schedule", "kind")
    if kind is None:
        raise ConfigError("[schedule] needs kind = power, log or exp")
    allowed = {"power": {"eps0", "t0", "nu"}, "log": {"eps0", "t0"}, "exp": {"eps0", "nu"}}
    extra = set(section) - {"kind"} - allowed[kind]
    if extra:
        raise ConfigError(
            f"[schedule] kind={kind} does not take: " + ", ".join(sorted(extra))
        )
    try:
        if kind == "power":
            return PowerSchedule(
                eps0=_get(cfg, "schedule", "eps0", 1.0),
                t0=_get(cfg, "schedule", "t0", 5.0),
                nu=_get(cfg, "schedule", "nu", 0.5),
            )
        if kind == "log":
            return LogSchedule(
                eps0=_get(cfg, "schedule", "eps0", 1.0),
                t0=_get(cfg, "schedule", "t0", 3.0),
            )
        return ExpSchedule(
            eps0=_get(cfg, "schedule", "eps0", 1.0),
            nu=_get(cfg, "schedule", "nu", 0.5),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_integrator(cfg):
    fields = {}
    for key in _SCHEMA["integrator"]:
        value = _get(cfg, "integrator", key)
        if value is not None:
            fields[key] = value
    try:
        return IntegratorConfig(**fields)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# Admissibility pre-flight


def _projector_data(problem, schedule, probe_horizon=1e4):
    """(contraction, drift_sup) on a log-spaced eps range, or None."""
    if problem.known_solution is None or problem.jacobian is None:
        return None
    eps_hi = float(schedule.eps(0.0))
    eps_lo = min(eps_hi, float(schedule.eps(probe_horizon)))
    grid = np.geomspace(max(eps_lo, 1e-12), eps_hi, 33)
    contraction = projector_contraction(problem, problem.z0, grid)
    offset = problem.known_solution - problem.z0
    gram = gram_map(problem.eval_jacobian(problem.z0))
    drift = 0.0
    for eps in grid:
        proj = spectral_projector(gram, float(eps))
        removed = float(np.linalg.norm(proj @ offset - offset))
        drift = max(drift, removed / float(eps))
    return contraction, eps_hi * drift


def admissibility_rows(bench, schedule, zeta=None):
    """All four admissibility checks; None entries mean 'not evaluable'."""
    problem = bench.problem
    dist0 = problem.dist0()
    rows = [("regularized-simple", check_regularized_simple(schedule))]

    if problem.n2 is not None and dist0 is not None:
        rows.append(
            ("regularized-newton", check_regularized_newton(schedule, problem.n2, dist0))
        )
    else:
        rows.append(("regularized-newton", None))

    if (
        bench.source_element is not None
        and problem.n1 is not None
        and problem.n2 is not None
        and dist0 is not None
    ):
        v_norm = float(np.linalg.norm(np.asarray(bench.source_element, dtype=float)))
        zz = zeta if zeta is not None else (bench.source_exponent or 1.0)
        rows.append(
            (
                "sourcewise-gauss-newton",
                check_sourcewise_gauss_newton(
                    schedule, problem.n1, problem.n2, v_norm, zz, dist0
                ),
            )
        )
    else:
        rows.append(("sourcewise-gauss-newton", None))

    data = (
        _projector_data(problem, schedule)
        if problem.n1 is not None and problem.n2 is not None and dist0 is not None
        else None
    )
    if data is not None:
        contraction, drift_sup = data
        rows.append(
            (
                "projector-gauss-newton",
                check_projector_gauss_newton(
                    schedule, contraction, problem.n1, problem.n2, drift_sup, dist0
                ),
            )
        )
    else:
        rows.append(("projector-gauss-newton", None))
    return rows


def print_admissibility(bench, schedule, rows):
    print(f"benchmark {bench.name}; schedule {schedule.describe()}")
    print(f"{'check':<26} {'result':<7} detail")
    for name, rep in rows:
        if rep is None:
            print(f"{name:<26} {'skip':<7} missing bounds, solution or source data")
        elif rep.passed:
            detail = f"margin {rep.margin:.4g}" if math.isfinite(rep.margin) else ""
            print(f"{name:<26} {'pass':<7} {detail}")
        else:
            print(f"{name:<26} {'FAIL':<7} {rep.reason}")


# ---------------------------------------------------------------------------
# solve


def _auto_envelope(method, bench, schedule, zeta):
    """(envelope, target, track_aux) for the chosen flow, or (None, ., .).

    Envelopes are only attached when the matching admissibility check
    passes; an unmet certificate would just report spurious violations.
    """
    problem = bench.problem
    dist0 = problem.dist0()
    if method == "newton" and problem.n2 is not None and dist0 is not None:
        if check_regularized_newton(schedule, problem.n2, dist0).passed:
            env = newton_flow_envelope(schedule, problem.n2)
            return env, "aux", env is not None
    if method == "simple" and dist0 is not None:
        if check_regularized_simple(schedule).passed:
            x0 = auxiliary_solution(problem, float(schedule.eps(0.0)))
            d0 = float(np.linalg.norm(problem.z0 - x0))
            env = mu_ode_envelope(schedule, 2.0 * dist0, 0.5 / max(d0, 1e-12))
            return env, "aux", True
    if (
        method == "gn-sourcewise"
        and bench.source_element is not None
        and problem.n1 is not None
        and problem.n2 is not None
        and dist0 is not None
    ):
        v_norm = float(np.linalg.norm(np.asarray(bench.source_element, dtype=float)))
        zz = zeta if zeta is not None else (bench.source_exponent or 1.0)
        rep = check_sourcewise_gauss_newton(schedule, problem.n1, problem.n2, v_norm, zz, dist0)
        if rep.passed:
            return sourcewise_envelope(schedule, problem.n2, zz, rep.damping_min), "sol", False
    return None, "aux", False


def cmd_solve(cfg, args):
    bench = _benchmark(cfg, args, "solve")
    method = _get(cfg, "solve", "method", "newton")
    if method not in _CLASSICAL + _REGULARIZED:
        raise ConfigError(
            f"unknown method {method!r}; known: " + ", ".join(_CLASSICAL + _REGULARIZED)
        )
    zeta = _get(cfg, "solve", "zeta")
    want_envelope = _get(cfg, "solve", "envelope", "auto") == "auto"

    schedule = None
    if method in _REGULARIZED:
        schedule = build_schedule(cfg, bench)
        rows = admissibility_rows(bench, schedule, zeta)
        print_admissibility(bench, schedule, rows)
        rep = dict(rows)[_CHECK_BY_METHOD[method]]
        if args.strict and rep is not None and not rep.passed:
            print(f"strict mode: schedule inadmissible for {method}: {rep.reason}")
            return 2
    else:
        print(f"benchmark {bench.name}; {method} flow takes no schedule")

    kwargs = {}
    if method == "gn-sourcewise":
        if bench.source_element is not None:
            kwargs["v_norm"] = float(
                np.linalg.norm(np.asarray(bench.source_element, dtype=float))
            )
            kwargs["zeta"] = zeta if zeta is not None else (bench.source_exponent or 1.0)
        elif zeta is not None:
            kwargs["zeta"] = zeta
    flow = make_flow(method, bench.problem, schedule, **kwargs)

    envelope, target, track = (None, "aux", False)
    if want_envelope and method in _REGULARIZED:
        envelope, target, track = _auto_envelope(method, bench, schedule, zeta)

    traj = integrate(
        flow,
        build_integrator(cfg),
        envelope=envelope,
        envelope_target=target,
        track_auxiliary=track,
    )

    out = _out_dir(args)
    traj.to_csv(out / "trajectory.csv")
    traj.to_json(out / "trajectory.json")

    final_residual = float(traj.residual[-1]) if traj.residual is not None else math.nan
    print(f"status {traj.status}; final residual {final_residual:.6g}")
    if envelope is not None:
        print(f"envelope violations: {len(envelope_violations(traj))}")
    else:
        print("envelope violations: not monitored")
    print(f"wrote {out / 'trajectory.csv'} and {out / 'trajectory.json'}")
    if traj.status == FLOW_ERROR:
        print(f"flow failure: {traj.error}")
        return 3
    return 0


def cmd_check_schedule(cfg, args):
    bench = _benchmark(cfg, args, "solve")
    schedule = build_schedule(cfg, bench)
    rows = admissibility_rows(bench, schedule, _get(cfg, "solve", "zeta"))
    print_admissibility(bench, schedule, rows)
    failed = [name for name, rep in rows if rep is not None and not rep.passed]
    if args.strict and failed:
        print("strict mode: inadmissible for " + ", ".join(failed))
        return 2
    return 0


# ---------------------------------------------------------------------------
# feigenbaum


def _parse_z_list(text):
    values = set()
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if "-" in token[1:]:  # ranges like 13-16 (leading minus would be invalid anyway)
            lo, _, hi = token.partition("-")
            try:
                lo, hi = int(lo), int(hi)
            except ValueError:
                raise ConfigError(f"bad z range {token!r}") from None
            if hi < lo:
                raise ConfigError(f"bad z range {token!r}")
            values.update(range(lo, hi + 1))
        else:
            try:
                values.add(int(token))
            except ValueError:
                raise ConfigError(f"bad z value {token!r}") from None
    if not values or min(values) < 2:
        raise ConfigError("z values must be integers >= 2")
    return sorted(values)


def cmd_feigenbaum(cfg, args):
    z_values = _parse_z_list(_get(cfg, "feigenbaum", "z", "13-16"))
    n_max = _get(cfg, "feigenbaum", "n_max", 12)
    methods = tuple(
        m.strip() for m in _get(cfg, "feigenbaum", "methods", "newton,gn-sourcewise").split(",")
    )
    for m in methods:
        if m not in _REGULARIZED:
            raise ConfigError(f"unknown method {m!r}; known: " + ", ".join(_REGULARIZED))
    base_sched = feig.default_schedule()
    try:
        schedule = ExpSchedule(
            eps0=_get(cfg, "feigenbaum", "eps0", base_sched.eps0),
            nu=_get(cfg, "feigenbaum", "nu", base_sched.nu),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    base = feig.default_config()
    icfg = IntegratorConfig(
        rel_tol=base.rel_tol,
        abs_tol=base.abs_tol,
        residual_stop=_get(cfg, "feigenbaum", "residual_stop", base.residual_stop),
        t_max=_get(cfg, "feigenbaum", "t_max", base.t_max),
        max_steps=base.max_steps,
    )

    report = feig.run_experiment(
        z_values, methods=methods, schedule=schedule, cfg=icfg, n_max=n_max,
        workers=args.workers,
    )

    out = _out_dir(args)
    feig.write_experiment_json(report, out / "feigenbaum.json")
    feig.write_experiment_csv(report, out / "feigenbaum.csv")

    print(f"{'z':>4} {'alpha':>12} {'digits':>7} {'n':>4} {'time[s]':>9}")
    for row in report["rows"]:
        print(
            f"{row['z']:>4} {row['alpha']:>12.6f} {row['digits']:>7} "
            f"{row['n_final']:>4} {row['runtime_s']:>9.2f}"
        )
    for failure in report["failures"]:
        where = "seed chain" if failure["z"] is None else f"z={failure['z']}"
        print(f"failed {where} [{failure['method']}]: {failure['error']}")
    print(f"wrote {out / 'feigenbaum.json'} and {out / 'feigenbaum.csv'}")
    return 0 if report["rows"] else 4


# ---------------------------------------------------------------------------
# inequality


def cmd_inequality(cfg, args):
    choice = _get(cfg, "inequality", "scenario", "all")
    if choice != "all" and choice not in ineq.SCENARIOS:
        raise ConfigError(
            f"unknown scenario {choice!r}; known: all, " + ", ".join(ineq.SCENARIOS)
        )
    names = ineq.SCENARIOS if choice == "all" else (choice,)

    reports = []
    for name in names:
        try:
            reports.append(ineq.run_scenario(name))
        except RegflowError as exc:
            reports.append(
                {
                    "schema": ineq.INEQUALITY_SCHEMA,
                    "scenario": name,
                    "passed": False,
                    "checks": [
                        {"name": "scenario-run", "passed": False, "error": str(exc)}
                    ],
                    "trace": {"t": [], "u": []},
                }
            )

    out = _out_dir(args)
    ineq.write_inequality_report(reports, out / "inequality.json")
    for rep in reports:
        if rep["trace"]["t"]:
            ineq.write_trace_csv(rep["trace"], out / f"trace-{rep['scenario']}.csv")

    for rep in reports:
        print(f"{rep['scenario']}: {'pass' if rep['passed'] else 'FAIL'}")
        if not rep["passed"]:
            for check in rep["checks"]:
                if not check["passed"]:
                    detail = {
                        k: v for k, v in check.items() if k not in ("name", "passed")
                    }
                    print(f"  failed check {check['name']}: {detail}")
    print(f"wrote {out / 'inequality.json'}")
    return 0 if all(r["passed"] for r in reports) else 5


# ---------------------------------------------------------------------------
# rates


def cmd_rates(cfg, args):
    bench = _benchmark(cfg, args, "rates")
    problem = bench.problem
    if problem.known_solution is None:
        raise ConfigError(f"benchmark {bench.name} has no recorded solution to rate against")

    nu = _get(cfg, "rates", "nu", 1.0)
    t0 = _get(cfg, "rates", "t0", 5.0)
    try:
        schedule = admissible_power_schedule(bench, nu=nu, t0=t0)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rows = admissibility_rows(bench, schedule)
    print_admissibility(bench, schedule, rows)
    rep = dict(rows)["regularized-newton"]
    if args.strict and rep is not None and not rep.passed:
        print(f"strict mode: schedule inadmissible for newton: {rep.reason}")
        return 2

    # long horizon, no residual stop: the fit wants the asymptotic tail
    icfg = IntegratorConfig(
        t_max=_get(cfg, "rates", "t_max", 1e5), residual_stop=1e-300
    )
    flow = make_flow("newton", problem, schedule)
    traj = integrate(flow, icfg)
    if traj.status == FLOW_ERROR:
        print(f"flow failure: {traj.error}")
        return 3

    eps = np.asarray(traj.eps, dtype=float)
    dist = np.asarray(traj.dist_sol, dtype=float)
    keep = np.isfinite(eps) & np.isfinite(dist) & (eps > 0) & (dist > 0)
    eps, dist = eps[keep], dist[keep]
    tail = len(eps) // 2
    eps_tail, dist_tail = eps[tail:], dist[tail:]
    if len(eps_tail) < 20:
        print(f"only {len(eps_tail)} tail samples; need at least 20 for a fit")
        return 6

    slope = float(np.polyfit(np.log(eps_tail), np.log(dist_tail), 1)[0])
    expected = bench.rate_exponent

    bound = None
    if bench.source_element is not None and problem.n2 is not None:
        # linear-in-eps distance bound: tracking term plus auxiliary-path term
        v_norm = float(np.linalg.norm(np.asarray(bench.source_element, dtype=float)))
        d = schedule.decay_sup()
        constant = (1.0 - d) / problem.n2 + 4.0 * v_norm / (2.0 - problem.n2 * v_norm)
        ratio = float(np.max(dist_tail / eps_tail))
        bound = {"constant": constant, "max_ratio": ratio, "holds": ratio <= constant}

    doc = {
        "schema": RATES_SCHEMA,
        "benchmark": bench.name,
        "method": "newton",
        "schedule": schedule.describe(),
        "fitted_exponent": slope,
        "expected_exponent": expected,
        "samples_total": int(len(eps)),
        "samples_tail": int(len(eps_tail)),
        "eps_tail_range": [float(eps_tail[0]), float(eps_tail[-1])],
        "bound": bound,
        "status": traj.status,
    }
    out = _out_dir(args)
    with open(out / "rates.json", "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")

    if expected is None:
        print(f"fitted exponent {slope:.4f} ({len(eps_tail)} tail samples)")
    else:
        print(
            f"fitted exponent {slope:.4f}, expected {expected:.4f} "
            f"({len(eps_tail)} tail samples)"
        )
    if bound is not None:
        verdict = "holds" if bound["holds"] else "VIOLATED"
        print(
            f"linear bound dist <= {bound['constant']:.4g} * eps {verdict} "
            f"(max ratio {bound['max_ratio']:.4g})"
        )
    print(f"wrote {out / 'rates.json'}")
    return 0


# ---------------------------------------------------------------------------
# entry point


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def build_parser():
    parser = argparse.ArgumentParser(
        prog="regflow",
        description="Regularized continuous methods for ill-posed operator equations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "solve": "integrate one flow on a benchmark and write the trajectory",
        "feigenbaum": "sweep period-doubling exponents with two regularized flows",
        "inequality": "run the majorant / comparison / decay lemma scenarios",
        "rates": "fit the distance-vs-eps rate exponent on a benchmark",
        "check-schedule": "print the schedule admissibility table and exit",
    }
    for name, help_text in commands.items():
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", metavar="PATH", help="INI config file")
        cmd.add_argument(
            "--out", metavar="DIR", default=".", help="output directory (default: .)"
        )
        cmd.add_argument(
            "--workers", metavar="N", type=int, default=1, help="sweep parallelism"
        )
        cmd.add_argument(
            "--strict",
            action="store_true",
            help="abort with exit 2 when the schedule is inadmissible",
        )
        cmd.add_argument(
            "--seed-bench",
            metavar="NAME",
            help="built-in benchmark override: " + ", ".join(benchmark_names()),
        )
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    handlers = {
        "solve": cmd_solve,
        "feigenbaum": cmd_feigenbaum,
        "inequality": cmd_inequality,
        "rates": cmd_rates,
        "check-schedule": cmd_check_schedule,
    }
    try:
        cfg = read_config(args.config) if args.config else {}
        return handlers[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RegflowError as exc:
        # setup-time failures (missing bounds, no reference solution, ...)
        # mean the requested combination cannot run: a configuration problem
        print(f"cannot run this configuration: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
