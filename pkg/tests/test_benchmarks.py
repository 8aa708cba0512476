"""Benchmark registry invariants: solutions, bounds, and derived schedules."""

import numpy as np
import pytest

from regflow.benchmarks import (
    admissible_power_schedule,
    benchmark_names,
    get_benchmark,
)
from regflow.errors import ConfigError
from regflow.flows import make_flow
from regflow.integrate import REACHED_RESIDUAL, IntegratorConfig, integrate
from regflow.linalg import central_difference_jacobian
from regflow.problem import estimate_bounds
from regflow.schedules import (
    check_regularized_newton,
    check_sourcewise_gauss_newton,
)

ALL_NAMES = benchmark_names()


def test_registry_names():
    assert ALL_NAMES == sorted(ALL_NAMES)
    assert {"scalar-linear", "scalar-cubic", "scalar-power-m", "monotone-2d",
            "rank-deficient-2d", "sourcewise-2d"} == set(ALL_NAMES)


def test_get_benchmark_validation():
    with pytest.raises(ConfigError):
        get_benchmark("no-such-benchmark")
    with pytest.raises(ConfigError):
        get_benchmark("scalar-cubic", m=4)  # m only applies to scalar-power-m
    with pytest.raises(ConfigError):
        get_benchmark("scalar-power-m", m=1)
    assert get_benchmark("scalar-power-m", m=5).problem.name == "scalar-power-5"
    assert get_benchmark("scalar-power-m").rate_exponent == pytest.approx(1.0 / 3.0)


@pytest.mark.parametrize("name", ALL_NAMES)
def test_known_solution_is_a_root(name):
    problem = get_benchmark(name).problem
    assert problem.known_solution is not None
    assert problem.residual(problem.known_solution) <= 1e-12


@pytest.mark.parametrize("name", ALL_NAMES)
def test_jacobian_matches_finite_differences(name):
    problem = get_benchmark(name).problem
    rng = np.random.default_rng(13)
    box = get_benchmark(name).box
    for _ in range(5):
        x = rng.uniform(-0.5 * box, 0.5 * box, size=problem.dim)
        jac = problem.eval_jacobian(x)
        fd = central_difference_jacobian(problem.eval_f, x)
        assert np.allclose(jac, fd, rtol=1e-5, atol=1e-7)


@pytest.mark.parametrize("name", ALL_NAMES)
def test_operator_bounds_hold_on_box(name):
    bench = get_benchmark(name)
    problem = bench.problem
    rng = np.random.default_rng(17)
    slack = 1.0 + 1e-9
    for _ in range(40):
        x = rng.uniform(-bench.box, bench.box, size=problem.dim)
        y = rng.uniform(-bench.box, bench.box, size=problem.dim)
        assert np.linalg.norm(problem.eval_jacobian(x), 2) <= problem.n1 * slack
        dj = np.linalg.norm(problem.eval_jacobian(x) - problem.eval_jacobian(y), 2)
        assert dj <= problem.n2 * np.linalg.norm(x - y) * slack


@pytest.mark.parametrize("name", ALL_NAMES)
def test_monotonicity_where_declared(name):
    problem = get_benchmark(name).problem
    if not problem.monotone:
        pytest.skip("benchmark does not declare monotonicity")
    rng = np.random.default_rng(19)
    box = get_benchmark(name).box
    for _ in range(60):
        x = rng.uniform(-box, box, size=problem.dim)
        y = rng.uniform(-box, box, size=problem.dim)
        inner = float((problem.eval_f(x) - problem.eval_f(y)) @ (x - y))
        assert inner >= -1e-10


def test_sourcewise_start_offset_is_in_derivative_range():
    bench = get_benchmark("sourcewise-2d")
    problem = bench.problem
    y = problem.known_solution
    v = np.asarray(bench.source_element, dtype=float)
    # z0 - y = F'(y) v with the recorded source element
    assert np.allclose(problem.z0 - y, problem.eval_jacobian(y) @ v, atol=1e-12)
    assert bench.source_exponent == 0.5


def test_rank_deficient_regularized_flow_reaches_nearest_solution():
    bench = get_benchmark("rank-deficient-2d")
    sched = admissible_power_schedule(bench)
    flow = make_flow("newton", bench.problem, sched)
    traj = integrate(flow, IntegratorConfig(t_max=400.0, residual_stop=1e-12))
    assert traj.status == REACHED_RESIDUAL
    assert traj.final_state() == pytest.approx([1.5, 1.5], abs=1e-5)


@pytest.mark.parametrize("name", ALL_NAMES)
def test_admissible_power_schedule_passes_newton_check(name):
    bench = get_benchmark(name)
    sched = admissible_power_schedule(bench)
    rep = check_regularized_newton(sched, bench.problem.n2, bench.problem.dist0())
    assert rep.passed
    assert rep.margin > 0


def test_admissible_power_schedule_rejects_bad_exponents():
    bench = get_benchmark("scalar-cubic")
    with pytest.raises(ValueError):
        admissible_power_schedule(bench, nu=2.0, t0=1.0)


def test_sourcewise_benchmark_is_source_admissible():
    bench = get_benchmark("sourcewise-2d")
    sched = admissible_power_schedule(bench)
    rep = check_sourcewise_gauss_newton(
        sched,
        bench.problem.n1,
        bench.problem.n2,
        float(np.linalg.norm(bench.source_element)),
        bench.source_exponent,
        bench.problem.dist0(),
    )
    assert rep.passed
    assert rep.damping_min > 0.5


def test_estimate_bounds_recovers_cubic_constants():
    problem = get_benchmark("scalar-cubic").problem
    est = estimate_bounds(problem, [-2.0], [2.0])
    assert est.heuristic
    assert est.samples == 48
    # sup |F'| = 12 and sup |F''| = 12 on [-2, 2]; sampling reaches most of it
    assert 0.85 * 12.0 <= est.n1 <= 12.0 * (1.0 + 1e-6)
    assert 0.85 * 12.0 <= est.n2 <= 12.0 * (1.0 + 1e-3)


def test_estimate_bounds_validates_box():
    problem = get_benchmark("scalar-cubic").problem
    with pytest.raises(ValueError):
        estimate_bounds(problem, [2.0], [-2.0])
