"""End-to-end command behavior: config ingestion, exit codes, output files."""

import csv
import json

import pytest

import regflow.cli as cli
from regflow.errors import RegflowError


def run(tmp_path, *argv):
    return cli.main([*argv, "--out", str(tmp_path / "out")])


def write_ini(tmp_path, text):
    path = tmp_path / "config.ini"
    path.write_text(text)
    return str(path)


# ---------------------------------------------------------------------------
# solve


def test_solve_defaults(tmp_path, capsys):
    assert run(tmp_path, "solve") == 0
    out = tmp_path / "out"
    assert (out / "trajectory.csv").exists()
    doc = json.loads((out / "trajectory.json").read_text())
    assert doc["schema"] == "dsm-traj/1"
    assert doc["meta"]["flow"] == "newton"
    captured = capsys.readouterr().out
    assert "status" in captured
    assert "envelope violations" in captured


def test_solve_with_explicit_config(tmp_path):
    ini = write_ini(
        tmp_path,
        "[solve]\nbenchmark = scalar-linear\nmethod = simple\n"
        "[schedule]\nkind = power\neps0 = 1.0\nt0 = 5.0\nnu = 0.5\n"
        "[integrator]\nt_max = 50.0\n",
    )
    assert run(tmp_path, "solve", "--config", ini) == 0
    doc = json.loads((tmp_path / "out" / "trajectory.json").read_text())
    assert doc["meta"]["flow"] == "simple"
    assert doc["meta"]["schedule"] == "power(eps0=1, t0=5, nu=0.5)"


def test_solve_envelope_off(tmp_path, capsys):
    ini = write_ini(tmp_path, "[solve]\nenvelope = none\n")
    assert run(tmp_path, "solve", "--config", ini) == 0
    assert "envelope violations: not monitored" in capsys.readouterr().out


def test_solve_classical_flow_takes_no_schedule(tmp_path, capsys):
    ini = write_ini(tmp_path, "[solve]\nmethod = classical-newton\n")
    assert run(tmp_path, "solve", "--config", ini) == 0
    assert "takes no schedule" in capsys.readouterr().out


def test_solve_seed_bench_flag_overrides(tmp_path):
    ini = write_ini(tmp_path, "[solve]\nbenchmark = scalar-cubic\n")
    code = cli.main(
        [
            "solve",
            "--config",
            ini,
            "--seed-bench",
            "monotone-2d",
            "--out",
            str(tmp_path / "out"),
        ]
    )
    assert code == 0
    doc = json.loads((tmp_path / "out" / "trajectory.json").read_text())
    assert doc["dim"] == 2  # 2-d state, so the flag won


def test_solve_flow_failure_exit_3(tmp_path, capsys):
    ini = write_ini(
        tmp_path, "[solve]\nbenchmark = rank-deficient-2d\nmethod = classical-newton\n"
    )
    assert run(tmp_path, "solve", "--config", ini) == 3
    assert "flow failure" in capsys.readouterr().out
    # the one-sample trajectory is still written for inspection
    assert (tmp_path / "out" / "trajectory.csv").exists()


def test_solve_strict_inadmissible_exit_2(tmp_path, capsys):
    ini = write_ini(
        tmp_path,
        "[solve]\nmethod = newton\n[schedule]\nkind = exp\neps0 = 1.0\nnu = 0.5\n",
    )
    assert run(tmp_path, "solve", "--config", ini, "--strict") == 2
    assert "strict mode" in capsys.readouterr().out


# ---------------------------------------------------------------------------
# check-schedule


def test_check_schedule_prints_table(tmp_path, capsys):
    assert run(tmp_path, "check-schedule") == 0
    captured = capsys.readouterr().out
    for name in (
        "regularized-simple",
        "regularized-newton",
        "sourcewise-gauss-newton",
        "projector-gauss-newton",
    ):
        assert name in captured


def test_check_schedule_strict_exp_fails(tmp_path, capsys):
    ini = write_ini(tmp_path, "[schedule]\nkind = exp\neps0 = 1.0\nnu = 0.5\n")
    assert run(tmp_path, "check-schedule", "--config", ini, "--strict") == 2
    assert "inadmissible" in capsys.readouterr().out


def test_check_schedule_strict_power_passes(tmp_path):
    # constant-derivative benchmark: every evaluable check passes (the
    # projected-perturbation constant is exactly zero)
    assert run(tmp_path, "check-schedule", "--seed-bench", "scalar-linear", "--strict") == 0


# ---------------------------------------------------------------------------
# feigenbaum


def test_feigenbaum_small_sweep(tmp_path, capsys):
    ini = write_ini(tmp_path, "[feigenbaum]\nz = 2\nn_max = 2\nmethods = newton\n")
    assert run(tmp_path, "feigenbaum", "--config", ini) == 0
    out = tmp_path / "out"
    doc = json.loads((out / "feigenbaum.json").read_text())
    assert doc["schema"] == "dsm-feig/1"
    assert [row["z"] for row in doc["rows"]] == [2]
    assert doc["rows"][0]["alpha"] == pytest.approx(-2.5139837, abs=1e-4)
    with open(out / "feigenbaum.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["z", "alpha", "digits", "n_final", "runtime_s"]
    assert len(rows) == 2
    assert "alpha" in capsys.readouterr().out


def test_feigenbaum_z_ranges(tmp_path):
    assert cli._parse_z_list("13-16") == [13, 14, 15, 16]
    assert cli._parse_z_list("2, 5, 3-4") == [2, 3, 4, 5]


def test_feigenbaum_empty_sweep_exit_4(tmp_path, monkeypatch):
    report = {
        "schema": "dsm-feig/1",
        "methods": ["newton"],
        "n_max": 2,
        "schedule": "exp(eps0=1e-08, nu=0.5)",
        "rows": [],
        "failures": [{"z": None, "method": "newton", "error": "boom"}],
    }
    monkeypatch.setattr(cli.feig, "run_experiment", lambda *a, **k: report)
    ini = write_ini(tmp_path, "[feigenbaum]\nz = 2\nn_max = 1\nmethods = newton\n")
    assert run(tmp_path, "feigenbaum", "--config", ini) == 4


# ---------------------------------------------------------------------------
# inequality


def test_inequality_single_scenario(tmp_path, capsys):
    ini = write_ini(tmp_path, "[inequality]\nscenario = comparison\n")
    assert run(tmp_path, "inequality", "--config", ini) == 0
    out = tmp_path / "out"
    doc = json.loads((out / "inequality.json").read_text())
    assert doc["passed"] is True
    assert [s["scenario"] for s in doc["scenarios"]] == ["comparison"]
    assert (out / "trace-comparison.csv").exists()
    assert "comparison: pass" in capsys.readouterr().out


def test_inequality_scenario_failure_exit_5(tmp_path, monkeypatch):
    def broken(name):
        raise RegflowError("synthetic setup failure")

    monkeypatch.setattr(cli.ineq, "run_scenario", broken)
    ini = write_ini(tmp_path, "[inequality]\nscenario = comparison\n")
    assert run(tmp_path, "inequality", "--config", ini) == 5
    doc = json.loads((tmp_path / "out" / "inequality.json").read_text())
    assert doc["passed"] is False


def test_inequality_unknown_scenario_exit_2(tmp_path, capsys):
    ini = write_ini(tmp_path, "[inequality]\nscenario = bogus\n")
    assert run(tmp_path, "inequality", "--config", ini) == 2
    assert "config error" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# rates


def test_rates_small_run(tmp_path):
    ini = write_ini(tmp_path, "[rates]\nm = 2\nt_max = 2000.0\n")
    assert run(tmp_path, "rates", "--config", ini) == 0
    doc = json.loads((tmp_path / "out" / "rates.json").read_text())
    assert doc["schema"] == "dsm-rates/1"
    assert doc["benchmark"] == "scalar-power-2"
    assert doc["expected_exponent"] == pytest.approx(0.5)
    assert doc["samples_tail"] >= 20
    assert 0.3 <= doc["fitted_exponent"] <= 0.7


def test_rates_too_few_samples_exit_6(tmp_path, capsys):
    ini = write_ini(tmp_path, "[rates]\nm = 2\nt_max = 0.01\n")
    assert run(tmp_path, "rates", "--config", ini) == 6
    assert "tail samples" in capsys.readouterr().out


# ---------------------------------------------------------------------------
# config validation


@pytest.mark.parametrize(
    "text",
    [
        "[mystery]\nkey = 1\n",  # unknown section
        "[solve]\nbogus = 1\n",  # unknown key
        "[schedule]\nkind = power\neps0 = abc\n",  # unparseable float
        "[schedule]\nkind = sawtooth\n",  # outside the allowed choices
        "[solve]\nmethod = sgd\n",  # unknown method
        "[feigenbaum]\nz = 1\n",  # exponent below the quadratic case
        "[feigenbaum]\nz = 13-x\n",  # malformed range
        "[feigenbaum]\nmethods = newton,warp\n",  # unknown sweep method
        "[solve]\nbenchmark = scalar-cubic\nm = 4\n",  # exponent on a fixed benchmark
    ],
)
def test_config_errors_exit_2(tmp_path, capsys, text):
    ini = write_ini(tmp_path, text)
    command = "feigenbaum" if "[feigenbaum]" in text else "solve"
    assert run(tmp_path, command, "--config", ini) == 2
    assert "config error:" in capsys.readouterr().err


def test_unknown_seed_bench_exit_2(tmp_path, capsys):
    assert run(tmp_path, "solve", "--seed-bench", "nope") == 2
    assert "config error:" in capsys.readouterr().err


def test_missing_config_file_exit_2(tmp_path, capsys):
    assert run(tmp_path, "solve", "--config", str(tmp_path / "absent.ini")) == 2
    assert "config error:" in capsys.readouterr().err


def test_read_config_roundtrip(tmp_path):
    ini = write_ini(
        tmp_path,
        "[solve]\nbenchmark = scalar-cubic  # inline comment\n[integrator]\nmax_steps = 500\n",
    )
    cfg = cli.read_config(ini)
    assert cfg["solve"]["benchmark"] == "scalar-cubic"
    assert cfg["integrator"]["max_steps"] == "500"  # raw until typed access
