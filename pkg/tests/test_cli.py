import csv
import io
import json
import math
import subprocess
import sys

import pytest

from ksatcert import cli
from ksatcert.correlation import pair_correlation
from ksatcert.constraint import solve_gamma
from ksatcert.weights import WeightScheme


def run(capsys, *argv, env=None):
    if env is not None:
        args = cli.build_parser().parse_args(list(argv))
        cfg = cli.config_from_args(args, environ=env)
        code = cli.run(cfg)
    else:
        code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_certify_pass_json(capsys):
    code, out, _ = run(capsys, "certify", "--k", "3", "--beta", "0.65", "--r", "2.83", "--format", "json")
    assert code == 0
    d = json.loads(out)
    assert d["pass"] is True
    expected = {
        "k", "beta", "gamma", "r", "pass", "log_g_at_half", "worst_off_center_alpha",
        "worst_off_center_log_g", "min_gap", "second_derivative_log", "laplace_rho",
        "violations", "center_window_ok", "center_window_max_gap", "lower_envelope_ratio_at_half",
        "roots_tried",
    }
    assert expected <= set(d)
    assert isinstance(d["k"], int) and isinstance(d["gamma"], float)
    assert d["violations"] == []


def test_certify_fail_exit_1(capsys):
    code, out, _ = run(capsys, "certify", "--k", "3", "--beta", "0", "--r", "2.90")
    assert code == 1
    assert "pass: False" in out


def test_certify_csv_single_row(capsys):
    code, out, _ = run(capsys, "certify", "--k", "3", "--beta", "0", "--r", "2.90", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 1 and len(rows) == 1
    assert rows[0]["pass"] == "false"
    assert int(rows[0]["violation_count"]) > 0


def test_usage_errors_exit_2(capsys):
    code, _, err = run(capsys, "certify", "--k", "2", "--beta", "0.5", "--r", "1.0")
    assert code == 2 and err.startswith("error: usage:")
    code, _, err = run(capsys, "certify", "--k", "3", "--beta", "0.5", "--r", "-1")
    assert code == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["certify", "--k", "3", "--beta", "0.5", "--r", "1", "--bogus"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["certify", "--k", "3"])
    assert exc.value.code == 2


def test_bad_env_grid_step_is_usage_error(capsys):
    args = cli.build_parser().parse_args(["certify", "--k", "3", "--beta", "0.65", "--r", "2.83"])
    with pytest.raises(cli.UsageError):
        cli.config_from_args(args, environ={"KSAT_GRID_STEP": "fast"})


def test_numeric_error_exit_3(capsys):
    code, _, err = run(capsys, "oracle", "--k", "3", "--beta", "0", "--gamma", "1", "--n", "40", "--m", "1")
    assert code == 3
    assert err.startswith("error: TooLarge:")
    assert err.count("\n") == 1


def test_no_root_exit_3(capsys, monkeypatch):
    from ksatcert import constraint
    from ksatcert.errors import NoRoot

    def boom(k, beta, points=10_000):
        raise NoRoot("forced")

    monkeypatch.setattr(constraint, "solve_gamma", boom)
    monkeypatch.setattr(sys.modules["ksatcert.certify"], "solve_gamma", boom)
    code, _, err = run(capsys, "certify", "--k", "3", "--beta", "0.65", "--r", "2.83")
    assert code == 3 and "NoRoot" in err


def test_table_csv(capsys):
    code, out, _ = run(capsys, "table", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert [(int(r["k"]), float(r["beta"]), float(r["r"])) for r in rows] == [
        (3, 0.65, 2.83), (4, 0.14, 8.09), (5, 0.05, 18.91), (6, 0.02, 40.81), (7, 0.01, 84.87)
    ]
    assert all(r["pass"] == "true" for r in rows)


def test_scan_csv_contract(capsys):
    step = 1e-3
    code, out, _ = run(capsys, "scan", "--k", "3", "--beta", "0.65", "--r", "2.83", "--grid-step", str(step))
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "alpha,log_g_lower,log_G,violation"
    rows = list(csv.DictReader(io.StringIO(out)))
    alphas = [float(r["alpha"]) for r in rows]
    assert all(b > a for a, b in zip(alphas, alphas[1:]))
    assert alphas[0] == 0.0 and alphas[-1] == 1.0
    assert len(rows) >= 1 + math.ceil(1 / step)
    assert all(r["violation"] == "false" for r in rows)
    half = next(r for r in rows if float(r["alpha"]) == 0.5)
    s = WeightScheme(3, 0.65, float(solve_gamma(3, 0.65).gammas[0]))
    assert float(half["log_G"]) == pytest.approx(2.83 * math.log(pair_correlation(0.5, s)) + math.log(2), rel=1e-14)


def test_scan_json_matches_csv(capsys):
    base = ["scan", "--k", "4", "--beta", "0.14", "--r", "8.09", "--grid-step", "0.01"]
    _, text, _ = run(capsys, *base)
    _, js, _ = run(capsys, *base, "--format", "json")
    rows = json.loads(js)
    assert len(rows) == len(text.splitlines()) - 1
    assert set(rows[0]) == {"alpha", "log_g_lower", "log_G", "violation"}


def test_env_grid_step_overrides_default(capsys):
    base = ["scan", "--k", "3", "--beta", "0.65", "--r", "2.83"]
    _, coarse, _ = run(capsys, *base, env={"KSAT_GRID_STEP": "0.01"})
    _, flag, _ = run(capsys, *base, "--grid-step", "0.01", env={})
    assert coarse == flag
    # an explicit flag wins over the environment
    _, both, _ = run(capsys, *base, "--grid-step", "0.01", env={"KSAT_GRID_STEP": "0.02"})
    assert both == flag


def test_oracle_json_round_trip(capsys):
    code, out, _ = run(capsys, "oracle", "--k", "3", "--beta", "0.65", "--n", "3", "--m", "2", "--format", "json")
    assert code == 0
    d = json.loads(out)
    for key in ("analytic_log_EX", "exact_log_EX", "analytic_log_EX2", "exact_log_EX2",
                "rel_error_EX", "rel_error_EX2", "xplus_ratio", "gamma", "beta"):
        assert isinstance(d[key], float)
    assert d["rel_error_EX"] < 1e-12 and d["rel_error_EX2"] < 1e-12
    assert d["mc_estimate"] is None


def test_oracle_monte_carlo_seeded(capsys):
    argv = ["oracle", "--k", "3", "--beta", "0.65", "--n", "8", "--m", "6", "--samples", "300",
            "--seed", "5", "--format", "json"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b
    d = json.loads(a)
    assert d["seed"] == 5 and d["samples"] == 300 and d["mc_estimate"] > 0


def test_oracle_k2_needs_gamma(capsys):
    code, _, _ = run(capsys, "oracle", "--k", "2", "--beta", "0", "--n", "2", "--m", "1")
    assert code == 2
    code, out, _ = run(capsys, "oracle", "--k", "2", "--beta", "0", "--gamma", "1", "--n", "2", "--m", "1")
    assert code == 0 and "exact_log_EX: " in out


def test_search_fixed_beta_json(capsys):
    code, out, _ = run(capsys, "search", "--k", "3", "--beta", "0", "--r-lo", "2.0", "--r-hi", "3.5",
                       "--format", "json")
    assert code == 0
    d = json.loads(out)
    assert d["best_beta"] == 0.0
    assert d["r_certified"] == pytest.approx(2.68, abs=0.01)
    assert d["trace"] == [{"beta": 0.0, "r": d["r_certified"]}]


def test_search_half_bracket_is_usage_error(capsys):
    code, _, _ = run(capsys, "search", "--k", "3", "--beta", "0", "--r-lo", "2.0")
    assert code == 2


def test_output_file(tmp_path, capsys):
    path = tmp_path / "rep.json"
    code, out, _ = run(capsys, "certify", "--k", "3", "--beta", "0.65", "--r", "2.83",
                       "--format", "json", "--output", str(path))
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["pass"] is True


@pytest.mark.parametrize(
    "argv",
    [
        ["certify", "--k", "5", "--beta", "0.05", "--r", "18.91", "--format", "json"],
        ["scan", "--k", "3", "--beta", "0.65", "--r", "2.83", "--grid-step", "0.005"],
        ["oracle", "--k", "3", "--beta", "0.65", "--n", "6", "--m", "4", "--samples", "200", "--seed", "9"],
    ],
)
def test_byte_identical_across_processes(argv):
    cmd = [sys.executable, "-m", "ksatcert", *argv]
    a = subprocess.run(cmd, capture_output=True, check=False)
    b = subprocess.run(cmd, capture_output=True, check=False)
    assert a.returncode == b.returncode == 0
    assert a.stdout == b.stdout and a.stdout
