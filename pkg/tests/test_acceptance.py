"""One test per acceptance criterion; the terminal summary prints a PASS/FAIL line for each."""
import csv
import io
import math
import subprocess
import sys
import time

import mpmath
import numpy as np

from conftest import balanced, random_schemes
from ksatcert import cli
from ksatcert.certify import certify, second_derivative_at_half
from ksatcert.constraint import solve_gamma
from ksatcert.correlation import as_polynomial, derivative_at, pair_correlation
from ksatcert.oracle import FormulaModel, oracle_report, truncated_ratio
from ksatcert.search import BASELINE_R, REFERENCE_TABLE, max_certified_r
from ksatcert.weights import WeightScheme, single_clause_expectation

TABLE_ROWS = [(3, 0.65, 2.83), (4, 0.14, 8.09), (5, 0.05, 18.91), (6, 0.02, 40.81), (7, 0.01, 84.87)]


def test_criterion_01_table(criterion, capsys):
    with criterion(1, "table command certifies all five rows in under 10 minutes"):
        start = time.perf_counter()
        code = cli.main(["table", "--format", "csv"])
        elapsed = time.perf_counter() - start
        rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
        got = [(int(r["k"]), float(r["beta"]), float(r["r"])) for r in rows]
        assert got == TABLE_ROWS
        assert all(r["pass"] == "true" for r in rows)
        assert code == 0
        assert elapsed < 600


def test_criterion_02_baselines(criterion):
    with criterion(2, "beta=0 baselines reproduced within +0.02; beta=0 fails at the weighted r"):
        for k, _, r_weighted in REFERENCE_TABLE:
            quoted = BASELINE_R[k]
            r0 = max_certified_r(k, 0.0, quoted - 0.05, r_weighted, precision=1e-3)
            assert quoted <= r0 <= quoted + 0.02, (k, r0)
            assert not certify(k, 0.0, r_weighted).passed


def test_criterion_03_constraint_root(criterion):
    with criterion(3, "solve_gamma(3, 0) gives the golden-ratio conjugate to 1e-10"):
        rs = solve_gamma(3, 0.0)
        assert len(rs) == 1
        assert abs(rs.roots[0] - (math.sqrt(5) - 1) / 2) < 1e-10


def test_criterion_04_balance_stationarity(criterion):
    with criterion(4, "balanced gamma makes f'(1/2) vanish for 100 random schemes"):
        rng = np.random.default_rng(20240604)
        for _ in range(100):
            k = int(rng.integers(3, 8))
            beta = float(rng.uniform(-0.5, 1.5))
            for g in solve_gamma(k, beta).gammas:
                assert abs(derivative_at(as_polynomial(WeightScheme(k, beta, g)), 0.5, 1)) < 1e-10


def test_criterion_05_exact_oracle(criterion):
    with criterion(5, "closed-form moments match exhaustive enumeration to 1e-12"):
        gamma_bal = float(solve_gamma(3, 0.65).gammas[0])
        schemes = [(0.0, 1.0), (0.65, 0.9), (1.0, 1.0), (-0.3, 1.4), (0.65, gamma_bal)]
        for k, n, m in [(2, 2, 1), (2, 3, 2), (3, 3, 2)]:
            for beta, gamma in schemes:
                rep = oracle_report(FormulaModel(k, n, m), WeightScheme(k, beta, gamma))
                assert rep.rel_error_EX < 1e-12
                assert rep.rel_error_EX2 < 1e-12
                assert rep.max_rel_error_pair < 1e-12


def test_criterion_06_factorization(criterion):
    with criterion(6, "f(1/2) equals the squared single-clause expectation over 1000 schemes"):
        for s in random_schemes(1000, seed=606, ks=range(2, 9), beta=(-0.99, 3.0), gamma=(0.2, 3.0)):
            ec2 = single_clause_expectation(s) ** 2
            assert abs(pair_correlation(0.5, s) - ec2) < 1e-12 * ec2


def test_criterion_07_truncated_ratio(criterion):
    with criterion(7, "truncated ratio tends to 1/2, within 0.05 at m=1e4"):
        s = balanced(3, 0.65)
        dev = [abs(truncated_ratio(s, m) - 0.5) for m in (100, 1000, 10_000)]
        assert dev[0] > dev[1] > dev[2]
        assert dev[2] < 0.05


def test_criterion_08_polynomial_fidelity(criterion):
    with criterion(8, "alpha polynomial matches the direct form at 1e4 random points"):
        rng = np.random.default_rng(808)
        worst = 0.0
        for s in random_schemes(1000, seed=808):
            a = rng.uniform(0, 1, 10)
            direct = pair_correlation(a, s)
            worst = max(worst, float(np.max(np.abs(as_polynomial(s)(a) - direct) / np.abs(direct))))
        assert worst < 1e-12


def test_criterion_09_second_derivative(criterion):
    with criterion(9, "analytic curvature at 1/2 matches Richardson differences to 1e-6, negative"):
        for k, beta, r in TABLE_ROWS:
            s = balanced(k, beta)
            analytic = second_derivative_at_half(s, r)
            assert analytic < 0
            with mpmath.workdps(40):
                def log_g(x):
                    f = pair_correlation(x, s)
                    return r * mpmath.log(f) - x * mpmath.log(x) - (1 - x) * mpmath.log(1 - x)

                def d2(h):
                    x = mpmath.mpf(1) / 2
                    return (log_g(x + h) - 2 * log_g(x) + log_g(x - h)) / h**2

                h = mpmath.mpf("1e-5")
                fd = (4 * d2(h / 2) - d2(h)) / 3
            assert abs(analytic - float(fd)) <= 1e-6 * abs(float(fd))


def test_criterion_10_determinism(criterion):
    commands = [
        ["certify", "--k", "4", "--beta", "0.14", "--r", "8.09", "--format", "json"],
        ["table", "--format", "csv"],
        ["scan", "--k", "3", "--beta", "0.65", "--r", "2.83"],
        ["search", "--k", "3", "--beta", "0.65", "--r-lo", "2.5", "--r-hi", "3.0", "--format", "json"],
        ["oracle", "--k", "3", "--beta", "0.65", "--n", "3", "--m", "2", "--format", "json"],
        ["oracle", "--k", "3", "--beta", "0.65", "--n", "8", "--m", "6", "--samples", "500", "--seed", "11"],
    ]
    with criterion(10, "identical flags and seed give byte-identical output"):
        for argv in commands:
            cmd = [sys.executable, "-m", "ksatcert", *argv]
            a = subprocess.run(cmd, capture_output=True, check=False)
            b = subprocess.run(cmd, capture_output=True, check=False)
            assert a.returncode == b.returncode == 0, (argv, a.stderr)
            assert a.stdout and a.stdout == b.stdout, argv
