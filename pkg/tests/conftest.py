import contextlib

import numpy as np
import pytest

from ksatcert.constraint import solve_gamma
from ksatcert.weights import WeightScheme

_CRITERIA = []


def balanced(k, beta, root=0):
    return WeightScheme.from_lambda(k, beta, solve_gamma(k, beta).roots[root])


def random_schemes(count, seed, ks=range(2, 8), beta=(-0.9, 2.0), gamma=(0.5, 2.0)):
    rng = np.random.default_rng(seed)
    ks = list(ks)
    return [
        WeightScheme(int(rng.choice(ks)), rng.uniform(*beta), rng.uniform(*gamma))
        for _ in range(count)
    ]


@pytest.fixture
def criterion():
    """Context manager recording one acceptance line: ``with criterion(3, "name"): ...``."""

    @contextlib.contextmanager
    def record(number, name):
        try:
            yield
        except BaseException:
            _CRITERIA.append((number, name, False))
            raise
        _CRITERIA.append((number, name, True))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, ok in sorted(_CRITERIA):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name}")
