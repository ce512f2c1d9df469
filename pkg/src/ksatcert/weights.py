"""Clause weights of the two-parameter (beta, gamma) scheme and first-moment quantities.

A clause ``c`` with ``d`` satisfied literal occurrences under ``sigma`` gets weight

    0                          if d = 0
    gamma**(2 - k) * (1 + beta)  if d = 1
    gamma**(2 d - k)             if d >= 2

i.e. ``gamma**H`` with ``H = 2d - k``, boosted by ``1 + beta`` on singly satisfied
clauses.  ``beta = 0`` gives the plain ``lambda**d`` weighting up to the constant
``lambda**(-k/2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class WeightScheme:
    k: int
    beta: float
    gamma: float

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 2:
            raise ValueError(f"k must be an integer >= 2, got {self.k!r}")
        if not self.beta > -1.0:
            raise ValueError(f"beta must exceed -1, got {self.beta!r}")
        if not self.gamma > 0.0 or not math.isfinite(self.gamma):
            raise ValueError(f"gamma must be positive and finite, got {self.gamma!r}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def lam(self) -> float:
        """lambda = gamma**2."""
        return self.gamma * self.gamma

    @classmethod
    def from_lambda(cls, k: int, beta: float, lam: float) -> "WeightScheme":
        return cls(k, beta, math.sqrt(lam))


def clause_weight(scheme: WeightScheme, d: int) -> float:
    k = scheme.k
    if int(d) != d or not 0 <= d <= k:
        raise ValueError(f"d must be an integer in [0, {k}], got {d!r}")
    if d == 0:
        return 0.0
    w = scheme.gamma ** (2 * d - k)
    if d == 1:
        w *= 1.0 + scheme.beta
    return w


def weight_table(scheme: WeightScheme) -> np.ndarray:
    """Weights for d = 0..k as an array."""
    return np.array([clause_weight(scheme, d) for d in range(scheme.k + 1)])


def binomial_row(k: int) -> np.ndarray:
    return np.array([math.comb(k, d) for d in range(k + 1)], dtype=float)


def single_clause_expectation(scheme: WeightScheme) -> float:
    """E_c[omega(sigma, c)] over a uniformly random clause; independent of sigma."""
    k = scheme.k
    return float(binomial_row(k) @ weight_table(scheme)) / 2.0**k


def clause_count(r: float, n: int) -> int:
    """m = floor(r n), tolerant of r = m/n round-off."""
    return int(math.floor(r * n + 1e-9))


def log_first_moment(scheme: WeightScheme, r: float, n: int) -> float:
    """ln E[X] = n ln 2 + m ln E_c[omega] with m = floor(r n)."""
    if not r > 0:
        raise ValueError("r must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    return log_first_moment_m(scheme, n, clause_count(r, n))


def log_first_moment_m(scheme: WeightScheme, n: int, m: int) -> float:
    return n * math.log(2.0) + m * math.log(single_clause_expectation(scheme))


def balance_residual(scheme: WeightScheme) -> float:
    """(1 + lam)^(k-1) (1 - lam) + (k - 2) lam beta - 1; zero iff f'(1/2) = 0."""
    k, lam = scheme.k, scheme.lam
    return (1.0 + lam) ** (k - 1) * (1.0 - lam) + (k - 2) * lam * scheme.beta - 1.0


def signed_weight_sum(scheme: WeightScheme) -> float:
    """sum_v omega(v) (2|v| - k) over all 2^k sign patterns v."""
    k = scheme.k
    h = 2.0 * np.arange(k + 1) - k
    return float(binomial_row(k) @ (weight_table(scheme) * h))
