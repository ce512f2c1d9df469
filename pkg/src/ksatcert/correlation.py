"""Pair correlation f(alpha, beta, gamma) = A + 2 k beta B + k beta^2 C.

``f`` is the expected product of clause weights for two assignments that agree on a
fraction ``alpha`` of the variables, averaged over one uniformly random clause.
``pair_terms`` evaluates the closed forms directly (works elementwise on numpy arrays
and on any scalar type with ordinary arithmetic, e.g. ``mpmath.mpf``); ``as_polynomial``
expands the same expressions exactly in powers of alpha.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import gammaln, logsumexp

from .weights import WeightScheme


def _abc(a, k: int, gamma):
    g2 = gamma * gamma
    gi = 1 / g2
    both = a * gi / 2  # literal falsified by both assignments
    one_sat = (a * g2 + 1 - a) / 2
    one_unsat = (a * gi + 1 - a) / 2
    split = (1 - a) / 2
    A = (a * (g2 + gi) / 2 + 1 - a) ** k - 2 * one_unsat**k + both**k
    B = one_sat * one_unsat ** (k - 1) - split * both ** (k - 1)
    C = (a * g2 / 2) * both ** (k - 1) + (k - 1) * split**2 * both ** (k - 2)
    return A, B, C


def pair_terms(alpha, scheme: WeightScheme):
    """Return (A, B, C) at overlap ``alpha`` (0**0 = 1 throughout)."""
    return _abc(alpha, scheme.k, scheme.gamma)


def pair_correlation(alpha, scheme: WeightScheme):
    A, B, C = pair_terms(alpha, scheme)
    k, beta = scheme.k, scheme.beta
    return A + 2 * k * beta * B + k * beta * beta * C


def pair_correlation_gamma(alpha, k: int, beta: float, gamma):
    """f with gamma free to vary (broadcasts over ``alpha`` and ``gamma``)."""
    A, B, C = _abc(alpha, k, gamma)
    return A + 2 * k * beta * B + k * beta * beta * C


@dataclass(frozen=True)
class AlphaPolynomial:
    """Degree-k expansion of f in powers of alpha; ``coefficients[j]`` multiplies alpha**j."""

    coefficients: tuple
    k: int
    beta: float
    gamma: float

    @property
    def poly(self) -> Polynomial:
        return Polynomial(np.array(self.coefficients))

    def __call__(self, alpha):
        return self.poly(alpha)

    def derivative(self, order: int = 1) -> Polynomial:
        return self.poly.deriv(order)


def _expand(scheme: WeightScheme, var: Polynomial) -> Polynomial:
    A, B, C = _abc(var, scheme.k, scheme.gamma)
    k, beta = scheme.k, scheme.beta
    return A + 2 * k * beta * B + k * beta * beta * C


def as_polynomial(scheme: WeightScheme) -> AlphaPolynomial:
    p = _expand(scheme, Polynomial([0.0, 1.0]))
    coef = np.zeros(scheme.k + 1)
    coef[: len(p.coef)] = p.coef
    return AlphaPolynomial(tuple(float(c) for c in coef), scheme.k, scheme.beta, scheme.gamma)


def centered_coefficients(scheme: WeightScheme) -> np.ndarray:
    """Coefficients of f(1/2 + t) in powers of t, expanded directly (no re-centering loss)."""
    p = _expand(scheme, Polynomial([0.5, 1.0]))
    coef = np.zeros(scheme.k + 1)
    coef[: len(p.coef)] = p.coef
    return coef


def derivative_at(poly: AlphaPolynomial, alpha, order: int = 1):
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    return poly.derivative(order)(alpha)


def log_second_moment(scheme: WeightScheme, n: int, m: int) -> float:
    """ln of 2^n sum_z C(n, z) f(z/n)^m."""
    z = np.arange(n + 1)
    f = pair_correlation(z / n, scheme)
    if np.any(f <= 0):
        raise ValueError("pair correlation must be positive on the overlap grid")
    log_binom = gammaln(n + 1) - gammaln(z + 1) - gammaln(n - z + 1)
    return float(n * np.log(2.0) + logsumexp(log_binom + m * np.log(f)))
