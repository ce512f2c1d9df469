"""Roots of the balance equation (1 + lam)^(k-1) (1 - lam) + (k - 2) lam beta = 1."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoRoot

RESIDUAL_TOL = 1e-12
LAM_MIN = 1e-9


def _residual(lam, k: int, beta: float):
    return (1.0 + lam) ** (k - 1) * (1.0 - lam) + (k - 2) * lam * beta - 1.0


@dataclass(frozen=True)
class RootSet:
    k: int
    beta: float
    roots: tuple = ()
    bracketing_intervals: tuple = field(default=(), repr=False)

    @property
    def gammas(self) -> tuple:
        return tuple(math.sqrt(lam) for lam in self.roots)

    def __len__(self):
        return len(self.roots)


def _upper_end(k: int, beta: float) -> float:
    # first lam >= 2 where the left-hand side drops below 1 - 10
    lam = 2.0
    while _residual(lam, k, beta) + 1.0 >= -9.0:
        lam *= 2.0
        if lam > 1e12:
            break
    return lam


def bisect_root(k: int, beta: float, lo: float, hi: float, tol: float = RESIDUAL_TOL) -> float:
    """Plain bisection on a sign-changing bracket; stops at |residual| < tol or float exhaustion."""
    f_lo = _residual(lo, k, beta)
    if f_lo == 0.0:
        return lo
    f_hi = _residual(hi, k, beta)
    if f_hi == 0.0:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        raise ValueError("bracket does not change sign")
    mid = 0.5 * (lo + hi)
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        f_mid = _residual(mid, k, beta)
        if mid <= lo or mid >= hi:
            break
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
        if abs(f_mid) < tol and hi - lo <= 4 * np.spacing(mid):
            break
    return mid


def solve_gamma(k: int, beta: float, points: int = 10_000) -> RootSet:
    """All lambda roots of the balance equation on (1e-9, lam_hi), found by grid scan + bisection."""
    if int(k) != k or k < 3:
        raise ValueError(f"k must be an integer >= 3, got {k!r}")
    if not beta > -1.0:
        raise ValueError(f"beta must exceed -1, got {beta!r}")
    k = int(k)
    beta = float(beta)
    grid = np.logspace(math.log10(LAM_MIN), math.log10(_upper_end(k, beta)), points)
    res = _residual(grid, k, beta)
    sign = np.sign(res)

    roots: list[float] = []
    brackets: list[tuple[float, float]] = []
    for i in range(points - 1):
        if sign[i] == 0.0:
            if not roots or grid[i] - roots[-1] > 1e-9:
                roots.append(float(grid[i]))
                brackets.append((float(grid[i]), float(grid[i])))
            continue
        if sign[i] * sign[i + 1] < 0:
            lam = bisect_root(k, beta, float(grid[i]), float(grid[i + 1]))
            if not roots or lam - roots[-1] > 1e-9:
                roots.append(lam)
                brackets.append((float(grid[i]), float(grid[i + 1])))
    if not roots:
        raise NoRoot(f"no sign change of the balance residual for k={k}, beta={beta}")
    return RootSet(k, beta, tuple(roots), tuple(brackets))
