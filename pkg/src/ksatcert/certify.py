"""Laplace-method certification of E[X^2] = O(E[X]^2) at clause density r.

The second moment behaves like ``2^n sum_z C(n, z) f(z/n)^(r n)``, so its exponential
rate at overlap alpha is ``log G_r(alpha) = r ln f(alpha) + H(alpha)`` with H the
natural-log binary entropy.  A density r is certified when

* away from alpha = 1/2, ``r ln f_lower(alpha) + H(alpha)`` stays strictly below
  ``log G_r(1/2)``, where ``f_lower`` is the infimum of f over gamma >= gamma0 (valid
  for the truncated sum over assignments with non-negative total H);
* inside a small window around 1/2, ``log G_r`` itself stays below its center value;
* the curvature of ``log G_r`` at 1/2 is negative.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import entr

from .constraint import solve_gamma
from .correlation import (
    as_polynomial,
    centered_coefficients,
    derivative_at,
    pair_correlation,
    pair_correlation_gamma,
)
from .errors import NonPositiveCorrelation, NotBalanced
from .weights import WeightScheme, balance_residual

LN2 = math.log(2.0)
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
STATIONARY_TOL = 1e-10


@dataclass(frozen=True)
class GridSpec:
    coarse_step: float = 1e-4
    refine_step: float = 1e-7
    center_window: float = 1e-3
    margin: float = 1e-12

    def __post_init__(self):
        if not 0 < self.refine_step < self.coarse_step <= self.center_window < 0.5:
            raise ValueError(
                "need 0 < refine_step < coarse_step <= center_window < 1/2, got "
                f"{self.refine_step}, {self.coarse_step}, {self.center_window}"
            )
        if not self.margin >= 0:
            raise ValueError("margin must be non-negative")

    def finer(self, factor: float = 10.0) -> "GridSpec":
        return GridSpec(self.coarse_step / factor, self.refine_step, self.center_window, self.margin)


@dataclass
class CertificateReport:
    k: int
    beta: float
    gamma: float
    r: float
    passed: bool
    log_g_at_half: float
    worst_off_center_alpha: float
    worst_off_center_log_g: float
    min_gap: float
    second_derivative_log: float
    laplace_rho: float | None
    violations: list = field(default_factory=list)
    center_window_ok: bool = True
    center_window_max_gap: float = 0.0
    lower_envelope_ratio_at_half: float = 1.0
    roots_tried: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        d["violations"] = [[a, g] for a, g in self.violations]
        return d


# -- rate-function pieces ---------------------------------------------------

def entropy(alpha):
    """-a ln a - (1 - a) ln(1 - a), zero at both endpoints."""
    a = np.asarray(alpha, dtype=float)
    if np.any((a < 0) | (a > 1)):
        raise ValueError("alpha must lie in [0, 1]")
    out = entr(a) + entr(1.0 - a)
    return float(out) if out.ndim == 0 else out


def entropy_deficit(t):
    """H(1/2 + t) - ln 2 without cancellation for small |t|."""
    t = np.asarray(t, dtype=float)
    u = 2.0 * t
    u2 = u * u
    # -sum_j u^(2j) / (2j (2j - 1))
    series = np.zeros_like(u)
    term = np.ones_like(u)
    for j in range(1, 31):
        term = term * u2
        series -= term / (2 * j * (2 * j - 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = -0.5 * ((1 + u) * np.log1p(u) + (1 - u) * np.log1p(-u))
        direct = np.where(np.abs(u) == 1.0, -LN2, direct)
    out = np.where(np.abs(u) < 0.5, series, direct)
    return float(out) if out.ndim == 0 else out


def log_G_r(alpha, scheme: WeightScheme, r: float):
    f = np.asarray(pair_correlation(np.asarray(alpha, dtype=float), scheme))
    if np.any(f <= 0):
        raise NonPositiveCorrelation(f"f <= 0 for k={scheme.k}, beta={scheme.beta}, gamma={scheme.gamma}")
    out = r * np.log(f) + entropy(alpha)
    return float(out) if np.ndim(out) == 0 else out


def _golden_min(fun, lo, hi, iterations=90, rtol=1e-15, atol=0.0):
    """Vectorised golden-section search; returns (argmin, min) per element."""
    x1 = hi - INV_PHI * (hi - lo)
    x2 = lo + INV_PHI * (hi - lo)
    f1, f2 = fun(x1), fun(x2)
    for _ in range(iterations):
        right = f1 < f2  # minimum lies in [lo, x2]
        hi = np.where(right, x2, hi)
        lo = np.where(right, lo, x1)
        nx1 = np.where(right, hi - INV_PHI * (hi - lo), x2)
        nx2 = np.where(right, x1, lo + INV_PHI * (hi - lo))
        nf1 = np.where(right, np.nan, f2)
        nf2 = np.where(right, f1, np.nan)
        need1 = np.isnan(nf1)
        need2 = np.isnan(nf2)
        if need1.any():
            nf1 = np.where(need1, fun(nx1), nf1)
        if need2.any():
            nf2 = np.where(need2, fun(nx2), nf2)
        x1, x2, f1, f2 = nx1, nx2, nf1, nf2
        if np.all(hi - lo <= rtol * np.abs(hi) + atol):
            break
    take1 = f1 <= f2
    return np.where(take1, x1, x2), np.where(take1, f1, f2)


def f_lower(alpha, scheme: WeightScheme, *, grid_points: int = 48, return_argmin: bool = False):
    """inf_{gamma >= gamma0} f(alpha, beta, gamma) with gamma0 = scheme.gamma.

    The search interval [gamma0, cap] starts at cap = 4 gamma0 and doubles (up to
    64 gamma0) while f is still decreasing at the cap.  A geometric grid brackets the
    minimiser, then golden-section search polishes it.  Capping can only overestimate
    the infimum, which keeps the certificate conservative.
    """
    if abs(balance_residual(scheme)) >= 1e-8:
        raise NotBalanced(f"gamma={scheme.gamma} does not solve the balance equation for k={scheme.k}, beta={scheme.beta}")
    k, beta, g0 = scheme.k, scheme.beta, scheme.gamma
    scalar = np.ndim(alpha) == 0
    a = np.atleast_1d(np.asarray(alpha, dtype=float))

    def fk(aa, gg):
        return pair_correlation_gamma(aa, k, beta, gg)

    cap = np.full(a.shape, 4.0 * g0)
    for _ in range(4):
        rising = fk(a, cap) >= fk(a, cap * (1 - 1e-6))
        if rising.all():
            break
        cap = np.where(rising, cap, 2.0 * cap)

    u = np.linspace(0.0, 1.0, grid_points)
    G = g0 * (cap / g0)[:, None] ** u[None, :]
    F = fk(a[:, None], G)
    i = F.argmin(axis=1)
    rows = np.arange(a.size)
    lo = G[rows, np.maximum(i - 1, 0)]
    hi = G[rows, np.minimum(i + 1, grid_points - 1)]
    # value error is quadratic in the argmin error, so 1e-10 relative in gamma is ample
    x, fx = _golden_min(lambda gg: fk(a, gg), lo, hi, rtol=1e-10)

    grid_min = F[rows, i]
    use_grid = grid_min < fx
    value = np.where(use_grid, grid_min, fx)
    arg = np.where(use_grid, G[rows, i], x)
    at_g0 = F[:, 0] <= value
    value = np.where(at_g0, F[:, 0], value)
    arg = np.where(at_g0, g0, arg)
    if scalar:
        value, arg = float(value[0]), float(arg[0])
    return (value, arg) if return_argmin else value


def second_derivative_at_half(scheme: WeightScheme, r: float) -> float:
    """d^2/d alpha^2 of ln G_r at 1/2 = r f''(1/2) / f(1/2) - 4 (needs f'(1/2) = 0)."""
    poly = as_polynomial(scheme)
    d1 = derivative_at(poly, 0.5, 1)
    if abs(d1) >= STATIONARY_TOL:
        raise NotBalanced(f"f'(1/2) = {d1:.3e} for k={scheme.k}, beta={scheme.beta}, gamma={scheme.gamma}")
    return float(r * derivative_at(poly, 0.5, 2) / poly(0.5) - 4.0)


def laplace_rho(second_derivative_log: float) -> float:
    """rho with g''(1/2) = -g_max / (1/4) * rho^-2, i.e. rho = sqrt(4 / -(ln g)'')."""
    if not second_derivative_log < 0:
        raise ValueError("rho is only defined for negative curvature")
    return math.sqrt(4.0 / -second_derivative_log)


def ap_bound(k: int) -> float:
    """2^k ln 2 - (k + 1) ln 2 / 2 - 1 (the delta_k correction is unknown and omitted)."""
    if k < 3:
        raise ValueError("k must be >= 3")
    return 2.0**k * LN2 - (k + 1) * LN2 / 2.0 - 1.0


# -- the scan ---------------------------------------------------------------

@dataclass
class ScanData:
    """Per-alpha scan results, sorted by alpha (refinement points merged in)."""

    alpha: np.ndarray
    log_g_lower: np.ndarray
    log_G: np.ndarray
    violation: np.ndarray
    refined: np.ndarray
    center: float


def _coarse_alphas(grid: GridSpec) -> np.ndarray:
    n = math.ceil(1.0 / grid.coarse_step - 1e-9)
    return np.arange(n + 1) / n


def _off_center(alpha: np.ndarray, grid: GridSpec) -> np.ndarray:
    return np.abs(alpha - 0.5) >= grid.center_window * (1 - 1e-12)


class _Scanner:
    def __init__(self, scheme: WeightScheme, r: float, grid: GridSpec):
        self.scheme, self.r, self.grid = scheme, r, grid
        self.f_half = float(pair_correlation(0.5, scheme))
        self.center = r * math.log(self.f_half) + LN2
        self.margin = grid.margin * max(1.0, abs(self.center))
        self.shifted = centered_coefficients(scheme)

    def log_g_lower(self, alpha):
        fl = f_lower(alpha, self.scheme)
        if np.any(fl <= 0):
            bad = np.asarray(alpha)[np.asarray(fl) <= 0]
            raise NonPositiveCorrelation(f"f_lower <= 0 at alpha={float(bad.flat[0])}")
        return self.r * np.log(fl) + entropy(alpha)

    def center_gap(self, t):
        """log G_r(1/2 + t) - log G_r(1/2), evaluated in shifted coordinates."""
        t = np.asarray(t, dtype=float)
        delta = np.zeros_like(t)
        for c in self.shifted[:0:-1]:
            delta = (delta + c) * t
        return self.r * np.log1p(delta / self.f_half) + entropy_deficit(t)

    def refine_alphas(self, alpha, gap):
        """Fine grids around coarse local maxima whose gap is within 10 margins of zero."""
        near = gap > -10.0 * self.margin
        if not near.any():
            return np.empty(0)
        padded = np.concatenate(([-np.inf], gap, [-np.inf]))
        local_max = (gap >= padded[:-2]) & (gap >= padded[2:])
        idx = np.flatnonzero(near & local_max)
        idx = idx[np.argsort(-gap[idx], kind="stable")][:64]
        step, h = self.grid.refine_step, self.grid.coarse_step
        pts = []
        offsets = np.arange(-math.floor(h / step), math.floor(h / step) + 1) * step
        for i in np.sort(idx):
            pts.append(alpha[i] + offsets)
        pts = np.unique(np.clip(np.concatenate(pts), 0.0, 1.0))
        return pts[_off_center(pts, self.grid)]

    def polish_local_maxima(self, alpha, gap, limit: int = 64, iterations: int = 60):
        """Golden-section maximisation of the off-center gap around each coarse local maximum.

        Coarse grids can step over a narrow bump; polishing bounds that risk without
        assuming anything about the bump's width.
        """
        padded = np.concatenate(([-np.inf], gap, [-np.inf]))
        local_max = (gap >= padded[:-2]) & (gap >= padded[2:])
        idx = np.flatnonzero(local_max)
        idx = np.sort(idx[np.argsort(-gap[idx], kind="stable")][:limit])
        if idx.size == 0:
            return np.empty(0)
        lo = alpha[np.maximum(idx - 1, 0)]
        hi = alpha[np.minimum(idx + 1, alpha.size - 1)]
        # stay on the same side of the center window as the coarse maximum
        w = self.grid.center_window
        left = alpha[idx] < 0.5
        hi = np.where(left, np.minimum(hi, 0.5 - w), hi)
        lo = np.where(left, lo, np.maximum(lo, 0.5 + w))
        x, _ = _golden_min(lambda a: -self.log_g_lower(a), lo, hi, iterations, rtol=0.0, atol=1e-12)
        return x

    def center_ts(self):
        n = int(round(self.grid.center_window / self.grid.refine_step))
        pos = np.arange(1, n) * self.grid.refine_step
        return np.concatenate((-pos[::-1], pos))


def scan(scheme: WeightScheme, r: float, grid: GridSpec | None = None) -> ScanData:
    """Evaluate both rate functions over the coarse grid (plus refinement points)."""
    grid = grid or GridSpec()
    sc = _Scanner(scheme, r, grid)
    alpha = _coarse_alphas(grid)
    off = _off_center(alpha, grid)
    lgl = sc.log_g_lower(alpha)
    lG = log_G_r(alpha, scheme, r)
    gap_off = lgl - sc.center
    viol = np.where(off, gap_off >= -sc.margin, False)
    inner = ~off & (alpha != 0.5)
    viol |= inner & (sc.center_gap(alpha - 0.5) >= 0)
    refined = np.zeros(alpha.shape, dtype=bool)

    extra = np.concatenate((
        sc.refine_alphas(alpha[off], gap_off[off]),
        sc.polish_local_maxima(alpha[off], gap_off[off]),
    ))
    extra = np.setdiff1d(extra, alpha)
    if extra.size:
        e_lgl = sc.log_g_lower(extra)
        e_lG = log_G_r(extra, scheme, r)
        alpha = np.concatenate((alpha, extra))
        lgl = np.concatenate((lgl, e_lgl))
        lG = np.concatenate((lG, e_lG))
        viol = np.concatenate((viol, e_lgl - sc.center >= -sc.margin))
        refined = np.concatenate((refined, np.ones(extra.shape, dtype=bool)))
        order = np.argsort(alpha, kind="stable")
        alpha, lgl, lG, viol, refined = (x[order] for x in (alpha, lgl, lG, viol, refined))
    return ScanData(alpha, lgl, lG, viol, refined, sc.center)


def certify_scheme(scheme: WeightScheme, r: float, grid: GridSpec | None = None) -> CertificateReport:
    """Certify a single balanced scheme at density r."""
    grid = grid or GridSpec()
    if not r > 0:
        raise ValueError("r must be positive")
    sc = _Scanner(scheme, r, grid)

    alpha = _coarse_alphas(grid)
    alpha = alpha[_off_center(alpha, grid)]
    log_g = sc.log_g_lower(alpha)
    extra = np.concatenate((
        sc.refine_alphas(alpha, log_g - sc.center),
        sc.polish_local_maxima(alpha, log_g - sc.center),
    ))
    extra = np.setdiff1d(extra, alpha)
    if extra.size:
        alpha = np.concatenate((alpha, extra))
        log_g = np.concatenate((log_g, sc.log_g_lower(extra)))
    gap = log_g - sc.center
    bad = gap >= -sc.margin
    violations = sorted(zip(alpha[bad].tolist(), log_g[bad].tolist()))
    w = int(np.argmax(gap))

    ts = sc.center_ts()
    cgap = sc.center_gap(ts)
    center_ok = bool(np.all(cgap < 0))
    cbad = cgap >= 0
    violations.extend(zip((0.5 + ts[cbad]).tolist(), (sc.center + cgap[cbad]).tolist()))
    violations.sort()

    d2 = second_derivative_at_half(scheme, r)
    rho = laplace_rho(d2) if d2 < 0 else None
    passed = not violations and d2 < 0 and center_ok
    return CertificateReport(
        k=scheme.k,
        beta=scheme.beta,
        gamma=scheme.gamma,
        r=float(r),
        passed=bool(passed),
        log_g_at_half=sc.center,
        worst_off_center_alpha=float(alpha[w]),
        worst_off_center_log_g=float(log_g[w]),
        min_gap=float(-gap[w]),
        second_derivative_log=d2,
        laplace_rho=rho,
        violations=[(float(a), float(g)) for a, g in violations],
        center_window_ok=center_ok,
        center_window_max_gap=float(cgap.max()),
        lower_envelope_ratio_at_half=float(f_lower(0.5, scheme) / sc.f_half),
        roots_tried=[scheme.gamma],
    )


def certify(k: int, beta: float, r: float, grid: GridSpec | None = None) -> CertificateReport:
    """Certify r_k >= r for the (beta, gamma0) scheme, trying every balanced gamma0."""
    if k < 3:
        raise ValueError("k must be >= 3")
    if not r > 0:
        raise ValueError("r must be positive")
    roots = solve_gamma(k, beta)
    reports = [certify_scheme(WeightScheme(k, beta, g), r, grid) for g in roots.gammas]
    best = max(reports, key=lambda rep: (rep.passed, rep.min_gap))
    best.roots_tried = list(roots.gammas)
    return best
