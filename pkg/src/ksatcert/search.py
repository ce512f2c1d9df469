"""Largest certifiable density r, optimisation over beta, and the reference table."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .certify import GridSpec, certify
from .errors import BadBracket, NoRoot

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

# reference (k, beta interval, density) rows; single-valued betas have lo == hi
REFERENCE_TABLE = (
    (3, (0.56, 0.74), 2.83),
    (4, (0.13, 0.15), 8.09),
    (5, (0.04, 0.06), 18.91),
    (6, (0.02, 0.02), 40.81),
    (7, (0.01, 0.01), 84.87),
)

# beta = 0 bounds quoted for comparison
BASELINE_R = {3: 2.68, 4: 7.91, 5: 18.79, 6: 40.74, 7: 84.82}


def default_r_bracket(k: int) -> tuple[float, float]:
    """A loose bracket: a quarter of, and exactly, the first-moment bound 2^k ln 2."""
    hi = 2.0**k * math.log(2.0)
    return hi / 4.0, hi


def _passes(k: int, beta: float, r: float, grid: GridSpec | None) -> bool:
    try:
        return certify(k, beta, r, grid).passed
    except NoRoot:
        return False


def max_certified_r(
    k: int,
    beta: float,
    r_lo: float | None = None,
    r_hi: float | None = None,
    precision: float = 1e-3,
    grid: GridSpec | None = None,
    trace: list | None = None,
) -> float:
    """Bisect r between a passing r_lo and a failing r_hi, running the full certificate at every probe."""
    if r_lo is None or r_hi is None:
        d_lo, d_hi = default_r_bracket(k)
        r_lo = d_lo if r_lo is None else r_lo
        r_hi = d_hi if r_hi is None else r_hi
    if not 0 < r_lo < r_hi:
        raise BadBracket(f"need 0 < r_lo < r_hi, got [{r_lo}, {r_hi}]")
    lo_ok = _passes(k, beta, r_lo, grid)
    if trace is not None:
        trace.append((beta, r_lo, lo_ok))
    if not lo_ok:
        raise BadBracket(f"certificate fails at r_lo={r_lo} (k={k}, beta={beta})")
    hi_ok = _passes(k, beta, r_hi, grid)
    if trace is not None:
        trace.append((beta, r_hi, hi_ok))
    if hi_ok:
        raise BadBracket(f"certificate passes at r_hi={r_hi} (k={k}, beta={beta})")
    while r_hi - r_lo > precision:
        mid = 0.5 * (r_lo + r_hi)
        ok = _passes(k, beta, mid, grid)
        if trace is not None:
            trace.append((beta, mid, ok))
        if ok:
            r_lo = mid
        else:
            r_hi = mid
    return r_lo


@dataclass
class SearchResult:
    k: int
    best_beta: float
    best_gamma: float
    r_certified: float
    r_precision: float
    trace: list = field(default_factory=list)
    passing_beta_range: tuple | None = None
    verified_fine_grid: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["trace"] = [{"beta": b, "r": r} for b, r in self.trace]
        d["passing_beta_range"] = list(self.passing_beta_range) if self.passing_beta_range else None
        return d


def _score(k, beta, bracket, precision, grid):
    try:
        return max_certified_r(k, beta, *bracket, precision=precision, grid=grid)
    except BadBracket:
        return 0.0


def optimize_beta(
    k: int,
    beta_lo: float = -0.5,
    beta_hi: float = 1.5,
    points: int = 50,
    precision: float = 1e-3,
    r_bracket: tuple[float, float] | None = None,
    grid: GridSpec | None = None,
    golden_iterations: int = 12,
    verify: bool = True,
) -> SearchResult:
    """Coarse beta grid scored by max_certified_r, then golden-section refinement around the best."""
    if not beta_lo > -1.0:
        raise ValueError("beta_lo must exceed -1")
    if beta_hi < beta_lo:
        raise ValueError("beta_hi < beta_lo")
    bracket = r_bracket or default_r_bracket(k)
    betas = np.array([beta_lo]) if beta_hi == beta_lo else np.linspace(beta_lo, beta_hi, points)
    scores = {}

    def score(b):
        b = float(b)
        if b not in scores:
            scores[b] = _score(k, b, bracket, precision, grid)
        return scores[b]

    vals = [score(b) for b in betas]
    i = int(np.argmax(vals))
    if len(betas) > 1 and vals[i] > 0:
        lo = float(betas[max(i - 1, 0)])
        hi = float(betas[min(i + 1, len(betas) - 1)])
        x1 = hi - INV_PHI * (hi - lo)
        x2 = lo + INV_PHI * (hi - lo)
        for _ in range(golden_iterations):
            if score(x1) >= score(x2):
                hi, x2 = x2, x1
                x1 = hi - INV_PHI * (hi - lo)
            else:
                lo, x1 = x1, x2
                x2 = lo + INV_PHI * (hi - lo)

    trace = sorted(scores.items())
    best_beta, best_r = max(trace, key=lambda br: (br[1], -abs(br[0])))
    if best_r <= 0:
        return SearchResult(k, float(best_beta), float("nan"), 0.0, precision, trace)

    passing = [b for b, r in trace if r >= best_r - precision]
    rep = certify(k, best_beta, best_r, grid)
    verified = False
    if verify:
        verified = certify(k, best_beta, best_r, (grid or GridSpec()).finer()).passed
    return SearchResult(
        k=k,
        best_beta=float(best_beta),
        best_gamma=rep.gamma,
        r_certified=float(best_r),
        r_precision=precision,
        trace=trace,
        passing_beta_range=(min(passing), max(passing)),
        verified_fine_grid=verified,
    )


@dataclass
class TableRow:
    k: int
    beta: float
    gamma: float
    r: float
    passed: bool
    role: str
    min_gap: float
    second_derivative_log: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def reproduce_table(grid: GridSpec | None = None, endpoints: bool = False) -> list[TableRow]:
    """Certify each reference (k, beta, r); interval betas use the midpoint (and optionally both ends)."""
    rows = []
    for k, (b_lo, b_hi), r in REFERENCE_TABLE:
        cases = [("mid", round(0.5 * (b_lo + b_hi), 10))]
        if endpoints and b_lo != b_hi:
            cases += [("lo", b_lo), ("hi", b_hi)]
        for role, beta in cases:
            rep = certify(k, beta, r, grid)
            rows.append(TableRow(k, beta, rep.gamma, r, rep.passed, role, rep.min_gap, rep.second_derivative_log))
    return rows
