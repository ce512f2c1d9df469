"""Ground truth for the moment formulas at desk scale.

Random formulas follow the ordered-literal model: each clause is a k-tuple of literals,
every literal an independent uniform choice of variable (repeats allowed) and sign, so
there are (2n)^k equally likely clauses.  The exhaustive routines enumerate exactly that
space; nothing here calls the closed forms being validated.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .correlation import as_polynomial, derivative_at, log_second_moment
from .errors import NotBalanced, TooLarge
from .weights import WeightScheme, binomial_row, log_first_moment_m, weight_table

MAX_CLAUSES = 10**6
MAX_ASSIGNMENTS = 2**16
MAX_PAIR_WORK = 10**9
MAX_TRUNCATED_M = 10**5


@dataclass(frozen=True)
class FormulaModel:
    k: int
    n: int
    m: int

    def __post_init__(self):
        if self.k < 1 or self.n < 1 or self.m < 0:
            raise ValueError(f"need k >= 1, n >= 1, m >= 0; got {self}")

    @property
    def clause_space_size(self) -> int:
        return (2 * self.n) ** self.k


@dataclass
class OracleReport:
    k: int
    n: int
    m: int
    analytic_log_EX: float
    analytic_log_EX2: float
    exact_log_EX: float | None = None
    exact_log_EX2: float | None = None
    rel_error_EX: float | None = None
    rel_error_EX2: float | None = None
    max_rel_error_pair: float | None = None
    xplus_ratio: float | None = None
    mc_estimate: float | None = None
    mc_stddev: float | None = None
    mc_stderr: float | None = None
    mc_second_moment: float | None = None
    samples: int | None = None
    seed: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def all_clauses(n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Every ordered k-tuple of literals: (variables, signs), each of shape ((2n)^k, k)."""
    lits = np.indices((2 * n,) * k).reshape(k, -1).T
    return lits // 2, lits % 2


def all_assignments(n: int) -> np.ndarray:
    """Rows are the 2^n truth assignments, bit j of row s is variable j."""
    s = np.arange(2**n)[:, None]
    return ((s >> np.arange(n)[None, :]) & 1).astype(np.int8)


def satisfied_counts(assign: np.ndarray, variables: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """d(sigma, c) for every assignment row and clause: shape (assignments, clauses)."""
    return (assign[:, variables] == signs[None, :, :]).sum(axis=-1)


def _guard(model: FormulaModel):
    if model.clause_space_size > MAX_CLAUSES or 2**model.n > MAX_ASSIGNMENTS:
        raise TooLarge(f"exhaustive enumeration refused for {model}")


def exact_first_moment(model: FormulaModel, scheme: WeightScheme) -> float:
    """sum_sigma (E_c omega(sigma, c))^m by enumerating every clause."""
    _guard(model)
    if scheme.k != model.k:
        raise ValueError("scheme and model disagree on k")
    var, sgn = all_clauses(model.n, model.k)
    d = satisfied_counts(all_assignments(model.n), var, sgn)
    ec = weight_table(scheme)[d].mean(axis=1)
    if not np.allclose(ec, ec[0], rtol=1e-12, atol=0):
        raise AssertionError("per-clause expectation depends on sigma")
    return float(np.sum(ec**model.m))


def _gamma_expansion(d_s, d_t, scheme: WeightScheme):
    """gamma^(H(s) + H(t)) * Gamma((s, t), beta, c) from its indicator expansion."""
    k, beta, g = scheme.k, scheme.beta, scheme.gamma
    uns_s, uns_t = (d_s == 0).astype(float), (d_t == 0).astype(float)
    one_s, one_t = (d_s == 1).astype(float), (d_t == 1).astype(float)
    big_gamma = (
        1.0 - uns_s - uns_t + uns_s * uns_t
        + beta * (one_s + one_t - one_s * uns_t - uns_s * one_t)
        + beta**2 * (one_s * one_t)
    )
    return g ** (2.0 * (d_s + d_t) - 2 * k) * big_gamma


def pair_expectations(model: FormulaModel, scheme: WeightScheme, check_product: bool = True) -> np.ndarray:
    """Inner expectation E_c[gamma^(H+H') Gamma] for every assignment pair.

    Returns an array of shape (2^n, 2^n).  With ``check_product`` the indicator
    expansion is also compared against the plain product of clause weights.
    """
    _guard(model)
    if 4**model.n * model.clause_space_size > MAX_PAIR_WORK:
        raise TooLarge(f"pair enumeration refused for {model}")
    var, sgn = all_clauses(model.n, model.k)
    d = satisfied_counts(all_assignments(model.n), var, sgn)
    w = weight_table(scheme)[d]
    out = np.empty((d.shape[0], d.shape[0]))
    for s in range(d.shape[0]):
        vals = _gamma_expansion(d[s][None, :], d, scheme)
        if check_product and not np.allclose(vals, w[s][None, :] * w, rtol=1e-12, atol=1e-300):
            raise AssertionError("indicator expansion disagrees with the weight product")
        out[s] = vals.mean(axis=1)
    return out


def overlap_counts(n: int) -> np.ndarray:
    """z(sigma, tau) = number of agreeing variables, shape (2^n, 2^n)."""
    a = all_assignments(n)
    return (a[:, None, :] == a[None, :, :]).sum(axis=-1)


def pair_expectations_by_overlap(model: FormulaModel, scheme: WeightScheme) -> np.ndarray:
    """Inner expectation as a function of z = 0..n; raises if pairs with equal z disagree."""
    vals = pair_expectations(model, scheme)
    z = overlap_counts(model.n)
    out = np.empty(model.n + 1)
    for j in range(model.n + 1):
        v = vals[z == j]
        if not np.allclose(v, v[0], rtol=1e-12, atol=0):
            raise AssertionError(f"pair expectation is not a function of the overlap (z={j})")
        out[j] = v[0]
    return out


def exact_second_moment(model: FormulaModel, scheme: WeightScheme) -> float:
    """sum_{sigma, tau} (E_c[gamma^(H+H') Gamma])^m by exhaustive enumeration."""
    vals = pair_expectations(model, scheme)
    return float(np.sum(vals**model.m))


def _sample_batch(rng, n, m, k, batch):
    var = rng.integers(0, n, size=(batch, m, k))
    sgn = rng.integers(0, 2, size=(batch, m, k)).astype(np.int8)
    return var, sgn


def _weighted_sums(assign, weights, var, sgn, chunk_elems=4_000_000):
    """X(F) = sum_sigma prod_c omega(sigma, c) for each formula in the batch."""
    b, m, k = var.shape
    rows = max(1, chunk_elems // max(1, b * m * k))
    total = np.zeros(b)
    for start in range(0, assign.shape[0], rows):
        a = assign[start:start + rows]
        d = (a[:, var] == sgn[None]).sum(axis=-1)  # (rows, b, m)
        total += weights[d].prod(axis=-1).sum(axis=0)
    return total


def mc_moments(model: FormulaModel, scheme: WeightScheme, samples: int, seed: int) -> OracleReport:
    """Sample formulas, compute X exactly for each by a full assignment sweep."""
    if samples < 1:
        raise ValueError("samples must be positive")
    if model.n > 24:
        raise TooLarge("mc_moments sweeps all 2^n assignments; n must be <= 24")
    rng = np.random.default_rng(seed)
    assign = all_assignments(model.n)
    weights = weight_table(scheme)
    per = max(1, 4_000_000 // max(1, assign.shape[0] * max(model.m, 1) * model.k))
    xs = []
    done = 0
    while done < samples:
        b = min(per, samples - done)
        var, sgn = _sample_batch(rng, model.n, model.m, model.k, b)
        if model.m == 0:
            xs.append(np.full(b, float(assign.shape[0])))
        else:
            xs.append(_weighted_sums(assign, weights, var, sgn))
        done += b
    x = np.concatenate(xs)
    sd = float(x.std(ddof=1)) if samples > 1 else 0.0
    return OracleReport(
        k=model.k,
        n=model.n,
        m=model.m,
        analytic_log_EX=log_first_moment_m(scheme, model.n, model.m),
        analytic_log_EX2=log_second_moment(scheme, model.n, model.m),
        mc_estimate=float(x.mean()),
        mc_stddev=sd,
        mc_stderr=sd / math.sqrt(samples),
        mc_second_moment=float(np.mean(x * x)),
        samples=samples,
        seed=seed,
    )


def _require_balanced(scheme: WeightScheme):
    d1 = derivative_at(as_polynomial(scheme), 0.5, 1)
    if abs(d1) >= 1e-10:
        raise NotBalanced(f"f'(1/2) = {d1:.3e}; truncated ratio needs a balanced scheme")


def truncated_ratio(scheme: WeightScheme, m: int) -> float:
    """E[X+] / E[X] at m clauses, where X+ keeps assignments with total H >= 0.

    For a fixed assignment the satisfied counts d_c of the m clauses are i.i.d.
    Binomial(k, 1/2); weighting by omega tilts them to q(d) ~ C(k, d) omega(d), and
    the ratio is the tilted probability that sum_c (2 d_c - k) >= 0.  The sum of d_c
    is tracked exactly by a clause-by-clause convolution, trimming underflowed tails
    and renormalising each step.
    """
    _require_balanced(scheme)
    if m < 0 or m > MAX_TRUNCATED_M:
        raise TooLarge(f"m must be in [0, {MAX_TRUNCATED_M}]")
    k = scheme.k
    q = binomial_row(k) * weight_table(scheme)
    q /= q.sum()
    dist = np.array([1.0])
    offset = 0  # dist[i] is the mass at sum_d = offset + i
    for _ in range(m):
        dist = np.convolve(dist, q)
        dist /= dist.sum()
        keep = np.flatnonzero(dist > 1e-300 * dist.max())
        lo, hi = keep[0], keep[-1] + 1
        dist = dist[lo:hi]
        offset += lo
    s = offset + np.arange(dist.size)
    return float(dist[2 * s >= k * m].sum() / dist.sum())


def exact_truncated_ratio(model: FormulaModel, scheme: WeightScheme) -> float:
    """E[X+] / E[X] by enumerating every formula of the model (tiny sizes only)."""
    total_formulas = model.clause_space_size**model.m
    if total_formulas > MAX_CLAUSES or 2**model.n > MAX_ASSIGNMENTS:
        raise TooLarge(f"formula enumeration refused for {model}")
    var, sgn = all_clauses(model.n, model.k)
    d = satisfied_counts(all_assignments(model.n), var, sgn)  # (assignments, clauses)
    w = weight_table(scheme)[d]
    h = 2 * d - model.k
    ex = 0.0
    ex_plus = 0.0
    # formulas are m-tuples of clause indices; accumulate over assignments
    idx = np.indices((model.clause_space_size,) * model.m).reshape(model.m, -1)
    for s in range(d.shape[0]):
        prod = np.ones(idx.shape[1])
        hsum = np.zeros(idx.shape[1], dtype=int)
        for j in range(model.m):
            prod = prod * w[s][idx[j]]
            hsum = hsum + h[s][idx[j]]
        ex += prod.sum()
        ex_plus += prod[hsum >= 0].sum()
    return ex_plus / ex


def oracle_report(model: FormulaModel, scheme: WeightScheme) -> OracleReport:
    """Exhaustive moments next to the closed forms, plus the truncated ratio when defined."""
    from .correlation import pair_correlation

    n, m = model.n, model.m
    a1 = log_first_moment_m(scheme, n, m)
    a2 = log_second_moment(scheme, n, m)
    e1 = exact_first_moment(model, scheme)
    e2 = exact_second_moment(model, scheme)
    inner = pair_expectations_by_overlap(model, scheme)
    analytic_inner = pair_correlation(np.arange(n + 1) / n, scheme)
    try:
        ratio = truncated_ratio(scheme, m)
    except NotBalanced:
        ratio = None
    return OracleReport(
        k=model.k,
        n=n,
        m=m,
        analytic_log_EX=a1,
        analytic_log_EX2=a2,
        exact_log_EX=math.log(e1),
        exact_log_EX2=math.log(e2),
        rel_error_EX=abs(e1 - math.exp(a1)) / math.exp(a1),
        rel_error_EX2=abs(e2 - math.exp(a2)) / math.exp(a2),
        max_rel_error_pair=float(np.max(np.abs(inner - analytic_inner) / np.abs(analytic_inner))),
        xplus_ratio=ratio,
    )
