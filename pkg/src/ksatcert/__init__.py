"""Second-moment certification of random k-SAT threshold lower bounds under the (beta, gamma) clause weighting."""
from .certify import CertificateReport, GridSpec, ap_bound, certify, f_lower, log_G_r, second_derivative_at_half
from .constraint import RootSet, solve_gamma
from .correlation import AlphaPolynomial, as_polynomial, derivative_at, pair_correlation, pair_terms
from .errors import BadBracket, KSatCertError, NonPositiveCorrelation, NoRoot, NotBalanced, TooLarge
from .search import SearchResult, max_certified_r, optimize_beta, reproduce_table
from .weights import WeightScheme, balance_residual, clause_weight, log_first_moment, single_clause_expectation

__version__ = "0.1.0"
