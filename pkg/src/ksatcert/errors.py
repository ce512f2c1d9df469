"""Exception hierarchy shared by the numerical modules."""


class KSatCertError(Exception):
    """Base class for numerical failures (mapped to CLI exit code 3)."""


class NoRoot(KSatCertError):
    """The balance equation has no sign change on the scanned lambda range."""


class NonPositiveCorrelation(KSatCertError):
    """The pair correlation f is not strictly positive where a logarithm is needed."""


class NotBalanced(KSatCertError):
    """An operation that requires f'(1/2) = 0 received an unbalanced scheme."""


class BadBracket(KSatCertError):
    """Bisection on r was given a bracket that does not straddle pass/fail."""


class TooLarge(KSatCertError):
    """An exhaustive or sampling oracle was asked for an instance beyond its guard."""
