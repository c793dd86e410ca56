"""Exception types shared across the toolkit.

Class names are part of the CLI contract: computation failures are reported
as machine-readable error objects carrying the class name verbatim.
"""


class SvarError(Exception):
    """Base class for all toolkit errors."""


# -- data ingestion and transforms -------------------------------------------

class IoError(SvarError):
    """File missing or unreadable."""


class ParseError(SvarError):
    """A cell failed to parse as a finite real number.

    Coordinates are 0-based within the data matrix (header and index
    column excluded).
    """

    def __init__(self, message: str, row: int, col: int):
        super().__init__(message)
        self.row = row
        self.col = col


class ShapeError(SvarError):
    """Dimensions of inputs are inconsistent."""


class DomainError(SvarError):
    """A value lies outside the mathematical domain of the transform."""


# -- estimation ---------------------------------------------------------------

class InsufficientData(SvarError):
    """Too few rows for the requested fit."""


class SingularRegressors(SvarError):
    """Regressor Gram matrix is numerically singular."""


class InvalidOrder(SvarError):
    """Operation requires a positive lag order."""


class EmptySelection(SvarError):
    """A variable selection was empty."""


# -- identification -----------------------------------------------------------

class NotPositiveDefinite(SvarError):
    """A covariance matrix is not positive definite."""


class NearUnitRoot(SvarError):
    """The long-run matrix is ill-conditioned; long-run identification is unreliable."""


class WeakInstrument(SvarError):
    """First-stage relevance statistic below the accepted threshold."""


class NegativeDf(SvarError):
    """Candidate has fewer restrictions than required for identification."""


class InfeasibleRestrictions(SvarError):
    """No impact column satisfies all equality and sign restrictions."""


class TooManyRestrictions(SvarError):
    """Inequality-restriction count exceeds the enumeration guard."""


# -- dynamics -----------------------------------------------------------------

class DegenerateVariance(SvarError):
    """A forecast-error variance is zero; shares are undefined."""


class SingularImpact(SvarError):
    """Impact matrix cannot be inverted to recover structural shocks."""


# -- cointegration ------------------------------------------------------------

class RankDeficient(SvarError):
    """Loading or cointegration matrix does not have the required rank."""


class NonInvertibleLoading(SvarError):
    """A loading cross-product required to be invertible is singular."""


# -- robust estimation --------------------------------------------------------

class DegenerateSubset(SvarError):
    """Best trimming subset has a singular residual scatter."""


# -- structural breaks --------------------------------------------------------

class DegenerateSeries(SvarError):
    """Long-run variance estimate is non-positive."""


class NonConvergence(SvarError):
    """Optimizer hit the iteration cap before the convergence criterion."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


# -- simulation ---------------------------------------------------------------

class UnstableDgp(SvarError):
    """Requested simulation uses an explosive coefficient matrix."""
