"""Exception hierarchy for jostkit.

Every error raised on a documented failure path derives from
:class:`JostkitError` so callers can catch the library's own failures
without swallowing programming errors.
"""


class JostkitError(Exception):
    """Base class for all jostkit errors."""


# --- linear algebra ---------------------------------------------------------

class NonSquare(JostkitError):
    """Operation requires a square matrix."""


class Singular(JostkitError):
    """Matrix is numerically singular (pivot or condition check failed)."""


class BadSplit(JostkitError):
    """Block split index exceeds the matrix dimension."""


class RankAmbiguous(JostkitError):
    """A singular value sits too close to the rank cutoff to classify.

    Raised when a singular value lies within a factor of 10 of
    ``tol * sigma_max`` on either side; the caller must adjust ``tol``.
    """

    def __init__(self, msg, sigma=None, cutoff=None):
        super().__init__(msg)
        self.sigma = sigma
        self.cutoff = cutoff


class ChainConstructionFailed(JostkitError):
    """A generalized-eigenvector chain could not be completed stably."""


# --- model / input ----------------------------------------------------------

class ParseError(JostkitError):
    """Potential document does not parse against the schema."""


class NotSelfadjoint(JostkitError):
    """A potential value or delta weight fails the selfadjointness check."""


class OverlappingPieces(JostkitError):
    """Regular potential pieces overlap or are out of order."""


class NotSelfadjointPairing(JostkitError):
    """Boundary matrices violate B†A = A†B."""


class NotPositive(JostkitError):
    """A†A + B†B has an eigenvalue below the positivity floor."""


class MomentWarning(UserWarning):
    """Estimated potential moment exceeds the configured cap.

    A warning rather than an error: truncation at ``x_max`` keeps every
    computed quantity finite regardless of the declared tail.
    """


# --- solver -----------------------------------------------------------------

class StepFailure(JostkitError):
    """Adaptive step size underflowed or the step budget was exhausted."""


class OutOfDomain(JostkitError):
    """Jost fields are only defined for Im k >= 0."""


class OutOfGrid(JostkitError):
    """Requested evaluation point lies outside the stored grid."""


class NoInvertiblePoint(JostkitError):
    """No base point a in [0, x_max] with an acceptably conditioned f(0,a)."""


# --- scattering / small-k ---------------------------------------------------

class ClosedFormMismatch(JostkitError):
    """Numerical and closed-form inverses of the 2n x 2n block matrix differ."""


class JostSingular(JostkitError):
    """J(k) is numerically singular at a real k != 0."""


class NotGeneric(JostkitError):
    """Generic-case expansion requested but J(0) is singular."""


class NotExceptional(JostkitError):
    """Exceptional-case expansion requested but J(0) is invertible."""


class BlockSingular(JostkitError):
    """A leading or trailing block that must be invertible is not."""


class BasePointSingular(JostkitError):
    """f(0,x) (or f'(0,x)) is not invertible at the requested base point."""
