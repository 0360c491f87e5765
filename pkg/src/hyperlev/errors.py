"""Exception and warning types shared across the library."""


class HyperlevError(Exception):
    """Base class for all library-specific errors."""


# --- series engine ---------------------------------------------------------

class ZeroLeadingCoefficient(HyperlevError):
    """Leading coefficient of a series is (numerically) zero where it must not be."""


class PrincipalPartPresent(HyperlevError):
    """Operation requires a series without negative exponents."""


class UnsupportedOrder(HyperlevError):
    """Series has a leading exponent outside the supported set."""


class NonvanishingInner(HyperlevError):
    """Inner series of a composition must vanish at the origin."""


# --- model -----------------------------------------------------------------

class PoleEvaluation(HyperlevError):
    """Evaluation point is too close to a pole of the rational exponent."""


class RhoOneTooSmall(HyperlevError):
    """Smallest positive jump rate must exceed 1 for this operation."""


class InconsistentRoots(HyperlevError):
    """Root set fails a consistency check (e.g. mixture mass far from 1)."""


# --- root expansions -------------------------------------------------------

class RegimeMismatch(HyperlevError):
    """Requested expansion does not exist in the model's regime."""


class IndexOutOfRange(HyperlevError, IndexError):
    """Root index outside 1..N (resp. 1..N-hat)."""


class BracketFailure(HyperlevError):
    """No sign change found in an interlacing interval; parameters invalid."""


class TrackingDivergence(HyperlevError):
    """Newton refinement failed to converge while tracking a root path."""


class BelowValidityThreshold(UserWarning):
    """Series evaluated below its calibrated validity threshold (soft)."""


# --- special functions / pricing ------------------------------------------

class DomainError(HyperlevError):
    """Argument outside the analytic domain (e.g. Re(t) <= 0)."""


class GaussianRequired(HyperlevError):
    """Operation requires a strictly positive diffusion coefficient."""


class NotRiskNeutral(HyperlevError):
    """Model violates the risk-neutral condition required here."""


class AtKinkPoint(HyperlevError):
    """Derivative requested exactly at the kink of a shifted power series.

    Carries both one-sided values in ``left`` and ``right``.
    """

    def __init__(self, message, left=None, right=None):
        super().__init__(message)
        self.left = left
        self.right = right


class ConvergenceWarning(RuntimeWarning):
    """Truncated series shows a non-negligible tail at the evaluation point."""


# --- Laplace inversion / CLI -----------------------------------------------

class ContourOutOfStrip(HyperlevError):
    """Bromwich abscissa outside the transform's strip of analyticity."""


class ConfigError(HyperlevError):
    """Invalid command-line configuration."""


class FixtureError(HyperlevError):
    """Parameter fixture file missing or malformed."""
