"""Exception types shared across the package."""


class DirimageError(Exception):
    """Base class for all package errors."""


class NonPositiveModulus(DirimageError):
    """Period matrix has non-positive-definite imaginary part."""


class NonPositiveMetric(DirimageError):
    """Fiber metric -dd'log h is not positive definite."""


class DimensionMismatch(DirimageError):
    """Objects built over incompatible fibers or dimensions."""


class BidegreeMismatch(DirimageError):
    """Forms of different bidegree combined in a same-degree operation."""


class FiberMismatch(DirimageError):
    """Forms defined over different fibers combined pointwise."""


class BidegreeOutOfRange(DirimageError):
    """Requested (p, q) outside 0 <= p, q <= n, or a degree-shifting
    operation applied at the boundary of the range."""


class MissingBaseStencil(DirimageError):
    """A base-direction derivative was requested for a form with no
    s-dependence data."""


class StencilOutOfDomain(DirimageError):
    """Base stencil leaves the disc on which the family stays positive."""


class IllConditionedGram(DirimageError):
    """Gram matrix too ill-conditioned to invert reliably."""


class AmbiguousKernel(DirimageError):
    """No clear spectral gap separates near-zero eigenvalues from the rest."""


class ResolventBandMass(DirimageError):
    """Input to (box - 1)^{-1} has non-negligible mass in the excluded
    band around eigenvalue 1.  Usually reported as a diagnostic, raised
    only on request."""


class TruncationTooCoarse(DirimageError):
    """Theta series truncation too small for the requested tail bound."""


class ConfigInvalid(DirimageError):
    """Experiment configuration failed validation."""
