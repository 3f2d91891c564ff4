"""Exception types shared across the package."""


class LatticeSumError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(LatticeSumError):
    """Matrix or basis shapes are inconsistent with the requested operation."""


class DependentBasis(LatticeSumError):
    """Basis matrices are numerically linearly dependent over the reals."""


class BudgetExceeded(LatticeSumError):
    """Predicted or actual enumeration size exceeds the caller's point budget."""


class SingularPoint(LatticeSumError):
    """A determinant-weighted sum hit a lattice point with vanishing determinant."""


class HypothesisViolated(LatticeSumError):
    """Input data fails the growth hypothesis a bounding step relies on."""


class ProofBoundExceeded(LatticeSumError):
    """A weighted sum exceeded the bound its verified hypothesis guarantees."""


class MissingExponent(LatticeSumError):
    """The growth-exponent table lacks an entry needed by the envelope."""


class DegenerateFit(LatticeSumError):
    """The regression design matrix is rank deficient."""


class CodeTooLarge(LatticeSumError):
    """Finite code exceeds the exhaustive-decoder size cap."""


class RadiusOverflow(LatticeSumError):
    """Sphere decoding exceeded its search budget; treated as a decoding failure."""


class InsufficientStatistics(LatticeSumError):
    """Too few error events to estimate a slope reliably."""


class UnsupportedDegree(LatticeSumError):
    """Requested code construction is not implemented for this degree."""
