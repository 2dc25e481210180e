"""Exception and warning types shared across the package.

Every error carries a stable machine-readable code equal to its class name;
the CLI serializes that code into its JSON error records.
"""


class ComputationError(Exception):
    """Base class for all domain errors raised by this package."""

    @property
    def code(self) -> str:
        return type(self).__name__


# --- problem definition ---------------------------------------------------

class EllipticityViolation(ComputationError):
    """Principal symbol vanishes at a sampled direction."""


class NonpositivePotential(ComputationError):
    """Potential is not strictly positive on the sampled domain."""


class UnsupportedDimension(ComputationError):
    """Only one- and two-dimensional problems are supported."""


class DimensionMismatch(ComputationError):
    """Vector length does not match the operator's spatial dimension."""


class OutOfDomain(ComputationError):
    """Evaluation point lies outside the closed domain."""


class SmoothnessWarning(UserWarning):
    """Potential data is rougher than the theory behind the method assumes."""


class QuadratureWarning(UserWarning):
    """Quadrature refinement hit its cap without meeting the exactness target."""


# --- assembly -------------------------------------------------------------

class BasisOrderMismatch(ComputationError):
    """Basis family cannot realize the clamping order the operator needs."""


class QuadratureUnderflow(ComputationError):
    """Requested quadrature rule cannot integrate the basis degree exactly."""


class AsymmetryExceeded(ComputationError):
    """A matrix expected to be symmetric is too far from symmetric."""


class NotPositiveDefinite(ComputationError):
    """A matrix expected to be positive definite fails its factorization."""


# --- dense linear algebra -------------------------------------------------

class NoConvergence(ComputationError):
    """Iterative eigenvalue computation failed to converge."""


# --- companion / spectra ---------------------------------------------------

class ZeroEigenvalue(ComputationError):
    """Companion eigenvalue below the floor; no reciprocal is defined."""


class DegenerateState(ComputationError):
    """Eigenvector has a numerically vanishing first component block."""


class RankAmbiguous(ComputationError):
    """Singular values straddle the rank-truncation threshold."""


class EmptyChain(ComputationError):
    """A chain of generalized eigenvectors must contain at least one vector."""


class NearSpectrum(ComputationError):
    """Requested shift is too close to a computed eigenvalue."""


class CrossCheckFailed(ComputationError):
    """Two independent evaluation routes disagree beyond tolerance."""


# --- counting ---------------------------------------------------------------

class ContourNearZero(ComputationError):
    """Determinant magnitude dips below the floor on the contour."""


class PhaseUnresolved(ComputationError):
    """Phase unwrapping failed even after grid-doubling retries."""


class InsufficientResolvedRange(ComputationError):
    """Too few radii fall in the discretization-resolved counting window."""


# --- scans ------------------------------------------------------------------

class PotentialLeavesCone(ComputationError):
    """A potential family member loses strict positivity."""


# --- oracles ----------------------------------------------------------------

class RangeExceeded(ComputationError):
    """Argument outside the validated range of the special-function code."""


class NoSignChange(ComputationError):
    """No root bracket was found although the caller demanded roots."""


class DegenerateContrast(ComputationError):
    """Contrast too small; the matching determinant degenerates."""
