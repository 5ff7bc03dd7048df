"""
Exception hierarchy for spectral-contour.

Every failure the numerical core can signal derives from SpectralContourError,
so callers (the CLI in particular) can catch one base class and turn the
error into a failed report check instead of a traceback.
"""

from typing import List, Optional


class SpectralContourError(Exception):
    """Base exception for all spectral-contour errors."""
    pass


# linalg

class SingularMatrix(SpectralContourError):
    """Raised when an LU pivot falls below the relative singularity threshold."""
    def __init__(self, message: str, min_pivot: Optional[float] = None):
        super().__init__(message)
        self.min_pivot = min_pivot


class NoConvergence(SpectralContourError):
    """Raised when an iterative method exhausts its iteration budget."""
    def __init__(self, message: str, iterations: Optional[int] = None):
        super().__init__(message)
        self.iterations = iterations


# contour

class SelfIntersecting(SpectralContourError):
    """Raised when a fourier contour is not a simple curve."""
    pass


class DegenerateSpec(SpectralContourError):
    """Raised when a ContourSpec violates its field invariants."""
    pass


class TooCloseToBoundary(SpectralContourError):
    """Raised when an evaluation point violates the minimum standoff rule."""
    def __init__(self, message: str, distance: Optional[float] = None, standoff: Optional[float] = None):
        super().__init__(message)
        self.distance = distance
        self.standoff = standoff


# cauchy / dlayer

class OutsideRegion(SpectralContourError):
    """Raised when an interior evaluation is requested at an exterior point."""
    pass


class InsideRegion(SpectralContourError):
    """Raised when an exterior evaluation is requested at an interior point."""
    pass


class RegionMismatch(SpectralContourError):
    """Raised when the requested region disagrees with the winding number."""
    pass


class InconsistentClassification(SpectralContourError):
    """Raised when kernel sign, NP norm and curvature disagree on convexity."""
    def __init__(self, message: str, verdicts: Optional[dict] = None):
        super().__init__(message)
        self.verdicts = verdicts or {}


class SingularOperator(SpectralContourError):
    """Raised when I + K cannot be inverted."""
    pass


# calculus

class ResolventSingular(SpectralContourError):
    """Raised when a contour node sits too close to an eigenvalue."""
    def __init__(self, message: str, node: Optional[int] = None):
        super().__init__(message)
        self.node = node


class NonIntegerCount(SpectralContourError):
    """Raised when the argument-principle count is not close to an integer."""
    def __init__(self, message: str, value: Optional[complex] = None):
        super().__init__(message)
        self.value = value


class DecompositionMismatch(SpectralContourError):
    """Raised when the two quadrature routes to the symmetrised calculus disagree."""
    def __init__(self, message: str, mismatch: Optional[float] = None):
        super().__init__(message)
        self.mismatch = mismatch


class NonConvexDomain(SpectralContourError):
    """Raised when an operation requires a convex domain."""
    pass


class InconsistentInclusion(SpectralContourError):
    """Raised when kernel positivity and the support test disagree."""
    pass


# mapping / extremal

class ZeroFunction(SpectralContourError):
    """Raised when normalising a function that vanishes on the boundary."""
    pass


class HypothesisViolated(SpectralContourError):
    """Raised when the hypotheses of a theorem check do not hold."""
    def __init__(self, message: str, failed: Optional[List[str]] = None):
        super().__init__(message)
        self.failed = failed or []


class OptimizerStall(SpectralContourError, RuntimeWarning):
    """
    Warning category for a search whose random restarts never beat the affine start.

    search_extremal issues it with ``warnings.warn`` and still returns the
    best result (flagged ``stalled``); ``warnings.simplefilter('error',
    OptimizerStall)`` turns a stall into an exception.
    """
    pass


class BoundViolated(SpectralContourError):
    """Raised when a computed quantity breaks a proven inequality."""
    def __init__(self, message: str, check: Optional[str] = None, slack: Optional[float] = None):
        super().__init__(message)
        self.check = check
        self.slack = slack


# smoothing

class LevelNotRegular(SpectralContourError):
    """Raised when no admissible level passes the gradient floor."""
    pass


class GridTooCoarse(SpectralContourError):
    """Raised when level-set extraction yields open or spurious components."""
    pass


class NestingViolated(SpectralContourError):
    """Raised when smoothed domains fail the nesting or Hausdorff checks."""
    def __init__(self, message: str, level: Optional[int] = None):
        super().__init__(message)
        self.level = level


# scene files

class ParseError(SpectralContourError):
    """Raised when a scene file is not well-formed YAML."""
    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message)
        self.line = line


class ValidationError(SpectralContourError):
    """Raised when a scene file violates its schema."""
    def __init__(self, message: str, problems: Optional[List[str]] = None):
        super().__init__(message)
        self.problems = problems or []
