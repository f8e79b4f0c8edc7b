"""Structured exceptions raised across the package."""


class ProdresError(Exception):
    """Base class for all package errors."""


class DomainError(ProdresError, ValueError):
    """An input lies outside the domain of the requested operation."""


class DimensionMismatch(ProdresError, ValueError):
    """Points or operators disagree in boundary dimension."""


class UnsupportedDimension(ProdresError, NotImplementedError):
    """The requested boundary dimension has no implemented kernel."""


class BranchCutError(ProdresError, ValueError):
    """A spectral parameter sits on a cut without an explicit side."""


class QuadratureError(ProdresError, RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


class ContourError(ProdresError, ValueError):
    """A contour is malformed or violates its admissibility contract."""


class PoleOnContour(ContourError):
    """A declared pole lies on a contour."""

    def __init__(self, message, pole=None):
        super().__init__(message)
        self.pole = pole


class NoCrossing(ProdresError, ValueError):
    """A ray does not cross the boundary strip."""


class SideFaceRegime(ProdresError, ValueError):
    """Front-face analysis requested at a slope that belongs to a side face."""


class BoundarySignal(ProdresError):
    """A point lies on the level set through the saddle."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class TransitionSignal(ProdresError):
    """A pole sits on the critical slope; a transition profile is required."""

    def __init__(self, message, pole=None):
        super().__init__(message)
        self.pole = pole


class ConfigError(ProdresError, ValueError):
    """A run configuration is malformed."""
