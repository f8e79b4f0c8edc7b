"""Upper half-space points, the point-pair invariant and collar coordinates.

A point of the hyperbolic space with boundary dimension ``k`` is written
``z = (x, y)`` with ``x > 0`` and ``y`` in R^k. On a product of two such
spaces each factor gets a collar coordinate ``rho_j = -1/log x_j`` and the
pair is summarised by the total ``rho = (rho1**-2 + rho2**-2)**-1/2`` and
the slope ``s = rho1/rho2``.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import DimensionMismatch, DomainError

__all__ = [
    "INF",
    "HyperbolicPoint",
    "ProductPoint",
    "BoundaryCoordinates",
    "Slope",
    "point_pair_delta",
    "log_euclid_separation",
    "boundary_coords",
    "ray_point",
]


@dataclass(frozen=True)
class Slope:
    """Extended non-negative slope; ``Slope.infinite()`` tags ``s = inf``."""

    value: float
    is_infinite: bool = False

    @classmethod
    def infinite(cls):
        return cls(math.inf, True)

    @classmethod
    def of(cls, s):
        if isinstance(s, Slope):
            return s
        s = float(s)
        if s < 0 or math.isnan(s):
            raise DomainError(f"slope must be non-negative, got {s}")
        if math.isinf(s):
            return cls.infinite()
        return cls(s)

    @property
    def is_zero(self):
        return (not self.is_infinite) and self.value == 0.0

    def __float__(self):
        return self.value


INF = Slope.infinite()


@dataclass(frozen=True)
class HyperbolicPoint:
    """Point ``(x, y)`` of the upper half-space with ``k`` boundary coordinates.

    The height is stored through ``logx`` so that points as close to the
    boundary as ``x = exp(-1e4)`` remain representable; ``x`` itself may
    underflow to 0.0 and should only be used for moderate heights.
    """

    x: float
    y: tuple
    logx: float

    def __init__(self, x, y, logx=None):
        y = tuple(float(v) for v in np.atleast_1d(np.asarray(y, dtype=float)))
        if logx is None:
            x = float(x)
            if not x > 0 or not math.isfinite(x):
                raise DomainError(f"half-space height must be positive and finite, got {x}")
            logx = math.log(x)
        else:
            logx = float(logx)
            if not math.isfinite(logx):
                raise DomainError(f"log-height must be finite, got {logx}")
            x = math.exp(logx)
        if len(y) == 0:
            raise DomainError("a point needs at least one boundary coordinate")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "logx", logx)

    @classmethod
    def from_log(cls, logx, y):
        return cls(None, y, logx=logx)

    @property
    def k(self):
        return len(self.y)

    @property
    def y_array(self):
        return np.asarray(self.y, dtype=float)

    def shifted(self, dlogx=0.0, dy=None):
        """Copy moved by ``dlogx`` in log-height and ``dy`` horizontally."""
        y = self.y_array if dy is None else self.y_array + np.asarray(dy, dtype=float)
        return HyperbolicPoint.from_log(self.logx + dlogx, y)


@dataclass(frozen=True)
class ProductPoint:
    z1: HyperbolicPoint
    z2: HyperbolicPoint

    @property
    def k1(self):
        return self.z1.k

    @property
    def k2(self):
        return self.z2.k


@dataclass(frozen=True)
class BoundaryCoordinates:
    rho1: float
    rho2: float
    rho: float
    s: Slope
    r: float

    @property
    def r1(self):
        return 1.0 / self.rho1

    @property
    def r2(self):
        return 1.0 / self.rho2


def _check_same_k(z, zp):
    if z.k != zp.k:
        raise DimensionMismatch(f"points live in different dimensions ({z.k} vs {zp.k})")


def log_euclid_separation(z, zp):
    """log of the Euclidean separation ``|z - z'|`` in the half-space model."""
    _check_same_k(z, zp)
    a, b = sorted((z.logx, zp.logx))
    # |x - x'| = x_max * (1 - x_min/x_max), evaluated without forming x
    with np.errstate(divide="ignore"):
        ldx = b + math.log(-math.expm1(a - b)) if a < b else -math.inf
        dy = np.asarray(z.y) - np.asarray(zp.y)
        ndy = math.hypot(*dy.tolist()) if dy.size > 1 else abs(float(dy[0]))
        ldy = math.log(ndy) if ndy > 0 else -math.inf
    return 0.5 * float(np.logaddexp(2.0 * ldx, 2.0 * ldy))


def point_pair_delta(z, zp):
    """Hyperbolic distance between two points of the same half-space.

    Uses ``delta = 2 asinh(|z - z'| / (2 sqrt(x x')))``, which is exact in
    exact arithmetic and free of the cancellation in ``arccosh(1 + eps)``.
    Everything is carried in logs so boundary-hugging points are fine.

    Parameters
    ----------
    z, zp : HyperbolicPoint

    Returns
    -------
    float
    """
    u = log_euclid_separation(z, zp) - math.log(2.0) - 0.5 * (z.logx + zp.logx)
    if u == -math.inf:
        return 0.0
    if u < 20.0:
        return 2.0 * math.asinh(math.exp(u))
    # asinh(e^u) = u + log(1 + sqrt(1 + e^{-2u}))
    return 2.0 * (u + math.log1p(math.sqrt(1.0 + math.exp(-2.0 * u))))


def boundary_coords(p):
    """Collar coordinates of a product point with both heights in (0, 1)."""
    r1 = -p.z1.logx
    r2 = -p.z2.logx
    for j, rj in ((1, r1), (2, r2)):
        if not rj > 0.0:
            raise DomainError(f"x{j} = exp({-rj}) is outside the collar (0, 1)")
    r = math.hypot(r1, r2)
    return BoundaryCoordinates(rho1=1.0 / r1, rho2=1.0 / r2, rho=1.0 / r, s=Slope(r2 / r1), r=r)


def ray_point(s, r, y1, y2):
    """Product point at slope ``s`` and total radius ``r = 1/rho``.

    With ``r_j = 1/rho_j`` the constraints ``r1**2 + r2**2 = r**2`` and
    ``r2 = s r1`` give ``r1 = r/sqrt(1+s^2)``; heights are ``x_j = exp(-r_j)``.
    """
    s = float(s)
    r = float(r)
    if not (0.0 < s < math.inf):
        raise DomainError(f"ray slope must lie in (0, inf), got {s}")
    if not r > 0:
        raise DomainError(f"ray radius must be positive, got {r}")
    r1 = r / math.hypot(1.0, s)
    r2 = s * r1
    return ProductPoint(HyperbolicPoint.from_log(-r1, y1), HyperbolicPoint.from_log(-r2, y2))
