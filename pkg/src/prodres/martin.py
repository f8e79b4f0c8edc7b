"""Martin kernel, its limits along boundary rays, and the collapsed boundary.

``U(mu, z, w) = R(mu; z, w) / R(mu; p, w)``. Limits are taken with ``w``
moving to the boundary while the probes ``z`` stay fixed, and certified by
evaluation at three radii with extrapolation in ``1/r``.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import DomainError, ProdresError
from .geometry import HyperbolicPoint, ProductPoint, ray_point
from .product import ProductResolventRequest, product_kernel
from .saddle import FaceData, PhaseContext, predict_leading, s0_for_pole

__all__ = [
    "MartinRequest",
    "MartinBoundaryPoint",
    "MartinLimit",
    "PoleData",
    "martin_kernel",
    "boundary_sequence",
    "martin_limit",
    "closed_form_limit",
    "collapse_map",
    "laplacian_residual",
]

RADII = (250.0, 500.0, 1000.0)


@dataclass(frozen=True)
class MartinRequest:
    """Spectral parameter, base point and probes for a Martin computation."""

    mu: float
    base: ProductPoint
    probes: tuple
    tol: float = 1e-10

    def __post_init__(self):
        object.__setattr__(self, "probes", tuple(self.probes))
        if complex(self.mu).imag != 0.0:
            raise DomainError("Martin kernels are taken at real mu below the spectrum")


@dataclass(frozen=True)
class MartinBoundaryPoint:
    """Point of the boundary of the compactified product.

    ``face`` is ``"front"`` (uses ``s``, ``y1``, ``y2``), ``"side1"`` (``y1``
    and the interior point ``w2``), ``"side2"`` (``w1`` and ``y2``) or
    ``"collapsed"`` (``y2`` only).
    """

    face: str
    s: float = None
    y1: tuple = None
    y2: tuple = None
    w1: HyperbolicPoint = None
    w2: HyperbolicPoint = None

    def __post_init__(self):
        need = {"front": ("s", "y1", "y2"), "side1": ("y1", "w2"), "side2": ("w1", "y2"), "collapsed": ("y2",)}
        if self.face not in need:
            raise DomainError(f"unknown face {self.face!r}")
        for name in need[self.face]:
            if getattr(self, name) is None:
                raise DomainError(f"{self.face} boundary point needs {name}")
        if self.face == "front" and not (0.0 < self.s < math.inf):
            raise DomainError(f"front face needs s in (0, inf), got {self.s}")


@dataclass(frozen=True)
class PoleData:
    """Spectral data deciding the collapse: ``mu`` and the first factor's pole list."""

    mu: float
    k1: int
    k2: int
    lams: tuple = ()


def martin_kernel(req, w, op1, op2):
    """``U(mu, z_i, w)`` for every probe ``z_i``; the base point maps to 1 exactly.

    Raises
    ------
    ProdresError
        The denominator ``R(mu; p, w)`` vanishes.
    """
    den = product_kernel(ProductResolventRequest(req.mu, req.base, w, tol=req.tol), op1, op2)
    if den.is_zero():
        raise ProdresError("R(mu; p, w) vanishes")
    out = []
    for z in req.probes:
        if z == req.base:
            out.append(1.0 + 0.0j)
            continue
        num = product_kernel(ProductResolventRequest(req.mu, z, w, tol=req.tol), op1, op2)
        out.append(complex((num / den).to_complex()))
    return np.array(out)


def boundary_sequence(bp):
    """``r -> w(r)`` approaching ``bp`` (front rays or a side approach)."""
    if bp.face == "front":
        return lambda r: ray_point(bp.s, r, bp.y1, bp.y2)
    if bp.face == "side1":
        return lambda r: ProductPoint(HyperbolicPoint.from_log(-r, bp.y1), bp.w2)
    if bp.face == "side2":
        return lambda r: ProductPoint(bp.w1, HyperbolicPoint.from_log(-r, bp.y2))
    raise DomainError("collapsed points have no canonical approach; use a front or side2 representative")


@dataclass
class MartinLimit:
    """Limit estimate with the raw ladder and its diagnostics.

    ``values`` is the ``1/r`` extrapolation and ``at_max`` the value at the
    largest radius. ``steps[j]`` is ``max_i |U_i(r_{j+1}) - U_i(r_j)| / |U_i|``,
    so ``steps[-1]`` belongs to the largest radius.
    """

    values: np.ndarray
    at_max: np.ndarray
    radii: tuple
    raw: np.ndarray
    steps: tuple
    extrapolation_error: float
    converged: bool


def martin_limit(req, sequence, op1, op2, radii=RADII):
    """Limit of ``U(mu, ., w(r))`` as ``r -> inf``.

    The three values are fitted by ``U(r) = U_inf + a/r + b/r^2``; the
    ``1/r`` order is the first correction of the boundary expansion. The
    ladder counts as converged when its steps shrink and the last step is
    within ten times the extrapolation error (or below round-off).
    """
    radii = tuple(float(r) for r in radii)
    raw = np.array([martin_kernel(req, sequence(r), op1, op2) for r in radii])
    M = np.vander(1.0 / np.array(radii), len(radii), increasing=True)
    lim = np.linalg.solve(M, raw)[0]
    scale = np.maximum(np.abs(raw[-1]), 1e-300)
    steps = tuple(float(np.max(np.abs(raw[j + 1] - raw[j]) / scale)) for j in range(len(radii) - 1))
    ext = float(np.max(np.abs(lim - raw[-1]) / scale))
    floor = 1e3 * req.tol
    shrinking = all(b < a or b < floor for a, b in zip(steps[:-1], steps[1:]))
    converged = shrinking and steps[-1] <= 10.0 * max(ext, floor)
    return MartinLimit(lim, raw[-1], radii, raw, steps, ext, converged)


def closed_form_limit(bp, req, op1, op2):
    """Predicted ``U_inf`` at the probes for the boundary point ``bp``.

    The limit is the ratio of the leading-term coefficients with the probe
    (or the base point) as source. On the front face this is a product of
    Poisson kernels at ``mu1_0(s)`` and ``mu - mu1_0(s)``, or, once a
    first-factor residue is included, the eigenfunction ratio times the
    second factor's Poisson ratio at ``mu - lambda``. Side faces give a
    spherical-function times Poisson-kernel ratio.
    """
    k1, k2 = op1.k, op2.k
    if bp.face == "collapsed":
        if not op1.poles:
            raise DomainError("collapsed points need a first-factor pole")
        p = min(op1.poles, key=lambda q: q.lam)
        s0 = s0_for_pole(req.mu, k1, k2, p.lam)
        # any point of the front face beyond s0 represents the collapsed point
        bp = MartinBoundaryPoint("front", s=2.0 * s0 + 1.0, y1=tuple([0.0] * k1), y2=bp.y2)
    ctx = PhaseContext(req.mu, k1, k2, bp.s if bp.face == "front" else 1.0)

    # R is symmetric, so the probe is the fixed source of the leading term
    def coeff(src):
        if bp.face == "front":
            data = FaceData(src, bp.y1, bp.y2)
        elif bp.face == "side1":
            data = FaceData(src, bp.y1, None, bp.w2)
        else:
            data = FaceData(src, None, bp.y2, bp.w1)
        return predict_leading(ctx, bp.face, op1, op2, data)

    base = coeff(req.base).coefficient
    return np.array([complex((coeff(z).coefficient / base).to_complex()) for z in req.probes])


def collapse_map(bp, pole_data):
    """Image of ``bp`` in the collapsed boundary.

    With a first-factor pole, ``s0`` comes from the lowest one; front points
    with ``s >= s0`` and all side-2 points go to ``collapsed(y2)``. Everything
    else is fixed.
    """
    if not pole_data.lams:
        return bp
    lam = min(pole_data.lams)
    s0 = s0_for_pole(pole_data.mu, pole_data.k1, pole_data.k2, lam)
    if (bp.face == "front" and bp.s >= s0) or bp.face == "side2":
        return MartinBoundaryPoint("collapsed", y2=bp.y2)
    return bp


def laplacian_residual(f, z, mu, h=1e-2):
    """Relative residual of ``(H - mu) f = 0`` at ``z`` from a 13-point stencil.

    On each factor ``Delta = x^2 (d_x^2 + sum d_y^2) - (k - 1) x d_x`` and
    ``H = -Delta_1 - Delta_2``. Steps are ``h x`` in every coordinate, so the
    stencil is the centre plus two points per coordinate of both factors.
    """
    f0 = complex(f(z))
    lap = 0.0 + 0.0j
    scale = abs(mu * f0)
    for which in (0, 1):
        zj = (z.z1, z.z2)[which]
        x = zj.x
        step = h * x
        k = zj.k

        def moved(dx=0.0, dy=None):
            pt = HyperbolicPoint(x + dx, np.asarray(zj.y) + (0.0 if dy is None else dy))
            return ProductPoint(pt, z.z2) if which == 0 else ProductPoint(z.z1, pt)

        fp, fm = complex(f(moved(step))), complex(f(moved(-step)))
        d2 = (fp - 2 * f0 + fm) / step ** 2
        d1 = (fp - fm) / (2 * step)
        terms = [x * x * d2, -(k - 1) * x * d1]
        for i in range(k):
            e = np.zeros(k)
            e[i] = step
            gp, gm = complex(f(moved(dy=e))), complex(f(moved(dy=-e)))
            terms.append(x * x * (gp - 2 * f0 + gm) / step ** 2)
        lap += sum(terms)
        scale += sum(abs(t) for t in terms)
    return abs(lap + mu * f0) / scale
