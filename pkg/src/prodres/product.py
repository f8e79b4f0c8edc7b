"""Resolvent kernel of ``H = H1 + H2`` on a product of two hyperbolic spaces.

The kernel is the contour integral

    R(mu; z, w) = (1/2 pi i) int_gamma R1(mu1; z1, w1) R2(mu - mu1; z2, w2) d mu1,

with ``gamma`` running upward between the cut ``[k1^2/4, inf)`` of the first
factor (kept on the right) and the cut ``mu - [k2^2/4, inf)`` of the second
(kept on the left). Because the two factors act on different variables the
Schwartz kernel of ``R1 R2`` is the pointwise product of the factor kernels.

Bound states are modelled by rank-one terms added to each factor kernel.
Poles of the first factor belong right of ``gamma``, poles of the second
factor left of it; any contour that puts a pole on the other side is
corrected by the corresponding residue.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .contour import (
    Contour,
    LineSegment,
    PoleSpec,
    RayIn,
    RayOut,
    branch_sqrt_along,
    index_left,
    integrate_with_diagnostics,
    line_through,
    polyline,
)
from .errors import BranchCutError, ContourError, DomainError, PoleOnContour
from .geometry import HyperbolicPoint, ProductPoint, point_pair_delta
from .hyperbolic import kernel_from_nu, nu_of_lambda, poisson_from_nu, _log_poisson_base
from .scaled import ScaledComplex

__all__ = [
    "SyntheticPole",
    "ModelOperator",
    "ProductResolventRequest",
    "CutConfiguration",
    "ContinuationResult",
    "product_kernel",
    "product_kernel_with_info",
    "boundary_value_kernel",
    "epsilon_extrapolate",
    "continued_kernel",
    "auto_contour",
    "parse_batch",
    "format_batch_row",
    "BATCH_COLUMNS",
]


# ---------------------------------------------------------------------------
# model operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticPole:
    """Rank-one bound state ``phi(z) phi(w) / (lam - mu1)``.

    The profile is ``phi(z) = weight^(1/2) q(z)^zeta`` with
    ``q(z) = x/(1 + x^2 + |y - anchor|^2)`` and ``zeta = k/2 + nu(mu1)``.
    At ``mu1 = lam`` this is ``x^(k/2 + sqrt(k^2/4 - lam)) g(z)`` with a
    bounded smooth ``g``.
    """

    lam: float
    anchor: tuple = None
    weight: float = 1.0
    tag: str = ""


@dataclass(frozen=True)
class ModelOperator:
    """Single-factor operator: exact hyperbolic Laplacian plus synthetic poles."""

    k: int
    poles: tuple = ()

    def __post_init__(self):
        if self.k < 1:
            raise DomainError("boundary dimension must be >= 1")
        fixed = []
        lams = []
        for i, p in enumerate(self.poles):
            if not isinstance(p, SyntheticPole):
                p = SyntheticPole(*p) if isinstance(p, (tuple, list)) else SyntheticPole(float(p))
            lam = float(p.lam)
            if not 0.0 < lam < self.k * self.k / 4.0:
                raise DomainError(f"synthetic pole {lam} outside (0, k^2/4) = (0, {self.k * self.k / 4})")
            anchor = (0.0,) * self.k if p.anchor is None else tuple(float(v) for v in p.anchor)
            if len(anchor) != self.k:
                raise DomainError("pole anchor must have k coordinates")
            if not p.weight > 0:
                raise DomainError("pole weight must be positive")
            lams.append(lam)
            fixed.append(SyntheticPole(lam, anchor, float(p.weight), p.tag or f"pole{i}"))
        if len(set(lams)) != len(lams):
            raise DomainError("synthetic poles must be distinct")
        object.__setattr__(self, "poles", tuple(fixed))

    @property
    def kind(self):
        return "with_synthetic_poles" if self.poles else "exact_hyperbolic"

    @property
    def threshold(self):
        return self.k * self.k / 4.0

    @property
    def bottom(self):
        """Bottom of the spectrum."""
        return min([self.threshold] + [p.lam for p in self.poles])

    def nu(self, lam, phi=0.0, cut_side=-1):
        return nu_of_lambda(lam, self.k, phi, cut_side)

    @staticmethod
    def log_profile_base(pole, z):
        """``log q(z)`` for the bump profile of ``pole``."""
        dy = z.y_array - np.asarray(pole.anchor)
        # 1 + x^2 + |dy|^2 in logs (x may be astronomically small or large)
        l2 = float(np.logaddexp(0.0, np.logaddexp(2.0 * z.logx, math.log(float(dy @ dy)) if np.any(dy) else -np.inf)))
        return z.logx - l2

    def pole_term_nu(self, pole, lam, nu, z, w):
        zeta = np.asarray(nu) + self.k / 2.0
        lq = self.log_profile_base(pole, z) + self.log_profile_base(pole, w)
        num = ScaledComplex.from_log(zeta * lq + math.log(pole.weight))
        return num / ScaledComplex.from_complex(pole.lam - np.asarray(lam, dtype=complex))

    def kernel_nu(self, lam, nu, z, w, delta=None):
        """Kernel for given ``lam`` and matching ``nu`` (vectorised)."""
        if delta is None:
            delta = point_pair_delta(z, w)
        val = kernel_from_nu(nu, delta, self.k)
        for pole in self.poles:
            val = val + self.pole_term_nu(pole, lam, nu, z, w)
        return val

    def kernel(self, lam, z, w, phi=0.0, cut_side=-1):
        lam = np.asarray(lam, dtype=complex)
        return self.kernel_nu(lam, self.nu(lam, phi, cut_side), z, w)

    def residue_weight(self, pole, z, w):
        """``phi(z) phi(w)`` at ``mu1 = lam``; the kernel has residue ``-`` this."""
        nu = math.sqrt(self.threshold - pole.lam)
        zeta = self.k / 2.0 + nu
        lq = self.log_profile_base(pole, z) + self.log_profile_base(pole, w)
        return ScaledComplex(zeta * lq + math.log(pole.weight), 0.0)

    def poisson_nu(self, lam, nu, z, yb):
        """Boundary limit ``lim x'^(-zeta) R(lam; z, (x', yb))`` (vectorised)."""
        yb = np.atleast_1d(np.asarray(yb, dtype=float))
        nu = np.asarray(nu, dtype=complex)
        val = poisson_from_nu(nu, self.k, _log_poisson_base(z, yb))
        zeta = nu + self.k / 2.0
        for pole in self.poles:
            dy = yb - np.asarray(pole.anchor)
            lb = -math.log1p(float(dy @ dy))
            lq = self.log_profile_base(pole, z) + lb
            num = ScaledComplex.from_log(zeta * lq + math.log(pole.weight))
            val = val + num / ScaledComplex.from_complex(pole.lam - np.asarray(lam, dtype=complex))
        return val

    def poisson(self, lam, z, yb, phi=0.0, cut_side=-1):
        lam = np.asarray(lam, dtype=complex)
        return self.poisson_nu(lam, self.nu(lam, phi, cut_side), z, yb)


# ---------------------------------------------------------------------------
# requests and cut geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProductResolventRequest:
    """Kernel request; ``tag`` is ``None``, ``"-i0"`` or ``"+i0"``."""

    mu: complex
    z: ProductPoint
    w: ProductPoint
    contour: object = "auto"
    tol: float = 1e-10
    tag: str = None

    def __post_init__(self):
        if self.tag not in (None, "-i0", "+i0"):
            raise DomainError(f"unknown boundary tag {self.tag!r}")
        if not self.tol > 0:
            raise DomainError("tolerance must be positive")


@dataclass(frozen=True)
class CutConfiguration:
    """Both cuts pivoted by ``rotation_angle`` about their tips.

    ``direction="ccw"`` continues from the lower half-plane upward across
    the spectrum (the first cut turns to ``k1^2/4 + e^{i alpha} [0, inf)``);
    ``"cw"`` is the mirror image.
    """

    cut1_origin: complex
    cut2_origin: complex
    rotation_angle: float
    direction: str = "ccw"

    def __post_init__(self):
        a = float(self.rotation_angle)
        if not 0.0 <= a < math.pi / 2:
            raise DomainError("rotation angle must lie in [0, pi/2) so vertical contour ends stay admissible")
        if self.direction not in ("ccw", "cw"):
            raise DomainError(f"unknown rotation direction {self.direction!r}")

    @property
    def theta(self):
        """Signed rotation angle."""
        return self.rotation_angle if self.direction == "ccw" else -self.rotation_angle

    @classmethod
    def for_mu(cls, mu, k1, k2, alpha, direction="ccw"):
        return cls(k1 * k1 / 4.0, complex(mu) - k2 * k2 / 4.0, alpha, direction)


class _Setup:
    """Everything the integrand and residues need for one request."""

    def __init__(self, mu, op1, op2, z, w, theta=0.0, cut_side=-1):
        if not (isinstance(z, ProductPoint) and isinstance(w, ProductPoint)):
            raise DomainError("z and w must be ProductPoints")
        if z.k1 != op1.k or w.k1 != op1.k or z.k2 != op2.k or w.k2 != op2.k:
            raise DomainError("point dimensions do not match the operators")
        self.mu = complex(mu)
        self.op1, self.op2 = op1, op2
        self.z, self.w = z, w
        self.theta = float(theta)
        self.cut_side = cut_side
        self.d1 = point_pair_delta(z.z1, w.z1)
        self.d2 = point_pair_delta(z.z2, w.z2)
        if self.d1 == 0.0 or self.d2 == 0.0:
            raise DomainError("product kernel is singular when z_j = w_j in a factor")
        self.t1 = op1.threshold
        self.t2 = self.mu - op2.threshold
        self.poles = [PoleSpec(p.lam, p.tag, "factor1") for p in op1.poles]
        self.poles += [PoleSpec(self.mu - p.lam, p.tag, "factor2") for p in op2.poles]
        self._pole_data = {id(ps): p for ps, p in zip(self.poles, list(op1.poles) + list(op2.poles))}

    def factor1(self, mu1):
        mu1 = np.asarray(mu1, dtype=complex)
        nu1 = self.op1.nu(mu1, self.theta, self.cut_side)
        return self.op1.kernel_nu(mu1, nu1, self.z.z1, self.w.z1, self.d1)

    def factor2(self, mu2, nu2=None):
        mu2 = np.asarray(mu2, dtype=complex)
        if nu2 is None:
            nu2 = self.op2.nu(mu2, self.theta, self.cut_side)
        return self.op2.kernel_nu(mu2, nu2, self.z.z2, self.w.z2, self.d2)

    def factor1_nu(self, mu1, nu1):
        return self.op1.kernel_nu(np.asarray(mu1, dtype=complex), nu1, self.z.z1, self.w.z1, self.d1)

    def integrand(self, mu1):
        mu1 = np.asarray(mu1, dtype=complex)
        return self.factor1(mu1) * self.factor2(self.mu - mu1)

    def residue(self, ps, nu_other=None):
        """Residue of the integrand at the pole ``ps`` (in ``mu1``)."""
        p = self._pole_data[id(ps)]
        if ps.side == "factor1":
            wgt = self.op1.residue_weight(p, self.z.z1, self.w.z1)
            return -(wgt * self.factor2(self.mu - p.lam, nu_other))
        wgt = self.op2.residue_weight(p, self.z.z2, self.w.z2)
        if nu_other is None:
            return wgt * self.factor1(self.mu - p.lam)
        return wgt * self.factor1_nu(self.mu - p.lam, nu_other)

    def other_nu(self, ps):
        """``nu`` of the other factor at the residue of ``ps`` on the integrand branch."""
        p = self._pole_data[id(ps)]
        other = self.op2 if ps.side == "factor1" else self.op1
        return complex(other.nu(self.mu - p.lam, self.theta, self.cut_side))

    def cuts(self):
        e = np.exp(1j * self.theta)
        return [(complex(self.t1), e), (complex(self.t2), -e)]


# ---------------------------------------------------------------------------
# contour construction and checks
# ---------------------------------------------------------------------------

_END_MARGIN = math.sin(0.05)


def _ends_ok(c, theta, margin=_END_MARGIN):
    """End direction strictly inside the decay sector of both factor kernels."""
    if c is None:
        return False
    c = c / abs(c)
    return c.imag > margin and (c * np.exp(-1j * theta)).imag > margin


def _seg_hits_ray(a, b, o, d):
    """Does the closed segment ``[a, b]`` meet the ray ``o + d [0, inf)``?"""
    e = b - a
    den = (np.conj(d) * e).imag
    w = a - o
    if abs(den) < 1e-300:
        # parallel: collinear overlap check
        if abs((np.conj(d) * w).imag) > 1e-14 * (1 + abs(w)):
            return False
        ta = (np.conj(d) * (a - o)).real
        tb = (np.conj(d) * (b - o)).real
        return max(ta, tb) >= 0
    # solve a + e u = o + d t
    u = (d.real * w.imag - d.imag * w.real) / (d.imag * e.real - d.real * e.imag)
    t = (e.real * w.imag - e.imag * w.real) / (d.imag * e.real - d.real * e.imag)
    return -1e-12 <= u <= 1 + 1e-12 and t >= -1e-12


def check_contour(contour, setup, allow_on_poles=False):
    """Raise unless ``contour`` is conic, avoids both cuts and sits off every pole."""
    cm, cp = contour.asymptotic_slopes
    if not (_ends_ok(cm, setup.theta) and _ends_ok(cp, setup.theta)):
        raise ContourError("contour ends must point into the decay sector of both factors")
    pts = contour.sample(256)
    for o, d in setup.cuts():
        for a, b in zip(pts[:-1], pts[1:]):
            if _seg_hits_ray(a, b, o, d):
                raise BranchCutError(f"contour meets the cut from {o} near {a}")
    if not allow_on_poles:
        for ps in setup.poles:
            q = complex(ps.location)
            a, b = pts[:-1], pts[1:]
            d = b - a
            t = np.clip(((np.conj(d) * (q - a)).real) / np.maximum(np.abs(d) ** 2, 1e-300), 0, 1)
            if np.min(np.abs(a + t * d - q)) < 1e-12 * (1 + abs(q)):
                raise PoleOnContour(f"contour passes through the pole {q}", ps)


def _rot(theta):
    return complex(np.exp(1j * theta))


def _default_dir(theta):
    return complex(np.exp(0.5j * (math.pi + theta)))


def _polyline_fallback(setup):
    """Piecewise-linear contour between the (possibly rotated) cuts."""
    th = setup.theta
    e = _rot(th)
    t1, t2 = setup.t1, setup.t2
    v2 = (t2 - t1) / e
    gap = abs(v2)
    c = 0.25 * min(1.0, gap) if gap > 0 else 0.25
    if v2.imag == 0.0:
        if v2.real >= 0.0:
            raise BranchCutError("the two cuts overlap: mu lies on the continuous spectrum")
        verts_v = [0.5 * v2]
    elif v2.imag < 0:
        verts_v = [v2 + c, -c]
    else:
        verts_v = [-c, v2 + c]
    verts = [t1 + e * v for v in verts_v]
    dirn = _default_dir(th)
    return polyline(verts, dirn, dirn, scale=1.0)


def _saddle_line(setup):
    """Straight line through the stationary point of ``nu1 d1 + nu2 d2``."""
    th = setup.theta
    k1, k2 = setup.op1.k, setup.op2.k
    A = (k1 * k1 + k2 * k2) / 4.0 - setup.mu
    sigma = setup.d2 / setup.d1
    a = A / (1.0 + sigma * sigma)
    mu1s = setup.t1 - a
    nu1 = complex(setup.op1.nu(mu1s, th, setup.cut_side))
    nu2 = complex(setup.op2.nu(setup.mu - mu1s, th, setup.cut_side))
    if abs(nu1) == 0 or abs(nu2 - sigma * nu1) > 1e-8 * abs(nu1) * (1 + sigma):
        return None
    g2 = setup.d1 / (4 * nu1 ** 3) + setup.d2 / (4 * nu2 ** 3)
    d = 1j * np.exp(-0.5j * np.angle(g2))
    if d.imag < 0:
        d = -d
    if not _ends_ok(d, th):
        return None
    width = 1.0 / math.sqrt(abs(g2))
    c = line_through(mu1s, d, scale=min(1.0, width))
    try:
        check_contour(c, setup, allow_on_poles=True)
    except (ContourError, BranchCutError):
        return None
    return c


def _descends(setup, contour, steps=(3.0, 10.0, 30.0), drop=1.0):
    """Does ``|integrand|`` fall by ``drop`` e-folds per step along both end rays?"""
    for ray in (contour.segments[0], contour.segments[-1]):
        pts = [ray.origin] + [ray.origin + ray.direction * k * contour.scale for k in steps]
        lm = np.asarray(ScaledComplex.coerce(setup.integrand(np.asarray(pts))).logabs, dtype=float)
        if not np.all(np.diff(lm) < -drop):
            return False
    return True


def _wedge(setup):
    """Wedge around the nearer cut tip with its vertex at the saddle.

    When one distance dominates, the saddle sits next to a cut tip and its
    quadratic neighbourhood is tiny; the rays then follow the cut of the
    other factor's tip, where the dominant exponential decays linearly.
    """
    th = setup.theta
    beta = abs(th) + 0.3
    if beta >= 0.5 * math.pi - 0.05:
        return None
    k1, k2 = setup.op1.k, setup.op2.k
    A = (k1 * k1 + k2 * k2) / 4.0 - setup.mu
    sigma = setup.d2 / setup.d1
    v0 = setup.t1 - A / (1.0 + sigma * sigma)
    if sigma < 1.0:
        cin, cout = _rot(th + beta), -_rot(th - beta)
        nu = complex(setup.op1.nu(v0, th, setup.cut_side))
        ell = 2.0 * abs(nu) / setup.d1
    else:
        cin, cout = -_rot(th - beta), _rot(th + beta)
        nu = complex(setup.op2.nu(setup.mu - v0, th, setup.cut_side))
        ell = 2.0 * abs(nu) / setup.d2
    c = polyline([v0], cin, cout, scale=min(1.0, max(ell, 1e-12)))
    try:
        check_contour(c, setup, allow_on_poles=True)
    except (ContourError, BranchCutError):
        return None
    return c


def auto_contour(setup):
    """Saddle line if the integrand decays along it, else a wedge at the saddle,
    else a polyline through the gap."""
    line = _saddle_line(setup)
    if line is not None and _descends(setup, line):
        return line
    w = _wedge(setup)
    if w is not None and _descends(setup, w):
        return w
    return line if line is not None else _polyline_fallback(setup)


def _pole_corrections(contour, setup, guard=1e-6, nu_tracked=None):
    """Residue terms relating the integral over ``contour`` to the kernel.

    A first-factor pole belongs right of the contour and a second-factor pole
    left of it. ``nu_tracked`` maps poles to the other factor's ``nu``
    continued along a path in ``mu``; when it differs from the integrand's
    branch the pole has been swept across a rotated cut and the residue term
    is carried on the continued branch.
    """
    terms = []
    pts = contour.sample(64)
    a, b = pts[:-1], pts[1:]
    d = b - a
    for ps in setup.poles:
        q = complex(ps.location)
        ref = 0 if ps.side == "factor1" else 1
        t = np.clip(((np.conj(d) * (q - a)).real) / np.maximum(np.abs(d) ** 2, 1e-300), 0, 1)
        # poles within the guard are detoured onto their reference side
        ind = ref if np.min(np.abs(a + t * d - q)) < guard else index_left(contour, q)
        res_a = setup.residue(ps)
        nu_t = None if nu_tracked is None else nu_tracked.get(id(ps))
        nu_a = setup.other_nu(ps)
        swept = nu_t is not None and abs(nu_t - nu_a) > 1e-9 * (1.0 + abs(nu_a))
        if not swept:
            if ref != ind:
                terms.append((ps, ref - ind, res_a))
            continue
        res_t = setup.residue(ps, nu_t)
        if ps.side == "factor1":
            if ind == 0:
                terms.append((ps, 1, res_a))
            terms.append((ps, -1, res_t))
        else:
            if ind == 1:
                terms.append((ps, -1, res_a))
            terms.append((ps, 1, res_t))
    return terms


# ---------------------------------------------------------------------------
# physical sheet
# ---------------------------------------------------------------------------

@dataclass
class KernelInfo:
    value: ScaledComplex
    est_error: float
    contour: Contour
    residue_terms: list = field(default_factory=list)
    n_eval: int = 0
    detours: list = field(default_factory=list)


def _sum_terms(integral, terms):
    total = integral
    for _, sign, res in terms:
        total = total + res * ScaledComplex.from_complex(float(sign))
    return total


def product_kernel_with_info(req, op1, op2):
    """Product kernel with the contour, error estimate and residue terms used."""
    if req.tag is not None:
        return boundary_value_kernel(req, op1, op2, info=True)
    mu = complex(req.mu)
    setup = _Setup(mu, op1, op2, req.z, req.w)
    if mu.imag == 0.0 and mu.real >= op1.threshold + op2.threshold:
        raise BranchCutError(f"mu = {mu} lies on the continuous spectrum; tag it with -i0 or +i0")
    for ps in setup.poles:
        other = setup.t2 if ps.side == "factor1" else setup.t1
        if ps.side == "factor1" and complex(ps.location).imag == setup.t2.imag and ps.location <= setup.t2.real:
            raise BranchCutError(f"mu = {mu} lies on the spectrum branch {ps.location} + [k2^2/4, inf)")
        if ps.side == "factor2" and complex(ps.location).imag == 0.0 and complex(ps.location).real >= other.real:
            raise BranchCutError(f"mu = {mu} lies on a spectrum branch through a second-factor bound state")
    if isinstance(req.contour, str):
        if req.contour == "auto":
            contour = auto_contour(setup)
        elif req.contour == "polyline":
            contour = _polyline_fallback(setup)
        else:
            raise ContourError(f"unknown contour keyword {req.contour!r}")
    else:
        contour = req.contour
        check_contour(contour, setup)
    q = integrate_with_diagnostics(contour, setup.integrand, req.tol, setup.poles)
    terms = _pole_corrections(contour, setup)
    value = _sum_terms(q.value, terms)
    return KernelInfo(value, math.exp(q.log_error) + math.exp(q.log_tail), contour, terms, q.n_eval, q.detours)


def product_kernel(req, op1, op2):
    """Schwartz kernel ``R(mu; z, w)`` of the product resolvent.

    Parameters
    ----------
    req : ProductResolventRequest
    op1, op2 : ModelOperator

    Returns
    -------
    ScaledComplex
    """
    return product_kernel_with_info(req, op1, op2).value


# ---------------------------------------------------------------------------
# boundary values on the spectrum
# ---------------------------------------------------------------------------

def _real_axis_contour(setup, sign):
    """Real-segment contour for ``mu - i0`` (``sign = -1``) or ``mu + i0`` (``+1``)."""
    t1, t2 = setup.t1, setup.t2.real
    lows = [t1, t2] + [complex(p.location).real for p in setup.poles]
    xl = min(lows) - 1.0
    xr = max(lows) + 1.0
    # split at the branch points so square-root endpoints sit at panel edges
    knots = sorted({xl, xr, t1, t2})
    if sign < 0:
        knots = knots[::-1]
        segs = [RayIn(complex(xr), -1j)]
    else:
        segs = [RayIn(complex(xl), -1j)]
    segs += [LineSegment(complex(a), complex(b)) for a, b in zip(knots[:-1], knots[1:]) if a != b]
    segs.append(RayOut(complex(knots[-1]), 1j))
    return Contour(tuple(segs), 1.0)


def boundary_value_kernel(req, op1, op2, info=False):
    """Limit ``R(mu -/+ i0)`` on the continuous spectrum.

    The contour comes up at ``x_r``, runs along the real axis to ``x_l`` and
    leaves upward (mirrored for ``+i0``). On the axis both factor kernels use
    their one-sided boundary values and poles on the segment are passed by
    the quadrature guard on their declared sides.
    """
    mu = complex(req.mu)
    if mu.imag != 0.0:
        raise DomainError("boundary values need real mu")
    if req.tag not in ("-i0", "+i0"):
        raise DomainError("boundary values need a -i0 or +i0 tag")
    if not mu.real > op1.threshold + op2.threshold:
        raise DomainError("boundary values are taken for mu > k^2/4")
    for op in (op1, op2):
        for p in op.poles:
            if p.lam == op.threshold:
                raise DomainError("threshold poles are excluded")
    sign = -1 if req.tag == "-i0" else 1
    setup = _Setup(mu, op1, op2, req.z, req.w, 0.0, sign)
    contour = _real_axis_contour(setup, sign)
    q = integrate_with_diagnostics(contour, setup.integrand, req.tol, setup.poles)
    # poles off the axis cannot occur for real mu; all poles are detoured on-axis
    value = q.value
    if info:
        return KernelInfo(value, math.exp(q.log_error) + math.exp(q.log_tail), contour, [], q.n_eval, q.detours)
    return value


def epsilon_extrapolate(req, op1, op2, eps=(1e-2, 1e-3, 1e-4)):
    """Richardson limit of ``R(mu -/+ i eps)`` for ``eps -> 0`` (first order, ratio 10)."""
    sign = -1 if req.tag == "-i0" else 1
    vals = []
    for e in eps:
        r = ProductResolventRequest(complex(req.mu) + sign * 1j * e, req.z, req.w, "auto", req.tol)
        vals.append(product_kernel(r, op1, op2).to_complex())
    vals = [complex(v) for v in vals]
    ratio = eps[0] / eps[1]
    level1 = [(ratio * b - a) / (ratio - 1) for a, b in zip(vals[:-1], vals[1:])]
    if len(level1) == 1:
        return ScaledComplex.from_complex(level1[0])
    r2 = ratio * ratio
    return ScaledComplex.from_complex((r2 * level1[-1] - level1[-2]) / (r2 - 1))


# ---------------------------------------------------------------------------
# continuation
# ---------------------------------------------------------------------------

@dataclass
class ContinuationResult:
    value: ScaledComplex
    integral: ScaledComplex
    residue_terms: list
    contour: Contour
    est_error: float
    loop_jumps: list = None


def _regge_point(ps, setup):
    """Ramification point of the residue term attached to ``ps``."""
    p = setup._pole_data[id(ps)]
    if ps.side == "factor1":
        return p.lam + setup.op2.threshold
    return p.lam + setup.op1.threshold


def _default_path(mu, ccw):
    mu = complex(mu)
    start = complex(mu.real, -abs(mu.imag) - 1.0) if ccw else complex(mu.real, abs(mu.imag) + 1.0)
    return [start, mu]


def continued_kernel(mu, op1, op2, cuts, z, w, path=None, tol=1e-10, contour="polyline"):
    """Meromorphic continuation of the product kernel by cut rotation.

    Parameters
    ----------
    mu : complex
        Target point. For ``"ccw"`` cuts the upper half-plane sector
        ``0 < arg(mu - k^2/4) < alpha`` is reached from below, i.e. on the
        second sheet; lower half-plane points are physical.
    op1, op2 : ModelOperator
    cuts : CutConfiguration
    z, w : ProductPoint
    path : sequence of complex, optional
        Continuation path ending at ``mu``. Defaults to a vertical path from
        the physical side. Residue terms of poles that a rotated cut sweeps
        are continued along ``path``; a loop around a Regge point
        ``lam + k_other^2/4`` therefore changes the value.
    contour : {"polyline", "auto"} or Contour
        Integration contour between the rotated cuts.

    Returns
    -------
    ContinuationResult
        ``value = integral + sum residue_terms``; each residue term is
        ``(PoleSpec, sign, ScaledComplex)``. ``loop_jumps`` holds
        ``(PoleSpec, ScaledComplex)``: the change in ``value`` after one more
        loop around that pole's Regge point.
    """
    mu = complex(mu)
    th = cuts.theta
    ccw = cuts.direction == "ccw"
    k2sum = op1.threshold + op2.threshold
    rel = mu - k2sum
    if rel != 0:
        ang = math.atan2(rel.imag, rel.real)
        if ccw and rel.imag > 0 and ang >= cuts.rotation_angle:
            raise DomainError(f"rotation angle {cuts.rotation_angle} too small for arg(mu - k^2/4) = {ang}")
        if (not ccw) and rel.imag < 0 and -ang >= cuts.rotation_angle:
            raise DomainError(f"rotation angle {cuts.rotation_angle} too small for arg(mu - k^2/4) = {ang}")
    else:
        raise BranchCutError("mu sits on the threshold k^2/4")
    setup = _Setup(mu, op1, op2, z, w, th, -1 if ccw else 1)
    if path is None:
        path = _default_path(mu, ccw)
    path = [complex(p) for p in path]
    if abs(path[-1] - mu) > 1e-12 * (1 + abs(mu)):
        raise DomainError("continuation path must end at mu")
    nu_tracked = {}
    pieces = tuple(LineSegment(a, b) for a, b in zip(path[:-1], path[1:]) if a != b)
    for ps in setup.poles:
        # the other factor at mu - lam, seeded on the physical branch and tracked along the path
        c = _regge_point(ps, setup)
        if pieces:
            sq = branch_sqrt_along(Contour(pieces), c, "physical", t0=0.0)(float(len(pieces)))
        else:
            sq = complex(np.sqrt(path[0] - c))
            sq = sq if sq.imag <= 0 else -sq
        nu_tracked[id(ps)] = 1j * sq
    if contour == "polyline":
        c_int = _polyline_fallback(setup)
    elif contour == "auto":
        c_int = auto_contour(setup)
    else:
        c_int = contour
        check_contour(c_int, setup)
    q = integrate_with_diagnostics(c_int, setup.integrand, tol, setup.poles)
    terms = _pole_corrections(c_int, setup, nu_tracked=nu_tracked)
    value = _sum_terms(q.value, terms)
    # one more loop around a Regge point flips the tracked nu in that pole's residue;
    # a factor-1 residue enters the value with sign -1, a factor-2 residue with +1
    jumps = []
    for ps in setup.poles:
        nu_t = nu_tracked[id(ps)]
        sign = -1.0 if ps.side == "factor1" else 1.0
        jumps.append((ps, (setup.residue(ps, -nu_t) - setup.residue(ps, nu_t)) * ScaledComplex.from_complex(sign)))
    return ContinuationResult(value, q.value, terms, c_int, math.exp(q.log_error) + math.exp(q.log_tail), jumps)


# ---------------------------------------------------------------------------
# batch text format
# ---------------------------------------------------------------------------

BATCH_COLUMNS = ("mu_re", "mu_im", "sheet", "log10_abs", "phase", "est_error")


def _parse_point(tok):
    try:
        x, ys = tok.split(":")
        return HyperbolicPoint(float(x), [float(v) for v in ys.split(",")])
    except ValueError as exc:
        raise DomainError(f"cannot parse point {tok!r}; expected x:y1,y2,...") from exc


def parse_batch(text):
    """Parse ``mu_re mu_im sheet z1 z2 w1 w2`` lines; points are ``x:y1,...``."""
    out = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if len(tok) != 7:
            raise DomainError(f"line {n}: expected 7 fields, got {len(tok)}")
        sheet = tok[2]
        if sheet not in ("physical", "-i0", "+i0"):
            raise DomainError(f"line {n}: unknown sheet {sheet!r}")
        mu = complex(float(tok[0]), float(tok[1]))
        z = ProductPoint(_parse_point(tok[3]), _parse_point(tok[4]))
        w = ProductPoint(_parse_point(tok[5]), _parse_point(tok[6]))
        out.append((mu, sheet, z, w))
    return out


def format_batch_row(mu, sheet, value, est_error):
    mu = complex(mu)
    return (f"{mu.real!r},{mu.imag!r},{sheet},{float(value.log10_abs)!r},"
            f"{float(value.phase)!r},{float(est_error)!r}")
