"""Saddle-point analysis of the product resolvent near the boundary.

Along a boundary ray the integrand behaves like ``exp(-i r1 F(mu1))`` with

    F(mu1) = sqrt(mu1 - k1^2/4) + s sqrt(mu - mu1 - k2^2/4),

both roots on the branch ``Im sqrt <= 0``. ``|exp(-i r1 F)| = exp(r1 Im F)``,
so the saddle ``mu1_0(s)`` controls the front face, the cut tips control the
side faces, and a pole contributes when a steepest-descent deformation has
to sweep it.

Conventions
-----------
``A = k^2/4 - mu`` with the principal ``A^(3/4)`` and
``(mu - k^2/4)^(3/4) := exp(3 i pi/4) A^(3/4)``; this is analytic on the
physical sheet.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from functools import lru_cache
import math

import numpy as np
from scipy import integrate as sp_integrate
from scipy import ndimage

from .contour import (
    Contour,
    LineSegment,
    PoleSpec,
    RayIn,
    RayOut,
    deform,
    integrate_with_diagnostics,
    line_through,
    polyline,
)
from .errors import (
    BoundarySignal,
    ContourError,
    DomainError,
    NoCrossing,
    PoleOnContour,
    ProdresError,
    SideFaceRegime,
    TransitionSignal,
)
from .geometry import HyperbolicPoint, ProductPoint, Slope, boundary_coords
from .hyperbolic import rotated_sqrt, spherical_function
from .scaled import ScaledComplex

__all__ = [
    "PhaseContext",
    "PhaseData",
    "RegionLabel",
    "AsymptoticTerm",
    "FaceData",
    "FitResult",
    "saddle_point",
    "phase_data",
    "fd_derivative",
    "classify",
    "label_window",
    "region_map",
    "residue_decision",
    "sweep_decision",
    "s0_for_pole",
    "steepest_contour",
    "predict_leading",
    "term_value",
    "corner_log_power",
    "S_FACTOR_POWER",
    "CALIBRATION",
    "calibrate",
    "transition_profile",
    "transition_profile_closed_form",
    "transition_model_integral",
    "fit_exponents",
    "fit_radii",
]


# ---------------------------------------------------------------------------
# phase
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseContext:
    """Phase ``F_s`` for spectral parameter ``mu`` and slope ``s``."""

    mu: complex
    k1: int
    k2: int
    s: Slope = Slope(1.0)

    def __post_init__(self):
        object.__setattr__(self, "mu", complex(self.mu))
        object.__setattr__(self, "s", Slope.of(self.s))

    @property
    def t1(self):
        return self.k1 * self.k1 / 4.0

    @property
    def t2(self):
        return self.mu - self.k2 * self.k2 / 4.0

    @property
    def A(self):
        """``k^2/4 - mu``."""
        return (self.k1 * self.k1 + self.k2 * self.k2) / 4.0 - self.mu

    @property
    def sv(self):
        if self.s.is_infinite or self.s.is_zero:
            raise SideFaceRegime(f"slope {self.s.value} belongs to a side face")
        return self.s.value

    def with_s(self, s):
        return replace(self, s=Slope.of(s))

    def roots(self, mu1):
        mu1 = np.asarray(mu1, dtype=complex)
        return rotated_sqrt(mu1 - self.t1), rotated_sqrt(self.mu - mu1 - self.k2 * self.k2 / 4.0)

    def F(self, mu1):
        a, b = self.roots(mu1)
        return a + self.sv * b

    def dF(self, mu1):
        a, b = self.roots(mu1)
        return 0.5 / a - 0.5 * self.sv / b

    def d2F(self, mu1):
        a, b = self.roots(mu1)
        return -0.25 / a ** 3 - 0.25 * self.sv / b ** 3


def mu_minus_threshold_34(ctx):
    """``(mu - k^2/4)^(3/4)`` in the convention of the module docstring."""
    return np.exp(0.75j * math.pi) * complex(ctx.A) ** 0.75


def saddle_point(ctx):
    """``mu1_0(s) = (mu - k2^2/4 + s^2 k1^2/4) / (1 + s^2)``.

    Examples
    --------
    >>> saddle_point(PhaseContext(-1.0, 2, 2, 1.0))
    (-0.5+0j)
    """
    s = ctx.sv
    return (ctx.t2 + s * s * ctx.t1) / (1.0 + s * s)


@dataclass(frozen=True)
class PhaseData:
    F0: complex
    F2: complex


def phase_data(ctx):
    """``F(mu1_0) = sqrt((mu - k^2/4)(1+s^2))`` and
    ``F''(mu1_0) = -(1/4) s^-2 (1+s^2)^(5/2) (mu - k^2/4)^(-3/2)``."""
    s = ctx.sv
    root = complex(rotated_sqrt(-ctx.A))
    F0 = math.sqrt(1.0 + s * s) * root
    F2 = -0.25 * s ** -2 * (1.0 + s * s) ** 2.5 / root ** 3
    return PhaseData(F0, F2)


def fd_derivative(ctx, mu1, h=None):
    """Five-point centred difference of ``F``.

    The default step is ``1e-3`` times the distance to the nearer cut tip
    (capped at 1), which keeps the stencil on one branch.
    """
    mu1 = complex(mu1)
    if h is None:
        h = 1e-3 * min(1.0, abs(mu1 - ctx.t1), abs(mu1 - ctx.t2))
    f = ctx.F(mu1 + h * np.array([-2.0, -1.0, 1.0, 2.0]))
    return complex((f[0] - 8.0 * f[1] + 8.0 * f[2] - f[3]) / (12.0 * h))


# ---------------------------------------------------------------------------
# regions
# ---------------------------------------------------------------------------

class RegionLabel(Enum):
    N_s = "N_s"
    P_s_left = "P_s_left"
    P_s_right = "P_s_right"


_PINCH = 1.5


@dataclass
class RegionMap:
    """Labelled grid of ``{Im F > Im F(mu1_0)}`` over a window of the mu1-plane."""

    ctx: PhaseContext
    xs: np.ndarray
    ys: np.ndarray
    above: np.ndarray
    comp: np.ndarray
    left_ids: frozenset
    right_ids: frozenset
    level: float

    def h_at(self, q):
        """Local grid spacing at ``q``."""
        j = int(np.clip(np.searchsorted(self.xs, q.real), 1, len(self.xs) - 1))
        i = int(np.clip(np.searchsorted(self.ys, q.imag), 1, len(self.ys) - 1))
        return max(self.xs[j] - self.xs[j - 1], self.ys[i] - self.ys[i - 1])

    def label_grid(self):
        """Array of codes: 0 = N_s, 1 = P_left, 2 = P_right, 3 = unattached P."""
        out = np.zeros(self.above.shape, dtype=int)
        for cid in np.unique(self.comp[self.above]):
            m = self.comp == cid
            out[m] = 1 if cid in self.left_ids else 2 if cid in self.right_ids else 3
        return out


def _cells_near_ray(P, o, d, tol):
    """Mask of grid points within ``tol`` of the ray ``o + d [0, inf)``."""
    t = np.maximum((np.conj(d) * (P - o)).real, 0.0)
    return np.abs(o + d * t - P) <= tol


def _axis(c, L, W, n):
    # sinh-stretched axis: spacing ~ L a / n near c, growing geometrically to c +- W
    a = math.asinh(2.0 * W / L)
    return c + 0.5 * L * np.sinh(a * np.linspace(-1.0, 1.0, n))


def _build_map(ctx, key, n):
    (cx, cy), L, W = key
    xs = _axis(cx, L, W, n)
    ys = _axis(cy, L, W, n)
    X, Y = np.meshgrid(xs, ys)
    Z = X + 1j * Y
    mu0 = complex(saddle_point(ctx))
    level = float(np.imag(ctx.F(mu0)))
    above = np.imag(ctx.F(Z)) > level
    H = np.maximum(*np.meshgrid(np.gradient(xs), np.gradient(ys)))
    # the two ascent sectors pinch at the saddle; cut them apart there
    above &= np.abs(Z - mu0) > _PINCH * H
    comp, _ = ndimage.label(above)
    near1 = _cells_near_ray(Z, complex(ctx.t1), 1.0, 1.01 * H) & above
    near2 = _cells_near_ray(Z, complex(ctx.t2), -1.0, 1.01 * H) & above
    right = frozenset(int(c) for c in np.unique(comp[near1]))
    left = frozenset(int(c) for c in np.unique(comp[near2]))
    return RegionMap(ctx, xs, ys, above, comp, left, right, level)


def _frame(ctx, extra=()):
    pts = [complex(ctx.t1), complex(ctx.t2), complex(saddle_point(ctx))] + [complex(p) for p in extra]
    re = [p.real for p in pts]
    im = [p.imag for p in pts]
    L = max(max(re) - min(re), max(im) - min(im), abs(ctx.t1 - ctx.t2), 1e-3)
    return (0.5 * (max(re) + min(re)), 0.5 * (max(im) + min(im))), L


@lru_cache(maxsize=64)
def _cached_map(ctx, key, n):
    return _build_map(ctx, key, n)


def region_map(ctx, extra=(), n=241):
    """Region map on a window that contains the whole super-level set.

    The grid is a tensor product of sinh-stretched axes, fine near the cut
    tips and the saddle. Its half-width grows until no super-level cell
    touches the border, so every component's connectivity is decided on
    the grid. Flood fill uses 4-connectivity in index space.
    """
    centre, L = _frame(ctx, extra)
    W = 2.0 * L
    for _ in range(12):
        rm = _cached_map(ctx, (centre, float(L), float(W)), n)
        border = np.concatenate([rm.above[0], rm.above[-1], rm.above[:, 0], rm.above[:, -1]])
        if not border.any():
            return rm
        W *= 4.0
    raise ProdresError("super-level set of Im F does not fit in the search window")


def _level_distance(ctx, mu1):
    """First-order distance from ``mu1`` to the level set through the saddle."""
    mu0 = complex(saddle_point(ctx))
    if abs(mu1 - mu0) < 1e-9:
        return 0.0
    diff = abs(float(np.imag(ctx.F(mu1))) - float(np.imag(ctx.F(mu0))))
    g = abs(complex(ctx.dF(mu1)))
    return diff / g if g > 0 else math.inf


def classify(ctx, mu1, n=241):
    """Region of ``mu1`` relative to the level set of ``Im F`` through the saddle.

    ``P`` components are told apart by flood fill: a component whose cells
    reach the axis of the first cut is ``P_s_right``; one reaching the axis
    of the second cut is ``P_s_left``.

    Raises
    ------
    BoundarySignal
        ``mu1`` lies within 1e-9 of the level set.
    """
    mu1 = complex(mu1)
    if _level_distance(ctx, mu1) < 1e-9:
        raise BoundarySignal(f"{mu1} lies on the level set through the saddle", mu1)
    level = float(np.imag(ctx.F(saddle_point(ctx))))
    if float(np.imag(ctx.F(mu1))) < level:
        return RegionLabel.N_s
    mu0 = complex(saddle_point(ctx))
    for m in (n, 2 * n + 1, 4 * n + 1):
        rm = region_map(ctx, (mu1,), m)
        if abs(mu1 - mu0) < 4.0 * rm.h_at(mu0):
            lab = _near_saddle(rm, mu1, mu0)
        else:
            lab = _attach(rm, mu1)
        if lab is not None:
            return lab
    raise ProdresError(f"could not attach {mu1} to a super-level component")


def label_window(ctx, centre, half_width, n=200):
    """Region labels at the centres of an ``n x n`` cell grid.

    Cells crossed (to first order) by the level set through the saddle,
    including the saddle's own cell, are labelled ``"boundary"``; the others
    get the ``RegionLabel`` value of their centre.

    Returns
    -------
    xs, ys : ndarray
        Cell-centre coordinates.
    labels : ndarray of str, shape (n, n)
        ``labels[i, j]`` belongs to ``xs[j] + 1j * ys[i]``.
    """
    centre = complex(centre)
    h = 2.0 * half_width / n
    xs = centre.real - half_width + h * (np.arange(n) + 0.5)
    ys = centre.imag - half_width + h * (np.arange(n) + 0.5)
    corners = tuple(centre + half_width * c for c in (1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j))
    rm = region_map(ctx, corners)
    level = rm.level
    mu0 = complex(saddle_point(ctx))
    X, Y = np.meshgrid(xs, ys)
    Z = X + 1j * Y
    g = np.abs(ctx.dF(Z))
    dist = np.abs(np.imag(ctx.F(Z)) - level) / np.where(g > 0, g, 1e-300)
    near = (dist <= h / math.sqrt(2.0)) | (np.abs(Z - mu0) <= h / math.sqrt(2.0))
    above = np.imag(ctx.F(Z)) > level
    labels = np.full(Z.shape, RegionLabel.N_s.value, dtype=object)
    labels[near] = "boundary"
    for i, j in zip(*np.nonzero(above & ~near)):
        lab = _attach(rm, complex(Z[i, j])) if abs(Z[i, j] - mu0) >= 4.0 * rm.h_at(mu0) else None
        if lab is None:
            lab = classify(ctx, complex(Z[i, j]))
        labels[i, j] = lab.value
    return xs, ys, labels


def _near_saddle(rm, mu1, mu0):
    # ascent axis of Im F at the saddle; sectors are told apart by projection
    g2 = -1j * complex(rm.ctx.d2F(mu0))
    up = 1j * np.exp(0.5j * (math.pi - np.angle(g2)))
    side = 1.0 if (np.conj(up) * (mu1 - mu0)).real > 0 else -1.0
    return _attach(rm, mu0 + side * 6.0 * rm.h_at(mu0) * up)


def _attach(rm, mu1):
    xs, ys = rm.xs, rm.ys
    i = int(np.clip(np.searchsorted(ys, mu1.imag), 1, len(ys) - 1))
    j = int(np.clip(np.searchsorted(xs, mu1.real), 1, len(xs) - 1))
    level = rm.level
    for di in (0, -1, 1, -2, 2, -3, 3):
        for dj in (0, -1, 1, -2, 2, -3, 3):
            ii, jj = i + di, j + dj
            if not (0 <= ii < len(ys) and 0 <= jj < len(xs)) or not rm.above[ii, jj]:
                continue
            c = complex(xs[jj], ys[ii])
            ts = np.union1d(np.linspace(0.0, 1.0, 33), np.geomspace(1e-6, 1.0, 60))
            seg = mu1 + (c - mu1) * ts
            if np.all(np.imag(rm.ctx.F(seg)) > level):
                cid = int(rm.comp[ii, jj])
                in_l, in_r = cid in rm.left_ids, cid in rm.right_ids
                if in_l and not in_r:
                    return RegionLabel.P_s_left
                if in_r and not in_l:
                    return RegionLabel.P_s_right
                return None
    return None


def residue_decision(ctx, pole):
    """Whether a pole's residue enters the leading asymptotics.

    Returns ``"include"``, ``"exclude"`` or ``"dominated"``. A first-factor
    pole is included from ``P_s_left`` and excluded from ``P_s_right``;
    second-factor poles swap the roles.

    Raises
    ------
    TransitionSignal
        The pole lies on the level set through the saddle.
    """
    try:
        lab = classify(ctx, complex(pole.location))
    except BoundarySignal as exc:
        raise TransitionSignal(f"pole at {pole.location} sits on the level set", pole) from exc
    if lab is RegionLabel.N_s:
        return "dominated"
    left = lab is RegionLabel.P_s_left
    if pole.side == "factor1":
        return "include" if left else "exclude"
    return "exclude" if left else "include"


def s0_for_pole(mu, k1, k2, lam, side="factor1"):
    """Critical slope at which the saddle meets a real pole.

    ``side="factor1"``: ``s0 = sqrt((mu - k2^2/4 - lam)/(lam - k1^2/4))``.
    ``side="factor2"``: the pole sits at ``mu1 = mu - lam`` and
    ``s0 = sqrt((lam - k2^2/4)/(mu - k1^2/4 - lam))``.

    Examples
    --------
    >>> round(s0_for_pole(-1.0, 2, 2, 0.5), 12)
    2.2360679775
    """
    mu = float(np.real(mu))
    t1, t2 = k1 * k1 / 4.0, k2 * k2 / 4.0
    if side == "factor1":
        if not (mu - t2 < lam < t1):
            raise NoCrossing(f"lambda = {lam} outside ({mu - t2}, {t1})")
        return math.sqrt((mu - t2 - lam) / (lam - t1))
    if side == "factor2":
        if not (mu - t1 < lam < t2):
            raise NoCrossing(f"lambda = {lam} outside ({mu - t1}, {t2})")
        return math.sqrt((lam - t2) / (mu - t1 - lam))
    raise ValueError(f"unknown side {side!r}")


# ---------------------------------------------------------------------------
# steepest descent
# ---------------------------------------------------------------------------

def _descent_dir(ctx, mu1):
    # descent of Re g for g = -i F, i.e. of Im F
    gp = -1j * complex(ctx.dF(mu1))
    return -np.conj(gp) / abs(gp)


def _seg_crosses_cut(a, b, ctx):
    from .product import _seg_hits_ray
    return _seg_hits_ray(a, b, complex(ctx.t1), 1.0) or _seg_hits_ray(a, b, complex(ctx.t2), -1.0)


def _trace(ctx, start, far, scale):
    mu0 = complex(saddle_point(ctx))
    pts = [start]
    p = start
    for _ in range(20000):
        dist = min(abs(p - ctx.t1), abs(p - ctx.t2))
        h = min(0.1 * max(abs(p - mu0), 1e-3 * scale), 0.2 * dist)
        k1 = _descent_dir(ctx, p)
        k2 = _descent_dir(ctx, p + 0.5 * h * k1)
        k3 = _descent_dir(ctx, p + 0.5 * h * k2)
        k4 = _descent_dir(ctx, p + h * k3)
        q = p + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        if _seg_crosses_cut(p, q, ctx):
            raise ContourError(f"steepest-descent path meets a cut near {q}")
        pts.append(q)
        p = q
        if abs(p - mu0) > far:
            return pts
    raise ContourError("steepest-descent tracing did not leave the window")


def _thin(pts, n):
    if len(pts) <= n:
        return list(pts)
    idx = np.unique(np.round(np.geomspace(1, len(pts), n)).astype(int) - 1)
    return [pts[i] for i in idx]


def steepest_contour(ctx, poles=(), n_vertices=48):
    """Contour through ``mu1_0(s)`` along the two steepest-descent paths of ``Im F``.

    Each half is traced by RK4 with unit speed along ``-conj(g')``,
    ``g = -i F``, until it is far from the saddle; conic rays continue it.

    Raises
    ------
    PoleOnContour
        A declared pole lies on the traced path (for real ``mu`` this is
        the critical slope ``s0``; the message names it).
    """
    mu0 = complex(saddle_point(ctx))
    pd = phase_data(ctx)
    g2 = -1j * pd.F2
    d = np.exp(0.5j * (math.pi - np.angle(g2)))
    scale = abs(ctx.t1 - ctx.t2) + 1e-12
    far = 40.0 * (1.0 + abs(ctx.t1) + abs(ctx.t2) + max([abs(complex(p.location)) for p in poles] + [0.0]))
    eps = 1e-3 * scale
    halves = [_trace(ctx, mu0 + eps * d, far, scale), _trace(ctx, mu0 - eps * d, far, scale)]
    up = [h for h in halves if h[-1].imag > 0]
    down = [h for h in halves if h[-1].imag < 0]
    if len(up) != 1 or len(down) != 1:
        raise ContourError("steepest-descent halves do not separate into upper and lower ends")
    up, down = _thin(up[0], n_vertices), _thin(down[0], n_vertices)
    verts = down[::-1] + [mu0] + up
    for pole in poles:
        q = complex(pole.location)
        a = np.asarray(verts[:-1])
        b = np.asarray(verts[1:])
        dd = b - a
        t = np.clip(((np.conj(dd) * (q - a)).real) / np.maximum(np.abs(dd) ** 2, 1e-300), 0, 1)
        if np.min(np.abs(a + t * dd - q)) < 1e-9 * (1 + abs(q)):
            msg = f"steepest contour passes through the pole at {q}"
            if ctx.mu.imag == 0.0:
                try:
                    lam = q.real if pole.side == "factor1" else (ctx.mu - q).real
                    s0 = s0_for_pole(ctx.mu, ctx.k1, ctx.k2, lam, pole.side)
                    msg += f"; critical slope s0 = {s0!r}"
                except NoCrossing:
                    pass
            raise PoleOnContour(msg, pole)
    din = verts[0] - verts[1]
    dout = verts[-1] - verts[-2]
    segs = [RayIn(verts[0], din / abs(din))]
    segs += [LineSegment(a, b) for a, b in zip(verts[:-1], verts[1:]) if a != b]
    segs.append(RayOut(verts[-1], dout / abs(dout)))
    return Contour(tuple(segs), scale)


def _reference_contour(ctx, poles):
    """Admissible contour keeping first-factor poles right and second-factor poles left."""
    lows = [complex(p.location).real for p in poles if p.side == "factor1"] + [ctx.t1]
    highs = [complex(p.location).real for p in poles if p.side == "factor2"] + [ctx.t2.real]
    c = 0.05 * abs(ctx.t1 - ctx.t2)
    a = complex(min(lows) - c, 0.0)
    b = complex(max(highs) + c, ctx.t2.imag)
    if ctx.t2.imag < 0:
        verts = [b, a]
    elif ctx.t2.imag > 0:
        verts = [a, b]
    else:
        raise DomainError("sweep oracle needs Im mu != 0")
    return polyline(verts, 1j, 1j)


def sweep_decision(ctx, pole, poles=None):
    """Brute-force decision: deform a reference contour onto the steepest path.

    ``include`` if the deformation sweeps the pole, ``exclude`` if not,
    ``dominated`` when the residue is exponentially smaller than the saddle
    contribution (``Im F(pole) < Im F(mu1_0)``).
    """
    poles = list(poles) if poles is not None else [pole]
    if pole not in poles:
        poles.append(pole)
    level = float(np.imag(ctx.F(saddle_point(ctx))))
    if float(np.imag(ctx.F(complex(pole.location)))) < level:
        return "dominated"
    ref = _reference_contour(ctx, poles)
    sd = steepest_contour(ctx, poles)
    _, crossed = deform(ref, sd, [pole])
    return "include" if crossed else "exclude"


# ---------------------------------------------------------------------------
# leading terms
# ---------------------------------------------------------------------------

# the explicit slope factor in the front-face term carries one power of rho1
S_FACTOR_POWER = Fraction(1)


@dataclass(frozen=True)
class AsymptoticTerm:
    """``coefficient * x1^x1_power * x2^x2_power * v^log_power * exp(osc_exponent / v)``.

    ``v`` is ``rho`` on the front face, ``rho1`` on side 1 and ``rho2`` on
    side 2 (``variable`` records which).
    """

    face: str
    x1_power: complex
    x2_power: complex
    osc_exponent: complex
    log_power: Fraction
    coefficient: ScaledComplex
    variable: str = "rho"
    s: float = None
    kind: str = "free"

    def __post_init__(self):
        if self.face not in ("front", "side1", "side2"):
            raise DomainError(f"unknown face {self.face!r}")
        object.__setattr__(self, "log_power", Fraction(self.log_power))


def corner_log_power(front):
    """Log power of the front term after absorbing the explicit slope factor."""
    if front.face != "front":
        raise DomainError("corner matching starts from a front-face term")
    return front.log_power + S_FACTOR_POWER


@dataclass(frozen=True)
class FaceData:
    """Data fixing a boundary approach.

    ``w`` is the fixed source point. On the front face ``y1`` and ``y2`` are
    the boundary points approached; on side 1 ``y1`` is approached while
    ``z2`` stays at the interior point ``z_interior``; side 2 mirrors this.
    """

    w: ProductPoint
    y1: tuple = None
    y2: tuple = None
    z_interior: HyperbolicPoint = None


# Frozen calibration of the stationary-phase constant (see ``calibrate``):
# reference ratio at r = 1000, mu = -1, H^3 x H^3, y = 0, w = ((1, 0), (1, 0)),
# slope 1 for the front face and the first side face for "side".
CALIBRATION = {
    "front": complex(-0.564800490925016, -0.564800490925016),
    "side": complex(0.5645091541523107, -0.5645091541522876),
}


def _included_poles(ctx, op1, op2):
    """Poles whose residues are included, with their Im F values."""
    out = []
    for side, op in (("factor1", op1), ("factor2", op2)):
        for p in op.poles:
            loc = p.lam if side == "factor1" else ctx.mu - p.lam
            ps = PoleSpec(loc, p.tag, side)
            if residue_decision(ctx, ps) == "include":
                out.append((float(np.imag(ctx.F(loc))), side, p))
    return out


def _check_transition(ctx, op1, op2):
    if ctx.mu.imag != 0.0:
        return
    mu0 = saddle_point(ctx)
    for side, op in (("factor1", op1), ("factor2", op2)):
        for p in op.poles:
            loc = p.lam if side == "factor1" else (ctx.mu - p.lam).real
            if abs(loc - mu0.real) < 1e-12 * (1 + abs(loc)):
                s0 = s0_for_pole(ctx.mu, ctx.k1, ctx.k2, p.lam, side)
                raise TransitionSignal(
                    f"pole {p.lam} sits at the saddle; critical slope s0 = {s0!r}", p)


def predict_leading(ctx, face, op1, op2, data, calibration=None):
    """Predicted leading term on a boundary face.

    Parameters
    ----------
    ctx : PhaseContext
        ``ctx.s`` is used on the front face only.
    face : {"front", "side1", "side2"}
    op1, op2 : ModelOperator
    data : FaceData
    calibration : dict, optional
        Stationary-phase constants; defaults to the frozen ``CALIBRATION``.

    Returns
    -------
    AsymptoticTerm
    """
    cal = CALIBRATION if calibration is None else calibration
    k1, k2 = ctx.k1, ctx.k2
    w = data.w
    m34 = mu_minus_threshold_34(ctx)
    osc = -1j * complex(rotated_sqrt(-ctx.A))
    if face == "front":
        if data.y1 is None or data.y2 is None:
            raise DomainError("front-face prediction needs boundary points y1 and y2")
        s = ctx.sv
        _check_transition(ctx, op1, op2)
        inc = _included_poles(ctx, op1, op2)
        if inc:
            _, side, p = max(inc, key=lambda t: t[0])
            return _front_pole_term(ctx, side, p, op1, op2, data)
        mu0 = complex(saddle_point(ctx))
        P1 = op1.poisson(mu0, w.z1, data.y1)
        P2 = op2.poisson(ctx.mu - mu0, w.z2, data.y2)
        c = cal["front"] * s / (1.0 + s * s) * m34
        coeff = ScaledComplex.from_complex(c) * P1 * P2
        return AsymptoticTerm("front", k1 / 2.0, k2 / 2.0, osc, Fraction(1, 2), coeff, "rho", s)
    if face in ("side1", "side2"):
        one = face == "side1"
        yb = data.y1 if one else data.y2
        if yb is None or data.z_interior is None:
            raise DomainError(f"{face} prediction needs the approached boundary point and an interior point")
        opb, opi = (op1, op2) if one else (op2, op1)
        kb, ki = (k1, k2) if one else (k2, k1)
        wb, wi = (w.z1, w.z2) if one else (w.z2, w.z1)
        t_other = ki * ki / 4.0
        free_rate = kb / 2.0 + float(np.real(1j * rotated_sqrt(ctx.mu - t_other - kb * kb / 4.0)))
        # eigenvalue terms of the interior factor
        best = None
        for p in opi.poles:
            nu = 1j * complex(rotated_sqrt(ctx.mu - p.lam - kb * kb / 4.0))
            rate = kb / 2.0 + nu.real
            if rate < free_rate and (best is None or rate < best[0]):
                best = (rate, p, nu)
        if best is not None:
            _, p, nu = best
            wgt = opi.residue_weight(p, data.z_interior, wi)
            P = opb.poisson(ctx.mu - p.lam, wb, yb)
            coeff = wgt * P
            power = kb / 2.0 + nu
            x1p, x2p = (power, 0.0) if one else (0.0, power)
            return AsymptoticTerm(face, x1p, x2p, 0.0, Fraction(0), coeff,
                                  "rho1" if one else "rho2", None, "eigenvalue")
        S = spherical_function(ki, data.z_interior, wi)
        P = opb.poisson(ctx.mu - t_other, wb, yb)
        coeff = ScaledComplex.from_complex(cal["side"] * m34) * S * P
        x1p, x2p = (kb / 2.0, 0.0) if one else (0.0, kb / 2.0)
        return AsymptoticTerm(face, x1p, x2p, osc, Fraction(3, 2), coeff, "rho1" if one else "rho2")
    raise DomainError(f"unknown face {face!r}")


def _front_pole_term(ctx, side, p, op1, op2, data):
    """Included eigenvalue term on the front face."""
    k1, k2 = ctx.k1, ctx.k2
    w = data.w
    if side == "factor1":
        nu_p = math.sqrt(op1.threshold - p.lam)
        nu_o = 1j * complex(rotated_sqrt(ctx.mu - p.lam - k2 * k2 / 4.0))
        # phi(z1) -> x1^zeta (1 + |y1 - anchor|^2)^(-zeta)
        dy = np.asarray(data.y1, dtype=float) - np.asarray(p.anchor)
        zeta = k1 / 2.0 + nu_p
        lphi = -zeta * math.log1p(float(dy @ dy)) + math.log(p.weight)
        lphi += zeta * op1.log_profile_base(p, w.z1)
        P = op2.poisson(ctx.mu - p.lam, w.z2, data.y2)
        coeff = ScaledComplex(lphi, 0.0) * P
        return AsymptoticTerm("front", zeta, k2 / 2.0 + nu_o, 0.0, Fraction(0), coeff, "rho", ctx.sv, "eigenvalue")
    nu_p = math.sqrt(op2.threshold - p.lam)
    nu_o = 1j * complex(rotated_sqrt(ctx.mu - p.lam - k1 * k1 / 4.0))
    dy = np.asarray(data.y2, dtype=float) - np.asarray(p.anchor)
    zeta = k2 / 2.0 + nu_p
    lphi = -zeta * math.log1p(float(dy @ dy)) + math.log(p.weight)
    lphi += zeta * op2.log_profile_base(p, w.z2)
    P = op1.poisson(ctx.mu - p.lam, w.z1, data.y1)
    coeff = ScaledComplex(lphi, 0.0) * P
    return AsymptoticTerm("front", k1 / 2.0 + nu_o, zeta, 0.0, Fraction(0), coeff, "rho", ctx.sv, "eigenvalue")


def term_value(term, z):
    """Value of ``term`` at the product point ``z`` (ScaledComplex)."""
    l1, l2 = z.z1.logx, z.z2.logx
    if term.variable == "rho":
        v = boundary_coords(z).rho
    elif term.variable == "rho1":
        v = -1.0 / l1
    else:
        v = -1.0 / l2
    lg = term.x1_power * l1 + term.x2_power * l2 + term.osc_exponent / v + float(term.log_power) * math.log(v)
    return term.coefficient * ScaledComplex.from_log(lg)


def calibrate(face="front", r=1000.0, tol=1e-10):
    """Recompute a stationary-phase constant at the frozen reference configuration."""
    from .geometry import ray_point
    from .product import ModelOperator, ProductResolventRequest, product_kernel

    op = ModelOperator(2)
    o = HyperbolicPoint(1.0, [0.0, 0.0])
    w = ProductPoint(o, o)
    unit = {"front": complex(1.0), "side": complex(1.0)}
    if face == "front":
        ctx = PhaseContext(-1.0, 2, 2, 1.0)
        z = ray_point(1.0, r, [0.0, 0.0], [0.0, 0.0])
        term = predict_leading(ctx, "front", op, op, FaceData(w, (0.0, 0.0), (0.0, 0.0)), unit)
    elif face == "side":
        ctx = PhaseContext(-1.0, 2, 2, 1.0)
        zi = HyperbolicPoint(2.0, [0.5, 0.0])
        z = ProductPoint(HyperbolicPoint.from_log(-r, [0.0, 0.0]), zi)
        term = predict_leading(ctx, "side1", op, op, FaceData(w, (0.0, 0.0), None, zi), unit)
    else:
        raise DomainError(f"unknown calibration face {face!r}")
    val = product_kernel(ProductResolventRequest(-1.0, z, w, tol=tol), op, op)
    return complex((val / term_value(term, z)).to_complex())


# ---------------------------------------------------------------------------
# transition profile
# ---------------------------------------------------------------------------

def transition_profile(S, a):
    """``int_R exp(-a T^2) S / (T^2 + S^2) dT`` by quadrature.

    With ``T = |S| e^v`` the integral is
    ``2 sign(S) int exp(-b e^(2v)) e^v / (1 + e^(2v)) dv`` with ``b = a S^2``,
    smooth on the whole line, so tiny and huge ``|S|`` are equally easy.
    ``S = 0`` returns 0 (principal value).
    """
    S = float(S)
    a = float(a)
    if not a > 0:
        raise DomainError("transition profile needs a > 0")
    if S == 0.0:
        return 0.0
    lb = math.log(a) + 2.0 * math.log(abs(S))
    # beyond v_hi the Gaussian factor is below e^-60; below -60 - |log b| the e^v tail is negligible
    v_hi = 0.5 * (math.log(60.0) - lb)
    v_lo = min(-60.0, v_hi - 120.0)

    def g(v):
        return math.exp(-math.exp(lb + 2.0 * v) + v - math.log1p(math.exp(2.0 * v))) if v < 350 else 0.0

    pts = sorted({min(max(x, v_lo + 1.0), v_hi - 1.0) for x in (0.0, -0.5 * lb)})
    val, _ = sp_integrate.quad(g, v_lo, v_hi, points=pts, epsabs=0.0, epsrel=1e-13, limit=400)
    return math.copysign(2.0 * val, S)


def transition_profile_closed_form(S, a):
    """Closed form ``pi sign(S) erfcx(sqrt(a) |S|)`` used as an oracle."""
    from scipy.special import erfcx
    if S == 0:
        return 0.0
    return math.copysign(math.pi * float(erfcx(math.sqrt(a) * abs(S))), S)


def transition_model_integral(ctx, S, rho1=1e-6, tol=1e-10):
    """Model integral that the profile describes, computed with the exact phase.

    Integrates ``(1/2 pi i) exp(-i (F - F0)/rho1) / (lam - mu1)`` along the
    vertical line through the real saddle with ``lam = mu1_0 - S sqrt(rho1)``.
    The stationary-phase reduction gives ``-(1/2 pi) * profile(S, |F''|/2)``.
    """
    if ctx.mu.imag != 0.0:
        raise DomainError("the transition is analysed for real mu")
    mu0 = complex(saddle_point(ctx))
    F0 = complex(ctx.F(mu0))
    lam = mu0.real - S * math.sqrt(rho1)
    width = math.sqrt(rho1)
    c = line_through(mu0, 1j, scale=width)

    def f(mu1):
        ph = -1j * (ctx.F(mu1) - F0) / rho1
        return ScaledComplex.from_log(ph) / ScaledComplex.from_complex(lam - mu1)

    pole = PoleSpec(lam, "transition", "factor1")
    q = integrate_with_diagnostics(c, f, tol, [pole])
    return complex(q.value.to_complex())


# ---------------------------------------------------------------------------
# exponent fitting
# ---------------------------------------------------------------------------

@dataclass
class FitResult:
    """Fitted ``log value = c0 + osc * r + p log(1/r) + c1 / r`` (phase: ``phi0 + Im(osc) r``).

    ``r`` is the inverse of the fit variable (``1/rho1`` on the front face
    and side 1, ``1/rho2`` on side 2).
    """

    osc_exponent: complex
    log_power: float
    coefficient: ScaledComplex
    stderr: dict = field(default_factory=dict)
    variable: str = "rho1"
    residual: float = 0.0


def fit_radii(r_min, r_max, n=12):
    """Geometric radii plus a close companion of the first, for phase unwrapping."""
    rs = np.geomspace(r_min, r_max, n)
    return np.sort(np.append(rs, r_min + 0.25))


def _unwrap_by_frequency(r, ph):
    """Unwrap phases sampled at possibly wide spacing.

    The local frequency is read off the closest pair of radii (which must be
    within a quarter turn of each other); every phase is then shifted by the
    multiple of 2 pi nearest the linear prediction.
    """
    dr = np.diff(r)
    i = int(np.argmin(dr))
    step = (ph[i + 1] - ph[i] + math.pi) % (2 * math.pi) - math.pi
    if abs(step) > 0.5 * math.pi:
        raise ProdresError("closest radii are too far apart to resolve the phase frequency")
    omega = step / dr[i]
    pred = ph[i] + omega * (r - r[i])
    return ph + 2 * math.pi * np.round((pred - ph) / (2 * math.pi))


def fit_exponents(samples, model, free_log_power=True, correction=True):
    """Least-squares fit of the exponents of a boundary expansion.

    Parameters
    ----------
    samples : sequence of (r, ScaledComplex)
        ``r = 1/rho_v`` with ``rho_v`` the fit variable of the face
        (``rho1`` for front and side 1, ``rho2`` for side 2), geometric in r.
    model : AsymptoticTerm
        Supplies the known x-powers (and ``s`` on the front face), which are
        removed before fitting.
    free_log_power : bool
        Fit the power of ``rho_v``; otherwise it is fixed to ``model.log_power``.
    correction : bool
        Include a first-order correction ``c1 rho_v`` in the real part.

    Returns
    -------
    FitResult
    """
    r = np.array([float(t[0]) for t in samples])
    if r.size < 4:
        raise DomainError("need at least four samples")
    order = np.argsort(r)
    r = r[order]
    vals = [samples[i][1] for i in order]
    la = np.array([float(v.logabs) for v in vals])
    ph = _unwrap_by_frequency(r, np.array([float(v.phase) for v in vals]))
    if model.face == "front":
        s = model.s
        known = -(float(np.real(model.x1_power)) + s * float(np.real(model.x2_power))) * r
        known_ph = -(float(np.imag(model.x1_power)) + s * float(np.imag(model.x2_power))) * r
        var = "rho1"
    elif model.face == "side1":
        known = -float(np.real(model.x1_power)) * r
        known_ph = -float(np.imag(model.x1_power)) * r
        var = "rho1"
    else:
        known = -float(np.real(model.x2_power)) * r
        known_ph = -float(np.imag(model.x2_power)) * r
        var = "rho2"
    y = la - known
    cols = [np.ones_like(r), r]
    names = ["c0", "osc_re"]
    if free_log_power:
        cols.append(-np.log(r))
        names.append("p")
    else:
        y = y + float(model.log_power) * np.log(r)
    if correction:
        cols.append(1.0 / r)
        names.append("c1")
    M = np.column_stack(cols)
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > 1e14:
        raise ProdresError(f"fit design matrix is ill-conditioned (cond = {cond:.3g})")
    coef, *_ = np.linalg.lstsq(M, y, rcond=None)
    res = y - M @ coef
    dof = max(len(y) - len(coef), 1)
    sigma2 = float(res @ res) / dof
    cov = sigma2 * np.linalg.inv(M.T @ M)
    stderr = {n: float(math.sqrt(max(cov[i, i], 0.0))) for i, n in enumerate(names)}
    # phase: phi = phi0 + Im(osc) r
    yph = ph - known_ph
    Mp = np.column_stack([np.ones_like(r), r])
    cph, *_ = np.linalg.lstsq(Mp, yph, rcond=None)
    resp = yph - Mp @ cph
    s2p = float(resp @ resp) / max(len(r) - 2, 1)
    covp = s2p * np.linalg.inv(Mp.T @ Mp)
    stderr["osc_im"] = float(math.sqrt(max(covp[1, 1], 0.0)))
    p = float(coef[names.index("p")]) if free_log_power else float(model.log_power)
    return FitResult(
        osc_exponent=complex(coef[1], cph[1]),
        log_power=p,
        coefficient=ScaledComplex(float(coef[0]), float(cph[0])),
        stderr=stderr,
        variable=var,
        residual=float(math.sqrt(sigma2)),
    )
