"""Contours in the mu1-plane, adaptive quadrature and residue bookkeeping.

A :class:`Contour` is an ordered list of segments: line pieces, circular
arcs and rays. An admissible contour starts with an incoming ray from the
lower half-plane and ends with an outgoing ray into the upper half-plane,
so both spectral cuts stay strictly separated from it.

All integrals carry the factor ``1/(2 pi i)``:
``integrate(path, f) = (1/(2 pi i)) int_path f(mu1) d mu1``.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import BranchCutError, ContourError, PoleOnContour, QuadratureError
from .scaled import ScaledComplex

__all__ = [
    "LineSegment",
    "ArcSegment",
    "RayIn",
    "RayOut",
    "Contour",
    "PoleSpec",
    "QuadResult",
    "integrate",
    "integrate_with_diagnostics",
    "deform",
    "winding_number",
    "index_left",
    "branch_sqrt_along",
    "line_through",
    "vertical_line",
    "polyline",
    "circle",
    "side_of",
]

# Gauss-Kronrod 7/15 abscissae and weights on [-1, 1]
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[:-1][::-1]])
_WK = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[:-1][::-1]])
_WG15 = np.zeros(15)
# Gauss points are the odd-indexed Kronrod points counted from the ends
for _i, _w in zip((1, 3, 5), _WG[:3]):
    _WG15[_i] = _w
    _WG15[14 - _i] = _w
_WG15[7] = _WG[3]

_LOG_ROUNDOFF = math.log(100.0 * np.finfo(float).eps)
_LOG_TINY = math.log(np.finfo(float).tiny)
_LOG_2PI_I = complex(math.log(2.0 * math.pi), math.pi / 2.0)


# ---------------------------------------------------------------------------
# segments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LineSegment:
    a: complex
    b: complex
    kind = "line"
    finite = True

    def point(self, u):
        return self.a + (self.b - self.a) * np.asarray(u, dtype=float)

    def deriv(self, u):
        return np.full(np.shape(u), self.b - self.a, dtype=complex)

    @property
    def start(self):
        return complex(self.a)

    @property
    def end(self):
        return complex(self.b)

    def to_text(self):
        return f"line {_fmt(self.a)} {_fmt(self.b)}"


@dataclass(frozen=True)
class ArcSegment:
    center: complex
    radius: float
    theta0: float
    theta1: float
    kind = "arc"
    finite = True

    def point(self, u):
        th = self.theta0 + (self.theta1 - self.theta0) * np.asarray(u, dtype=float)
        return self.center + self.radius * np.exp(1j * th)

    def deriv(self, u):
        th = self.theta0 + (self.theta1 - self.theta0) * np.asarray(u, dtype=float)
        return 1j * (self.theta1 - self.theta0) * self.radius * np.exp(1j * th)

    @property
    def start(self):
        return complex(self.point(0.0))

    @property
    def end(self):
        return complex(self.point(1.0))

    def to_text(self):
        return f"arc {_fmt(self.center)} {self.radius!r} {self.theta0!r} {self.theta1!r}"


@dataclass(frozen=True)
class RayIn:
    """Incoming ray: traversed from ``origin + direction * inf`` to ``origin``."""

    origin: complex
    direction: complex
    kind = "ray_in"
    finite = False

    def point(self, u):
        return self.origin + self.direction * np.asarray(u, dtype=float)

    def deriv(self, u):
        # orientation: integration runs over u in [0, inf) with reversed sign
        return np.full(np.shape(u), -self.direction, dtype=complex)

    @property
    def start(self):
        return None

    @property
    def end(self):
        return complex(self.origin)

    def to_text(self):
        return f"ray_in {_fmt(self.origin)} {_fmt(self.direction)}"


@dataclass(frozen=True)
class RayOut:
    """Outgoing ray ``origin + direction * u``, ``u`` from 0 to infinity."""

    origin: complex
    direction: complex
    kind = "ray_out"
    finite = False

    def point(self, u):
        return self.origin + self.direction * np.asarray(u, dtype=float)

    def deriv(self, u):
        return np.full(np.shape(u), self.direction, dtype=complex)

    @property
    def start(self):
        return complex(self.origin)

    @property
    def end(self):
        return None

    def to_text(self):
        return f"ray_out {_fmt(self.origin)} {_fmt(self.direction)}"


def _fmt(z):
    z = complex(z)
    return f"{z.real!r},{z.imag!r}"


def _parse_complex(tok):
    re, im = tok.split(",")
    return complex(float(re), float(im))


@dataclass(frozen=True)
class Contour:
    """Connected chain of segments.

    Parameters
    ----------
    segments : tuple
        Segments in traversal order.
    scale : float
        Length scale used for the first panel of every ray.
    """

    segments: tuple
    scale: float = 1.0

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ContourError("empty contour")
        for i, seg in enumerate(segs):
            if isinstance(seg, RayIn) and i != 0:
                raise ContourError("an incoming ray can only start a contour")
            if isinstance(seg, RayOut) and i != len(segs) - 1:
                raise ContourError("an outgoing ray can only end a contour")
            if isinstance(seg, (RayIn, RayOut)) and seg.direction == 0:
                raise ContourError("ray with zero direction")
        for s0, s1 in zip(segs[:-1], segs[1:]):
            e, st = s0.end, s1.start
            if abs(e - st) > 1e-12 * (1.0 + abs(e)):
                raise ContourError(f"segments not connected: {e} -> {st}")

    # -- geometry ---------------------------------------------------------
    @property
    def asymptotic_slopes(self):
        """``(c_minus, c_plus)`` with ``gamma(t) ~ c_pm t``; ``None`` for finite ends."""
        first, last = self.segments[0], self.segments[-1]
        cm = -first.direction / abs(first.direction) if isinstance(first, RayIn) else None
        cp = last.direction / abs(last.direction) if isinstance(last, RayOut) else None
        return cm, cp

    def is_admissible(self):
        cm, cp = self.asymptotic_slopes
        return cm is not None and cp is not None and cm.imag > 0 and cp.imag > 0

    def require_admissible(self):
        if not self.is_admissible():
            raise ContourError("contour needs conic ends with Im c_pm > 0")
        return self

    @property
    def vertices(self):
        pts = []
        for seg in self.segments:
            if seg.start is not None:
                pts.append(seg.start)
        last = self.segments[-1]
        if last.end is not None:
            pts.append(last.end)
        return pts

    def point_at(self, t):
        """Point at global parameter ``t``; segment ``i`` covers ``[i, i+1]``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty(t.shape, dtype=complex)
        n = len(self.segments)
        idx = np.clip(np.floor(t).astype(int), 0, n - 1)
        for i in np.unique(idx):
            m = idx == i
            tau = t[m] - i
            seg = self.segments[i]
            if isinstance(seg, RayOut):
                with np.errstate(divide="ignore"):
                    u = tau / (1.0 - tau)
            elif isinstance(seg, RayIn):
                with np.errstate(divide="ignore"):
                    u = (1.0 - tau) / tau
            else:
                u = tau
            out[m] = seg.point(u)
        return out

    def sample(self, n_per_segment=64, far=None):
        """Polyline through the contour; rays are cut at distance ``far``."""
        if far is None:
            far = 1e3 * (1.0 + max((abs(v) for v in self.vertices), default=1.0))
        pts = []
        for seg in self.segments:
            if seg.finite:
                u = np.linspace(0.0, 1.0, n_per_segment + 1)
                p = seg.point(u)
            else:
                u = np.concatenate([[0.0], np.geomspace(1e-3, 1.0, n_per_segment)]) * far / abs(seg.direction)
                p = seg.point(u)
                if isinstance(seg, RayIn):
                    p = p[::-1]
            if pts:
                p = p[1:]
            pts.extend(p.tolist())
        return np.asarray(pts, dtype=complex)

    # -- text format ------------------------------------------------------
    def to_text(self):
        lines = [f"scale {self.scale!r}"] + [seg.to_text() for seg in self.segments]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        segs = []
        scale = 1.0
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            kind = tok[0]
            try:
                if kind == "scale":
                    scale = float(tok[1])
                elif kind == "line":
                    segs.append(LineSegment(_parse_complex(tok[1]), _parse_complex(tok[2])))
                elif kind == "arc":
                    segs.append(ArcSegment(_parse_complex(tok[1]), float(tok[2]), float(tok[3]), float(tok[4])))
                elif kind == "ray_in":
                    segs.append(RayIn(_parse_complex(tok[1]), _parse_complex(tok[2])))
                elif kind == "ray_out":
                    segs.append(RayOut(_parse_complex(tok[1]), _parse_complex(tok[2])))
                else:
                    raise ContourError(f"unknown segment type {kind!r}")
            except (IndexError, ValueError) as exc:
                raise ContourError(f"cannot parse contour line {raw!r}: {exc}") from exc
        return cls(tuple(segs), scale)


@dataclass(frozen=True)
class PoleSpec:
    """A simple pole of the integrand.

    ``side`` is ``"factor1"`` for poles that an admissible contour keeps on
    its right and ``"factor2"`` for poles kept on its left.
    """

    location: complex
    residue_factor: str = ""
    side: str = "factor1"

    def __post_init__(self):
        if self.side not in ("factor1", "factor2"):
            raise ValueError(f"unknown pole side {self.side!r}")


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def line_through(point, direction, scale=1.0):
    """Straight admissible line through ``point`` travelling along ``direction``."""
    d = complex(direction) / abs(direction)
    if d.imag <= 0:
        raise ContourError("line direction must point into the upper half-plane")
    return Contour((RayIn(complex(point), -d), RayOut(complex(point), d)), scale)


def vertical_line(x, y0=0.0, scale=1.0):
    return line_through(complex(x, y0), 1j, scale)


def polyline(vertices, start_dir=1j, end_dir=1j, scale=1.0):
    """Incoming ray into ``vertices[0]``, straight pieces, outgoing ray from the last vertex."""
    v = [complex(p) for p in vertices]
    sd = complex(start_dir) / abs(start_dir)
    ed = complex(end_dir) / abs(end_dir)
    segs = [RayIn(v[0], -sd)]
    segs += [LineSegment(a, b) for a, b in zip(v[:-1], v[1:]) if a != b]
    segs.append(RayOut(v[-1], ed))
    return Contour(tuple(segs), scale)


def circle(center, radius, ccw=True):
    th1 = 2.0 * math.pi if ccw else -2.0 * math.pi
    return Contour((ArcSegment(complex(center), float(radius), 0.0, th1),))


def side_of(point, origin, direction):
    """Signed area test: > 0 if ``point`` lies left of the directed line."""
    return (np.conj(direction) * (np.asarray(point) - origin)).imag


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

@dataclass
class QuadResult:
    """Value of ``(1/2 pi i) int f`` with diagnostics (logs are natural logs)."""

    value: ScaledComplex
    log_error: float
    log_tail: float
    log_l1: float
    n_eval: int
    n_panels: int
    converged: bool
    detours: list = field(default_factory=list)

    @property
    def rel_error(self):
        return math.exp(self.log_error - float(self.value.logabs)) if np.isfinite(self.value.logabs) else math.inf

    @property
    def tail_bound(self):
        """Bound on the truncated tails in the same normalisation as ``value``."""
        return math.exp(self.log_tail)


def _as_scaled(vals):
    if isinstance(vals, ScaledComplex):
        return vals
    return ScaledComplex.from_complex(vals)


class _Integrator:
    def __init__(self, segments, integrand, tol, cancel_floor, max_eval, scale):
        self.segments = segments
        self.f = integrand
        self.tol = tol
        self.cancel_floor = cancel_floor
        self.max_eval = max_eval
        self.scale = scale
        self.n_eval = 0
        self.plain_floats = False

    def eval_points(self, mu):
        self.n_eval += mu.size
        if self.n_eval > self.max_eval:
            raise QuadratureError(f"quadrature node budget {self.max_eval} exhausted")
        raw = self.f(mu)
        self.plain_floats |= not isinstance(raw, ScaledComplex)
        out = _as_scaled(raw)
        if out.shape != mu.shape:
            raise QuadratureError("integrand returned an array of the wrong shape")
        return out

    def panels(self, specs):
        """Evaluate GK15 on panels ``(seg_index, ua, ub)``; returns per-panel logs."""
        if not specs:
            return []
        us, segids = [], []
        for si, ua, ub in specs:
            us.append(0.5 * (ua + ub) + 0.5 * (ub - ua) * _NODES)
            segids.append(si)
        us = np.asarray(us)
        mu = np.empty(us.shape, dtype=complex)
        jac = np.empty(us.shape, dtype=complex)
        for row, si in enumerate(segids):
            seg = self.segments[si]
            mu[row] = seg.point(us[row])
            jac[row] = seg.deriv(us[row])
        vals = self.eval_points(mu)
        out = []
        with np.errstate(divide="ignore"):
            logj = np.log(jac)
        for row, (si, ua, ub) in enumerate(specs):
            half = 0.5 * (ub - ua)
            L = vals.log[row] + logj[row] + math.log(half)
            m = np.max(L.real)
            if not np.isfinite(m):
                out.append((si, ua, ub, -np.inf, 0.0, -np.inf, -np.inf))
                continue
            e = np.exp(L - m)
            k = np.sum(_WK * e)
            g = np.sum(_WG15 * e)
            l1 = np.sum(_WK * np.abs(e))
            with np.errstate(divide="ignore"):
                out.append((si, ua, ub, m + math.log(abs(k)) if k != 0 else -np.inf,
                            float(np.angle(k)), m + math.log(abs(k - g)) if k != g else -np.inf,
                            m + math.log(l1)))
        return out

    def tail(self, si, U):
        """Bound ``int_U^inf |f| |d mu|`` from samples at ``U 2^j``."""
        seg = self.segments[si]
        u = U * 2.0 ** np.arange(0, 64)
        vals = self.eval_points(seg.point(u))
        terms = vals.logabs + np.log(u) + math.log(abs(seg.direction))
        terms = terms[np.isfinite(terms) | (terms > 0)]
        if terms.size == 0:
            return -np.inf
        return float(np.logaddexp.reduce(terms))


def _initial_specs(segments, scale):
    specs = []
    for si, seg in enumerate(segments):
        if seg.finite:
            edges = np.linspace(0.0, 1.0, 5)
        else:
            L = scale / abs(seg.direction)
            edges = np.concatenate([[0.0], L * 2.0 ** np.arange(0, 6)])
        specs.extend((si, float(a), float(b)) for a, b in zip(edges[:-1], edges[1:]))
    return specs


def _guard_segments(path, poles, guard=1e-6, radius=1e-3):
    """Replace path pieces passing within ``guard`` of a pole by semicircular detours."""
    segs = list(path.segments)
    detours = []
    for pole in poles:
        p = complex(pole.location)
        new = []
        hit = False
        for seg in segs:
            if isinstance(seg, ArcSegment):
                d = abs(abs(p - seg.center) - seg.radius)
                if d < guard:
                    raise PoleOnContour(f"pole {p} lies on an arc segment", pole)
                new.append(seg)
                continue
            a = seg.origin if not seg.finite else seg.a
            dirn = (seg.direction if isinstance(seg, RayOut) else
                    -seg.direction if isinstance(seg, RayIn) else seg.b - seg.a)
            dhat = dirn / abs(dirn)
            # parameter of the closest point along the travel direction
            if isinstance(seg, RayIn):
                tproj = ((np.conj(dhat) * (p - seg.origin)).real)
                inside = tproj <= 0
                closest = seg.origin + dhat * min(tproj, 0.0)
            elif isinstance(seg, RayOut):
                tproj = (np.conj(dhat) * (p - seg.origin)).real
                inside = tproj >= 0
                closest = seg.origin + dhat * max(tproj, 0.0)
            else:
                tproj = (np.conj(dhat) * (p - a)).real
                length = abs(dirn)
                inside = 0 <= tproj <= length
                closest = a + dhat * min(max(tproj, 0.0), length)
            dist = abs(p - closest)
            if dist >= guard or hit:
                new.append(seg)
                continue
            hit = True
            # keep factor-1 poles on the right (bulge left) and factor-2 on the left
            sgn = 1.0 if pole.side == "factor1" else -1.0
            q_in = p - radius * dhat
            q_out = p + radius * dhat
            ang_in = math.atan2((q_in - p).imag, (q_in - p).real)
            sweep = -math.pi if sgn > 0 else math.pi
            arc = ArcSegment(p, radius, ang_in, ang_in + sweep)
            if not inside:
                raise PoleOnContour(f"pole {p} sits at a contour corner", pole)
            if isinstance(seg, RayIn):
                pieces = [RayIn(q_in, seg.direction), arc, LineSegment(q_out, seg.origin)]
            elif isinstance(seg, RayOut):
                pieces = [LineSegment(seg.origin, q_in), arc, RayOut(q_out, seg.direction)]
            else:
                pieces = [LineSegment(seg.a, q_in), arc, LineSegment(q_out, seg.b)]
            pieces = [pc for pc in pieces if not (isinstance(pc, LineSegment) and abs(pc.b - pc.a) < 1e-15)]
            new.extend(pieces)
            # detour = principal value - Res/2 (pole right) or + Res/2 (pole left)
            detours.append((pole, -0.5 * sgn))
        segs = new
    return segs, detours


def integrate_with_diagnostics(path, integrand, tol=1e-10, poles=(), cancel_floor=1e-6,
                               max_eval=2_000_000, guard=1e-6, guard_radius=1e-3):
    """Adaptive Gauss-Kronrod quadrature of ``(1/2 pi i) int_path f``.

    Parameters
    ----------
    path : Contour
    integrand : callable
        Maps an array of complex ``mu1`` to an array of complex values or a
        :class:`ScaledComplex` of the same shape.
    tol : float
        Target relative error.
    poles : sequence of PoleSpec
        Declared poles; the path is detoured around any it passes within
        ``guard`` of. The detour convention is recorded in ``detours``.
    cancel_floor : float
        When the integral is far smaller than ``int |f|`` (cancellation), the
        error target is relative to ``cancel_floor * int |f|`` instead.

    Returns
    -------
    QuadResult
    """
    segs, detours = _guard_segments(path, poles, guard, guard_radius)
    worker = _Integrator(segs, integrand, tol, cancel_floor, max_eval, path.scale)
    specs = _initial_specs(segs, path.scale)
    ray_ends = {si: b for si, a, b in specs if not segs[si].finite}
    panels = worker.panels(specs)
    log_tol = math.log(tol)

    for _ in range(200):
        la = np.array([p[3] for p in panels])
        ph = np.array([p[4] for p in panels])
        total = ScaledComplex(la, ph).sum()
        lerr = float(np.logaddexp.reduce([p[5] for p in panels]))
        ll1 = float(np.logaddexp.reduce([p[6] for p in panels]))
        ltails = {si: worker.tail(si, U) for si, U in ray_ends.items()}
        ltail = float(np.logaddexp.reduce(list(ltails.values()))) if ltails else -np.inf
        ref = max(float(total.logabs), math.log(cancel_floor) + ll1)
        # never ask for more than round-off allows relative to int |f|
        target = max(log_tol + ref, _LOG_ROUNDOFF + ll1)
        if worker.plain_floats:
            # subnormal samples carry no relative precision
            target = max(target, _LOG_TINY)
        bad_tail = [si for si, lt in ltails.items() if lt > target - math.log(10.0)]
        if lerr <= target and not bad_tail:
            break
        new_specs = []
        keep = []
        if bad_tail:
            for si in bad_tail:
                U = ray_ends[si]
                new_specs.extend([(si, U, 2 * U), (si, 2 * U, 4 * U)])
                ray_ends[si] = 4 * U
        if lerr > target:
            cut = target - math.log(max(len(panels), 1))
            split = [p for p in panels if p[5] > cut]
            if not split:
                split = [max(panels, key=lambda p: p[5])]
            split_ids = {id(p) for p in split}
            for p in panels:
                if id(p) in split_ids:
                    si, ua, ub = p[0], p[1], p[2]
                    mid = 0.5 * (ua + ub)
                    if not (ua < mid < ub):
                        raise QuadratureError("panel width underflow near a singularity")
                    new_specs.extend([(si, ua, mid), (si, mid, ub)])
                else:
                    keep.append(p)
        else:
            keep = panels
        panels = keep + worker.panels(new_specs)
    else:
        raise QuadratureError(
            f"quadrature did not converge: log err {lerr:.3g} vs target {target:.3g}, "
            f"{len(panels)} panels, {worker.n_eval} evaluations"
        )

    # fixed reduction order: by segment, then by parameter
    panels.sort(key=lambda p: (p[0], p[1]))
    la = np.array([p[3] for p in panels])
    ph = np.array([p[4] for p in panels])
    total = ScaledComplex(la, ph).sum()
    norm = ScaledComplex.from_log(-_LOG_2PI_I)
    lerr = float(np.logaddexp.reduce([p[5] for p in panels])) - math.log(2 * math.pi)
    ll1 = float(np.logaddexp.reduce([p[6] for p in panels])) - math.log(2 * math.pi)
    return QuadResult(value=total * norm, log_error=lerr, log_tail=ltail - math.log(2 * math.pi),
                      log_l1=ll1, n_eval=worker.n_eval, n_panels=len(panels), converged=True,
                      detours=detours)


def integrate(path, integrand, tol=1e-10, poles=(), **kw):
    """``(1/2 pi i) int_path integrand``; see :func:`integrate_with_diagnostics`."""
    return integrate_with_diagnostics(path, integrand, tol, poles, **kw).value


# ---------------------------------------------------------------------------
# deformation and winding
# ---------------------------------------------------------------------------

def _is_left(p0, p1, q):
    return (p1.real - p0.real) * (q.imag - p0.imag) - (q.real - p0.real) * (p1.imag - p0.imag)


def winding_number(loop, q):
    """Winding number of a closed polyline around ``q`` (signed-area crossing test)."""
    wn = 0
    pts = np.asarray(loop, dtype=complex)
    for p0, p1 in zip(pts, np.roll(pts, -1)):
        if p0.imag <= q.imag:
            if p1.imag > q.imag and _is_left(p0, p1, q) > 0:
                wn += 1
        elif p1.imag <= q.imag and _is_left(p0, p1, q) < 0:
            wn -= 1
    return wn


def index_left(path, q, n_per_segment=256):
    """1 if ``q`` lies left of the admissible contour ``path``, else 0."""
    q = complex(q)
    far = 1e4 * (1.0 + max([abs(v) for v in path.vertices] + [abs(q), 1.0]))
    pts = path.sample(n_per_segment, far)
    # close through the far right: the loop then encircles the right side clockwise
    big = 10.0 * far
    loop = np.concatenate([pts, [pts[-1] + big, complex(big, big), complex(big, -big), pts[0] + big]])
    if _on_contour(path, q, 1.0 + far * 1e-4):
        raise PoleOnContour(f"point {q} lies on the contour", None)
    return 1 + winding_number(loop, q)


def _dist_to_polyline(pts, q):
    a, b = pts[:-1], pts[1:]
    d = b - a
    t = np.clip(((np.conj(d) * (q - a)).real) / np.maximum(np.abs(d) ** 2, 1e-300), 0.0, 1.0)
    return float(np.min(np.abs(a + t * d - q)))


def deform(path, target, poles, n_per_segment=256):
    """Signed list of poles swept when ``path`` is moved to ``target``.

    Returns ``(target, crossed)`` with ``crossed = [(pole, sign), ...]`` such
    that ``integrate(path) = integrate(target) + sum sign * Res_pole`` where
    residues are taken of ``f`` itself (the ``1/(2 pi i)`` cancels).
    """
    for c in (path, target):
        if not c.is_admissible():
            raise ContourError("deformation needs contours with conic ends")
    far = 1e4 * (1.0 + max([abs(v) for v in path.vertices + target.vertices]
                            + [abs(complex(p.location)) for p in poles] + [1.0]))
    a = path.sample(n_per_segment, far)
    b = target.sample(n_per_segment, far)
    scale = 1.0 + max(abs(v) for v in path.vertices + target.vertices)
    loop = np.concatenate([a, b[::-1]])
    crossed = []
    for pole in poles:
        q = complex(pole.location)
        for name, pts, c in (("path", a, path), ("target", b, target)):
            if _on_contour(c, q, scale):
                raise PoleOnContour(f"pole {q} lies on the {name} contour", pole)
        w = winding_number(loop, q)
        if w:
            crossed.append((pole, w))
    return target, crossed


def _on_contour(c, q, scale):
    for seg in c.segments:
        if isinstance(seg, ArcSegment):
            if abs(abs(q - seg.center) - seg.radius) < 1e-12 * scale:
                return True
            continue
        if seg.finite:
            a, d, tmax = seg.a, seg.b - seg.a, 1.0
        else:
            a, d, tmax = seg.origin, seg.direction, math.inf
        t = (np.conj(d) * (q - a)).real / abs(d) ** 2
        t = min(max(t, 0.0), tmax)
        if abs(a + t * d - q) < 1e-12 * scale:
            return True
    return False


# ---------------------------------------------------------------------------
# branch tracking
# ---------------------------------------------------------------------------

def _track(path, c, t_from, t_to, seed, eta):
    t = t_from
    val = seed
    p = complex(path.point_at(t)[0])
    n = 0
    while (t_to - t) * np.sign(t_to - t_from) > 0:
        dist = abs(p - c)
        if dist < 1e-300 or dist < 1e-14 * (1.0 + abs(c)):
            raise BranchCutError(f"path passes through the branch point {c} at t = {t}")
        # shrink the step until the image moves less than eta * distance
        dt = t_to - t
        dt = math.copysign(min(abs(dt), 1.0 / 32.0), dt)
        while True:
            pm, pn = path.point_at([t + 0.5 * dt, t + dt])
            if (abs(pn - p) <= eta * dist and abs(pm - p) <= eta * dist) or abs(dt) < 1e-15:
                break
            dt *= 0.5
        pn = complex(pn)
        t = t + dt
        p = pn
        r = np.sqrt(complex(p - c))
        val = r if abs(r - val) <= abs(-r - val) else -r
        n += 1
        if n > 10_000_000:
            raise BranchCutError("branch tracking did not terminate")
    return val


def branch_sqrt_along(path, c, initial_branch=1, t0=None):
    """Continuous ``sqrt(gamma(t) - c)`` along a contour.

    Parameters
    ----------
    path : Contour
    c : complex
        Branch point.
    initial_branch : {+1, -1, "physical"}
        Sign applied to the principal root at ``t0``; ``"physical"`` picks
        the root with ``Im <= 0``.
    t0 : float, optional
        Seed parameter; defaults to the first finite point of the path.

    Returns
    -------
    callable
        ``t -> sqrt`` (scalar or array), self-consistent under step refinement.
    """
    c = complex(c)
    if t0 is None:
        t0 = 1.0 if isinstance(path.segments[0], RayIn) else 0.0
    p0 = complex(path.point_at(t0)[0])
    if abs(p0 - c) == 0:
        raise BranchCutError(f"seed point coincides with the branch point at t = {t0}")
    r0 = np.sqrt(p0 - c)
    if initial_branch == "physical":
        seed = r0 if r0.imag <= 0 else -r0
    elif initial_branch in (1, -1):
        seed = initial_branch * r0
    else:
        raise ValueError(f"bad initial branch {initial_branch!r}")

    def f(t):
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty(ts.shape, dtype=complex)
        for i, ti in enumerate(ts):
            eta = 0.1
            prev = _track(path, c, t0, ti, seed, eta)
            for _ in range(20):
                eta *= 0.5
                cur = _track(path, c, t0, ti, seed, eta)
                if abs(cur - prev) <= 1e-12 * max(1.0, abs(cur)):
                    break
                prev = cur
            out[i] = cur
        return out if np.ndim(t) else out[0]

    return f
