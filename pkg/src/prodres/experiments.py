"""Experiment runners behind the command-line driver.

Each runner takes validated parameters and thresholds and returns an
``Outcome``: CSV tables plus named checks. Runners are pure functions of
their inputs, so identical configurations give identical artifacts.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import math

import numpy as np

from .contour import PoleSpec
from .errors import ConfigError
from .geometry import HyperbolicPoint, ProductPoint, ray_point
from .hyperbolic import radial_ode_residual, resolvent_kernel, rotated_sqrt, zeta_of_lambda, FactorSpectralParam
from .martin import (
    MartinBoundaryPoint,
    MartinRequest,
    boundary_sequence,
    closed_form_limit,
    martin_limit,
)
from .oracles import heat_laplace_kernel, heat_laplace_product, points_at_distance
from .product import (
    CutConfiguration,
    ModelOperator,
    ProductResolventRequest,
    SyntheticPole,
    boundary_value_kernel,
    continued_kernel,
    epsilon_extrapolate,
    product_kernel,
    product_kernel_with_info,
)
from .saddle import (
    CALIBRATION,
    AsymptoticTerm,
    FaceData,
    PhaseContext,
    corner_log_power,
    fd_derivative,
    fit_exponents,
    fit_radii,
    label_window,
    phase_data,
    predict_leading,
    residue_decision,
    s0_for_pole,
    saddle_point,
    sweep_decision,
    term_value,
    transition_model_integral,
    transition_profile,
    transition_profile_closed_form,
)
from .scaled import ScaledComplex, rel_diff

__all__ = ["Check", "Table", "Outcome", "RunContext", "MODES", "run_experiment", "parse_complex"]


@dataclass(frozen=True)
class Check:
    """Named comparison ``value op threshold``."""

    name: str
    value: float
    threshold: float
    op: str = "<"

    @property
    def passed(self):
        v, t = self.value, self.threshold
        return {"<": v < t, "<=": v <= t, ">": v > t, ">=": v >= t, "==": v == t}[self.op]

    def to_dict(self):
        return {"name": self.name, "value": self.value, "threshold": self.threshold,
                "op": self.op, "passed": bool(self.passed)}


@dataclass
class Table:
    name: str
    columns: tuple
    rows: list = field(default_factory=list)


@dataclass
class Outcome:
    tables: list
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)


@dataclass
class RunContext:
    """Run-wide settings: quadrature tolerance, seed and an order-preserving map."""

    tol: float = 1e-10
    seed: int = 0
    map: object = map

    def pmap(self, f, items):
        return list(self.map(f, list(items)))


def parse_complex(v):
    """Complex number from a TOML value: number, ``"a+bj"`` string or ``[re, im]``."""
    if isinstance(v, bool):
        raise ConfigError(f"expected a number, got {v!r}")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, str):
        try:
            return complex(v.replace(" ", ""))
        except ValueError:
            raise ConfigError(f"cannot parse {v!r} as a complex number") from None
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(t, (int, float)) for t in v):
        return complex(float(v[0]), float(v[1]))
    raise ConfigError(f"cannot parse {v!r} as a complex number")


def _lp(z):
    """``(log10_abs, phase)`` of a complex or ScaledComplex value."""
    v = ScaledComplex.coerce(z)
    return float(v.log10_abs), float(v.phase)


def _op(k=2, poles=()):
    return ModelOperator(k, tuple(SyntheticPole(float(p["lam"]), tuple(p.get("anchor", (0.0, 0.0))),
                                               float(p.get("weight", 1.0)), str(p.get("tag", f"p{i}")))
                                  for i, p in enumerate(poles)))


def _hp(v):
    """HyperbolicPoint from ``[x, y1, y2, ...]``."""
    return HyperbolicPoint(float(v[0]), [float(t) for t in v[1:]])


def _pp(v):
    """ProductPoint from ``[[x1, y1...], [x2, y2...]]``."""
    return ProductPoint(_hp(v[0]), _hp(v[1]))


# ---------------------------------------------------------------------------
# kernel
# ---------------------------------------------------------------------------

def kernel_closed_form(p, th, ctx):
    """Resolvent kernel at ``k = 2`` against ``exp(-(zeta - 1) delta)/(4 pi sinh delta)``."""
    lam = parse_complex(p["lam"])
    par = zeta_of_lambda(lam, 2)
    t = Table("kernel", ("delta", "log10_abs", "phase", "closed_log10_abs", "closed_phase", "rel_error"))
    worst = 0.0
    for d in p["deltas"]:
        d = float(d)
        v = resolvent_kernel(par, d)
        ref = ScaledComplex.from_log(-(par.zeta - 1.0) * d - math.log(4 * math.pi) - _log_sinh(d))
        e = float(rel_diff(v, ref))
        worst = max(worst, e)
        t.rows.append((d, *_lp(v), *_lp(ref), e))
    return Outcome([t], [Check("max_rel_error", worst, th["max_rel_error"])])


def _log_sinh(d):
    return d + math.log1p(-math.exp(-2 * d)) - math.log(2.0)


def kernel_heat_laplace(p, th, ctx):
    """Resolvent kernel against the Laplace transform of the heat kernel."""
    pts = [(parse_complex(l), float(d)) for l in p["lams"] for d in p["deltas"]]

    def one(pt):
        lam, d = pt
        v = resolvent_kernel(zeta_of_lambda(lam, 2), d)
        o = heat_laplace_kernel(lam, d)
        return v, o, float(rel_diff(v, o))

    res = ctx.pmap(one, pts)
    t = Table("kernel_vs_heat", ("lam_re", "lam_im", "delta", "log10_abs", "phase",
                                 "oracle_log10_abs", "oracle_phase", "rel_error"))
    for (lam, d), (v, o, e) in zip(pts, res):
        t.rows.append((lam.real, lam.imag, d, *_lp(v), *_lp(o), e))
    worst = max(r[2] for r in res)
    return Outcome([t], [Check("n_points", float(len(pts)), float(th["n_points"]), "=="),
                         Check("max_rel_error", worst, th["max_rel_error"])])


def kernel_radial_ode(p, th, ctx):
    """Radial ODE residual of the kernel and a wrong-lambda negative control."""
    shift = float(p["control_shift"])
    t = Table("radial_ode", ("lam_re", "lam_im", "delta", "residual", "control_residual"))
    worst, control = 0.0, math.inf
    for l in p["lams"]:
        lam = parse_complex(l)
        par = zeta_of_lambda(lam, 2)
        wrong = FactorSpectralParam(lam=lam + shift, zeta=par.zeta, k=2)
        for d in p["deltas"]:
            d = float(d)
            r = float(radial_ode_residual(par, d))
            c = float(radial_ode_residual(wrong, d))
            worst = max(worst, r)
            control = min(control, c)
            t.rows.append((lam.real, lam.imag, d, r, c))
    return Outcome([t], [Check("max_residual", worst, th["max_residual"]),
                         Check("control_min_residual", control, th["max_residual"], ">")])


# ---------------------------------------------------------------------------
# product
# ---------------------------------------------------------------------------

def product_oracle(p, th, ctx):
    """Contour formula against the heat-kernel oracle, plus contour independence."""
    op = _op(2)
    pts = [(parse_complex(m), float(d1), float(d2)) for m in p["mus"] for d1, d2 in p["delta_pairs"]]

    def one(pt):
        mu, d1, d2 = pt
        z, w = points_at_distance(d1, d2)
        a = product_kernel_with_info(ProductResolventRequest(mu, z, w, "auto", ctx.tol), op, op)
        b = product_kernel(ProductResolventRequest(mu, z, w, "polyline", ctx.tol), op, op)
        o = heat_laplace_product(mu, d1, d2)
        return a.value, o, float(rel_diff(a.value, o)), float(rel_diff(b, a.value)), len(a.contour.segments)

    res = ctx.pmap(one, pts)
    t = Table("product_vs_heat", ("mu_re", "mu_im", "delta1", "delta2", "log10_abs", "phase",
                                  "oracle_log10_abs", "oracle_phase", "rel_error", "contour_rel_diff"))
    for (mu, d1, d2), (v, o, e, c, _) in zip(pts, res):
        t.rows.append((mu.real, mu.imag, d1, d2, *_lp(v), *_lp(o), e, c))
    return Outcome([t], [
        Check("n_points", float(len(pts)), float(th["n_points"]), "=="),
        Check("max_rel_error", max(r[2] for r in res), th["max_rel_error"]),
        Check("max_contour_rel_diff", max(r[3] for r in res), th["max_contour_rel_diff"]),
    ])


def product_boundary_values(p, th, ctx):
    """Real-segment ``R(mu - i0)`` against epsilon extrapolation, and conjugate symmetry."""
    op = _op(2)
    o = HyperbolicPoint(1.0, [0.0, 0.0])
    w = ProductPoint(o, o)
    pts = [tuple(float(t) for t in q) for q in p["points"]]

    def one(pt):
        mu, d1, d2 = pt
        z = ProductPoint(HyperbolicPoint.from_log(d1, [0.0, 0.0]), HyperbolicPoint.from_log(d2, [0.0, 0.0]))
        bm = boundary_value_kernel(ProductResolventRequest(mu, z, w, tol=ctx.tol, tag="-i0"), op, op)
        bp = boundary_value_kernel(ProductResolventRequest(mu, z, w, tol=ctx.tol, tag="+i0"), op, op)
        ex = epsilon_extrapolate(ProductResolventRequest(mu, z, w, tol=ctx.tol, tag="-i0"), op, op)
        return bm, ex, float(rel_diff(bm, ex)), float(rel_diff(bp.conj(), bm))

    res = ctx.pmap(one, pts)
    t = Table("boundary_values", ("mu", "delta1", "delta2", "log10_abs", "phase",
                                  "extrapolated_log10_abs", "extrapolated_phase", "rel_error", "conj_rel_diff"))
    for pt, (bm, ex, e, c) in zip(pts, res):
        t.rows.append((*pt, *_lp(bm), *_lp(ex), e, c))
    return Outcome([t], [
        Check("n_points", float(len(pts)), float(th["n_points"]), "=="),
        Check("max_rel_error", max(r[2] for r in res), th["max_rel_error"]),
        Check("max_conj_rel_diff", max(r[3] for r in res), th["max_conj_rel_diff"]),
    ])


# ---------------------------------------------------------------------------
# asymptotics
# ---------------------------------------------------------------------------

def asymptotics_saddle_algebra(p, th, ctx):
    """Saddle point, phase value and curvature against direct evaluation."""
    t = Table("saddle", ("mu_re", "mu_im", "s", "mu1_re", "mu1_im", "abs_fd_dF", "F0_rel_error",
                         "F2_rel_error", "F2_fd_rel_error", "endpoint_gap"))
    worst_fd = worst_f0 = worst_f2 = worst_f2fd = 0.0
    min_gap = math.inf
    h2 = float(p["fd_step_second"])
    for m in p["mus"]:
        mu = parse_complex(m)
        for s in p["slopes"]:
            c = PhaseContext(mu, 2, 2, float(s))
            m0 = complex(saddle_point(c))
            pd = phase_data(c)
            fd = abs(fd_derivative(c, m0))
            e0 = abs(pd.F0 - complex(c.F(m0))) / abs(pd.F0)
            e2 = abs(pd.F2 - complex(c.d2F(m0))) / abs(pd.F2)
            f2fd = complex((c.F(m0 + h2) - 2 * c.F(m0) + c.F(m0 - h2)) / h2 ** 2)
            e2fd = abs(pd.F2 - f2fd) / abs(pd.F2)
            gap = math.inf
            root = complex(rotated_sqrt(-c.A))
            if root.imag < 0:
                # Im F0 lies strictly below both endpoint limits
                gap = min(float(s) * root.imag, root.imag) - pd.F0.imag
                min_gap = min(min_gap, gap)
            worst_fd, worst_f0 = max(worst_fd, fd), max(worst_f0, e0)
            worst_f2, worst_f2fd = max(worst_f2, e2), max(worst_f2fd, e2fd)
            t.rows.append((mu.real, mu.imag, float(s), m0.real, m0.imag, fd, e0, e2, e2fd, gap))
    checks = [Check("n_points", float(len(t.rows)), float(th["n_points"]), "=="),
              Check("max_abs_fd_dF", worst_fd, th["max_abs_fd_dF"]),
              Check("max_F0_rel_error", worst_f0, th["max_formula_rel_error"]),
              Check("max_F2_rel_error", worst_f2, th["max_formula_rel_error"]),
              Check("max_F2_fd_rel_error", worst_f2fd, th["max_F2_fd_rel_error"])]
    if min_gap < math.inf:
        checks.append(Check("min_endpoint_gap", min_gap, 0.0, ">"))
    return Outcome([t], checks)


_FIT_COLUMNS = ("face", "s", "fitted_log_power", "fitted_osc_exponent_re", "fitted_osc_exponent_im",
                "stderr_log_power", "stderr_osc", "expected_osc_re", "expected_osc_im", "osc_rel_error")


def _stderr(fr, key):
    return float(fr.stderr.get(key, math.nan))


def _front_fit(mu, s, y1, y2, w, op1, op2, r_min, r_max, tol):
    c = PhaseContext(mu, op1.k, op2.k, s)
    term = predict_leading(c, "front", op1, op2, FaceData(w, y1, y2))
    samples = []
    for r in fit_radii(r_min, r_max):
        v = product_kernel(ProductResolventRequest(mu, ray_point(s, r, y1, y2), w, tol=tol), op1, op2)
        samples.append((r / math.hypot(1.0, s), v))
    return term, fit_exponents(samples, term)


def asymptotics_front_fit(p, th, ctx):
    """Fitted front-face exponents along boundary rays."""
    mu = parse_complex(p["mu"])
    op = _op(2)
    w = _pp(p["source"])
    y1, y2 = tuple(p["y1"]), tuple(p["y2"])
    slopes = [float(s) for s in p["slopes"]]
    res = ctx.pmap(lambda s: _front_fit(mu, s, y1, y2, w, op, op, p["r_min"], p["r_max"], ctx.tol), slopes)
    t = Table("fit_report", _FIT_COLUMNS)
    osc_err, lp_err = 0.0, 0.0
    for s, (term, fr) in zip(slopes, res):
        k2 = (op.k ** 2 + op.k ** 2) / 4.0
        expected = -1j * complex(rotated_sqrt(mu - k2)) * math.sqrt(1.0 + s * s)
        e = abs(fr.osc_exponent - expected) / abs(expected)
        osc_err = max(osc_err, e)
        lp_err = max(lp_err, abs(fr.log_power - 0.5))
        t.rows.append(("front", s, fr.log_power, fr.osc_exponent.real, fr.osc_exponent.imag,
                       _stderr(fr, "p"), _stderr(fr, "osc_re"), expected.real, expected.imag, e))
    return Outcome([t], [Check("max_osc_rel_error", osc_err, th["max_osc_rel_error"]),
                         Check("max_log_power_error", lp_err, th["max_log_power_error"])])


def _side_samples(face, mu, y, zi, w, op1, op2, r_min, r_max, tol):
    out = []
    for r in fit_radii(r_min, r_max):
        b = HyperbolicPoint.from_log(-r, y)
        z = ProductPoint(b, zi) if face == "side1" else ProductPoint(zi, b)
        out.append((r, product_kernel(ProductResolventRequest(mu, z, w, tol=tol), op1, op2)))
    return out


def asymptotics_side_fit(p, th, ctx):
    """Side-face log powers and the eigenvalue shift of the side-2 exponent."""
    mu = parse_complex(p["mu"])
    op = _op(2)
    opp = _op(2, p["poles"])
    w = _pp(p["source"])
    zi = _hp(p["interior"])
    y = tuple(p["y"])
    c = PhaseContext(mu, 2, 2, 1.0)
    jobs = [("side1", op), ("side2", op), ("side2_pole", opp)]

    def one(job):
        face, o1 = job
        f = "side1" if face == "side1" else "side2"
        data = FaceData(w, y, None, zi) if f == "side1" else FaceData(w, None, y, zi)
        term = predict_leading(c, f, o1, op, data)
        samples = _side_samples(f, mu, y, zi, w, o1, op, p["r_min"], p["r_max"], ctx.tol)
        if face != "side2_pole":
            return term, fit_exponents(samples, term)
        # fit the full x2 exponent: known part k2/2, remainder read off the decay rate
        free = AsymptoticTerm("side2", 0.0, op.k / 2.0, 0.0, 0, term.coefficient, "rho2")
        return term, fit_exponents(samples, free, free_log_power=False)

    res = ctx.pmap(one, jobs)
    t = Table("fit_report", _FIT_COLUMNS)
    checks = []
    for (face, _), (term, fr) in zip(jobs, res):
        if face == "side2_pole":
            lam = float(p["poles"][0]["lam"])
            fitted = op.k / 2.0 - fr.osc_exponent
            expected = op.k / 2.0 + 1j * complex(rotated_sqrt(mu - lam - op.k ** 2 / 4.0))
            e = abs(fitted - expected) / abs(expected)
            free_rate = op.k / 2.0 + float(np.real(1j * rotated_sqrt(mu - 2 * op.k ** 2 / 4.0)))
            t.rows.append((face, math.nan, float(fr.log_power), fitted.real, fitted.imag,
                           math.nan, _stderr(fr, "osc_re"), expected.real, expected.imag, e))
            checks.append(Check("side2_pole_exponent_rel_error", e, th["max_exponent_rel_error"]))
            checks.append(Check("pole_rate_below_free_rate", expected.real - free_rate, 0.0, "<"))
            checks.append(Check("predicted_term_is_eigenvalue", float(term.kind == "eigenvalue"), 1.0, "=="))
        else:
            e = abs(fr.log_power - 1.5)
            t.rows.append((face, math.nan, fr.log_power, fr.osc_exponent.real, fr.osc_exponent.imag,
                           _stderr(fr, "p"), _stderr(fr, "osc_re"), term.osc_exponent.real,
                           term.osc_exponent.imag, abs(fr.osc_exponent - term.osc_exponent) / abs(term.osc_exponent)))
            checks.append(Check(f"{face}_log_power_error", e, th["max_log_power_error"]))
    return Outcome([t], checks)


def asymptotics_corner(p, th, ctx):
    """Front/side log-power matching and its numerical cross-check at a small slope."""
    mu = parse_complex(p["mu"])
    s = float(p["s"])
    op = _op(2)
    w = _pp(p["source"])
    y1, y2 = tuple(p["y1"]), tuple(p["y2"])
    c = PhaseContext(mu, 2, 2, s)
    ft = predict_leading(c, "front", op, op, FaceData(w, y1, y2))
    checks = [Check("corner_log_power_minus_3_2", float(corner_log_power(ft) - Fraction(3, 2)), 0.0, "=="),
              Check("front_log_power_minus_1_2", float(ft.log_power - Fraction(1, 2)), 0.0, "==")]
    radii = [float(r) for r in p["radii"]]

    def one(r):
        z = ray_point(s, r, y1, y2)
        v = product_kernel(ProductResolventRequest(mu, z, w, tol=ctx.tol), op, op)
        st = predict_leading(c, "side1", op, op, FaceData(w, y1, None, z.z2))
        return z, v, st

    res = ctx.pmap(one, radii)
    t = Table("corner", ("r", "r1", "ratio_to_front_re", "ratio_to_front_im", "front_over_side_abs",
                         "gaussian_factor", "corrected_ratio_abs"))
    A = complex(c.A)
    err_front, err_corr = 0.0, 0.0
    for r, (z, v, st) in zip(radii, res):
        checks_side = st.log_power
        q = complex((v / term_value(ft, z)).to_complex())
        fs = abs(complex((term_value(ft, z) / term_value(st, z)).to_complex()))
        r1 = -z.z1.logx
        g = math.exp(-math.sqrt(A.real) * s * s * r1 / 2.0)
        corr = fs / g
        err_front = max(err_front, abs(q - 1.0))
        err_corr = max(err_corr, abs(corr - 1.0))
        t.rows.append((r, r1, q.real, q.imag, fs, g, corr))
    checks.append(Check("side_log_power_minus_3_2", float(checks_side - Fraction(3, 2)), 0.0, "=="))
    ratio = CALIBRATION["side"] / CALIBRATION["front"]
    checks += [Check("max_front_ratio_error", err_front, th["max_front_ratio_error"]),
               Check("side_front_constant_error", abs(ratio - 1j), th["max_constant_error"]),
               Check("max_corrected_matching_error", err_corr, th["max_matching_error"])]
    return Outcome([t], checks)


# ---------------------------------------------------------------------------
# regions
# ---------------------------------------------------------------------------

def _poles_from(p):
    out = []
    mu = parse_complex(p["mu"])
    for q in p["poles"]:
        side = q["side"]
        lam = parse_complex(q["lam"])
        loc = lam if side == "factor1" else mu - lam
        out.append(PoleSpec(loc, str(q.get("tag", f"{side}:{lam}")), side))
    return out


def regions_decisions(p, th, ctx):
    """Region-based residue decisions against the contour-deformation sweep."""
    mu = parse_complex(p["mu"])
    poles = _poles_from(p)
    slopes = np.geomspace(float(p["s_min"]), float(p["s_max"]), int(p["n_s"]))
    base = PhaseContext(mu, 2, 2, 1.0)

    def one(s):
        cx = base.with_s(float(s))
        return [(residue_decision(cx, q), sweep_decision(cx, q, poles)) for q in poles]

    res = ctx.pmap(one, slopes)
    t = Table("decisions", ("s", "pole", "side", "region_decision", "sweep_decision", "agree"))
    mism = 0
    kinds = set()
    for s, row in zip(slopes, res):
        for q, (a, b) in zip(poles, row):
            mism += a != b
            kinds.add(a)
            t.rows.append((float(s), q.residue_factor, q.side, a, b, int(a == b)))
    return Outcome([t], [Check("n_decisions", float(len(t.rows)), float(th["n_decisions"]), "=="),
                         Check("mismatches", float(mism), 0.0, "=="),
                         Check("distinct_outcomes", float(len(kinds)), float(th["min_distinct_outcomes"]), ">=")])


def regions_label_map(p, th, ctx):
    """Region labels on a cell grid; the cell containing the saddle must be ``boundary``."""
    mu = parse_complex(p["mu"])
    c = PhaseContext(mu, 2, 2, float(p["s"]))
    m0 = complex(saddle_point(c))
    centre = parse_complex(p["centre"]) if "centre" in p else m0
    n = int(p["n"])
    xs, ys, labels = label_window(c, centre, float(p["half_width"]), n)
    h = xs[1] - xs[0]
    j = int(np.clip(np.floor((m0.real - (xs[0] - h / 2)) / h), 0, n - 1))
    i = int(np.clip(np.floor((m0.imag - (ys[0] - h / 2)) / h), 0, n - 1))
    t = Table("label_map", ("mu1_re", "mu1_im", "label"))
    for a in range(n):
        for b in range(n):
            t.rows.append((float(xs[b]), float(ys[a]), labels[a, b]))
    counts = {k: int(np.sum(labels == k)) for k in ("N_s", "P_s_left", "P_s_right", "boundary")}
    summary = Table("label_counts", ("label", "count"), sorted(counts.items()))
    return Outcome([t, summary], [Check("saddle_cell_is_boundary", float(labels[i, j] == "boundary"), 1.0, "=="),
                                  Check("n_cells", float(n * n), float(th["n_cells"]), "==")])


# ---------------------------------------------------------------------------
# transition
# ---------------------------------------------------------------------------

def transition_profile_run(p, th, ctx):
    """One-sided limits, jump, critical slopes and the model integral."""
    mu = float(parse_complex(p["mu"]).real)
    c = PhaseContext(mu, 2, 2, float(p["s"]))
    a = abs(phase_data(c).F2) / 2.0
    eps = float(p["eps"])
    plus, minus = transition_profile(eps, a), transition_profile(-eps, a)
    checks = [Check("limit_plus_error", abs(plus - math.pi), th["max_limit_error"]),
              Check("limit_minus_error", abs(minus + math.pi), th["max_limit_error"]),
              Check("jump_error", abs(plus - minus - 2 * math.pi), th["max_limit_error"])]
    ts = Table("critical_slopes", ("lam", "s0", "mu1_at_s0", "error"))
    worst = 0.0
    for lam in p["lams"]:
        lam = float(lam)
        s0 = s0_for_pole(mu, 2, 2, lam)
        m = complex(saddle_point(c.with_s(s0)))
        e = abs(m - lam)
        worst = max(worst, e)
        ts.rows.append((lam, s0, m.real, e))
    checks.append(Check("max_s0_error", worst, th["max_s0_error"]))
    grid = [float(S) for S in np.linspace(-5.0, 5.0, int(p["n_S"])) if S != 0.0]
    rho1 = float(p["rho1"])
    ints = ctx.pmap(lambda S: transition_model_integral(c, S, rho1, ctx.tol), grid)
    tp = Table("transition", ("S", "profile", "closed_form", "model_integral_re", "model_integral_im", "rel_error"))
    worst_m, worst_c = 0.0, 0.0
    for S, I in zip(grid, ints):
        prof = transition_profile(S, a)
        cf = transition_profile_closed_form(S, a)
        model = -2 * math.pi * I
        e = abs(model - prof) / abs(prof)
        worst_m = max(worst_m, e)
        worst_c = max(worst_c, abs(prof - cf) / abs(cf))
        tp.rows.append((S, prof, cf, model.real, model.imag, e))
    checks += [Check("max_model_rel_error", worst_m, th["max_model_rel_error"]),
               Check("max_closed_form_rel_error", worst_c, th["max_closed_form_rel_error"])]
    return Outcome([ts, tp], checks)


# ---------------------------------------------------------------------------
# continuation
# ---------------------------------------------------------------------------

def continuation_regge(p, th, ctx):
    """Rotated-cut continuation: physical consistency, cut crossing and Regge monodromy."""
    op = _op(2)
    op1 = _op(2, p["poles"])
    z = ProductPoint(HyperbolicPoint.from_log(float(p["delta1"]), [0.0, 0.0]),
                     HyperbolicPoint.from_log(float(p["delta2"]), [0.0, 0.0]))
    o = HyperbolicPoint(1.0, [0.0, 0.0])
    w = ProductPoint(o, o)
    alpha = float(p["alpha"])
    tc = Table("continuation", ("check", "mu_re", "mu_im", "log10_abs", "phase", "reference_log10_abs",
                                "reference_phase", "rel_diff"))
    worst = 0.0
    for m in p["physical_mus"]:
        mu = parse_complex(m)
        for A in (op, op1):
            r = continued_kernel(mu, A, op, CutConfiguration.for_mu(mu, 2, 2, alpha), z, w, tol=ctx.tol)
            ref = product_kernel(ProductResolventRequest(mu, z, w, tol=ctx.tol), A, op)
            e = float(rel_diff(r.value, ref))
            worst = max(worst, e)
            tc.rows.append(("physical", mu.real, mu.imag, *_lp(r.value), *_lp(ref), e))
    checks = [Check("max_physical_rel_diff", worst, th["max_physical_rel_diff"])]
    # approaching the spectrum from above on the continued sheet meets R(mu - i0)
    cross = float(p["crossing_mu"])
    eps = float(p["crossing_eps"])
    worst_c = 0.0
    for direction, tag, sgn in (("ccw", "-i0", 1), ("cw", "+i0", -1)):
        cuts = CutConfiguration.for_mu(cross, 2, 2, alpha, direction)
        a = continued_kernel(cross + sgn * 1j * eps, op, op, cuts, z, w, tol=ctx.tol).value
        b = boundary_value_kernel(ProductResolventRequest(cross, z, w, tol=ctx.tol, tag=tag), op, op)
        e = float(rel_diff(a, b))
        worst_c = max(worst_c, e)
        tc.rows.append((f"crossing_{direction}", cross, sgn * eps, *_lp(a), *_lp(b), e))
    checks.append(Check("max_crossing_rel_diff", worst_c, th["max_crossing_rel_diff"]))
    # loop around the Regge point lam + k2^2/4
    lam = float(p["poles"][0]["lam"])
    b0 = lam + op.threshold
    rad = float(p["loop_radius"])
    ths = np.linspace(-0.5 * math.pi, 1.5 * math.pi, int(p["loop_points"]))
    loop = [b0 + rad * np.exp(1j * t) for t in ths]
    start = complex(b0, -rad - 1.0)
    path0 = [start, loop[0]]
    path1 = [start] + loop
    path2 = [start] + loop + loop[1:]
    cuts = CutConfiguration(float(op1.threshold), 0.0, float(p["loop_alpha"]))
    end = complex(loop[-1])
    r0 = continued_kernel(end, op1, op, cuts, z, w, path=path0, tol=ctx.tol)
    r1 = continued_kernel(end, op1, op, cuts, z, w, path=path1, tol=ctx.tol)
    r2 = continued_kernel(end, op1, op, cuts, z, w, path=path2, tol=ctx.tol)
    jump = r1.value - r0.value
    pred = ScaledComplex.from_complex(0.0)
    for ps, jmp in r0.loop_jumps:
        if ps.side == "factor1" and abs(complex(ps.location) - lam) < 1e-12:
            pred = pred + jmp
    tm = Table("monodromy", ("quantity", "log10_abs", "phase"),
               [("no_loop", *_lp(r0.value)), ("one_loop", *_lp(r1.value)), ("two_loops", *_lp(r2.value)),
                ("jump", *_lp(jump)), ("predicted_jump", *_lp(pred))])
    checks += [Check("monodromy_rel_error", float(rel_diff(jump, pred)), th["max_monodromy_rel_error"]),
               Check("jump_relative_size", float(rel_diff(r1.value, r0.value)), th["min_jump_relative_size"], ">"),
               Check("two_loops_rel_diff", float(rel_diff(r2.value, r0.value)), th["max_physical_rel_diff"]),
               Check("integral_part_unchanged", float(rel_diff(r1.integral, r0.integral)), th["max_physical_rel_diff"])]
    return Outcome([tc, tm], checks)


# ---------------------------------------------------------------------------
# martin
# ---------------------------------------------------------------------------

def _bp(d):
    face = d["face"]
    kw = {"face": face}
    if "s" in d:
        kw["s"] = float(d["s"])
    for key in ("y1", "y2"):
        if key in d:
            kw[key] = tuple(float(t) for t in d[key])
    for key in ("w1", "w2"):
        if key in d:
            kw[key] = _hp(d[key])
    return MartinBoundaryPoint(**kw)


def _max_rel(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)) / np.abs(np.asarray(b))))


def martin_limits(p, th, ctx):
    """Martin-kernel limits against closed forms, injectivity and collapse."""
    mu = float(parse_complex(p["mu"]).real)
    op = _op(2)
    opp = _op(2, p["poles"])
    base = _pp(p["base"])
    probes = [_pp(q) for q in p["probes"]]
    req = MartinRequest(mu, base, probes, ctx.tol)
    radii = tuple(float(r) for r in p["radii"])
    rays = [_bp(d) for d in p["rays"]]
    collapse = [_bp(d) for d in p["collapse_rays"]]
    jobs = [(bp, op) for bp in rays] + [(bp, opp) for bp in collapse]

    def one(job):
        bp, o1 = job
        lim = martin_limit(req, boundary_sequence(bp), o1, op, radii)
        return lim, closed_form_limit(bp, req, o1, op)

    res = ctx.pmap(one, jobs)
    t = Table("martin_limits", ("group", "face", "s", "probe", "U_numeric_re", "U_numeric_im",
                                "U_closed_form_re", "U_closed_form_im", "rel_error"))
    worst_front = worst_side = 0.0
    for (bp, o1), (lim, cf) in zip(jobs, res):
        group = "collapse" if o1 is opp else "rays"
        for i, (u, v) in enumerate(zip(lim.at_max, cf)):
            t.rows.append((group, bp.face, bp.s if bp.s is not None else math.nan, i,
                           u.real, u.imag, v.real, v.imag, abs(u - v) / abs(v)))
        if group == "rays":
            e = _max_rel(lim.at_max, cf)
            if bp.face == "front":
                worst_front = max(worst_front, e)
            else:
                worst_side = max(worst_side, e)
    nf = sum(bp.face == "front" for bp in rays)
    ns = sum(bp.face != "front" for bp in rays)
    checks = [Check("n_front_rays", float(nf), float(th["n_front_rays"]), ">="),
              Check("n_side_rays", float(ns), float(th["n_side_rays"]), ">="),
              Check("max_front_rel_error", worst_front, th["max_rel_error"]),
              Check("max_side_rel_error", worst_side, th["max_rel_error"])]
    # distinct front rays give distinct limits, numerically and in closed form with random probes
    fr = [lim.at_max for (bp, o1), (lim, _) in zip(jobs, res) if o1 is op and bp.face == "front"]
    sep = min(_max_rel(a, b) for i, a in enumerate(fr) for b in fr[i + 1:])
    rng = np.random.default_rng(ctx.seed)
    rp = []
    for _ in range(int(p["n_random_probes"])):
        x = np.exp(rng.uniform(-1.0, 1.0, 2))
        y = rng.uniform(-1.0, 1.0, 4)
        rp.append(ProductPoint(HyperbolicPoint(x[0], y[:2]), HyperbolicPoint(x[1], y[2:])))
    rreq = MartinRequest(mu, base, rp, ctx.tol)
    front_pts = [_bp(d) for d in p["injectivity_points"]]
    cfs = [closed_form_limit(bp, rreq, op, op) for bp in front_pts]
    sep_cf = min(_max_rel(a, b) for i, a in enumerate(cfs) for b in cfs[i + 1:])
    checks += [Check("min_front_separation_numeric", sep, th["min_separation"], ">"),
               Check("min_front_separation_closed_form", sep_cf, th["min_separation"], ">")]
    # probes marching to (y1, y2) of point A: U_A blows up, U_B of a different point does not
    a_pt, b_pt = (_bp(d) for d in p["injectivity_pair"])
    heights = [float(h) for h in p["march_heights"]]
    march = [ProductPoint(HyperbolicPoint(h, a_pt.y1), HyperbolicPoint(h, a_pt.y2)) for h in heights]
    mreq = MartinRequest(mu, base, march, ctx.tol)
    ua = np.abs(closed_form_limit(a_pt, mreq, op, op))
    ub = np.abs(closed_form_limit(b_pt, mreq, op, op))
    tj = Table("injectivity_march", ("height", "abs_U_A", "abs_U_B"),
               [(h, float(x), float(y)) for h, x, y in zip(heights, ua, ub)])
    checks += [Check("march_growth_A_log10", float(np.log10(ua[-1] / ua[0])), th["min_march_growth_log10"], ">"),
               Check("march_growth_B_log10", float(np.log10(ub[-1] / ub[0])), 0.0, "<=")]
    # collapse: rays beyond s0 share one limit, a ray below s0 does not
    s0 = s0_for_pole(mu, 2, 2, min(float(q["lam"]) for q in p["poles"]))
    beyond = [lim.at_max for (bp, o1), (lim, _) in zip(jobs, res) if o1 is opp and bp.s > s0]
    below = [lim.at_max for (bp, o1), (lim, _) in zip(jobs, res) if o1 is opp and bp.s < s0]
    agree = max(_max_rel(a, beyond[0]) for a in beyond[1:])
    distinct = min(_max_rel(b, beyond[0]) for b in below)
    checks += [Check("n_rays_beyond_s0", float(len(beyond)), 2.0, ">="),
               Check("n_rays_below_s0", float(len(below)), 1.0, ">="),
               Check("collapse_rel_diff", agree, th["max_rel_error"]),
               Check("below_s0_rel_diff", distinct, th["max_rel_error"], ">")]
    return Outcome([t, tj], checks)


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

_PROBES = [[[0.7, 0.2, 0.1], [1.3, -0.3, 0.2]], [[2.0, -0.5, 0.4], [0.5, 0.1, 0.0]],
           [[1.1, 0.9, -0.2], [0.8, 0.6, 0.6]]]
_ORIGIN = [[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]
_POLE = [{"lam": 0.5, "anchor": [0.3, 0.0], "weight": 1.0, "tag": "l11"}]

# (runner, default params, default thresholds)
MODES = {
    ("kernel", "closed_form"): (kernel_closed_form, {"lam": 0.0, "deltas": [0.1, 0.5, 1.0, 2.0, 5.0, 20.0]},
                                {"max_rel_error": 1e-12}),
    ("kernel", "heat_laplace"): (kernel_heat_laplace,
                                 {"lams": [0.0, -1.0, -5.0, "0.5+2j"], "deltas": [0.1, 1.0, 5.0]},
                                 {"max_rel_error": 1e-8, "n_points": 12}),
    ("kernel", "radial_ode"): (kernel_radial_ode,
                               {"lams": [0.0, -1.0, -5.0, "0.5+2j"], "deltas": [0.1, 1.0, 5.0, 50.0],
                                "control_shift": 0.5},
                               {"max_residual": 1e-6}),
    ("product", "oracle"): (product_oracle,
                            {"mus": [-1.0, 0.0, "1+1j"], "delta_pairs": [[0.5, 1.0], [1.0, 1.0], [3.0, 0.5]]},
                            {"max_rel_error": 1e-6, "max_contour_rel_diff": 1e-9, "n_points": 9}),
    ("product", "boundary_values"): (product_boundary_values,
                                     {"points": [[3.0, 1.0, 1.0], [3.0, 0.5, 2.0], [2.5, 1.0, 0.7], [5.0, 1.5, 1.0]]},
                                     {"max_rel_error": 1e-4, "max_conj_rel_diff": 1e-12, "n_points": 4}),
    ("asymptotics", "saddle_algebra"): (asymptotics_saddle_algebra,
                                        {"mus": [-1.0, "-1-0.5j", "0.5+0.3j", "-3+1j"],
                                         "slopes": [0.3, 0.7, 1.0, 2.0, 5.0], "fd_step_second": 1e-4},
                                        {"max_abs_fd_dF": 1e-8, "max_formula_rel_error": 1e-12,
                                         "max_F2_fd_rel_error": 1e-5, "n_points": 20}),
    ("asymptotics", "front_fit"): (asymptotics_front_fit,
                                   {"mu": -1.0, "slopes": [0.5, 1.0, 2.0], "y1": [0.0, 0.0], "y2": [0.0, 0.0],
                                    "source": _ORIGIN, "r_min": 100.0, "r_max": 1000.0},
                                   {"max_osc_rel_error": 1e-3, "max_log_power_error": 0.05}),
    ("asymptotics", "side_fit"): (asymptotics_side_fit,
                                  {"mu": -1.0, "y": [0.1, 0.2], "interior": [1.7, 0.2, -0.4], "source": _ORIGIN,
                                   "poles": _POLE, "r_min": 100.0, "r_max": 1000.0},
                                  {"max_log_power_error": 0.05, "max_exponent_rel_error": 1e-3}),
    ("asymptotics", "corner"): (asymptotics_corner,
                                {"mu": -1.0, "s": 0.05, "y1": [0.0, 0.0], "y2": [0.0, 0.0], "source": _ORIGIN,
                                 "radii": [250.0, 500.0, 1000.0]},
                                {"max_front_ratio_error": 0.02, "max_constant_error": 0.01,
                                 "max_matching_error": 0.01}),
    ("regions", "decisions"): (regions_decisions,
                               {"mu": "-1-0.5j", "s_min": 0.05, "s_max": 20.0, "n_s": 50,
                                "poles": [{"lam": 0.3, "side": "factor1", "tag": "a"},
                                          {"lam": 0.8, "side": "factor1", "tag": "b"},
                                          {"lam": 0.6, "side": "factor2", "tag": "c"}]},
                               {"n_decisions": 150, "min_distinct_outcomes": 3}),
    ("regions", "label_map"): (regions_label_map, {"mu": -1.0, "s": 1.0, "n": 200, "half_width": 3.0},
                               {"n_cells": 40000}),
    ("transition", "profile"): (transition_profile_run,
                                {"mu": -1.0, "s": 1.0, "eps": 1e-12, "lams": [0.5, 0.9, -1.5, 0.0],
                                 "n_S": 21, "rho1": 1e-6},
                                {"max_limit_error": 1e-8, "max_s0_error": 1e-12, "max_model_rel_error": 0.01,
                                 "max_closed_form_rel_error": 1e-10}),
    ("continuation", "regge"): (continuation_regge,
                                {"delta1": 1.0, "delta2": 0.7, "alpha": math.pi / 4, "poles": _POLE,
                                 "physical_mus": [-1.0, "3-0.5j", "1.2-0.3j"], "crossing_mu": 3.0,
                                 "crossing_eps": 1e-6, "loop_radius": 0.1, "loop_points": 41,
                                 "loop_alpha": math.pi / 3},
                                {"max_physical_rel_diff": 1e-8, "max_crossing_rel_diff": 1e-4,
                                 "max_monodromy_rel_error": 1e-8, "min_jump_relative_size": 1e-3}),
    ("martin", "limits"): (martin_limits,
                           {"mu": -1.0, "base": _ORIGIN, "probes": _PROBES, "radii": [250.0, 500.0, 1000.0],
                            "rays": [{"face": "front", "s": 1.0, "y1": [0.0, 0.0], "y2": [0.0, 0.0]},
                                     {"face": "front", "s": 0.5, "y1": [0.3, -0.2], "y2": [1.0, 0.5]},
                                     {"face": "front", "s": 2.0, "y1": [-0.4, 0.1], "y2": [0.2, -0.7]},
                                     {"face": "side1", "y1": [0.2, 0.3], "w2": [1.5, 0.1, 0.1]},
                                     {"face": "side2", "y2": [0.2, 0.3], "w1": [0.6, -0.3, 0.2]}],
                            "poles": _POLE,
                            "collapse_rays": [{"face": "front", "s": 3.0, "y1": [0.0, 0.0], "y2": [0.2, 0.1]},
                                              {"face": "front", "s": 5.0, "y1": [0.7, -0.4], "y2": [0.2, 0.1]},
                                              {"face": "front", "s": 1.0, "y1": [0.0, 0.0], "y2": [0.2, 0.1]}],
                            "injectivity_points": [{"face": "front", "s": s, "y1": y1, "y2": y2}
                                                   for s in (0.5, 1.0, 2.0)
                                                   for y1, y2 in (([0.0, 0.0], [0.0, 0.0]), ([0.3, 0.0], [0.0, 0.0]),
                                                                  ([0.0, 0.0], [0.0, -0.3]))],
                            "n_random_probes": 6,
                            "injectivity_pair": [{"face": "front", "s": 1.0, "y1": [0.3, 0.0], "y2": [0.0, -0.3]},
                                                 {"face": "front", "s": 1.0, "y1": [0.0, 0.0], "y2": [0.0, 0.0]}],
                            "march_heights": [1e-1, 1e-2, 1e-3]},
                           {"max_rel_error": 1e-2, "n_front_rays": 3, "n_side_rays": 2, "min_separation": 1e-3,
                            "min_march_growth_log10": 1.0}),
}


def run_experiment(experiment, mode, params, thresholds, ctx=None):
    """Run one experiment mode with defaults filled in.

    Raises
    ------
    ConfigError
        Unknown mode, parameter or threshold name, or a non-positive tolerance.
    """
    key = (experiment, mode)
    if key not in MODES:
        known = sorted(m for e, m in MODES if e == experiment)
        raise ConfigError(f"mode: unknown mode {mode!r} for experiment {experiment!r}; expected one of {known}")
    fn, dp, dt = MODES[key]
    unknown = sorted(set(params) - set(dp))
    if unknown:
        raise ConfigError(f"params: unknown keys {unknown}; expected a subset of {sorted(dp)}")
    unknown = sorted(set(thresholds) - set(dt))
    if unknown:
        raise ConfigError(f"thresholds: unknown keys {unknown}; expected a subset of {sorted(dt)}")
    th = dict(dt)
    for k, v in thresholds.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"thresholds.{k}: expected a number, got {v!r}")
        if k.startswith(("max_", "min_")) and not v > 0:
            raise ConfigError(f"thresholds.{k}: tolerances must be positive, got {v!r}")
        th[k] = v
    p = dict(dp)
    p.update(params)
    return fn(p, th, ctx or RunContext())
