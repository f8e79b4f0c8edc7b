import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from prodres.contour import PoleSpec
from prodres.errors import BoundarySignal, DomainError, NoCrossing, PoleOnContour, SideFaceRegime
from prodres.geometry import HyperbolicPoint, ProductPoint, Slope
from prodres.product import ModelOperator, SyntheticPole
from prodres.saddle import (
    AsymptoticTerm,
    FaceData,
    PhaseContext,
    RegionLabel,
    classify,
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
    steepest_contour,
    sweep_decision,
    term_value,
    transition_profile,
    transition_profile_closed_form,
)
from prodres.scaled import ScaledComplex

CTX = PhaseContext(-1.0, 2, 2, 1.0)
mus = st.floats(-10.0, 1.9)
slopes = st.floats(0.05, 20.0)


@pytest.mark.parametrize("s, expected", [(1.0, -0.5), (math.sqrt(5.0), 0.5)])
def test_saddle_examples(s, expected):
    assert complex(saddle_point(CTX.with_s(s))) == pytest.approx(expected, abs=1e-14)


def test_saddle_limits():
    assert complex(saddle_point(CTX.with_s(1e-8))) == pytest.approx(-1 - 1.0, abs=1e-12)
    assert complex(saddle_point(CTX.with_s(1e8))) == pytest.approx(1.0, abs=1e-12)
    for s in (0.0, math.inf):
        with pytest.raises(SideFaceRegime):
            saddle_point(CTX.with_s(s))


def test_phase_examples():
    pd = phase_data(CTX)
    assert pd.F0 == pytest.approx(-1j * math.sqrt(6.0), rel=1e-14)
    assert abs(pd.F2) == pytest.approx(0.25 * 2 ** 2.5 * 3 ** -1.5, rel=1e-14)
    assert abs(pd.F2) == pytest.approx(0.27217, abs=5e-6)


@settings(max_examples=60)
@given(mus, slopes)
def test_saddle_is_critical(mu, s):
    ctx = PhaseContext(mu, 2, 2, s)
    mu0 = complex(saddle_point(ctx))
    assert abs(fd_derivative(ctx, mu0)) < 1e-8
    pd = phase_data(ctx)
    assert complex(ctx.F(mu0)) == pytest.approx(pd.F0, rel=1e-12)
    assert complex(ctx.d2F(mu0)) == pytest.approx(pd.F2, rel=1e-10)


@settings(max_examples=30)
@given(mus, slopes)
def test_second_derivative_by_differences(mu, s):
    ctx = PhaseContext(mu, 2, 2, s)
    mu0 = complex(saddle_point(ctx))
    h = 1e-3 * min(1.0, abs(mu0 - ctx.t1), abs(mu0 - ctx.t2))
    f = ctx.F(mu0 + h * np.array([-1.0, 0.0, 1.0]))
    fd2 = complex((f[0] - 2 * f[1] + f[2]) / h ** 2)
    assert fd2 == pytest.approx(phase_data(ctx).F2, rel=1e-4)


def test_classify_examples():
    mu0 = complex(saddle_point(CTX))
    with pytest.raises(BoundarySignal):
        classify(CTX, mu0)
    assert classify(CTX, 1.05 + 0.01j) is RegionLabel.P_s_right
    assert classify(CTX, -2.05 + 0.01j) is RegionLabel.P_s_left
    assert classify(CTX, 50 + 50j) is RegionLabel.N_s


def test_saddle_neighbourhood_labels():
    # ascending directions (along the real axis) enter P, descending ones (vertical) enter N
    mu0 = complex(saddle_point(CTX))
    assert classify(CTX, mu0 + 1e-4) is RegionLabel.P_s_right
    assert classify(CTX, mu0 - 1e-4) is RegionLabel.P_s_left
    assert classify(CTX, mu0 + 1e-4j) is RegionLabel.N_s
    assert classify(CTX, mu0 - 1e-4j) is RegionLabel.N_s


@pytest.mark.parametrize("s", [0.02, 0.05])
@pytest.mark.parametrize("lam", [0.2, 0.5, 0.9])
def test_small_slope_never_includes_factor1(s, lam):
    ctx = PhaseContext(-1.0 + 0.5j, 2, 2, s)
    assert residue_decision(ctx, PoleSpec(lam)) in ("exclude", "dominated")


@pytest.mark.parametrize("s", [20.0, 50.0])
@pytest.mark.parametrize("lam", [0.2, 0.5, 0.9])
def test_large_slope_never_excludes(s, lam):
    ctx = PhaseContext(-1.0 + 0.5j, 2, 2, s)
    assert residue_decision(ctx, PoleSpec(lam)) in ("include", "dominated")
    assert residue_decision(ctx, PoleSpec(ctx.mu - lam, side="factor2")) in ("include", "dominated", "exclude")


@pytest.mark.parametrize("s", [0.3, 1.0, 3.0])
def test_decision_matches_sweep(s):
    ctx = PhaseContext(-1.0 + 0.5j, 2, 2, s)
    for lam in (0.2, 0.5):
        assert residue_decision(ctx, PoleSpec(lam)) == sweep_decision(ctx, PoleSpec(lam))


def test_s0_examples():
    assert s0_for_pole(-1.0, 2, 2, 0.5) == pytest.approx(math.sqrt(5.0), rel=1e-14)
    assert complex(saddle_point(CTX.with_s(s0_for_pole(-1.0, 2, 2, 0.5)))) == pytest.approx(0.5, abs=1e-12)
    assert s0_for_pole(-1.0, 2, 2, 1.0 - 1e-12) > 1e5
    assert s0_for_pole(-1.0, 2, 2, -2.0 + 1e-12) < 1e-5
    with pytest.raises(NoCrossing):
        s0_for_pole(-1.0, 2, 2, 1.5)


@given(st.floats(-1.99, 0.99))
def test_s0_puts_saddle_on_pole(lam):
    s0 = s0_for_pole(-1.0, 2, 2, lam)
    if 1e-6 < s0 < 1e6:
        assert complex(saddle_point(CTX.with_s(s0))).real == pytest.approx(lam, abs=1e-12 * (1 + s0 * s0))


@pytest.mark.parametrize("mu, s", [(-1.0, 1.0), (-1.0 + 0.5j, 0.5), (-3.0, 2.0)])
def test_steepest_contour_peaks_at_saddle(mu, s):
    ctx = PhaseContext(mu, 2, 2, s)
    mu0 = complex(saddle_point(ctx))
    c = steepest_contour(ctx)
    pts = c.sample(64)
    im = np.imag(ctx.F(pts))
    level = float(np.imag(ctx.F(mu0)))
    assert np.max(im) <= level + 1e-9
    i = int(np.argmax(im))
    assert abs(pts[i] - mu0) < 1e-6
    assert c.is_admissible()


def test_steepest_contour_hits_pole_at_critical_slope():
    s0 = s0_for_pole(-1.0, 2, 2, 0.5)
    with pytest.raises(PoleOnContour, match="s0"):
        steepest_contour(CTX.with_s(s0), [PoleSpec(0.5)])


def test_transition_profile_limits():
    for a in (0.3, 1.0):
        assert transition_profile(1e-12, a) == pytest.approx(math.pi, abs=1e-8)
        assert transition_profile(-1e-12, a) == pytest.approx(-math.pi, abs=1e-8)
    assert transition_profile(0.0, 1.0) == 0.0
    assert abs(transition_profile(1e4, 1.0)) < 1e-3


@given(st.floats(-20, 20), st.floats(0.05, 5))
def test_transition_profile_odd_and_closed_form(S, a):
    assert transition_profile(-S, a) == pytest.approx(-transition_profile(S, a), abs=1e-12)
    assert transition_profile(S, a) == pytest.approx(transition_profile_closed_form(S, a), rel=1e-9, abs=1e-12)


def test_transition_profile_domain():
    with pytest.raises(DomainError):
        transition_profile(1.0, 0.0)


def test_fit_round_trip():
    s = 1.0
    term = AsymptoticTerm("front", 1.0, 1.0, -1j * math.sqrt(6.0), Fraction(1, 2),
                          ScaledComplex.from_complex(0.3 - 0.2j), "rho", s)
    samples = []
    for r1 in fit_radii(100.0, 1000.0):
        z = ProductPoint(HyperbolicPoint.from_log(-r1, (0.0, 0.0)), HyperbolicPoint.from_log(-s * r1, (0.0, 0.0)))
        samples.append((r1, term_value(term, z)))
    fit = fit_exponents(samples, term, correction=False)
    # front samples in r1 = 1/rho1: rho = rho1 / sqrt(1 + s^2)
    assert fit.osc_exponent == pytest.approx(term.osc_exponent * math.sqrt(1 + s * s), rel=1e-6)
    assert fit.log_power == pytest.approx(0.5, abs=1e-6)


def test_label_window_marks_saddle_cell():
    mu0 = complex(saddle_point(CTX))
    xs, ys, lab = label_window(CTX, mu0, 1.0, 200)
    j = int(np.argmin(np.abs(xs - mu0.real)))
    i = int(np.argmin(np.abs(ys - mu0.imag)))
    assert lab[i, j] == "boundary"
    assert set(np.unique(lab)) <= {"N_s", "P_s_left", "P_s_right", "boundary"}


def test_corner_ledger():
    term = AsymptoticTerm("front", 1.0, 1.0, 0.0, Fraction(1, 2), ScaledComplex(0.0), "rho", 1.0)
    assert corner_log_power(term) == Fraction(3, 2)
    side = AsymptoticTerm("side1", 1.0, 0.0, 0.0, Fraction(3, 2), ScaledComplex(0.0), "rho1")
    with pytest.raises(DomainError):
        corner_log_power(side)


def test_predict_leading_face_data():
    op = ModelOperator(2)
    o = HyperbolicPoint(1.0, (0.0, 0.0))
    w = ProductPoint(o, o)
    with pytest.raises(DomainError):
        predict_leading(CTX, "front", op, op, FaceData(w, None, (0.0, 0.0)))
    with pytest.raises(DomainError):
        predict_leading(CTX, "side2", op, op, FaceData(w, (0.0, 0.0), None, o))
    front = predict_leading(CTX, "front", op, op, FaceData(w, (0.0, 0.0), (0.0, 0.0)))
    assert front.log_power == Fraction(1, 2)
    side = predict_leading(CTX, "side1", op, op, FaceData(w, (0.0, 0.0), None, HyperbolicPoint(2.0, (0.5, 0.0))))
    assert side.log_power == Fraction(3, 2)


def test_side2_eigenvalue_exponent():
    op1 = ModelOperator(2, (SyntheticPole(0.5),))
    op2 = ModelOperator(2)
    o = HyperbolicPoint(1.0, (0.0, 0.0))
    w = ProductPoint(o, o)
    t = predict_leading(CTX, "side2", op1, op2, FaceData(w, None, (0.0, 0.0), HyperbolicPoint(2.0, (0.0, 0.0))))
    assert t.kind == "eigenvalue"
    # k2/2 + i sqrt(mu - lam - k2^2/4) on the Im <= 0 branch
    assert complex(t.x2_power) == pytest.approx(1.0 + math.sqrt(2.5), rel=1e-14)


def test_slope_tag_reaches_side_face():
    assert PhaseContext(-1.0, 2, 2, math.inf).s == Slope.infinite()
