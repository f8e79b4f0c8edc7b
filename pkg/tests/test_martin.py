import math

import numpy as np
import pytest

from prodres.errors import DomainError
from prodres.geometry import HyperbolicPoint, ProductPoint
from prodres.martin import (
    MartinBoundaryPoint,
    MartinRequest,
    PoleData,
    boundary_sequence,
    closed_form_limit,
    collapse_map,
    laplacian_residual,
    martin_kernel,
    martin_limit,
)
from prodres.product import ModelOperator, SyntheticPole
from prodres.saddle import s0_for_pole

H3 = ModelOperator(2)


def hp(x, y1, y2=0.0):
    return HyperbolicPoint(x, (y1, y2))


BASE = ProductPoint(hp(1.0, 0.0), hp(1.0, 0.0))
PROBES = (BASE, ProductPoint(hp(0.5, 0.2), hp(1.5, -0.3)), ProductPoint(hp(2.0, -0.4), hp(0.8, 0.1)))
W = ProductPoint(hp(0.05, 0.3), hp(0.02, -0.1))


def test_normalization_and_positivity():
    U = martin_kernel(MartinRequest(-1.0, BASE, PROBES), W, H3, H3)
    assert U[0] == 1.0
    assert np.all(U.real > 0)
    assert np.all(np.abs(U.imag) < 1e-8 * U.real)


def test_complex_mu_rejected():
    with pytest.raises(DomainError):
        MartinRequest(-1.0 + 0.1j, BASE, PROBES)


@pytest.mark.parametrize("probe", [PROBES[1], PROBES[2]])
def test_harmonic_in_the_probe(probe):
    def u(z):
        return martin_kernel(MartinRequest(-1.0, BASE, (z,)), W, H3, H3)[0]

    assert laplacian_residual(u, probe, -1.0) < 1e-3


def test_harmonicity_negative_control():
    def u(z):
        return martin_kernel(MartinRequest(-1.0, BASE, (z,)), W, H3, H3)[0]

    assert laplacian_residual(u, PROBES[1], -2.0) > 1e-2


def test_base_point_change_is_a_constant_factor():
    other = PROBES[2]
    a = martin_kernel(MartinRequest(-1.0, BASE, PROBES), W, H3, H3)
    b = martin_kernel(MartinRequest(-1.0, other, PROBES), W, H3, H3)
    ratio = a / b
    assert np.allclose(ratio, ratio[0], rtol=1e-9)


def test_front_limit_matches_poisson_product():
    req = MartinRequest(-1.0, BASE, PROBES)
    bp = MartinBoundaryPoint("front", s=1.0, y1=(0.0, 0.0), y2=(0.0, 0.0))
    lim = martin_limit(req, boundary_sequence(bp), H3, H3)
    pred = closed_form_limit(bp, req, H3, H3)
    assert np.max(np.abs(lim.at_max - pred) / np.abs(pred)) < 1e-2
    # ladder steps are ordered by radius
    assert len(lim.steps) == 2


def test_collapse_map_examples():
    lam = 0.5
    s0 = s0_for_pole(-1.0, 2, 2, lam)
    pdata = PoleData(-1.0, 2, 2, (lam,))
    far = MartinBoundaryPoint("front", s=2 * s0, y1=(0.1, 0.0), y2=(0.2, 0.0))
    near = MartinBoundaryPoint("front", s=s0 / 2, y1=(0.1, 0.0), y2=(0.2, 0.0))
    side1 = MartinBoundaryPoint("side1", y1=(0.1, 0.0), w2=hp(1.0, 0.0))
    side2 = MartinBoundaryPoint("side2", w1=hp(1.0, 0.0), y2=(0.2, 0.0))
    assert collapse_map(far, pdata) == MartinBoundaryPoint("collapsed", y2=(0.2, 0.0))
    assert collapse_map(near, pdata) == near
    assert collapse_map(side1, pdata) == side1
    assert collapse_map(side2, pdata).face == "collapsed"
    none = PoleData(-1.0, 2, 2, ())
    for bp in (far, near, side1, side2):
        assert collapse_map(bp, none) == bp


def test_boundary_point_validation():
    with pytest.raises(DomainError):
        MartinBoundaryPoint("front", s=1.0, y1=(0.0, 0.0))
    with pytest.raises(DomainError):
        MartinBoundaryPoint("front", s=0.0, y1=(0.0, 0.0), y2=(0.0, 0.0))
    with pytest.raises(DomainError):
        MartinBoundaryPoint("edge", y2=(0.0,))
    with pytest.raises(DomainError):
        boundary_sequence(MartinBoundaryPoint("collapsed", y2=(0.0, 0.0)))


def test_collapsed_closed_form_is_slope_free():
    op1 = ModelOperator(2, (SyntheticPole(0.5),))
    req = MartinRequest(-1.0, BASE, PROBES)
    s0 = s0_for_pole(-1.0, 2, 2, 0.5)
    a = closed_form_limit(MartinBoundaryPoint("front", s=2 * s0, y1=(0.0, 0.0), y2=(0.1, 0.0)), req, op1, H3)
    b = closed_form_limit(MartinBoundaryPoint("front", s=4 * s0, y1=(0.5, 0.3), y2=(0.1, 0.0)), req, op1, H3)
    c = closed_form_limit(MartinBoundaryPoint("collapsed", y2=(0.1, 0.0)), req, op1, H3)
    assert np.allclose(a, b, rtol=1e-12)
    assert np.allclose(a, c, rtol=1e-12)


def test_side_sequence_heights():
    bp = MartinBoundaryPoint("side2", w1=hp(1.0, 0.0), y2=(0.2, 0.0))
    p = boundary_sequence(bp)(50.0)
    assert p.z2.logx == pytest.approx(-50.0)
    assert p.z1 == hp(1.0, 0.0)
    assert math.isclose(p.z2.y[0], 0.2)
