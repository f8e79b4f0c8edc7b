import math

import pytest
from hypothesis import given, settings, strategies as st

from prodres.errors import DimensionMismatch, DomainError
from prodres.geometry import HyperbolicPoint, ProductPoint, Slope, boundary_coords, point_pair_delta, ray_point

heights = st.floats(1e-6, 1e6)
coords = st.floats(-1e3, 1e3)


def points(k):
    return st.builds(lambda x, y: HyperbolicPoint(x, y), heights, st.lists(coords, min_size=k, max_size=k))


@pytest.mark.parametrize(
    "z, zp, expected",
    [
        (HyperbolicPoint(1.0, (0.0,)), HyperbolicPoint(1.0, (0.0,)), 0.0),
        (HyperbolicPoint(1.0, (0.0,)), HyperbolicPoint(1.0, (1.0,)), math.acosh(1.5)),
        (HyperbolicPoint(1.0, (0.0, 0.0)), HyperbolicPoint(math.e, (0.0, 0.0)), 1.0),
    ],
)
def test_delta_examples(z, zp, expected):
    assert point_pair_delta(z, zp) == pytest.approx(expected, rel=1e-14, abs=1e-15)


def test_delta_matches_arccosh_formula():
    z, zp = HyperbolicPoint(1.0, (0.0, 0.0)), HyperbolicPoint(math.e, (0.0, 0.0))
    assert math.cosh(point_pair_delta(z, zp)) == pytest.approx(1 + (math.e - 1) ** 2 / (2 * math.e), rel=1e-14)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        point_pair_delta(HyperbolicPoint(1.0, (0.0,)), HyperbolicPoint(1.0, (0.0, 0.0)))


@given(points(2), points(2))
def test_symmetry(a, b):
    assert point_pair_delta(a, b) == point_pair_delta(b, a)


@settings(max_examples=200)
@given(points(2), points(2), points(2))
def test_triangle_inequality(a, b, c):
    ab, bc, ac = point_pair_delta(a, b), point_pair_delta(b, c), point_pair_delta(a, c)
    assert ac <= ab + bc + 1e-9 * (1 + ab + bc)


@given(points(2), points(2), st.floats(-100, 100), st.floats(-100, 100), st.floats(1e-3, 1e3))
def test_isometry_invariance(a, b, c1, c2, lam):
    d = point_pair_delta(a, b)
    shift = [c1, c2]
    ta, tb = a.shifted(dy=shift), b.shifted(dy=shift)
    assert point_pair_delta(ta, tb) == pytest.approx(d, rel=1e-12, abs=1e-9)
    da = HyperbolicPoint(a.x * lam, a.y_array * lam)
    db = HyperbolicPoint(b.x * lam, b.y_array * lam)
    assert point_pair_delta(da, db) == pytest.approx(d, rel=1e-12, abs=1e-9)


def test_vertical_distance_deep_in_the_collar():
    a = HyperbolicPoint.from_log(-5000.0, (0.0, 0.0))
    b = HyperbolicPoint.from_log(-4990.0, (0.0, 0.0))
    assert point_pair_delta(a, b) == pytest.approx(10.0, rel=1e-12)


def test_boundary_coords_examples():
    p = ProductPoint(HyperbolicPoint(math.exp(-10), (0.0,)), HyperbolicPoint(math.exp(-10), (0.0,)))
    bc = boundary_coords(p)
    assert bc.rho1 == pytest.approx(0.1) and bc.rho2 == pytest.approx(0.1)
    assert float(bc.s) == pytest.approx(1.0)
    assert bc.rho == pytest.approx(0.1 / math.sqrt(2))
    q = ProductPoint(HyperbolicPoint.from_log(-100, (0.0,)), HyperbolicPoint.from_log(-10, (0.0,)))
    assert float(boundary_coords(q).s) == pytest.approx(0.1)


@given(st.floats(1e-6, 0.999))
def test_equal_heights_have_unit_slope(x):
    p = ProductPoint(HyperbolicPoint(x, (0.0,)), HyperbolicPoint(x, (1.0,)))
    assert float(boundary_coords(p).s) == pytest.approx(1.0, rel=1e-14)


def test_boundary_coords_outside_collar():
    with pytest.raises(DomainError):
        boundary_coords(ProductPoint(HyperbolicPoint(1.5, (0.0,)), HyperbolicPoint(0.5, (0.0,))))


def test_ray_point_examples():
    p = ray_point(1.0, 10.0, (0.0,), (0.0,))
    assert p.z1.logx == pytest.approx(-5 * math.sqrt(2), rel=1e-14)
    assert p.z2.logx == pytest.approx(-5 * math.sqrt(2), rel=1e-14)
    bc = boundary_coords(ray_point(2.0, 10.0, (0.0,), (0.0,)))
    assert bc.rho1 == pytest.approx(2 * bc.rho2)
    assert bc.rho1 ** -2 + bc.rho2 ** -2 == pytest.approx(100.0)


@given(st.floats(1e-3, 1e3), st.floats(1.0, 1e4))
def test_ray_round_trip(s, r):
    bc = boundary_coords(ray_point(s, r, (0.0, 0.0), (1.0, 2.0)))
    assert float(bc.s) == pytest.approx(s, rel=1e-12)
    assert bc.r == pytest.approx(r, rel=1e-12)


def test_infinite_slope_is_tagged():
    assert Slope.of(math.inf).is_infinite
    assert Slope.of(0.0).is_zero
    with pytest.raises(DomainError):
        Slope.of(-1.0)
