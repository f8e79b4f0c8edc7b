import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from prodres.contour import line_through
from prodres.errors import BranchCutError, DomainError
from prodres.geometry import HyperbolicPoint, ProductPoint
from prodres.oracles import heat_laplace_product, points_at_distance
from prodres.product import (
    CutConfiguration,
    ModelOperator,
    ProductResolventRequest,
    SyntheticPole,
    boundary_value_kernel,
    continued_kernel,
    epsilon_extrapolate,
    format_batch_row,
    parse_batch,
    product_kernel,
    product_kernel_with_info,
)
from prodres.scaled import ScaledComplex, rel_diff

H3 = ModelOperator(2)


def kernel(mu, z, w, op1=H3, op2=H3, **kw):
    return product_kernel(ProductResolventRequest(mu, z, w, **kw), op1, op2)


@pytest.mark.parametrize("mu, d1, d2", [(0.0, 1.0, 1.0), (-1.0, 0.5, 2.0), (1.5, 2.0, 0.3)])
def test_heat_kernel_oracle(mu, d1, d2):
    z, w = points_at_distance(d1, d2)
    got = complex(kernel(mu, z, w).to_complex())
    assert got == pytest.approx(heat_laplace_product(mu, d1, d2), rel=1e-6)


def test_factor_swap():
    op1, op2 = ModelOperator(2), ModelOperator(4)
    z = ProductPoint(HyperbolicPoint(1.0, (0.0, 0.0)), HyperbolicPoint(0.7, (0.1, 0.0, 0.0, 0.2)))
    w = ProductPoint(HyperbolicPoint(2.0, (0.3, 0.0)), HyperbolicPoint(1.0, (0.0, 0.0, 0.0, 0.0)))
    swap = lambda p: ProductPoint(p.z2, p.z1)
    a = kernel(-1.0 + 0.5j, z, w, op1, op2)
    b = kernel(-1.0 + 0.5j, swap(z), swap(w), op2, op1)
    assert float(rel_diff(a, b)) < 1e-9


def test_contour_independence():
    z, w = points_at_distance(1.0, 1.5)
    a = kernel(-0.5, z, w, contour="auto", tol=1e-12)
    b = kernel(-0.5, z, w, contour="polyline", tol=1e-12)
    c = kernel(-0.5, z, w, contour=line_through(0.3, 1j), tol=1e-12)
    assert float(rel_diff(a, b)) < 1e-9
    assert float(rel_diff(c, b)) < 1e-9


def test_contour_crossing_a_cut_is_rejected():
    z, w = points_at_distance(1.0, 1.0)
    with pytest.raises(BranchCutError):
        kernel(-1.0, z, w, contour=line_through(2.0, 1j))


def test_spectrum_needs_a_tag():
    z, w = points_at_distance(1.0, 1.0)
    with pytest.raises(BranchCutError):
        kernel(3.0, z, w)


@settings(max_examples=8, deadline=None)
@given(st.floats(-5.0, 1.5), st.floats(0.2, 3.0), st.floats(0.2, 3.0))
def test_positive_below_spectrum(mu, d1, d2):
    z, w = points_at_distance(d1, d2)
    v = complex(kernel(mu, z, w, tol=1e-8).to_complex())
    assert v.real > 0
    assert abs(v.imag) < 1e-8 * v.real


def test_synthetic_pole_raises_the_kernel():
    z, w = points_at_distance(1.0, 1.0)
    free = complex(kernel(-1.0, z, w).to_complex())
    with_pole = complex(kernel(-1.0, z, w, ModelOperator(2, (SyntheticPole(0.5),)), H3).to_complex())
    assert with_pole.real > free.real > 0


def test_pole_ops_validation():
    with pytest.raises(DomainError):
        ModelOperator(2, (SyntheticPole(1.5),))
    with pytest.raises(DomainError):
        ModelOperator(2, (SyntheticPole(0.5), SyntheticPole(0.5)))


def test_boundary_value_matches_epsilon_limit():
    z, w = points_at_distance(1.0, 0.8)
    req = ProductResolventRequest(3.0, z, w, tol=1e-10, tag="-i0")
    bv = boundary_value_kernel(req, H3, H3)
    assert float(rel_diff(bv, epsilon_extrapolate(req, H3, H3))) < 1e-4


def test_boundary_value_conjugate_symmetry():
    z, w = points_at_distance(1.0, 0.8)
    lo = boundary_value_kernel(ProductResolventRequest(3.0, z, w, tag="-i0"), H3, H3)
    hi = boundary_value_kernel(ProductResolventRequest(3.0, z, w, tag="+i0"), H3, H3)
    assert float(rel_diff(lo, hi.conj())) < 1e-13
    assert np.isfinite(float(lo.logabs))


def test_boundary_value_with_pole_on_segment():
    op1 = ModelOperator(2, (SyntheticPole(0.5),))
    z, w = points_at_distance(1.0, 0.8)
    info = product_kernel_with_info(ProductResolventRequest(3.0, z, w, tag="-i0"), op1, H3)
    assert info.detours
    assert np.isfinite(float(info.value.logabs))


def test_continuation_physical_consistency():
    z, w = points_at_distance(1.0, 1.2)
    op1 = ModelOperator(2, (SyntheticPole(0.5),))
    cuts = CutConfiguration.for_mu(-1.0, 2, 2, 0.6)
    r = continued_kernel(-1.0, op1, H3, cuts, z, w)
    assert float(rel_diff(r.value, kernel(-1.0, z, w, op1, H3))) < 1e-8


def test_continuation_angle_too_small():
    z, w = points_at_distance(1.0, 1.0)
    with pytest.raises(DomainError):
        continued_kernel(3.0 + 1.0j, H3, H3, CutConfiguration.for_mu(3.0, 2, 2, 0.1), z, w)


def test_continuation_crossing_the_cut():
    z, w = points_at_distance(1.0, 1.2)
    a = continued_kernel(3.0 + 1e-5j, H3, H3, CutConfiguration.for_mu(3.0, 2, 2, 0.5), z, w).value
    b = boundary_value_kernel(ProductResolventRequest(3.0, z, w, tag="-i0"), H3, H3)
    assert float(rel_diff(a, b)) < 1e-4


@pytest.mark.parametrize("radius", [0.1, 0.3])
def test_regge_monodromy(radius):
    z, w = points_at_distance(1.0, 1.2)
    lam = 0.5
    op1 = ModelOperator(2, (SyntheticPole(lam),))
    b0 = lam + 1.0
    loop = [b0 + radius * np.exp(1j * t) for t in np.linspace(-0.5 * math.pi, 1.5 * math.pi, 33)]
    start = complex(b0, -radius - 1.0)
    cuts = CutConfiguration(1.0, 0.0, 1.2)
    r0 = continued_kernel(loop[-1], op1, H3, cuts, z, w, path=[start, loop[0]])
    r1 = continued_kernel(loop[-1], op1, H3, cuts, z, w, path=[start] + loop)
    r2 = continued_kernel(loop[-1], op1, H3, cuts, z, w, path=[start] + loop + loop[1:])
    assert float(rel_diff(r1.value, r0.value)) > 1e-3
    (_, pred), = r0.loop_jumps
    assert float(rel_diff(r1.value - r0.value, pred)) < 1e-8
    assert float(rel_diff(r2.value, r0.value)) < 1e-8
    assert float(rel_diff(r1.integral, r0.integral)) < 1e-8


def test_batch_round_trip():
    text = "# mu_re mu_im sheet z1 z2 w1 w2\n-1 0 physical 1:0,0 1:0,0 2:0,0 1:0.5,0\n3 0 -i0 1:0,0 1:0,0 2:0,0 1:0.5,0\n"
    rows = parse_batch(text)
    assert [r[1] for r in rows] == ["physical", "-i0"]
    assert rows[0][3].z2.y == (0.5, 0.0)
    line = format_batch_row(rows[0][0], "physical", ScaledComplex(-2.0, 0.1), 1e-12)
    fields = line.split(",")
    assert len(fields) == 6
    assert float(fields[3]) == pytest.approx(-2.0 / math.log(10))
    with pytest.raises(DomainError):
        parse_batch("1 0 physical 1:0 1:0 1:0\n")
    with pytest.raises(DomainError):
        parse_batch("1 0 sideways 1:0 1:0 1:0 1:0\n")
