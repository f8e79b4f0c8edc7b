import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from prodres.errors import BranchCutError, DomainError, UnsupportedDimension
from prodres.geometry import HyperbolicPoint
from prodres.hyperbolic import (
    heat_kernel,
    kernel_from_nu,
    param_from_nu,
    poisson_kernel,
    radial_ode_residual,
    resolvent_kernel,
    rotated_sqrt,
    spherical_function,
    zeta_of_lambda,
)


def h3_closed_form(zeta, delta):
    return np.exp(-(zeta - 1) * delta) / (4 * np.pi * np.sinh(delta))


@pytest.mark.parametrize(
    "lam, k, zeta",
    [(0.0, 2, 2.0), (1.0, 2, 1.0), (1 - 0.3 ** 2, 2, 1.3), (1 - 2.0 ** 2, 2, 3.0), (-5.0, 4, 2 + 3.0)],
)
def test_zeta_examples(lam, k, zeta):
    p = zeta_of_lambda(lam, k)
    assert p.zeta == pytest.approx(zeta, abs=1e-14)
    assert p.zeta * (k - p.zeta) == pytest.approx(lam, abs=1e-12)


def test_zeta_on_cut_needs_side():
    with pytest.raises(BranchCutError):
        zeta_of_lambda(2.0, 2)
    below = zeta_of_lambda(2.0, 2, side="below")
    above = zeta_of_lambda(2.0, 2, side="above")
    assert below.zeta == pytest.approx(1 + 1j)
    assert above.zeta == pytest.approx(np.conj(below.zeta))


@given(st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False))
def test_physical_branch(w):
    r = complex(rotated_sqrt(w))
    assert r.imag <= 0
    assert abs(r * r - w) <= 1e-12 * (1 + abs(w))


@given(st.floats(-50, 0.99), st.floats(0.05, 20))
def test_h3_closed_form(lam, delta):
    p = zeta_of_lambda(lam, 2)
    got = complex(resolvent_kernel(p, delta).to_complex())
    assert got == pytest.approx(complex(h3_closed_form(p.zeta, delta)), rel=1e-13)


def test_h3_value_at_unit_distance():
    val = complex(resolvent_kernel(zeta_of_lambda(0.0, 2), 1.0).to_complex())
    assert val.real == pytest.approx(math.exp(-1) / (4 * math.pi * math.sinh(1)), rel=1e-14)
    assert val.real == pytest.approx(0.0249106, abs=5e-8)


@pytest.mark.parametrize("tau", [0.3, 1.0, 4.0])
def test_on_cut_modulus(tau):
    # on the cut |K| = 1/(4 pi sinh delta) for k = 2
    p = zeta_of_lambda(1 + tau ** 2, 2, side="below")
    assert abs(complex(resolvent_kernel(p, 2.0).to_complex())) == pytest.approx(
        1 / (4 * math.pi * math.sinh(2.0)), rel=1e-13
    )


def hypergeometric_kernel(zeta, k, delta):
    sig = 1 / mpmath.cosh(mpmath.mpf(delta) / 2) ** 2
    half = mpmath.mpf(k) / 2
    pref = 2 ** (-2 * zeta - 1) * mpmath.pi ** (-half) * mpmath.gamma(zeta) / mpmath.gamma(zeta - half + 1)
    return complex(pref * sig ** zeta * mpmath.hyp2f1(zeta, zeta - half + 0.5, 2 * zeta - k + 1, sig))


@pytest.mark.parametrize("k", [1, 2, 4, 6, 8])
@pytest.mark.parametrize("lam", [0.0, -3.0, -1.0 + 2.0j])
def test_mpmath_hypergeometric_kernel(k, lam):
    p = zeta_of_lambda(lam, k)
    got = complex(resolvent_kernel(p, 1.3).to_complex())
    assert got == pytest.approx(hypergeometric_kernel(p.zeta, k, 1.3), rel=1e-9)


def test_odd_dimension_unsupported():
    with pytest.raises(UnsupportedDimension):
        resolvent_kernel(zeta_of_lambda(0.0, 3), 1.0)


def test_delta_must_be_positive():
    with pytest.raises(DomainError):
        resolvent_kernel(zeta_of_lambda(0.0, 2), 0.0)


@pytest.mark.parametrize("k", [1, 2, 4, 6])
@pytest.mark.parametrize("lam, delta", [(0.0, 1.0), (-3.0, 2.0), (0.1, 0.5)])
def test_radial_ode(k, lam, delta):
    p = zeta_of_lambda(lam, k)
    assert radial_ode_residual(p, delta) < 1e-6


@pytest.mark.parametrize("k", [2, 4])
def test_radial_ode_at_bottom_of_spectrum(k):
    assert radial_ode_residual(param_from_nu(0.0, k), 1.5) < 1e-6


def test_radial_ode_negative_control():
    good = zeta_of_lambda(0.0, 2)
    wrong = type(good)(lam=good.lam + 1.0, zeta=good.zeta, k=2)
    assert radial_ode_residual(wrong, 1.0) > 1e-2


def test_heat_kernel_small_distance_limit():
    t = 0.7
    val = float(heat_kernel(2, t, 0.0).to_complex().real)
    assert val == pytest.approx((4 * math.pi * t) ** -1.5 * math.exp(-t), rel=1e-14)


@pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
def test_heat_kernel_unit_mass(t):
    f = lambda d: float(heat_kernel(2, t, d).to_complex().real) * 4 * math.pi * math.sinh(d) ** 2
    mass = integrate.quad(f, 0, 40 * math.sqrt(t) + 20, epsabs=0, epsrel=1e-12, limit=200)[0]
    assert mass == pytest.approx(1.0, abs=1e-8)


def test_heat_kernel_unsupported():
    with pytest.raises(UnsupportedDimension):
        heat_kernel(4, 1.0, 1.0)


def test_poisson_example_and_limit():
    p = zeta_of_lambda(0.0, 2)
    z = HyperbolicPoint(1.0, (0.0, 0.0))
    val = complex(poisson_kernel(p, z, (0.0, 0.0)).to_complex())
    assert val == pytest.approx(1 / (2 * math.pi), rel=1e-14)
    # numerical boundary limit of x'^(-zeta) K, extrapolated linearly in x'^2
    ests = []
    for xp in (1e-4, 1e-6):
        w = HyperbolicPoint(xp, (0.0, 0.0))
        from prodres.geometry import point_pair_delta
        K = resolvent_kernel(p, point_pair_delta(z, w))
        ests.append(complex((K / xp ** 2).to_complex()))
    assert ests[-1] == pytest.approx(val, rel=1e-8)


@given(st.floats(0.1, 10), st.floats(-3, 3), st.floats(-3, 3), st.floats(0.1, 10))
def test_poisson_homogeneity(x, y, yb, a):
    p = zeta_of_lambda(-2.0, 2)
    v = poisson_kernel(p, HyperbolicPoint(x, (y, 0.0)), (yb, 0.0))
    va = poisson_kernel(p, HyperbolicPoint(a * x, (a * y, 0.0)), (a * yb, 0.0))
    assert float(va.logabs) == pytest.approx(float(v.logabs) - p.zeta.real * math.log(a), abs=1e-11)


def test_poisson_blows_up_at_its_boundary_point():
    p = zeta_of_lambda(0.0, 2)
    vals = [float(poisson_kernel(p, HyperbolicPoint(x, (0.0, 0.0)), (0.0, 0.0)).logabs) for x in (1e-1, 1e-3, 1e-5)]
    assert vals[0] < vals[1] < vals[2]


def test_spherical_examples():
    z = HyperbolicPoint(1.0, (0.0, 0.0))
    w = HyperbolicPoint(math.e, (0.0, 0.0))
    val = complex(spherical_function(2, z, w).to_complex())
    assert val == pytest.approx(-1j / (4 * math.pi * math.sinh(1)), rel=1e-13)
    near = HyperbolicPoint(1.0 + 1e-6, (0.0, 0.0))
    assert complex(spherical_function(2, z, near).to_complex()) == pytest.approx(-1j / (4 * math.pi), rel=1e-9)
    with pytest.raises(DomainError):
        spherical_function(2, z, z)


@pytest.mark.parametrize("k", [2, 4])
def test_spherical_is_tau_derivative(k):
    delta, h = 1.2, 1e-4
    from prodres.hyperbolic import spherical_from_delta
    kp = complex(kernel_from_nu(1j * h, delta, k).to_complex())
    km = complex(kernel_from_nu(-1j * h, delta, k).to_complex())
    # tau -> K(k^2/4 + tau^2) from lambda - i0 has nu = i tau
    fd = (kp - km) / (2 * h)
    assert complex(spherical_from_delta(k, delta).to_complex()) == pytest.approx(fd, rel=1e-7)


@settings(max_examples=30)
@given(st.floats(-20, 0.9), st.floats(0.2, 30))
def test_decay_identity(lam, delta):
    p = zeta_of_lambda(lam, 2)
    la = float(resolvent_kernel(p, delta).logabs)
    ref = -(p.zeta.real - 1) * delta - math.log(4 * math.pi) - math.log(math.sinh(delta))
    assert la == pytest.approx(ref, rel=1e-13, abs=1e-13)
