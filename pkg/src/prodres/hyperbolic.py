"""Closed-form single-factor objects on the hyperbolic space with boundary dimension k.

Conventions
-----------
``H = -Laplacian`` has continuous spectrum ``[k^2/4, inf)``. The spectral
parameter ``lambda`` and the exponent ``zeta`` are related by
``lambda = zeta (k - zeta)``; we mostly work with ``nu = zeta - k/2`` so that
``lambda = k^2/4 - nu^2``. On the physical sheet ``Re nu > 0``.

The resolvent kernel for even ``k`` is

    K(delta) = c_k ((1/sinh) d/ddelta)^((k-2)/2) (exp(-nu delta)/sinh delta),

expanded once into a finite sum ``sum coeff * nu^p coth^a csch^b`` times
``exp(-nu delta)``. ``c_k`` is fixed by matching the Euclidean Green's
function singularity ``1/((k-1) |S^k| delta^(k-1))`` at the diagonal.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy import integrate, special

from .errors import BranchCutError, DomainError, UnsupportedDimension
from .geometry import HyperbolicPoint, point_pair_delta
from .scaled import ScaledComplex

__all__ = [
    "rotated_sqrt",
    "nu_of_lambda",
    "FactorSpectralParam",
    "zeta_of_lambda",
    "param_from_nu",
    "kernel_normal_form",
    "kernel_constant",
    "kernel_from_nu",
    "resolvent_kernel",
    "radial_ode_residual",
    "heat_kernel",
    "poisson_from_nu",
    "poisson_kernel",
    "spherical_from_delta",
    "spherical_function",
    "log_sinh",
    "log_coth",
]


# ---------------------------------------------------------------------------
# branches
# ---------------------------------------------------------------------------

def rotated_sqrt(w, phi=0.0, cut_side=-1):
    """Square root with its cut along the ray ``arg w = phi``.

    The argument is taken in ``(phi - 2 pi, phi]``. With ``phi = 0`` this is
    the physical branch ``Im sqrt <= 0`` used for ``sqrt(lambda - k^2/4)``.

    Parameters
    ----------
    w : array_like of complex
    phi : float
        Direction of the cut, ``|phi| < pi``.
    cut_side : {-1, +1}
        Which one-sided limit to return for points exactly on the cut:
        -1 is the clockwise side (below the ray), +1 the counterclockwise one.
    """
    w = np.asarray(w, dtype=complex)
    v = w if phi == 0.0 else w * np.exp(-1j * phi)
    # principal root, then flip into the half-plane Im <= 0 (arg v in (-2pi, 0])
    r = np.sqrt(v)
    r = np.where(r.imag > 0, -r, r)
    if cut_side == 1:
        on_cut = (v.imag == 0) & (v.real > 0)
        r = np.where(on_cut, -r, r)
    return r if phi == 0.0 else r * np.exp(0.5j * phi)


def nu_of_lambda(lam, k, phi=0.0, cut_side=-1):
    """``nu = i sqrt_phi(lambda - k^2/4)``; ``Re nu >= 0`` on the physical sheet."""
    return 1j * rotated_sqrt(np.asarray(lam, dtype=complex) - k * k / 4.0, phi, cut_side)


@dataclass(frozen=True)
class FactorSpectralParam:
    """Spectral data ``(lambda, zeta)`` for one factor.

    ``sheet`` is ``"physical"`` or ``"continued"``; ``side`` records the
    one-sided limit used when ``lambda`` sits on ``[k^2/4, inf)``.
    """

    lam: complex
    zeta: complex
    k: int
    sheet: str = "physical"
    side: str = None

    @property
    def nu(self):
        return self.zeta - self.k / 2.0


def zeta_of_lambda(lam, k, sheet=None, side=None):
    """Exponent ``zeta`` with ``zeta (k - zeta) = lambda``.

    Parameters
    ----------
    lam : complex
    k : int
    sheet : {None, "physical", "continued"}
        ``None`` means physical but refuses points on the cut.
    side : {None, "below", "above"}
        One-sided limit ``lambda -/+ i0`` for points on the cut.

    Examples
    --------
    >>> zeta_of_lambda(0.0, 2).zeta
    (2+0j)
    """
    lam = complex(lam)
    w = lam - k * k / 4.0
    on_cut = w.imag == 0.0 and w.real > 0.0
    if on_cut and side is None:
        raise BranchCutError(
            f"lambda = {lam} lies on [k^2/4, inf); pass side='below' or 'above'"
        )
    if side not in (None, "below", "above"):
        raise ValueError(f"unknown side {side!r}")
    cut_side = 1 if side == "above" else -1
    nu = complex(nu_of_lambda(lam, k, 0.0, cut_side))
    sh = "physical" if sheet is None else sheet
    if sh == "continued":
        nu = -nu
    elif sh != "physical":
        raise ValueError(f"unknown sheet {sheet!r}")
    return FactorSpectralParam(lam=lam, zeta=k / 2.0 + nu, k=k, sheet=sh, side=side if on_cut else None)


def param_from_nu(nu, k):
    """Spectral parameter with prescribed ``nu = zeta - k/2``."""
    nu = complex(nu)
    return FactorSpectralParam(lam=k * k / 4.0 - nu * nu, zeta=k / 2.0 + nu, k=k,
                               sheet="physical" if nu.real >= 0 else "continued")


# ---------------------------------------------------------------------------
# log-stable hyperbolic functions
# ---------------------------------------------------------------------------

def log_sinh(delta):
    d = np.asarray(delta, dtype=float)
    return d + np.log(-np.expm1(-2.0 * d)) - math.log(2.0)


def log_coth(delta):
    d = np.asarray(delta, dtype=float)
    return np.log1p(np.exp(-2.0 * d)) - np.log(-np.expm1(-2.0 * d))


# ---------------------------------------------------------------------------
# even-k normal form
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def kernel_normal_form(k):
    """Terms ``{(p, a, b): coeff}`` of ``((1/sinh) d/ddelta)^m (csch e^{-nu delta})``.

    Each key stands for ``nu^p coth^a csch^b``; the common factor
    ``exp(-nu delta)`` is implicit. Uses ``d csch = -csch coth``,
    ``d coth = -csch^2`` and ``d e^{-nu delta} = -nu e^{-nu delta}``.
    """
    if k < 2 or k % 2:
        raise UnsupportedDimension(f"normal form exists for even k >= 2, got k={k}")
    terms = {(0, 0, 1): 1}
    for _ in range((k - 2) // 2):
        new = {}
        for (p, a, b), c in terms.items():
            for key, val in (((p, a - 1, b + 3), -a * c),
                             ((p, a + 1, b + 1), -b * c),
                             ((p + 1, a, b + 1), -c)):
                if val:
                    new[key] = new.get(key, 0) + val
        terms = {key: v for key, v in new.items() if v}
    return dict(sorted(terms.items()))


def _sphere_area(k):
    """Area of the unit k-sphere (boundary of the unit ball in R^(k+1))."""
    return 2.0 * math.pi ** ((k + 1) / 2.0) / math.gamma((k + 1) / 2.0)


@lru_cache(maxsize=None)
def kernel_constant(k):
    """Normalisation ``c_k`` of the kernel.

    Near the diagonal ``((1/sinh) d)^m (1/sinh)`` behaves like
    ``(-1)^m (2m-1)!! delta^(-(2m+1))``, which must match the flat Green's
    function ``1/((k-1) |S^k| delta^(k-1))``. For ``k = 1`` the constant
    multiplies the Legendre-type integral and equals ``1/(2 pi sqrt 2)``.
    """
    if k == 1:
        return 1.0 / (2.0 * math.pi * math.sqrt(2.0))
    if k % 2:
        raise UnsupportedDimension(f"no kernel implemented for odd k={k} >= 3")
    m = (k - 2) // 2
    dfact = 1
    for j in range(1, 2 * m, 2):
        dfact *= j
    return 1.0 / ((k - 1) * _sphere_area(k) * (-1) ** m * dfact)


def _grouped_form(k):
    """Normal form grouped by power of nu: ``{p: [(coeff, a, b), ...]}``."""
    out = {}
    for (p, a, b), c in kernel_normal_form(k).items():
        out.setdefault(p, []).append((c, a, b))
    return out


def _q_terms(k, delta):
    """``Q_p(delta) = sum coeff coth^a csch^b`` for each power ``p`` (ScaledComplex)."""
    lc = float(log_coth(delta))
    ls = float(log_sinh(delta))
    out = {}
    for p, lst in _grouped_form(k).items():
        la = np.array([math.log(abs(c)) + a * lc - b * ls for c, a, b in lst])
        ph = np.array([0.0 if c > 0 else math.pi for c, a, b in lst])
        out[p] = ScaledComplex(la, ph).sum()
    return out


def _check_delta(delta):
    delta = float(delta)
    if not delta > 0:
        raise DomainError(f"kernel needs delta > 0, got {delta}")
    return delta


def kernel_from_nu(nu, delta, k):
    """Resolvent kernel as a function of ``nu = zeta - k/2`` (vectorised in ``nu``).

    Parameters
    ----------
    nu : array_like of complex
    delta : float
        Hyperbolic distance, > 0.
    k : int
        Boundary dimension; even, or 1.

    Returns
    -------
    ScaledComplex
    """
    delta = _check_delta(delta)
    nu = np.asarray(nu, dtype=complex)
    if k == 1:
        return _kernel_k1(nu, delta)
    c = kernel_constant(k)
    q = _q_terms(k, delta)
    total = None
    for p, qp in q.items():
        if p == 0:
            term = qp * ScaledComplex(np.zeros(nu.shape))
        else:
            with np.errstate(divide="ignore"):
                term = qp * ScaledComplex(p * np.log(np.abs(nu)), p * np.angle(nu))
        total = term if total is None else total + term
    expo = ScaledComplex.from_log(-nu * delta)
    return total * expo * ScaledComplex.from_complex(c)


def _k1_integrand(u, beta, delta):
    # 2u exp(-beta u^2) / sqrt((1 - e^{-2 delta - u^2}) sinh(u^2/2)), beta = zeta - 1/4
    v = u * u
    if v < 1e-12:
        core = 2.0 * math.sqrt(2.0) / math.sqrt(-math.expm1(-2.0 * delta - v))
        return np.exp(-beta * v) * core
    log_den = 0.5 * (math.log(-math.expm1(-2.0 * delta - v)) + float(log_sinh(0.5 * v)))
    return 2.0 * u * np.exp(-beta * v - log_den)


def _k1_integral(zeta, delta):
    beta = complex(zeta) - 0.25
    if beta.real <= 0:
        raise DomainError("k=1 kernel integral needs Re zeta > 1/4")
    brk = [math.sqrt(delta)] if delta < 1.0 else []
    upper = math.sqrt(40.0 / beta.real) + 1.0
    opts = dict(epsabs=0.0, epsrel=1e-13, limit=400, points=brk or None)
    re = integrate.quad(lambda u: _k1_integrand(u, beta, delta).real, 0.0, upper, **opts)[0]
    im = integrate.quad(lambda u: _k1_integrand(u, beta, delta).imag, 0.0, upper, **opts)[0]
    tail_r = integrate.quad(lambda u: _k1_integrand(u, beta, delta).real, upper, np.inf)[0]
    tail_i = integrate.quad(lambda u: _k1_integrand(u, beta, delta).imag, upper, np.inf)[0]
    return complex(re + tail_r, im + tail_i)


def _kernel_k1(nu, delta):
    # K = c_1 e^{-zeta delta} * int_0^inf 2u e^{-(zeta-1/4)u^2} / sqrt((1-e^{-2delta-u^2}) sinh(u^2/2)) du
    c = kernel_constant(1)
    zetas = nu + 0.5
    vals = np.array([_k1_integral(zz, delta) for zz in np.ravel(zetas)], dtype=complex)
    vals = vals.reshape(zetas.shape)
    return ScaledComplex.from_complex(c * vals) * ScaledComplex.from_log(-zetas * delta)


def resolvent_kernel(param, delta):
    """Kernel ``K_zeta(delta)`` of ``(H - lambda)^(-1)``.

    Examples
    --------
    >>> val = resolvent_kernel(zeta_of_lambda(0.0, 2), 1.0).to_complex()
    >>> round(val.real, 7)
    0.0249106
    """
    return kernel_from_nu(param.nu, delta, param.k)


# ---------------------------------------------------------------------------
# oracles and derived objects
# ---------------------------------------------------------------------------

def radial_ode_residual(param, delta, h=None):
    """Normalised residual of ``u'' + k coth(delta) u' + lambda u = 0``.

    Derivatives are centred differences of ``u = K(delta)`` computed from
    ratios ``u(delta +- h)/u(delta)`` so extreme magnitudes are harmless.
    The residual is divided by ``|u''| + |k coth u'| + |lambda u|``; this
    stays meaningful at ``lambda = 0``.
    """
    delta = float(delta)
    if h is None:
        h = 1e-4 * min(1.0, delta)
    if not delta > 2 * h > 0:
        raise DomainError("need delta > 2h > 0")
    u0 = resolvent_kernel(param, delta)
    up = resolvent_kernel(param, delta + h)
    um = resolvent_kernel(param, delta - h)
    rp = np.exp(complex((up.log - u0.log)))
    rm = np.exp(complex((um.log - u0.log)))
    d2 = (rp - 2.0 + rm) / (h * h)
    d1 = (rp - rm) / (2.0 * h)
    coth = 1.0 / math.tanh(delta)
    lam = param.lam
    num = abs(d2 + param.k * coth * d1 + lam)
    den = abs(d2) + abs(param.k * coth * d1) + abs(lam)
    return num / den


def heat_kernel(k, t, delta):
    """Heat kernel of the 3-dimensional hyperbolic space (k = 2 only).

    ``p_t(delta) = (4 pi t)^(-3/2) (delta/sinh delta) exp(-t - delta^2/(4t))``.
    """
    if k != 2:
        raise UnsupportedDimension("closed-form heat kernel only for k = 2")
    t = float(t)
    delta = float(delta)
    if not t > 0:
        raise DomainError("t must be positive")
    if delta < 0:
        raise DomainError("delta must be non-negative")
    ratio = 0.0 if delta == 0.0 else math.log(delta) - float(log_sinh(delta))
    la = -1.5 * math.log(4 * math.pi * t) + ratio - t - delta * delta / (4 * t)
    return ScaledComplex(la, 0.0)


def _log_poisson_base(z, yb):
    """log of ``x/(x^2 + |y - y'|^2)`` (carried in logs)."""
    yb = np.atleast_1d(np.asarray(yb, dtype=float))
    if yb.size != z.k:
        raise DomainError(f"boundary point has {yb.size} coordinates, expected {z.k}")
    dy = z.y_array - yb
    ldy = 2.0 * math.log(math.hypot(*dy.tolist())) if np.any(dy) else -math.inf
    return z.logx - float(np.logaddexp(2.0 * z.logx, ldy))


@lru_cache(maxsize=None)
def _poisson_leading(k):
    """Terms of the normal form with the smallest power of csch."""
    form = kernel_normal_form(k)
    bmin = min(b for (_, _, b) in form)
    return bmin, tuple((p, c) for (p, a, b), c in form.items() if b == bmin)


def poisson_from_nu(nu, k, log_base):
    """Poisson kernel given ``nu`` and ``log(x/(x^2+|y-y'|^2))`` (vectorised in nu)."""
    nu = np.asarray(nu, dtype=complex)
    zeta = nu + k / 2.0
    if k == 1:
        lg = special.loggamma(zeta) - special.loggamma(zeta + 0.5) - math.log(2.0 * math.sqrt(math.pi))
        return ScaledComplex.from_log(lg + zeta * log_base)
    bmin, lead = _poisson_leading(k)
    poly = sum(c * nu ** p for p, c in lead)
    pref = kernel_constant(k) * 2.0 ** bmin * poly
    return ScaledComplex.from_complex(pref) * ScaledComplex.from_log(zeta * log_base)


def poisson_kernel(param, z, yb):
    """Boundary limit ``lim_{x'->0} x'^(-zeta) K(z, (x', y'))``.

    For ``k = 2`` this is ``(1/2pi) (x/(x^2+|y-y'|^2))^zeta``; for ``k = 1``
    the constant is ``Gamma(zeta)/(2 sqrt(pi) Gamma(zeta+1/2))``.
    """
    if not isinstance(z, HyperbolicPoint):
        raise DomainError("poisson_kernel needs an interior HyperbolicPoint")
    return poisson_from_nu(param.nu, param.k, _log_poisson_base(z, yb))


def spherical_from_delta(k, delta):
    """``d/dtau`` at 0 of ``K(k^2/4 + tau^2)``, approached from ``lambda - i0``."""
    delta = _check_delta(delta)
    if k == 1:
        # -i c_1 int_delta^inf omega (cosh omega - cosh delta)^(-1/2) d omega, omega = delta + u^2
        def f(u):
            v = u * u
            if v < 1e-12:
                return 2.0 * (delta + v) / math.sqrt(math.sinh(delta))
            log_den = 0.5 * (math.log(2.0) + float(log_sinh(delta + 0.5 * v)) + float(log_sinh(0.5 * v)))
            return 2.0 * u * (delta + v) * math.exp(-log_den)
        val = integrate.quad(f, 0.0, np.inf, epsabs=0.0, epsrel=1e-12, limit=400)[0]
        return ScaledComplex.from_complex(-1j * kernel_constant(1) * val)
    q = _q_terms(k, delta)
    zero = ScaledComplex(-np.inf, 0.0)
    inner = q.get(1, zero) - q.get(0, zero) * ScaledComplex.from_complex(delta)
    return inner * ScaledComplex.from_complex(1j * kernel_constant(k))


def spherical_function(k, z, w):
    """Spherical function at the bottom of the continuous spectrum.

    For ``k = 2`` equals ``-i delta / (4 pi sinh delta)``.
    """
    delta = point_pair_delta(z, w)
    if delta == 0.0:
        raise DomainError("spherical function is singular at z = w")
    return spherical_from_delta(k, delta)
