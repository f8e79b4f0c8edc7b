"""Independent oracles built from the closed-form heat kernel on the 3-dimensional hyperbolic space."""

import math

import numpy as np
from scipy import integrate

from .errors import DomainError
from .geometry import HyperbolicPoint, ProductPoint
from .hyperbolic import heat_kernel

__all__ = ["heat_laplace_kernel", "heat_laplace_product", "points_at_distance"]


def _laplace_log_t(log_f, mu, rate):
    """``int_0^inf exp(mu t + log_f(t)) dt`` with ``t = e^u``; ``rate`` bounds the decay of ``f``."""
    mu = complex(mu)
    decay = rate - mu.real
    if not decay > 0:
        raise DomainError("Laplace transform diverges: need Re mu below the bottom of the spectrum")
    hi = math.log(60.0 / decay + 60.0)

    def g(u):
        t = math.exp(u)
        return np.exp(mu * t + log_f(t) + u)

    # the phase e^{i Im(mu) t} is resolved by splitting at its periods
    n_osc = int(abs(mu.imag) * math.exp(hi) / math.pi) + 1
    t_breaks = np.linspace(0.0, math.exp(hi), n_osc + 1)[1:]
    edges = [-60.0] + [math.log(t) for t in t_breaks if t > 1e-12]
    edges = sorted(set(edges + [math.log(0.5), hi]))
    total = 0.0 + 0.0j
    # full_output keeps quad from warning (thread-safely) about round-off on
    # panels far below the total
    opts = dict(epsabs=0.0, epsrel=1e-13, limit=400, full_output=1)
    for a, b in zip(edges[:-1], edges[1:]):
        re = integrate.quad(lambda u: g(u).real, a, b, **opts)[0]
        im = integrate.quad(lambda u: g(u).imag, a, b, **opts)[0] if mu.imag != 0.0 else 0.0
        total += re + 1j * im
    return total


def heat_laplace_kernel(lam, delta):
    """``int_0^inf e^{lam t} p_t(delta) dt`` for ``k = 2`` (equals the resolvent kernel at ``lam``)."""
    delta = float(delta)
    return _laplace_log_t(lambda t: heat_kernel(2, t, delta).logabs, lam, 1.0)


def heat_laplace_product(mu, delta1, delta2):
    """``int_0^inf e^{mu t} p_t(delta1) p_t(delta2) dt`` for two 3-dimensional factors."""
    d1, d2 = float(delta1), float(delta2)
    return _laplace_log_t(lambda t: heat_kernel(2, t, d1).logabs + heat_kernel(2, t, d2).logabs, mu, 2.0)


def points_at_distance(delta1, delta2, k1=2, k2=2):
    """Pair ``(z, w)`` of product points whose factor distances are ``delta1`` and ``delta2``."""
    z = ProductPoint(HyperbolicPoint(1.0, np.zeros(k1)), HyperbolicPoint(1.0, np.zeros(k2)))
    w = ProductPoint(HyperbolicPoint.from_log(float(delta1), np.zeros(k1)),
                     HyperbolicPoint.from_log(float(delta2), np.zeros(k2)))
    return z, w
