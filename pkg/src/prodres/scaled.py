"""Extended-range complex numbers stored as (log|z|, arg z).

Kernels at large hyperbolic distance underflow double precision long
before they become uninteresting, so every kernel in the package returns
a :class:`ScaledComplex`. Arrays are supported elementwise; scalars are
0-d arrays.
"""

import numpy as np

__all__ = ["ScaledComplex", "log_add", "rel_diff"]

_TWO_PI = 2.0 * np.pi
_LOG10E = np.log10(np.e)


def _wrap(phase):
    """Map phases into (-pi, pi]."""
    p = np.asarray(phase, dtype=float)
    out = np.mod(p + np.pi, _TWO_PI) - np.pi
    # mod sends +pi to -pi; keep the closed end at +pi
    return np.where(out <= -np.pi, np.pi, out)


class ScaledComplex:
    """Complex value ``exp(logabs + 1j * phase)``.

    Zero is represented by ``logabs = -inf`` and phase 0.

    Parameters
    ----------
    logabs : array_like
        Natural log of the modulus.
    phase : array_like
        Argument in radians, wrapped into (-pi, pi].
    """

    __slots__ = ("logabs", "phase")
    __array_priority__ = 1000

    def __init__(self, logabs, phase=0.0):
        la = np.asarray(logabs, dtype=float)
        ph = np.asarray(phase, dtype=float)
        la, ph = np.broadcast_arrays(la, ph)
        ph = np.where(np.isneginf(la), 0.0, _wrap(ph))
        self.logabs = np.array(la, dtype=float)
        self.phase = np.array(ph, dtype=float)

    # -- construction ---------------------------------------------------
    @classmethod
    def from_complex(cls, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore"):
            la = np.log(np.abs(z))
        return cls(la, np.angle(z))

    @classmethod
    def from_log(cls, logz):
        """Build from a complex logarithm ``log z`` (any branch)."""
        logz = np.asarray(logz, dtype=complex)
        return cls(logz.real, logz.imag)

    @classmethod
    def zeros(cls, shape=()):
        return cls(np.full(shape, -np.inf), np.zeros(shape))

    @classmethod
    def coerce(cls, value):
        if isinstance(value, ScaledComplex):
            return value
        return cls.from_complex(value)

    # -- views ----------------------------------------------------------
    @property
    def shape(self):
        return self.logabs.shape

    def __len__(self):
        return len(self.logabs)

    def __getitem__(self, idx):
        return ScaledComplex(self.logabs[idx], self.phase[idx])

    @property
    def log(self):
        """Principal complex logarithm."""
        return self.logabs + 1j * self.phase

    @property
    def log10_abs(self):
        return self.logabs * _LOG10E

    def to_complex(self):
        """Convert to ordinary complex numbers (may under/overflow)."""
        with np.errstate(over="ignore", under="ignore"):
            return np.exp(self.logabs) * np.exp(1j * self.phase)

    def scaled(self, shift):
        """Return ``self * exp(-shift)`` as plain complex."""
        with np.errstate(over="ignore", under="ignore"):
            return np.exp(self.logabs - shift) * np.exp(1j * self.phase)

    def is_zero(self):
        return np.isneginf(self.logabs)

    # -- arithmetic -----------------------------------------------------
    def __mul__(self, other):
        o = ScaledComplex.coerce(other)
        return ScaledComplex(self.logabs + o.logabs, self.phase + o.phase)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = ScaledComplex.coerce(other)
        if np.any(o.is_zero()):
            raise ZeroDivisionError("division by a ScaledComplex zero")
        return ScaledComplex(self.logabs - o.logabs, self.phase - o.phase)

    def __rtruediv__(self, other):
        return ScaledComplex.coerce(other) / self

    def __neg__(self):
        return ScaledComplex(self.logabs, self.phase + np.pi)

    def conj(self):
        return ScaledComplex(self.logabs, -self.phase)

    def __add__(self, other):
        o = ScaledComplex.coerce(other)
        la, lb = np.broadcast_arrays(self.logabs, o.logabs)
        pa, pb = np.broadcast_arrays(self.phase, o.phase)
        m = np.maximum(la, lb)
        finite = np.isfinite(m)
        m0 = np.where(finite, m, 0.0)
        with np.errstate(under="ignore", invalid="ignore"):
            s = np.exp(la - m0) * np.exp(1j * pa) + np.exp(lb - m0) * np.exp(1j * pb)
        with np.errstate(divide="ignore"):
            logs = np.log(np.abs(s))
        logabs = np.where(finite, m0 + logs, m)
        return ScaledComplex(logabs, np.where(finite, np.angle(s), 0.0))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-ScaledComplex.coerce(other))

    def __rsub__(self, other):
        return ScaledComplex.coerce(other) + (-self)

    def __pow__(self, exponent):
        """Power through the principal log, ``exp(exponent * log z)``."""
        e = np.asarray(exponent, dtype=complex)
        return ScaledComplex.from_log(e * self.log)

    def sum(self, axis=None):
        """Sum in a fixed left-to-right order after a common rescale."""
        la = self.logabs
        m = np.max(la, axis=axis, keepdims=True)
        finite = np.isfinite(m)
        m0 = np.where(finite, m, 0.0)
        with np.errstate(under="ignore", invalid="ignore"):
            s = np.sum(np.exp(la - m0) * np.exp(1j * self.phase), axis=axis, keepdims=True)
        with np.errstate(divide="ignore"):
            out_la = np.where(finite, m0 + np.log(np.abs(s)), m)
        out_ph = np.where(finite, np.angle(s), 0.0)
        if axis is None:
            return ScaledComplex(out_la.reshape(()), out_ph.reshape(()))
        return ScaledComplex(np.squeeze(out_la, axis=axis), np.squeeze(out_ph, axis=axis))

    def __repr__(self):
        return f"ScaledComplex(logabs={self.logabs!r}, phase={self.phase!r})"


def log_add(a, b):
    """log(exp(a) + exp(b)) for real log-magnitudes, tolerating -inf."""
    return np.logaddexp(a, b)


def rel_diff(a, b):
    """Relative difference ``|a - b| / |b|`` computed without leaving log space.

    Returns a float array.
    """
    a = ScaledComplex.coerce(a)
    b = ScaledComplex.coerce(b)
    d = a - b
    with np.errstate(over="ignore", under="ignore"):
        return np.exp(d.logabs - b.logabs)
