"""Spherical Bessel and Hankel functions of complex argument.

Values are returned as :class:`ScaledFnValue` so that high orders never
overflow or underflow: ``j_n(t)`` behaves like ``t**n / (2n+1)!!`` and
``h_n(t)`` like ``(2n-1)!! / (i t**(n+1))`` for small ``t``, which leave the
double range well before ``n = 256``, while the products that enter the
layer-potential coefficients stay moderate.

Evaluation strategy
-------------------
* ``j_n``: backward ratio recurrence (Miller) normalized by ``j_0`` or ``j_1``.
* ``h_n``: forward ratio recurrence from the closed forms of ``h_0, h_1``.
"""
import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .errors import NonFiniteInput, NonFiniteResult, OrderTooLarge, ZeroArgument

__all__ = [
    "N_MAX",
    "ScaledFnValue",
    "sph_bessel_j",
    "sph_hankel1",
    "sph_deriv",
    "acute",
    "grave_remainder",
    "grave_remainder_deriv",
    "wronskian_residual",
    "log_double_factorial",
    "jn_sequence",
    "hn_sequence",
]

N_MAX = 256
_LN2 = math.log(2.0)
# above this |Im z| the trigonometric closed forms are evaluated in log form
_TRIG_LOG_SWITCH = 300.0


@dataclass(frozen=True)
class ScaledFnValue:
    """Complex number stored as ``mantissa * exp(log_scale)``.

    ``log_scale`` is always an integer multiple of ``ln 2`` so that
    recombination is exact, and ``0.5 <= |mantissa| < 1`` unless the value
    is zero (then ``mantissa == 0`` and ``log_scale == 0``).
    """

    mantissa: complex
    log_scale: float

    @staticmethod
    def from_parts(mant, exp2=0):
        """Normalize ``mant * 2**exp2``."""
        mant = complex(mant)
        if not (math.isfinite(mant.real) and math.isfinite(mant.imag)):
            raise NonFiniteResult("non-finite mantissa")
        a = abs(mant)
        if a == 0.0:
            return ScaledFnValue(0j, 0.0)
        _, e = math.frexp(a)
        mant = complex(math.ldexp(mant.real, -e), math.ldexp(mant.imag, -e))
        return ScaledFnValue(mant, (int(exp2) + e) * _LN2)

    @staticmethod
    def from_complex(z):
        return ScaledFnValue.from_parts(z, 0)

    @property
    def exp2(self):
        return int(round(self.log_scale / _LN2))

    @property
    def is_zero(self):
        return self.mantissa == 0

    def log_abs(self):
        """Natural log of the modulus (``-inf`` for zero)."""
        if self.is_zero:
            return -math.inf
        return math.log(abs(self.mantissa)) + self.log_scale

    def to_complex(self):
        """Recombine into a plain complex; raises if it overflows."""
        e = self.exp2
        re = math.ldexp(self.mantissa.real, e) if self.mantissa.real else 0.0
        im = math.ldexp(self.mantissa.imag, e) if self.mantissa.imag else 0.0
        if not (math.isfinite(re) and math.isfinite(im)):
            raise NonFiniteResult("value overflows double precision")
        return complex(re, im)

    def __complex__(self):
        return self.to_complex()

    def _coerce(self, other):
        if isinstance(other, ScaledFnValue):
            return other
        return ScaledFnValue.from_complex(other)

    def __mul__(self, other):
        other = self._coerce(other)
        return ScaledFnValue.from_parts(self.mantissa * other.mantissa,
                                        self.exp2 + other.exp2)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other.is_zero:
            raise ZeroDivisionError("division by zero ScaledFnValue")
        return ScaledFnValue.from_parts(self.mantissa / other.mantissa,
                                        self.exp2 - other.exp2)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __neg__(self):
        return ScaledFnValue(-self.mantissa, self.log_scale)

    def conjugate(self):
        return ScaledFnValue(self.mantissa.conjugate(), self.log_scale)

    def __add__(self, other):
        other = self._coerce(other)
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        e = max(self.exp2, other.exp2)
        s = (_ldexp_c(self.mantissa, self.exp2 - e)
             + _ldexp_c(other.mantissa, other.exp2 - e))
        return ScaledFnValue.from_parts(s, e)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __pow__(self, p):
        if not isinstance(p, int) or p < 0:
            raise ValueError("only non-negative integer powers are supported")
        out = ScaledFnValue(0.5 + 0j, _LN2)
        base = self
        while p:
            if p & 1:
                out = out * base
            base = base * base
            p >>= 1
        return out


def _ldexp_c(z, e):
    return complex(math.ldexp(z.real, e), math.ldexp(z.imag, e))


def _as_complex(z):
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise NonFiniteInput(f"non-finite argument {z!r}")
    return z


def _check_order(n, nmax):
    if int(n) != n or n < 0:
        raise ValueError(f"order must be a non-negative integer, got {n!r}")
    if n > nmax:
        raise OrderTooLarge(f"order {n} exceeds n_max={nmax}")


def log_double_factorial(k):
    """``log(k!!)`` for odd ``k >= -1``."""
    if k <= 0:
        return 0.0
    m = (k + 1) // 2  # k = 2m - 1
    return m * _LN2 + float(gammaln(m + 0.5)) - 0.5 * math.log(math.pi)


def _scaled_exp(w):
    """exp(w) for complex w as ScaledFnValue."""
    e2 = int(math.floor(w.real / _LN2))
    return ScaledFnValue.from_parts(cmath.exp(complex(w.real - e2 * _LN2, w.imag)), e2)


def _sin_cos(z):
    """Scaled ``sin z`` and ``cos z``."""
    if abs(z.imag) < _TRIG_LOG_SWITCH:
        return (ScaledFnValue.from_complex(cmath.sin(z)),
                ScaledFnValue.from_complex(cmath.cos(z)))
    # one exponential dominates completely
    if z.imag > 0:
        big = _scaled_exp(-1j * z)  # e^{-iz}
        return big * 0.5j, big * 0.5
    big = _scaled_exp(1j * z)
    return big * -0.5j, big * 0.5


@lru_cache(maxsize=4096)
def _jn_cached(nmax, z):
    if z == 0:
        mant = np.zeros(nmax + 1, dtype=complex)
        mant[0] = 0.5
        exps = np.zeros(nmax + 1, dtype=np.int64)
        exps[0] = 1
        return mant, exps
    # backward ratios r_k = j_k / j_{k-1}
    start = nmax + int(abs(z)) + 40
    r = np.empty(start + 2, dtype=complex)
    r[start + 1] = 0.0
    for k in range(start, 0, -1):
        r[k] = z / ((2 * k + 1) - z * r[k + 1])
    s, c = _sin_cos(z)
    j0 = s / z
    j1 = (s / z - c) / z
    use_j1 = abs(z) > 0.5 and j1.log_abs() > j0.log_abs()
    mant = np.empty(nmax + 1, dtype=complex)
    exps = np.empty(nmax + 1, dtype=np.int64)
    if use_j1:
        # sin z is small here, so higher orders are normalized by j_1
        cur = j1
        mant[0], exps[0] = j0.mantissa, j0.exp2
        if nmax >= 1:
            mant[1], exps[1] = cur.mantissa, cur.exp2
        k0 = 2
    else:
        cur = j0
        mant[0], exps[0] = cur.mantissa, cur.exp2
        k0 = 1
    m, e = cur.mantissa, cur.exp2
    for k in range(k0, nmax + 1):
        m = m * r[k]
        fm, fe = math.frexp(abs(m)) if m != 0 else (0.0, 0)
        if m != 0:
            m = complex(math.ldexp(m.real, -fe), math.ldexp(m.imag, -fe))
            e += fe
        mant[k], exps[k] = m, e
    mant.setflags(write=False)
    exps.setflags(write=False)
    return mant, exps


@lru_cache(maxsize=4096)
def _hn_cached(nmax, z):
    if z.imag < 0:
        return _hn_lower(nmax, z)
    return _hn_upward(nmax, z)


@lru_cache(maxsize=4096)
def _hn_lower(nmax, z):
    # upward recurrence is unstable below the real axis; reflect instead:
    # h_n(z) = 2 j_n(z) - conj(h_n(conj z))
    jm, je = _jn_cached(nmax, z)
    hm, he = _hn_upward(nmax, z.conjugate())
    mant = np.empty(nmax + 1, dtype=complex)
    exps = np.empty(nmax + 1, dtype=np.int64)
    for k in range(nmax + 1):
        v = (ScaledFnValue.from_parts(2 * jm[k], int(je[k]))
             - ScaledFnValue.from_parts(hm[k].conjugate(), int(he[k])))
        mant[k], exps[k] = v.mantissa, v.exp2
    mant.setflags(write=False)
    exps.setflags(write=False)
    return mant, exps


@lru_cache(maxsize=4096)
def _hn_upward(nmax, z):
    # h_0 = -i e^{iz} / z
    h0 = _scaled_exp(1j * z) * (-1j) / z
    mant = np.empty(nmax + 1, dtype=complex)
    exps = np.empty(nmax + 1, dtype=np.int64)
    mant[0], exps[0] = h0.mantissa, h0.exp2
    m, e = h0.mantissa, h0.exp2
    s = None
    for k in range(1, nmax + 1):
        s = (-1j + 1.0 / z) if k == 1 else (2 * k - 1) / z - 1.0 / s
        m = m * s
        fm, fe = math.frexp(abs(m))
        m = complex(math.ldexp(m.real, -fe), math.ldexp(m.imag, -fe))
        e += fe
        mant[k], exps[k] = m, e
    mant.setflags(write=False)
    exps.setflags(write=False)
    return mant, exps


def _seq_size(n):
    # round up so that the cache is shared between nearby orders
    return max(8, int(math.ceil((n + 1) / 8.0)) * 8)


def jn_sequence(nmax, z):
    """Scaled ``j_0..j_nmax`` at ``z`` as ``(mantissas, exp2)`` arrays."""
    z = _as_complex(z)
    _check_order(nmax, N_MAX + 2)
    mant, exps = _jn_cached(_seq_size(nmax), z)
    return mant[: nmax + 1], exps[: nmax + 1]


def hn_sequence(nmax, z):
    """Scaled ``h_0..h_nmax`` at ``z`` as ``(mantissas, exp2)`` arrays."""
    z = _as_complex(z)
    if z == 0:
        raise ZeroArgument("h_n is singular at z = 0")
    _check_order(nmax, N_MAX + 2)
    mant, exps = _hn_cached(_seq_size(nmax), z)
    return mant[: nmax + 1], exps[: nmax + 1]


def _pick(seq, n):
    mant, exps = seq
    return ScaledFnValue.from_parts(mant[n], int(exps[n]))


def sph_bessel_j(n, z, n_max=N_MAX):
    """Spherical Bessel function ``j_n(z)``.

    Parameters
    ----------
    n : int
        Order, ``0 <= n <= n_max``.
    z : complex
        Argument.

    Returns
    -------
    ScaledFnValue
    """
    _check_order(n, n_max)
    z = _as_complex(z)
    return _pick(jn_sequence(n, z), n)


def sph_hankel1(n, z, n_max=N_MAX):
    """Spherical Hankel function of the first kind ``h_n(z) = j_n + i y_n``."""
    _check_order(n, n_max)
    z = _as_complex(z)
    if z == 0:
        raise ZeroArgument("h_n is singular at z = 0")
    return _pick(hn_sequence(n, z), n)


def _parent(kind, n, z, n_max):
    kind = kind.upper()
    if kind == "J":
        return jn_sequence(n + 1, z) if n == 0 else jn_sequence(n, z)
    if kind == "H":
        if z == 0:
            raise ZeroArgument("h_n is singular at z = 0")
        return hn_sequence(n + 1, z) if n == 0 else hn_sequence(n, z)
    raise ValueError(f"kind must be 'J' or 'H', got {kind!r}")


def sph_deriv(kind, n, z, n_max=N_MAX):
    """Derivative ``f_n'(z)`` via ``f_{n-1} - (n+1)/z f_n`` (``-f_1`` for n=0)."""
    _check_order(n, n_max)
    z = _as_complex(z)
    seq = _parent(kind, n, z, n_max)
    if n == 0:
        return -_pick(seq, 1)
    if z == 0:
        # only j reaches here; j_n'(0) = 1/3 for n = 1, else 0
        return ScaledFnValue.from_complex(1.0 / 3.0 if n == 1 else 0.0)
    return _pick(seq, n - 1) - _pick(seq, n) * ((n + 1) / z)


def acute(kind, n, z, n_max=N_MAX):
    """``z f_n'(z) - f_n(z)``, evaluated as ``z f_{n-1} - (n+2) f_n``."""
    _check_order(n, n_max)
    z = _as_complex(z)
    seq = _parent(kind, n, z, n_max)
    if n == 0:
        return -(_pick(seq, 1) * z) - _pick(seq, 0)
    return _pick(seq, n - 1) * z - _pick(seq, n) * (n + 2)


def _log_power(t, p):
    """t**p as ScaledFnValue for complex t and integer p."""
    return _scaled_exp(p * cmath.log(t))


def _leading(kind, n, t, derivative):
    """Leading small-argument term of ``f_n`` (or ``f_n'``) in scaled form."""
    if kind == "J":
        ld = log_double_factorial(2 * n + 1)
        if derivative:
            return _log_power(t, n - 1) * n * _scaled_exp(complex(-ld))
        return _log_power(t, n) * _scaled_exp(complex(-ld))
    ld = log_double_factorial(2 * n - 1)
    if derivative:
        return _scaled_exp(complex(ld)) * (-(n + 1)) / (_log_power(t, n + 2) * 1j)
    return _scaled_exp(complex(ld)) / (_log_power(t, n + 1) * 1j)


def grave_remainder(kind, n, t, n_max=N_MAX):
    """Relative remainder of the leading small-argument law.

    ``j_n(t) = t**n/(2n+1)!! (1 + jg)`` and
    ``h_n(t) = (2n-1)!!/(i t**(n+1)) (1 + hg)``; returns ``jg`` or ``hg``.
    """
    kind = kind.upper()
    t = _as_complex(t)
    if t == 0:
        raise ZeroArgument("remainder undefined at t = 0")
    if n < 1:
        raise ValueError("remainder defined for n >= 1")
    f = sph_bessel_j(n, t, n_max) if kind == "J" else sph_hankel1(n, t, n_max)
    return (f / _leading(kind, n, t, False)).to_complex() - 1.0


def grave_remainder_deriv(kind, n, t, n_max=N_MAX):
    """Remainder of the derivative laws.

    ``j_n'(t) = n t**(n-1)/(2n+1)!! (1 + jg')`` and
    ``h_n'(t) = -(n+1)(2n-1)!!/(i t**(n+2)) (1 + hg')``.
    """
    kind = kind.upper()
    t = _as_complex(t)
    if t == 0:
        raise ZeroArgument("remainder undefined at t = 0")
    if n < 1:
        raise ValueError("remainder defined for n >= 1")
    d = sph_deriv(kind, n, t, n_max)
    return (d / _leading(kind, n, t, True)).to_complex() - 1.0


def wronskian_residual(n, t):
    """Relative residual of ``j_n h_n' - j_n' h_n = i/t**2``."""
    t = float(t)
    if not t > 0:
        raise ValueError("t must be positive")
    w = (sph_bessel_j(n, t) * sph_deriv("H", n, t)
         - sph_deriv("J", n, t) * sph_hankel1(n, t))
    return abs((w * (t * t)).to_complex() - 1j)
