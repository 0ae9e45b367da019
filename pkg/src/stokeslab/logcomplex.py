"""Complex numbers stored by their logarithm, for values of size e^{O(n)}."""

import cmath
import math
from dataclasses import dataclass

import mpmath


def _wrap(x):
    """Reduce the imaginary part of a log to (-pi, pi]."""
    im = math.remainder(x.imag, 2 * math.pi)
    if im <= -math.pi:
        im += 2 * math.pi
    return complex(x.real, im)


@dataclass(frozen=True)
class LogComplex:
    """value = exp(log_value); ``zero_flag`` marks an exact zero."""

    log_value: complex = 0j
    zero_flag: bool = False

    @classmethod
    def zero(cls):
        return cls(complex(-math.inf, 0.0), True)

    @classmethod
    def from_complex(cls, z):
        z = complex(z)
        if z == 0:
            return cls.zero()
        return cls(cmath.log(z))

    @classmethod
    def from_mp(cls, z):
        """From an mpmath number, without overflow at any magnitude."""
        z = mpmath.mpc(z)
        if z == 0:
            return cls.zero()
        return cls(complex(mpmath.log(z)))

    @classmethod
    def from_log(cls, log_value):
        return cls(_wrap(complex(log_value)))

    @property
    def log_abs(self):
        return -math.inf if self.zero_flag else self.log_value.real

    @property
    def arg(self):
        return 0.0 if self.zero_flag else self.log_value.imag

    def value(self):
        """The complex value; overflows to inf/0 outside double range."""
        if self.zero_flag:
            return 0j
        re = self.log_value.real
        if re > 709.0:
            return complex(math.inf, 0.0)
        return cmath.exp(self.log_value)

    __complex__ = value

    def to_mp(self):
        if self.zero_flag:
            return mpmath.mpc(0)
        return mpmath.exp(mpmath.mpc(self.log_value))

    def __mul__(self, other):
        other = _coerce(other)
        if self.zero_flag or other.zero_flag:
            return LogComplex.zero()
        return LogComplex.from_log(self.log_value + other.log_value)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if other.zero_flag:
            raise ZeroDivisionError("division by LogComplex zero")
        if self.zero_flag:
            return LogComplex.zero()
        return LogComplex.from_log(self.log_value - other.log_value)

    def __rtruediv__(self, other):
        return _coerce(other) / self

    def __neg__(self):
        if self.zero_flag:
            return self
        return LogComplex.from_log(self.log_value + 1j * math.pi)

    def __add__(self, other):
        other = _coerce(other)
        if self.zero_flag:
            return other
        if other.zero_flag:
            return self
        big, small = (self, other) if self.log_abs >= other.log_abs else (other, self)
        ratio = cmath.exp(small.log_value - big.log_value)
        s = 1.0 + ratio
        if s == 0:
            return LogComplex.zero()
        return LogComplex.from_log(big.log_value + cmath.log(s))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) + (-self)

    def __pow__(self, k):
        if self.zero_flag:
            return LogComplex.zero() if k > 0 else LogComplex.from_complex(1.0)
        return LogComplex.from_log(self.log_value * k)

    def conjugate(self):
        if self.zero_flag:
            return self
        return LogComplex(self.log_value.conjugate())

    def rel_diff(self, other):
        """|self - other| / |other| computed without leaving log space."""
        other = _coerce(other)
        if other.zero_flag:
            return 0.0 if self.zero_flag else math.inf
        if self.zero_flag:
            return 1.0
        return abs(cmath.exp(self.log_value - other.log_value) - 1.0)

    def __repr__(self):
        if self.zero_flag:
            return "LogComplex(0)"
        return f"LogComplex(exp({self.log_value!r}))"


def _coerce(x):
    if isinstance(x, LogComplex):
        return x
    if isinstance(x, (mpmath.mpc, mpmath.mpf)):
        return LogComplex.from_mp(x)
    return LogComplex.from_complex(x)
