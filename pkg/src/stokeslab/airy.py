"""Complex Airy function Ai and its derivative.

Maclaurin series (evaluated in extended precision, since the two series
cancel by up to e^{2|zeta|}) for |t| <= 6.  Outside, the optimally truncated
exponential expansion plus the recessive one switched on across the Stokes
line arg t = 2 pi/3 with Berry's error-function multiplier; Im t < 0 follows
from Ai(conj t) = conj Ai(t).
"""

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath

SEAM = 6.0
SERIES_DIGITS = 35


@dataclass(frozen=True)
class AiryValue:
    ai: complex
    ai_prime: complex
    method: str
    bi: complex = None
    bi_prime: complex = None


@lru_cache(maxsize=None)
def _constants(dps):
    with mpmath.workdps(dps):
        c1 = mpmath.mpf(3) ** (mpmath.mpf(-2) / 3) / mpmath.gamma(mpmath.mpf(2) / 3)
        c2 = mpmath.mpf(3) ** (mpmath.mpf(-1) / 3) / mpmath.gamma(mpmath.mpf(1) / 3)
        return c1, c2


def _series(t, dps=SERIES_DIGITS):
    with mpmath.workdps(dps):
        t = mpmath.mpc(t)
        t3 = t ** 3
        # f = sum a_k t^{3k}, g = sum b_k t^{3k+1}
        f, fp = mpmath.mpc(1), mpmath.mpc(0)
        g, gp = t, mpmath.mpc(1)
        a = mpmath.mpc(1)  # a_k t^{3k}
        b = t  # b_k t^{3k+1}
        eps = mpmath.mpf(10) ** (-dps)
        k = 0
        while True:
            a = a * t3 / ((3 * k + 2) * (3 * k + 3))
            b = b * t3 / ((3 * k + 3) * (3 * k + 4))
            k += 1
            f += a
            g += b
            if t != 0:
                fp += 3 * k * a / t
            gp += (3 * k + 1) * b / t if t != 0 else 0
            if abs(a) <= eps * abs(f) and abs(b) <= eps * (abs(g) + 1) or k > 400:
                break
        c1, c2 = _constants(dps)
        s3 = mpmath.sqrt(3)
        ai = c1 * f - c2 * g
        aip = c1 * fp - c2 * gp
        bi = s3 * (c1 * f + c2 * g)
        bip = s3 * (c1 * fp + c2 * gp)
        return complex(ai), complex(aip), complex(bi), complex(bip)


def _asymptotic_upper(t):
    """Ai, Ai' for |t| > 6 with Im t >= 0."""
    zeta = (2.0 / 3.0) * t ** 1.5
    q = t ** 0.25
    us, vs = [1.0], [1.0]
    su, sv = 1.0 + 0j, 1.0 + 0j
    u = 1.0
    prev = math.inf
    zk = 1.0 + 0j
    for k in range(1, 200):
        u = u * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k)
        v = -(6 * k + 1) / (6 * k - 1) * u
        zk = zk * (-zeta)
        term = u / zk
        if abs(term) > prev or abs(term) < 1e-17 * abs(su):
            break
        prev = abs(term)
        us.append(u)
        vs.append(v)
        su += term
        sv += v / zk
    norm = 2.0 * math.sqrt(math.pi)
    e = cmath.exp(-zeta) / norm
    ai, aip = e / q * su, -q * e * sv
    # singulant F = -2 zeta; the recessive series matters once Re F > 0
    F = -2.0 * zeta
    if F.real > 0:
        mult = 0.5 * math.erfc(-F.imag / math.sqrt(2.0 * F.real))
        if mult > 1e-30:
            inv = 1.0 / zeta
            ru = sum(c * inv ** k for k, c in enumerate(us))
            rv = sum(c * inv ** k for k, c in enumerate(vs))
            ep = cmath.exp(zeta) / norm
            ai += 1j * mult * ep / q * ru
            aip += 1j * mult * q * ep * rv
    return ai, aip


def _asymptotic(t):
    if t.imag == 0:
        t = complex(t.real, 0.0)
    if t.imag < 0:
        ai, aip = _asymptotic_upper(t.conjugate())
        return ai.conjugate(), aip.conjugate()
    return _asymptotic_upper(t)


def airy(t):
    """Ai(t) and Ai'(t) for complex t."""
    t = complex(t)
    if abs(t) <= SEAM:
        return airy_series(t)
    return airy_asymptotic(t)


def airy_series(t):
    """Series route at any t (extended precision)."""
    ai, aip, bi, bip = _series(complex(t))
    return AiryValue(ai, aip, "series", bi, bip)


def airy_asymptotic(t):
    """Asymptotic route at any t (meaningful for |t| >~ 6)."""
    ai, aip = _asymptotic(complex(t))
    return AiryValue(ai, aip, "asymptotic")
