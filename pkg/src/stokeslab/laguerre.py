"""Generalized Laguerre polynomials with complex parameter: values, zeros, orthogonality."""

import math
import os
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np

from ._geometry import gauss_legendre
from .errors import NonConvergence, PrecisionExhausted, TailNotDecaying, ZeroArgument
from .logcomplex import LogComplex

PRECISION_LADDER = (15, 30, 50, 100, 200)
ENV_PRECISION = "STOKESLAB_PRECISION"


def env_precision():
    """Digits from STOKESLAB_PRECISION, or None when unset."""
    raw = os.environ.get(ENV_PRECISION)
    if raw is None or raw.strip() == "":
        return None
    try:
        digits = int(raw)
    except ValueError:
        raise ValueError(f"{ENV_PRECISION} must be an integer, got {raw!r}") from None
    if digits < 15:
        raise ValueError(f"{ENV_PRECISION} must be >= 15, got {digits}")
    return digits


def default_precision(n):
    env = env_precision()
    if env is not None:
        return env
    return 15 if n <= 15 else 30


@dataclass(frozen=True)
class LaguerreContext:
    n: int
    alpha: complex
    precision_digits: int = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"n must be a non-negative integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "alpha", complex(self.alpha))
        if self.precision_digits is None:
            object.__setattr__(self, "precision_digits", default_precision(self.n))
        elif self.precision_digits < 15:
            raise ValueError("precision_digits must be >= 15")

    def ladder(self):
        """Precision levels to try, starting at ``precision_digits``."""
        d = self.precision_digits
        return (d,) + tuple(x for x in PRECISION_LADDER if x > d)


def _negative_integer_alpha(alpha, n):
    """k if alpha == -k with 1 <= k <= n, else 0."""
    a = complex(alpha)
    if a.imag != 0 or a.real != round(a.real):
        return 0
    k = -int(round(a.real))
    return k if 1 <= k <= n else 0


@lru_cache(maxsize=256)
def _coefficients(n, alpha, dps):
    """Monomial coefficients c_0..c_n of L_n^(alpha) at ``dps`` digits."""
    with mpmath.workdps(dps):
        a = mpmath.mpc(alpha)
        c = [mpmath.mpc(0)] * (n + 1)
        c[n] = mpmath.mpf(-1) ** n / mpmath.factorial(n)
        for k in range(n - 1, -1, -1):
            # binom(n+a, n-k)/k! from the k+1 term, exact across integer alpha
            c[k] = -c[k + 1] * (a + k + 1) * (k + 1) / (n - k)
        return tuple(c)


def _horner(c, z):
    p = mpmath.mpc(0)
    size = mpmath.mpf(0)
    az = abs(z)
    for ck in reversed(c):
        p = p * z + ck
        size = size * az + abs(ck)
    return p, size


def _horner_with_derivative(c, z):
    p = mpmath.mpc(0)
    dp = mpmath.mpc(0)
    for ck in reversed(c):
        dp = dp * z + p
        p = p * z + ck
    return p, dp


def _recurrence(n, alpha, z):
    a = mpmath.mpc(alpha)
    l0 = mpmath.mpc(1)
    if n == 0:
        return l0
    l1 = 1 + a - z
    for k in range(1, n):
        l0, l1 = l1, ((2 * k + 1 + a - z) * l1 - (k + a) * l0) / (k + 1)
    return l1


def laguerre_mp(ctx, z, dps):
    """(value, condition) at ``dps`` digits via the explicit sum."""
    with mpmath.workdps(dps):
        c = _coefficients(ctx.n, ctx.alpha, dps)
        return _horner(c, mpmath.mpc(z))


def laguerre_eval(ctx, z, tol=1e-9, target=1e-13):
    """L_n^(alpha)(z) as a LogComplex.

    The explicit sum is cross-checked against the three-term recurrence; the
    precision climbs the ladder until the two agree to ``tol`` and the sum's
    rounding bound (condition times unit roundoff) is below ``target``.
    """
    for dps in ctx.ladder():
        with mpmath.workdps(dps + 5):
            zz = mpmath.mpc(z)
            s, size = laguerre_mp(ctx, zz, dps + 5)
            r = _recurrence(ctx.n, ctx.alpha, zz)
            if s == 0 and r == 0:
                return LogComplex.zero()
            if s == 0:
                continue
            mismatch = abs(s - r) / abs(s)
            bound = size / abs(s) * mpmath.mpf(10) ** (-dps)
            if mismatch <= tol and bound <= target:
                return LogComplex.from_mp(s)
    raise PrecisionExhausted(
        f"L_{ctx.n}^({ctx.alpha})({z}) not resolved at {ctx.ladder()[-1]} digits"
    )


def laguerre_eval_many(ctx, zs):
    return [laguerre_eval(ctx, z) for z in np.atleast_1d(zs)]


def laguerre_derivative(ctx, z):
    """d/dz L_n^(alpha) = -L_{n-1}^(alpha+1)."""
    if ctx.n == 0:
        return LogComplex.zero()
    sub = LaguerreContext(ctx.n - 1, ctx.alpha + 1, ctx.precision_digits)
    return -laguerre_eval(sub, z)


def log_monic_factor(n):
    """log of (-1)^n n!/n^n, the factor making L_n^(alpha)(nz) monic in z."""
    return complex(math.lgamma(n + 1) - n * math.log(n) if n else 0.0, math.pi * (n % 2))


def rescaled_eval(n, a_n, z, monic=False, digits=None):
    """p_n(z) = L_n^(n a_n)(n z), or the monic P_n(z) when ``monic``."""
    ctx = LaguerreContext(n, n * complex(a_n), digits)
    val = laguerre_eval(ctx, n * complex(z))
    if monic:
        val = val * LogComplex.from_log(log_monic_factor(n))
    return val


# --- zeros ------------------------------------------------------------------


@dataclass
class ZeroSet:
    roots: np.ndarray
    residuals: np.ndarray
    digits: int = 0
    iterations: int = 0
    lead_log: float = 0.0
    roots_mp: list = field(default=None, repr=False)

    def __len__(self):
        return len(self.roots)

    def scaled(self, factor):
        """Zeros of p(factor * z) (same residuals)."""
        mp_roots = None
        if self.roots_mp is not None:
            mp_roots = [r / factor for r in self.roots_mp]
        return ZeroSet(self.roots / factor, self.residuals, self.digits, self.iterations,
                       self.lead_log, mp_roots)


def _aberth(c, dps, start, max_iter, patience=10):
    """Aberth-Ehrlich simultaneous iteration (all roots updated per sweep).

    Runs until the largest correction stops shrinking and returns the roots,
    the sweep count and that floor, which reflects the working precision.
    """
    n = len(c) - 1
    z = [mpmath.mpc(s) for s in start]
    best, since = math.inf, 0
    for it in range(1, max_iter + 1):
        steps = []
        for i in range(n):
            p, dp = _horner_with_derivative(c, z[i])
            if p == 0:
                steps.append(mpmath.mpc(0))
                continue
            ratio = p / dp
            s = mpmath.fsum(1 / (z[i] - z[j]) for j in range(n) if j != i)
            steps.append(ratio / (1 - ratio * s))
        z = [zi - w for zi, w in zip(z, steps)]
        big = float(max(abs(w) for w in steps))
        if big == 0.0:
            return z, it, 0.0
        if big < 0.5 * best:
            best, since = big, 0
        else:
            since += 1
            if since >= patience:
                return z, it, best
    raise NonConvergence(f"Aberth iteration did not converge in {max_iter} sweeps")


def _initial_circle(c, seed):
    n = len(c) - 1
    r = float(abs(c[0] / c[n])) ** (1.0 / n)
    rng = np.random.default_rng(seed)
    offset = rng.uniform(0, 2 * np.pi / n)
    return r * np.exp(1j * (offset + 2 * np.pi * np.arange(n) / n))


def _polynomial_zeros(n, alpha, digits, seed, max_iter, tol):
    """Roots of L_n^(alpha) at the first precision whose correction floor is below tol."""
    ladder = LaguerreContext(n, alpha, digits).ladder()
    start = None
    for dps in ladder:
        with mpmath.workdps(dps):
            c = _coefficients(n, complex(alpha), dps)
            if start is None:
                start = _initial_circle(c, seed)
            roots, its, floor = _aberth(c, dps, start, max_iter)
            scale = float(max(abs(r) for r in roots))
            if floor < tol * scale:
                resid = []
                for r in roots:
                    v = abs(_horner(c, r)[0])
                    resid.append(float(mpmath.log(v)) if v else -math.inf)
                return roots, resid, dps, its
            start = [complex(r) for r in roots]
    raise PrecisionExhausted(f"zeros of L_{n}^({alpha}) unresolved at {ladder[-1]} digits")


def zeros(ctx, seed=0, max_iter=2000, tol=1e-12):
    """All n zeros of L_n^(alpha), the origin included with its multiplicity."""
    n, alpha = ctx.n, ctx.alpha
    k = _negative_integer_alpha(alpha, n)
    extra = []
    if k:
        # L_n^(-k)(z) = (-z)^k (n-k)!/n! L_{n-k}^(k)(z)
        extra = [mpmath.mpc(0)] * k
        n, alpha = n - k, complex(k)
    if n == 0:
        roots_mp, resid, dps, its = [], [], ctx.precision_digits, 0
    else:
        roots_mp, resid, dps, its = _polynomial_zeros(n, alpha, ctx.precision_digits, seed,
                                                      max_iter, tol)
    roots_mp = list(roots_mp) + extra
    resid = list(resid) + [-math.inf] * len(extra)
    lead_log = -math.lgamma(ctx.n + 1)
    return ZeroSet(np.array([complex(r) for r in roots_mp]), np.array(resid), dps, its,
                   lead_log, roots_mp)


def rescaled_zeros(n, a_n, digits=None, seed=0):
    """Zeros of p_n(z) = L_n^(n a_n)(n z)."""
    zs = zeros(LaguerreContext(n, n * complex(a_n), digits), seed=seed)
    out = zs.scaled(n)
    # residuals and the leading coefficient of p_n
    out.lead_log = n * math.log(n) - math.lgamma(n + 1)
    return out


def zero_moments(zs, kmax=3):
    """m_k = (1/n) sum z_i^k for k = 0..kmax."""
    roots = np.asarray(getattr(zs, "roots", zs), dtype=complex)
    return np.array([np.mean(roots ** k) for k in range(kmax + 1)])


# --- orthogonality ----------------------------------------------------------


def orthogonality_closed_form(n, alpha, dps=30):
    """(-1)^(n+1) 2i e^(pi i alpha) sin(pi alpha) Gamma(alpha+n+1)."""
    with mpmath.workdps(dps):
        a = mpmath.mpc(alpha)
        return (mpmath.mpf(-1) ** (n + 1) * 2j * mpmath.exp(mpmath.pi * 1j * a)
                * mpmath.sin(mpmath.pi * a) * mpmath.gamma(a + n + 1))


def _arg02pi_mp(z):
    t = mpmath.arg(z)
    return t + 2 * mpmath.pi if t < 0 else t


def _log_weight(z, alpha):
    """log(z^alpha e^-z) with arg z in [0, 2 pi)."""
    return alpha * (mpmath.log(abs(z)) + 1j * _arg02pi_mp(z)) - z


def _subdivide(path, h_rel=0.15, h_max=0.5):
    """Split a polyline so each piece is short relative to its distance from 0."""
    out = [path[0]]
    for a, b in zip(path[:-1], path[1:]):
        d = max(min(abs(a), abs(b)), 1e-3)
        h = min(h_rel * d, h_max)
        m = max(int(np.ceil(abs(b - a) / h)), 1)
        out.extend(a + (b - a) * np.arange(1, m + 1) / m)
    return np.array(out)


def _coarsen(path, h_rel=0.5, h_max=2.0):
    """Keep vertices about h apart.  The chords are a deformation of the contour
    that stays clear of 0 and of the positive axis, so the integrals do not change."""
    keep = [0]
    for k in range(1, len(path) - 1):
        a = path[keep[-1]]
        h = min(h_rel * max(abs(a), 1e-3), h_max)
        if abs(path[k + 1] - a) > h:
            keep.append(k)
    keep.append(len(path) - 1)
    return path[keep]


def _log_integrand_abs(n, alpha, path):
    """log|z^n L_n^(alpha)(z) z^alpha e^-z| along ``path`` in double precision."""
    c = np.array([complex(x) for x in _coefficients(n, complex(alpha), 20)])
    arg = np.angle(path)
    arg = np.where(arg < 0, arg + 2 * np.pi, arg)
    logz = np.log(np.abs(path)) + 1j * arg
    poly = np.abs(np.polyval(c[::-1], path))
    return (np.real(alpha * logz) - path.real + n * np.log(np.abs(path))
            + np.log(np.maximum(poly, 1e-300)))


def _truncate_tails(n, alpha, path, drop=40.0):
    """Cut both ends where the integrand's log-magnitude falls ``drop`` below its peak."""
    logs = _log_integrand_abs(n, alpha, path)
    peak = logs.max()
    if logs[0] >= peak - drop or logs[-1] >= peak - drop:
        raise TailNotDecaying("integrand does not decay at the contour ends")
    keep = np.nonzero(logs >= peak - drop)[0]
    lo, hi = max(keep[0] - 1, 0), min(keep[-1] + 1, len(path) - 1)
    return path[lo:hi + 1], peak


@dataclass
class OrthogonalityReport:
    n: int
    alpha: complex
    integrals: list
    closed_form: complex
    digits: int
    cancellation_digits: float
    quadrature_change: float

    @property
    def relative(self):
        ref = abs(self.integrals[self.n])
        return [abs(v) / ref for v in self.integrals]

    @property
    def closed_form_error(self):
        return abs(self.integrals[self.n] - self.closed_form) / abs(self.closed_form)


def _contour_sums(n, alpha, pts, dps, m):
    with mpmath.workdps(dps):
        a = mpmath.mpc(alpha)
        c = _coefficients(n, complex(alpha), dps)
        x, w = _gl_mp(m, dps)
        sums = [mpmath.mpc(0)] * (n + 1)
        absum = [mpmath.mpf(0)] * (n + 1)
        for za, zb in zip(pts[:-1], pts[1:]):
            za, zb = mpmath.mpc(za), mpmath.mpc(zb)
            d = zb - za
            for xi, wi in zip(x, w):
                z = za + d * xi
                f = _horner(c, z)[0] * mpmath.exp(_log_weight(z, a)) * d * wi
                zk = mpmath.mpc(1)
                for k in range(n + 1):
                    term = f * zk
                    sums[k] += term
                    absum[k] += abs(term)
                    zk *= z
        return sums, absum


@lru_cache(maxsize=16)
def _gl_mp(m, dps):
    """Gauss-Legendre nodes/weights on [0, 1] at ``dps`` digits (Newton on P_m)."""
    xs, _ = gauss_legendre(m)
    nodes, weights = [], []
    for x0 in xs:
        t = mpmath.mpf(2 * x0 - 1)
        for _ in range(6):
            p0, p1 = mpmath.mpf(1), t
            for j in range(2, m + 1):
                p0, p1 = p1, ((2 * j - 1) * t * p1 - (j - 1) * p0) / j
            dp = m * (t * p1 - p0) / (t * t - 1)
            t -= p1 / dp
        nodes.append((t + 1) / 2)
        weights.append(1 / ((1 - t * t) * dp * dp))
    return nodes, weights


def orthogonality_report(n, alpha, sigma, scale=None, m=16, dps=None):
    """All integrals of z^k L_n^(alpha)(z) z^alpha e^-z over the scaled contour, k = 0..n.

    The contour is ``sigma`` scaled by ``scale`` (default n) and keeps its
    orientation; z^alpha uses arg z in [0, 2 pi).
    """
    alpha = complex(alpha)
    if alpha.imag == 0:
        raise ValueError("orthogonality needs a non-real alpha")
    scale = n if scale is None else scale
    path = np.asarray(sigma.polyline() if hasattr(sigma, "polyline") else sigma, dtype=complex)
    path = path * scale
    path = _subdivide(path)
    path, _peak = _truncate_tails(n, alpha, path)
    path = _coarsen(path)
    dps = dps or 30
    for _ in range(4):
        with mpmath.workdps(dps):
            sums, absum = _contour_sums(n, alpha, path, dps, m)
            ref = abs(sums[n])
            # digits lost to cancellation, measured against the k = n integral
            cancel = float(mpmath.log10(max(absum) / ref)) if ref else math.inf
        if cancel + 15 <= dps:
            break
        dps = int(math.ceil(cancel)) + 20
    with mpmath.workdps(dps):
        for _ in range(3):
            sums2, _ = _contour_sums(n, alpha, path, dps, m + 8)
            change = float(max(abs(a - b) for a, b in zip(sums, sums2)) / abs(sums2[n]))
            if change < 1e-10:
                break
            # halve every panel and compare again
            path = np.insert(path, np.arange(1, len(path)), 0.5 * (path[:-1] + path[1:]))
            sums = sums2
        closed = orthogonality_closed_form(n, alpha, dps)
    return OrthogonalityReport(n, alpha, [complex(v) for v in sums2], complex(closed), dps,
                               cancel, change)


def orthogonality_integral(n, k, alpha, sigma, scale=None):
    """Integral of z^k L_n^(alpha)(z) z^alpha e^-z dz along the scaled contour."""
    if not 0 <= k <= n:
        raise ValueError("k must lie in 0..n")
    return orthogonality_report(n, alpha, sigma, scale).integrals[k]


# --- Bessel polynomials -------------------------------------------------------


def bessel_eval(n, alpha, z, digits=None):
    """B_n^(alpha)(z) = z^n L_n^(-2n-alpha+1)(2/z)."""
    z = complex(z)
    if z == 0:
        raise ZeroArgument("Bessel polynomial reduction needs z != 0")
    ctx = LaguerreContext(n, -2 * n - complex(alpha) + 1, digits)
    return laguerre_eval(ctx, 2.0 / z) * LogComplex.from_complex(z) ** n
