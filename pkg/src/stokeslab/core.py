"""Square root of D_A(z) = (z - A)^2 - 4z, its antiderivative and zero geometry."""

from dataclasses import dataclass

import mpmath
import numpy as np

from ._geometry import gauss_legendre, points_in_polygon, polyline_distance
from .errors import AtBranchPoint, DegenerateParameter, OnCut, PathTooCloseToSingularity

ON_CUT_TOL = 1e-10


@dataclass(frozen=True)
class Parameter:
    """Normalized parameter A (Im A >= 0) with the zeros of D_A."""

    a: complex
    zeta_minus: complex
    zeta_plus: complex
    conjugated: bool = False

    @property
    def double_zero(self):
        return self.a == -1

    @property
    def pole_vanishes(self):
        return self.a == 0

    @property
    def degenerate(self):
        return self.double_zero or self.pole_vanishes

    @property
    def delta(self):
        return self.zeta_plus - self.zeta_minus

    @property
    def branch_radius(self):
        """Exclusion radius around the zeros."""
        return 1e-8 * (1.0 + abs(self.delta))

    def zero(self, which):
        if which in ("-", "minus", "zeta_minus"):
            return self.zeta_minus
        if which in ("+", "plus", "zeta_plus"):
            return self.zeta_plus
        raise ValueError(f"unknown zero {which!r}")

    def require_regular(self):
        if self.degenerate:
            raise DegenerateParameter(f"A = {self.a} is degenerate")
        return self


@dataclass(frozen=True)
class BranchState:
    base_point: complex
    sqrt_value: complex


def _normalize(a):
    a = complex(a)
    if not (np.isfinite(a.real) and np.isfinite(a.imag)):
        raise ValueError("parameter must be finite")
    conjugated = a.imag < 0
    if conjugated:
        a = a.conjugate()
    # -0.0 would put the square root of A + 1 on the lower boundary
    return complex(a.real, abs(a.imag)), conjugated


def zeros_of_d(a):
    """Normalize ``a`` and return the Parameter with zeros (1 -+ sqrt(A+1))^2."""
    a, conjugated = _normalize(a)
    s = np.sqrt(a + 1.0)
    zm, zp = (1.0 - s) ** 2, (1.0 + s) ** 2
    # (1 - s)^2 cancels when s ~ 1; use the product zm * zp = A^2
    if abs(zm) < 0.25 * abs(zp) and zp != 0:
        zm = a * a / zp
    return Parameter(a, complex(zm), complex(zp), conjugated)


def zeros_of_d_mp(a, dps=50):
    """Multiprecision zeros (oracle), after the same normalization."""
    a, _ = _normalize(a)
    with mpmath.workdps(dps):
        s = mpmath.sqrt(mpmath.mpc(a.real, a.imag) + 1)
        return (1 - s) ** 2, (1 + s) ** 2


def d_of(p, z):
    z = np.asarray(z, dtype=complex)
    return (z - p.a) ** 2 - 4.0 * z


def r_segment(p, z):
    """Branch of sqrt(D_A) cut along the straight segment [zeta-, zeta+]."""
    z = np.asarray(z, dtype=complex)
    zm, zp = p.zeta_minus, p.zeta_plus
    with np.errstate(divide="ignore", invalid="ignore"):
        r = (z - zm) * np.sqrt((z - zp) / (z - zm))
    return np.where(z == zm, 0.0, r)


def _cut_polygon(p, cut):
    cut = np.asarray(cut, dtype=complex)
    if abs(cut[0] - p.zeta_minus) > abs(cut[0] - p.zeta_plus):
        cut = cut[::-1]
    return cut


def _tangent_at(cut, z):
    d = np.abs(cut - z)
    k = int(np.argmin(d))
    k = min(max(k, 1), len(cut) - 2) if len(cut) > 2 else 0
    t = cut[min(k + 1, len(cut) - 1)] - cut[max(k - 1, 0)]
    return t / abs(t)


def r_global(p, z, cut=None, side=None):
    """sqrt(D_A) on the complement of ``cut`` with R(z)/z -> 1 at infinity.

    ``cut`` is a polyline joining the zeros (default: the straight segment).
    The branch equals the segment branch outside the region enclosed by the cut
    and the segment, and its negative inside.  ``side`` ("+" or "-") selects the
    one-sided limit from the left/right of the cut oriented zeta- -> zeta+.
    """
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if cut is None:
        cut = np.array([p.zeta_minus, p.zeta_plus])
    cut = _cut_polygon(p, cut)
    dist = polyline_distance(cut, z)
    tol = ON_CUT_TOL * (1.0 + np.abs(z))
    on = dist < tol
    if side is not None:
        sgn = 1.0 if side in ("+", "left", 1) else -1.0
        zz = z.copy()
        for k in np.nonzero(on)[0]:
            zz[k] = z[k] + sgn * 1j * 1e-7 * (1.0 + abs(p.delta)) * _tangent_at(cut, z[k])
        ref = _r_inside(p, zz, cut)
        r = r_segment(p, z)
        # choose the exact root whose sign matches the nearby one-sided value
        r = np.where(on & (np.real(r * np.conj(ref)) < 0), -r, r)
        r = np.where(on, r, _r_inside(p, z, cut))
    else:
        if on.any():
            raise OnCut(f"point {z[on][0]} lies on the cut")
        r = _r_inside(p, z, cut)
    return complex(r[0]) if scalar else r


def _r_inside(p, z, cut):
    r = r_segment(p, z)
    if len(cut) > 2:
        inside = points_in_polygon(cut, z)
        r = np.where(inside, -r, r)
    return r


def r_prime(p, z, cut=None, side=None):
    """Derivative R'(z) = (z - A - 2) / R(z)."""
    zz = np.asarray(z, dtype=complex)
    near = np.minimum(np.abs(zz - p.zeta_minus), np.abs(zz - p.zeta_plus))
    if np.any(near < p.branch_radius):
        raise AtBranchPoint("R' is singular at the zeros of D_A")
    return (zz - p.a - 2.0) / r_global(p, z, cut, side)


def continue_sqrt(p, path, r_anchor, anchor=0):
    """Continue sqrt(D_A) along the nodes of ``path`` from ``path[anchor]``."""
    path = np.asarray(path, dtype=complex)
    s = np.sqrt(d_of(p, path))
    flips = np.sign(np.real(s[1:] * np.conj(s[:-1])))
    flips[flips == 0] = 1.0
    cum = np.concatenate([[1.0], np.cumprod(flips)])
    s = s * cum
    if s[anchor] != 0 and np.real(s[anchor] * np.conj(r_anchor)) < 0:
        s = -s
    return s


def _singular_points(p):
    return np.array([0.0, p.zeta_minus, p.zeta_plus], dtype=complex)


def refine_path(p, path, frac=0.1):
    """Insert nodes so each step is at most ``frac`` times the distance to 0, zeta+-.

    Endpoints sitting on a zero are allowed; nodes approach them geometrically.
    """
    path = np.asarray(path, dtype=complex)
    sing = _singular_points(p)
    tol = p.branch_radius
    out = [path[0]]
    for a, b in zip(path[:-1], path[1:]):
        L = abs(b - a)
        if L == 0:
            continue
        nodes = _refine_segment(a, b, sing, frac, tol)
        out.extend(nodes[1:])
    return np.array(out)


def _refine_segment(a, b, sing, frac, tol):
    L = abs(b - a)
    u = b - a
    at_a = np.abs(sing - a) < tol
    at_b = np.abs(sing - b) < tol
    others = sing[~(at_a | at_b)]
    if len(others) and polyline_distance(np.array([a, b]), others).min() < tol:
        raise PathTooCloseToSingularity("path passes within the exclusion radius of a singular point")
    t = 1e-6 if at_a.any() else 0.0
    ts = [0.0, t] if t else [0.0]
    while t < 1.0:
        z = a + t * u
        d = np.min(np.abs(sing - z))
        if at_b.any() and (1.0 - t) < 1e-6:
            break
        t = min(t + max(frac * d / L, 1e-12), 1.0)
        ts.append(t)
    if ts[-1] < 1.0:
        ts.append(1.0)
    return a + np.array(ts) * u


def _log_args(p, t, r):
    a = p.a
    u1 = r + t - a - 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        u2 = (a * a - (a + 2.0) * t + a * r) / t
        # stable variant when r ~ -a: numerator/t = a (t - 2a - 4)/(r - a) - (a + 2)
        alt = a * (t - 2.0 * a - 4.0) / (r - a) - (a + 2.0)
    bad = np.abs(r + a) < 1e-3 * (1.0 + np.abs(a))
    u2 = np.where(bad & np.isfinite(alt), alt, u2)
    return u1, u2


def w_closed_form(p, t, r):
    """Principal-branch value of W(t) = R - (A+2) log(R+t-A-2) - A log(...)."""
    u1, u2 = _log_args(p, np.asarray(t, dtype=complex), np.asarray(r, dtype=complex))
    return r - (p.a + 2.0) * np.log(u1) - p.a * np.log(u2)


def _unwrapped_log(u):
    return np.log(np.abs(u)) + 1j * np.unwrap(np.angle(u))


def w_along(p, nodes, r):
    """W at every node with logarithms continued along the node sequence."""
    u1, u2 = _log_args(p, nodes, r)
    return r - (p.a + 2.0) * _unwrapped_log(u1) - p.a * _unwrapped_log(u2)


def _anchor_sqrt(p, nodes, cut):
    """Branch value from the global root at the node farthest from the cut."""
    if cut is None:
        cut = np.array([p.zeta_minus, p.zeta_plus])
    dist = polyline_distance(cut, nodes)
    k = int(np.argmax(dist))
    return k, r_global(p, nodes[k], cut)


def antiderivative_w(p, z0, z1, path=None, r0=None, cut=None, return_nodes=False):
    """Integral of R(t)/t dt along the polyline ``path`` from z0 to z1.

    The square-root branch is continued from ``r0`` (the value of R at z0) if
    given, otherwise from the global branch defined by ``cut``.
    """
    p.require_regular()
    if path is None:
        path = [z0, z1]
    path = np.asarray(path, dtype=complex)
    if abs(path[0] - z0) > 1e-14 * (1 + abs(z0)):
        path = np.concatenate([[z0], path])
    if abs(path[-1] - z1) > 1e-14 * (1 + abs(z1)):
        path = np.concatenate([path, [z1]])
    nodes = refine_path(p, path)
    if r0 is not None and abs(r0) > 0:
        r = continue_sqrt(p, nodes, r0, 0)
    else:
        k, ra = _anchor_sqrt(p, nodes, cut)
        r = continue_sqrt(p, nodes, ra, k)
    w = w_along(p, nodes, r)
    val = complex(w[-1] - w[0])
    if return_nodes:
        return val, nodes, r, w - w[0]
    return val


def quadrature_w(p, z0, z1, path=None, r0=None, cut=None, m=10):
    """Gauss-Legendre evaluation of the same integral (independent check)."""
    val, nodes, r, _ = antiderivative_w(p, z0, z1, path, r0, cut, return_nodes=True)
    x, wts = gauss_legendre(m)
    total = 0.0 + 0.0j
    for a, b, ra in zip(nodes[:-1], nodes[1:], r[:-1]):
        t = a + (b - a) * x
        s = np.sqrt(d_of(p, t))
        ref = ra if abs(ra) > 0 else r[1]
        s = np.where(np.real(s * np.conj(ref)) < 0, -s, s)
        total += np.sum(wts * s / t) * (b - a)
    return complex(total)


def residue_at_origin(p, cut=None):
    return r_global(p, 0.0, cut)


def classify_zero_location(p):
    """Half-plane membership of the zeros and the lower-half-plane predicate."""
    a = p.a

    def half(z):
        if abs(z.imag) <= 1e-12 * (1 + abs(z)):
            return "real"
        return "upper" if z.imag > 0 else "lower"

    predicate = a.imag ** 2 < -4.0 * a.real and a.imag > 0
    return {
        "zeta_minus": p.zeta_minus,
        "zeta_plus": p.zeta_plus,
        "zeta_minus_half_plane": half(p.zeta_minus),
        "zeta_plus_half_plane": half(p.zeta_plus),
        "zeta_minus_lower_predicate": bool(predicate),
        "zeta_minus_positive": bool(a.imag == 0 and a.real >= -1),
    }
