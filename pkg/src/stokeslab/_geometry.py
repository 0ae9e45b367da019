"""Planar polyline helpers on complex arrays (distances, crossings, winding)."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gauss_legendre(m):
    """Nodes and weights of the m-point Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(m)
    return (x + 1.0) / 2.0, w / 2.0


def _cross(a, b):
    return a.real * b.imag - a.imag * b.real


def polyline_distance(poly, z):
    """Distance from each point of ``z`` to the polyline ``poly``."""
    poly = np.asarray(poly, dtype=complex)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if len(poly) == 1:
        return np.abs(z - poly[0])
    a = poly[:-1][None, :]
    d = (poly[1:] - poly[:-1])[None, :]
    zz = z[:, None]
    dd = np.abs(d) ** 2
    dd = np.where(dd == 0, 1.0, dd)
    t = np.clip(((zz - a) * np.conj(d)).real / dd, 0.0, 1.0)
    return np.min(np.abs(zz - (a + t * d)), axis=1)


def nearest_on_polyline(poly, z):
    """Return (segment index, segment parameter, nearest point) for scalar z."""
    poly = np.asarray(poly, dtype=complex)
    a = poly[:-1]
    d = poly[1:] - poly[:-1]
    dd = np.abs(d) ** 2
    dd = np.where(dd == 0, 1.0, dd)
    t = np.clip(((z - a) * np.conj(d)).real / dd, 0.0, 1.0)
    q = a + t * d
    k = int(np.argmin(np.abs(z - q)))
    return k, float(t[k]), q[k]


def segment_crossings(p0, p1, poly):
    """Proper crossings of the segment p0->p1 with polyline ``poly``.

    Returns a list of ``(t, k, s, side)`` where ``t`` is the parameter on the
    segment, ``k``/``s`` locate the crossing on ``poly`` and ``side`` is +1 when
    the segment passes from the right of ``poly`` to its left.
    """
    poly = np.asarray(poly, dtype=complex)
    a = poly[:-1]
    e = poly[1:] - poly[:-1]
    d = p1 - p0
    den = _cross(d, e)
    ok = den != 0
    den = np.where(ok, den, 1.0)
    w = a - p0
    t = _cross(w, e) / den
    s = _cross(w, d) / den
    hit = ok & (t >= 0) & (t <= 1) & (s >= 0) & (s < 1)
    out = []
    for k in np.nonzero(hit)[0]:
        side = 1 if _cross(e[k], d) > 0 else -1
        out.append((float(t[k]), int(k), float(s[k]), side))
    out.sort()
    return out


def polyline_crossings(path, poly):
    """All proper crossings of polyline ``path`` with polyline ``poly``.

    Returns (path position, poly position, side) arrays; positions are segment
    index plus fraction, side is +1 for a right-to-left passage of ``poly``.
    """
    path = np.asarray(path, dtype=complex)
    poly = np.asarray(poly, dtype=complex)
    p0 = path[:-1][:, None]
    d = (path[1:] - path[:-1])[:, None]
    a = poly[:-1][None, :]
    e = (poly[1:] - poly[:-1])[None, :]
    den = _cross(d, e)
    ok = den != 0
    den = np.where(ok, den, 1.0)
    w = a - p0
    t = _cross(w, e) / den
    s = _cross(w, d) / den
    hit = ok & (t >= 0) & (t < 1) & (s >= 0) & (s < 1)
    i, k = np.nonzero(hit)
    side = np.where(_cross(e, d)[i, k] > 0, 1, -1) if len(i) else np.zeros(0, int)
    return i + t[i, k], k + s[i, k], side


def points_in_polygon(poly, z):
    """Even-odd point-in-polygon test; ``poly`` is closed implicitly."""
    poly = np.asarray(poly, dtype=complex)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    x0, y0 = poly.real, poly.imag
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    px, py = z.real[:, None], z.imag[:, None]
    cond = (y0 > py) != (y1 > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
    return np.sum(cond & (px < xint), axis=1) % 2 == 1


def winding_number(loop, z0=0.0):
    """Winding number of the closed polyline ``loop`` around ``z0``."""
    loop = np.asarray(loop, dtype=complex) - z0
    closed = np.append(loop, loop[0])
    ang = np.angle(closed[1:] / closed[:-1])
    return int(np.rint(ang.sum() / (2 * np.pi)))


def arc_length(poly):
    poly = np.asarray(poly, dtype=complex)
    return np.concatenate([[0.0], np.cumsum(np.abs(np.diff(poly)))])


def resample(poly, step):
    """Resample a polyline to (approximately) uniform spacing ``step``."""
    s = arc_length(poly)
    m = max(int(np.ceil(s[-1] / step)), 1)
    t = np.linspace(0.0, s[-1], m + 1)
    return np.interp(t, s, poly.real) + 1j * np.interp(t, s, poly.imag)


def hausdorff(p, q):
    return max(polyline_distance(q, p).max(), polyline_distance(p, q).max())
