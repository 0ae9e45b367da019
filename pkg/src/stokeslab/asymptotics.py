"""Strong asymptotics of p_n(z) = L_n^(n A_n)(n z): outer, band and Airy regimes."""

import heapq
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ._geometry import _cross, polyline_distance, segment_crossings
from .airy import airy
from .core import r_global, refine_path, zeros_of_d
from .equilibrium import build_sigma, compute_ell, g_identity, local_phi, phi_engine
from .errors import OutOfDisk, OutOfDomain, RegimeMismatch
from .laguerre import log_monic_factor, rescaled_eval, rescaled_zeros
from .logcomplex import LogComplex
from .trajectories import _gl_increment, _sqrt_near, build_critical_graph, refine_on_level

OUTER, BAND_PLUS, BAND_MINUS, AIRY_PLUS = "outer", "band_plus", "band_minus", "airy_plus"
REGIMES = (OUTER, BAND_PLUS, BAND_MINUS, AIRY_PLUS)
BAND_WIDTH = 0.35
BUFFER = 0.05


@dataclass
class AsymptoticResult:
    regime: str
    value: LogComplex
    endpoints: tuple
    meta: dict = field(default_factory=dict)


# --- per-parameter geometry ------------------------------------------------------


class Geometry:
    """Everything the formulas need for one value of A_n, built once."""

    def __init__(self, a):
        p = zeros_of_d(a).require_regular()
        self.p = p
        self.graph = build_critical_graph(p)
        self.sigma = build_sigma(p, self.graph)
        gam = self.graph.gamma
        step = 0.01 * (1.0 + abs(p.delta)) ** 0.5
        self.dense, self.dense_w, self.dense_r = refine_on_level(gam, p, step, with_values=True)
        # one polyline serves as the cut everywhere, so sides never disagree
        self.cut = self.dense
        self.engine = phi_engine(p, self.graph, self.sigma)
        self.engine.gamma = self.dense
        self.ell, _ = compute_ell(p, self.graph, self.sigma, engine=self.engine)
        self.w_plus_end = self.dense_w[-1]
        self.radius = 1.5 * max(np.max(np.abs(gam.points)), abs(p.zeta_plus), abs(p.zeta_minus), 1.0)
        self.circle = self.radius * np.exp(2j * np.pi * np.arange(32) / 32)
        d = p.delta
        mids = p.zeta_minus + d * np.linspace(0.1, 0.9, 9)
        nrm = 1j * d / abs(d)
        off = 0.25 * abs(d)
        self.waypoints = np.concatenate([self.circle, mids + off * nrm, mids - off * nrm])
        self.kappa, self.theta0 = self._f_slope()
        self.delta = self._airy_radius()

    # phi from zeta+ along gamma, continued off gamma on the side of z
    def side_of(self, z):
        k = int(np.argmin(np.abs(self.dense - z)))
        k = min(max(k, 1), len(self.dense) - 2)
        t = self.dense[k + 1] - self.dense[k - 1]
        return "+" if _cross(t, z - self.dense[k]) > 0 else "-"

    def band_phi(self, z, side=None):
        """phi(z) = 1/2 int_{zeta+}^z R/t, along gamma on ``side`` then straight to z."""
        side = side or self.side_of(z)
        sgn = 1.0 if side == "+" else -1.0
        k = int(np.argmin(np.abs(self.dense - z)))
        k = min(max(k, 1), len(self.dense) - 2)
        q = self.dense[k]
        phi_q = sgn * 0.5 * (self.dense_w[k] - self.w_plus_end)
        rq = sgn * self.dense_r[k]
        seg = refine_path(self.p, np.array([q, z]))
        total = 0j
        r = rq
        for a, b in zip(seg[:-1], seg[1:]):
            total += _gl_increment(self.p, a, b, r)
            r = complex(_sqrt_near(self.p, b, r))
        return phi_q + 0.5 * total

    def phi_near_plus(self, z):
        z = self._off_gamma(z)
        try:
            return local_phi(self.p, self.cut, z, self.p.zeta_plus)
        except OutOfDomain:
            # the chord from zeta+ crosses a curving gamma: go along gamma instead
            return self.band_phi(z)

    def _off_gamma(self, z):
        """Move a point lying on gamma a hair to its "+" side (f, g + phi are analytic there)."""
        eps = 1e-9 * (1.0 + abs(z))
        if abs(z - self.p.zeta_plus) < 10 * eps or polyline_distance(self.dense, z)[0] > eps:
            return z
        k = int(np.argmin(np.abs(self.dense - z)))
        k = min(max(k, 1), len(self.dense) - 2)
        t = self.dense[k + 1] - self.dense[k - 1]
        return z + 1j * eps * t / abs(t)

    def _f_slope(self):
        """f'(zeta+) from the ray on which phi is real and positive."""
        p = self.p
        eps = 1e-3 * min(1.0, abs(p.delta))
        best = None
        for th in np.linspace(0, 2 * np.pi, 72, endpoint=False):
            z = p.zeta_plus + eps * np.exp(1j * th)
            try:
                ph = self.phi_near_plus(z)
            except OutOfDomain:
                continue
            if ph.real > 0 and (best is None or abs(ph.imag) / abs(ph) < best[0]):
                best = (abs(ph.imag) / abs(ph), th, ph, z)
        _, th, ph, z = best
        kappa = (1.5 * ph) ** (2.0 / 3.0) / (z - p.zeta_plus)
        return complex(kappa), float(th)

    def f(self, z):
        """Conformal map [3/2 phi]^(2/3) near zeta+, f > 0 where phi > 0."""
        zp = self.p.zeta_plus
        if abs(z - zp) < 1e-14 * (1 + abs(zp)):
            return 0j
        base = (1.5 * self.phi_near_plus(z)) ** (2.0 / 3.0)
        lin = self.kappa * (z - zp)
        cands = base * np.exp(2j * np.pi * np.arange(3) / 3)
        return complex(cands[np.argmin(np.abs(cands - lin))])

    def _airy_radius(self):
        """0.1 (1 + |delta|), halved until f is injective on a test lattice."""
        rad = 0.1 * (1.0 + abs(self.p.delta))
        for _ in range(6):
            ok = True
            pts = [self.p.zeta_plus + r * np.exp(1j * t)
                   for r in np.linspace(0.2, 1.0, 5) * rad
                   for t in np.linspace(0, 2 * np.pi, 24, endpoint=False)]
            vals, used = [], []
            for z in pts:
                try:
                    vals.append(self.f(z))
                    used.append(z)
                except OutOfDomain:
                    continue
            vals, used = np.array(vals), np.array(used)
            dz = np.abs(used[:, None] - used[None, :])
            df = np.abs(vals[:, None] - vals[None, :])
            np.fill_diagonal(dz, 1.0)
            np.fill_diagonal(df, 1.0)
            ratio = df / dz
            if ratio.min() < 0.2 * abs(self.kappa):
                ok = False
            if ok:
                return rad
            rad *= 0.5
        return rad

    # square-root factors continued from far away without crossing gamma
    def _visible(self, a, b, to_target=False):
        if segment_crossings(a, b, self.dense):
            return False
        zs = np.array([self.p.zeta_minus, self.p.zeta_plus])
        d = polyline_distance(np.array([a, b]), zs)
        need = np.full(2, 1e-3 * (1.0 + abs(self.p.delta)))
        if to_target:
            # the last leg may end arbitrarily close to a zero
            need = np.minimum(need, 0.5 * np.abs(b - zs))
        return bool(np.all(d >= need))

    def path_from_far(self, z):
        """Shortest waypoint path from the far circle to z that does not cross gamma."""
        nodes = list(self.waypoints) + [z]
        target = len(nodes) - 1
        n_circle = len(self.circle)
        dist = {i: 0.0 for i in range(n_circle)}
        prev = {}
        heap = [(0.0, i) for i in range(n_circle)]
        done = set()
        while heap:
            d, i = heapq.heappop(heap)
            if i in done:
                continue
            done.add(i)
            if i == target:
                break
            for j in range(n_circle, len(nodes)):
                if j in done or j == i:
                    continue
                if not self._visible(nodes[i], nodes[j], j == target):
                    continue
                nd = d + abs(nodes[j] - nodes[i])
                if nd < dist.get(j, math.inf):
                    dist[j] = nd
                    prev[j] = i
                    heapq.heappush(heap, (nd, j))
        if target not in done:
            raise OutOfDomain(f"no path to {z} avoiding gamma")
        seq = [target]
        while seq[-1] in prev:
            seq.append(prev[seq[-1]])
        return np.array([nodes[i] for i in reversed(seq)])

    def quarter(self, z):
        """a(z) = ((z - zeta+)/(z - zeta-))^(1/4), analytic off gamma, -> 1 at infinity."""
        p = self.p
        path = refine_path(p, self.path_from_far(z), frac=0.05)
        s = r_global(p, path, cut=self.cut) / (path - p.zeta_minus)
        a = np.sqrt(s)
        flips = np.sign(np.real(a[1:] * np.conj(a[:-1])))
        flips[flips == 0] = 1.0
        a = a * np.concatenate([[1.0], np.cumprod(flips)])
        return complex(a[-1])

    def regime_of(self, z):
        if abs(z - self.p.zeta_plus) < self.delta:
            return AIRY_PLUS
        if polyline_distance(self.dense, z)[0] < BAND_WIDTH:
            return BAND_PLUS if self.side_of(z) == "+" else BAND_MINUS
        return OUTER

    def g(self, z):
        z = self._off_gamma(z)
        return g_identity(self.p, self.graph, self.sigma, self.ell, z, engine=self.engine)


@lru_cache(maxsize=32)
def _geometry_cached(key):
    return Geometry(complex(*key))


def geometry(a):
    """Geometry for A (cached; key rounded to 1e-14)."""
    a = complex(a)
    if a.imag < 0:
        a = a.conjugate()
    return _geometry_cached((round(a.real, 14), round(a.imag, 14)))


# --- the formulas ---------------------------------------------------------------------


def _lead_log(n):
    """log((-n)^n / n!)."""
    return complex(n * math.log(n) - math.lgamma(n + 1), math.pi * (n % 2))


def _outer_log(geo, n, z, wrong_sheet=False):
    a = geo.quarter(z)
    if wrong_sheet:
        a = a * 1j
    amp = 0.5 * (a + 1.0 / a)
    return _lead_log(n) + n * geo.g(z) + np.log(amp), a


def _band_log(geo, n, z, side):
    base, a = _outer_log(geo, n, z)
    ratio = 1j * (a - 1.0 / a) / (a + 1.0 / a)
    phi = geo.band_phi(z, side)
    sgn = -1.0 if side == "+" else 1.0
    corr = 1.0 + sgn * ratio * np.exp(2 * n * phi)
    return base + np.log(corr), phi


def _airy_log(geo, n, z):
    p = geo.p
    zp = p.zeta_plus
    if abs(z - zp) < 1e-10 * (1 + abs(zp)):
        # limit at zeta+: f^(1/4)/a and a/f^(1/4) stay finite
        zz = zp + 1e-5 * abs(p.delta) * np.exp(1j * geo.theta0)
        fz = geo.f(zz)
        a = geo.quarter(zz)
        c1 = fz ** 0.25 / a
        t = 0j
        av = airy(t)
        scale = n ** (1.0 / 6.0)
        bracket = c1 * scale * av.ai - av.ai_prime / (c1 * scale)
        zz_pref = zz
    else:
        fz = geo.f(z)
        a = geo.quarter(z)
        t = n ** (2.0 / 3.0) * fz
        av = airy(t)
        bracket = t ** 0.25 / a * av.ai - a * t ** -0.25 * av.ai_prime
        zz_pref = z
    # exp(n/2 (-A log z + z + ell)) written as exp(n (g + phi)) so the branch of
    # log z and of the re-cut phi never enter
    if zz_pref is z:
        pref = n * (geo.g(z) + geo.phi_near_plus(z))
    else:
        # g + phi is analytic at zeta+: extrapolate linearly from two offsets
        zz2 = zp + 2 * (zz_pref - zp)
        v1 = geo.g(zz_pref) + geo.phi_near_plus(zz_pref)
        v2 = geo.g(zz2) + geo.phi_near_plus(zz2)
        pref = n * (2 * v1 - v2)
    return _lead_log(n) + pref + 0.5 * math.log(math.pi) + np.log(bracket), t


def strong_asymptotic(n, a_n, z, regime=None, strict=True):
    """Leading-order value of p_n(z) in the given (or detected) regime."""
    a_n, z = complex(a_n), complex(z)
    if a_n.imag < 0:
        res = strong_asymptotic(n, a_n.conjugate(), z.conjugate(), regime, strict)
        ends = tuple(np.conj(res.endpoints))
        return AsymptoticResult(res.regime, res.value.conjugate(), ends, res.meta)
    geo = geometry(a_n)
    found = geo.regime_of(z)
    regime = regime or found
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    if strict and regime != found:
        raise RegimeMismatch(f"z={z} lies in regime {found}, not {regime}")
    meta = {"detected": found}
    if regime == OUTER:
        lv, _ = _outer_log(geo, n, z)
    elif regime in (BAND_PLUS, BAND_MINUS):
        side = "+" if regime == BAND_PLUS else "-"
        lv, phi = _band_log(geo, n, z, side)
        meta["phi"] = phi
    else:
        if abs(z - geo.p.zeta_plus) > geo.delta:
            raise OutOfDisk(f"z={z} outside the Airy disk of radius {geo.delta:.3g}")
        lv, t = _airy_log(geo, n, z)
        meta["airy_argument"] = t
    return AsymptoticResult(regime, LogComplex.from_log(lv), (geo.p.zeta_plus, geo.p.zeta_minus), meta)


def conformal_f(p_n, z):
    """f(z) = [3/2 phi(z)]^(2/3) on the disk around zeta+ (f > 0 on Sigma+)."""
    a = p_n.a if hasattr(p_n, "a") else complex(p_n)
    z = complex(z)
    conj = complex(a).imag < 0
    if conj:
        z = z.conjugate()
    geo = geometry(a)
    if abs(z - geo.p.zeta_plus) > geo.delta:
        raise OutOfDisk(f"z={z} outside the disk of radius {geo.delta:.3g} around zeta+")
    f = geo.f(z)
    return f.conjugate() if conj else f


def monic_factor(n):
    return LogComplex.from_log(log_monic_factor(n))


def band_probe_points(a_n, distance=0.2, fractions=(0.2, 0.4, 0.5, 0.6)):
    """Points at ``distance`` from gamma on both sides, at fractions of its vertex list."""
    geo = geometry(a_n)
    d = geo.dense
    out = []
    for fr in fractions:
        k = min(max(int(fr * len(d)), 1), len(d) - 2)
        t = d[k + 1] - d[k - 1]
        nrm = 1j * t / abs(t)
        out += [d[k] + distance * nrm, d[k] - distance * nrm]
    out = np.array(out)
    return np.conj(out) if complex(a_n).imag < 0 else out


def outer_probe_points(a_n, count=5, min_distance=0.5):
    """``count`` points on a circle around gamma, all at least ``min_distance`` from it."""
    geo = geometry(a_n)
    c = 0.5 * (geo.p.zeta_plus + geo.p.zeta_minus)
    rad = np.max(np.abs(geo.dense - c)) + 2 * min_distance
    out = c + rad * np.exp(2j * np.pi * (np.arange(count) + 0.25) / count)
    out = out[polyline_distance(geo.dense, out) >= min_distance]
    return np.conj(out) if complex(a_n).imag < 0 else out


# --- comparison harness ------------------------------------------------------------------


@dataclass
class ErrorRow:
    z: complex
    regime: str
    rel_error: float

    @property
    def log10_error(self):
        return math.log10(self.rel_error) if self.rel_error > 0 else -math.inf


def _near_boundary(geo, z):
    d_gamma = polyline_distance(geo.dense, z)[0]
    d_disk = abs(abs(z - geo.p.zeta_plus) - geo.delta)
    return abs(d_gamma - BAND_WIDTH) < BUFFER or d_disk < BUFFER or d_gamma < BUFFER


def compare(n, a_n, grid, regime=None, skip_boundary=True):
    """|exact / asymptotic - 1| per grid point."""
    geo = geometry(a_n)
    rows = []
    for z in np.atleast_1d(np.asarray(grid, dtype=complex)):
        if skip_boundary and regime is None and _near_boundary(geo, z):
            continue
        res = strong_asymptotic(n, a_n, z, regime, strict=regime is None)
        exact = rescaled_eval(n, a_n, z)
        rows.append(ErrorRow(complex(z), res.regime, exact.rel_diff(res.value)))
    return rows


def summarize(rows):
    out = {}
    for reg in REGIMES:
        errs = [r.rel_error for r in rows if r.regime == reg]
        if errs:
            out[reg] = {"count": len(errs), "max": float(np.max(errs)), "median": float(np.median(errs))}
    return out


def decay_fit(ns, errors):
    """Least-squares slope of log e against log n (e ~ C n^-p returns p)."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    return {"exponent": float(-slope), "constant": float(math.exp(intercept))}


# --- zeros against gamma -----------------------------------------------------------------


def zero_side_check(n, a_n, zs=None):
    """Side of gamma_{A_n} for every zero of p_n, with the |1+R'| < |1-R'| test."""
    geo = geometry(a_n)
    p = geo.p
    zs = zs if zs is not None else rescaled_zeros(n, a_n)
    roots = np.asarray(zs.roots if hasattr(zs, "roots") else zs, dtype=complex)
    if complex(a_n).imag < 0:
        roots = np.conj(roots)
    sides, dists, ineq = [], [], []
    for z in roots:
        sides.append(geo.side_of(z))
        dists.append(float(polyline_distance(geo.dense, z)[0]))
        rp = (z - p.a - 2.0) / r_global(p, z, cut=geo.cut, side=sides[-1])
        ineq.append(bool(abs(1 + rp) < abs(1 - rp)))
    return {
        "n": n,
        "plus_side": sides.count("+"),
        "minus_side": sides.count("-"),
        "max_distance": max(dists) if dists else 0.0,
        "inequality_holds": all(ineq),
        "inequality_failures": int(len(ineq) - sum(ineq)),
        "sides": sides,
        "distances": dists,
    }
