"""Potential theory on the critical graph: phi functions, Sigma_A, mu, psi, g, ell."""

from dataclasses import dataclass, field

import numpy as np

from ._geometry import (
    arc_length,
    gauss_legendre,
    polyline_crossings,
    polyline_distance,
    segment_crossings,
    winding_number,
)
from .core import antiderivative_w, d_of, r_global
from .errors import ConstructionFailed, NegativeDensity, NoConvergence, NoDescentProgress, OnCut, OutOfDomain
from .trajectories import OMEGA_MINUS_1, OMEGA_MINUS_2, OMEGA_PLUS, emanating_directions

PHI, PHITILDE, PHIHAT, VARPHI = "phi", "phitilde", "phihat", "varphi"


@dataclass(frozen=True)
class PhiValue:
    value: complex
    variant: str
    face: str


@dataclass
class ContourSigmaA:
    """Sigma_A = Sigma- u gamma u Sigma+ with both side arcs oriented outward."""

    sigma_minus_arc: np.ndarray
    gamma: object
    sigma_plus_arc: np.ndarray
    orientation: str = "clockwise"
    meta: dict = field(default_factory=dict)

    def polyline(self):
        """Whole contour from +inf (below) through zeta-, gamma, zeta+ to +inf (above)."""
        return np.concatenate([self.sigma_minus_arc[::-1], self.gamma.points[1:-1], self.sigma_plus_arc])


# --- path planning and phi by continuation ------------------------------------


def _extend(points, length=1e9):
    """Append a ray leaving the last point radially (arc that runs to infinity)."""
    end = points[-1]
    return np.append(points, end + end / abs(end) * length)


class _PhiEngine:
    """Evaluates 1/2 int R_A(t)/t dt from a zero along planned paths."""

    def __init__(self, p, graph, sigma=None):
        self.p = p
        self.g = graph
        self.sigma = sigma
        gam = graph.gamma.points
        self.gamma = gam
        self.rc = 1.5 * max(np.max(np.abs(gam)), abs(p.zeta_minus), abs(p.zeta_plus), 1.0)
        self.eps0 = 0.05 * min(abs(p.zeta_minus), abs(p.zeta_plus), 1.0)
        self.clear = 1e-3 * (1.0 + abs(p.delta))
        npi = np.pi * 1j
        a = p.a
        cuts = {
            PHITILDE: [(graph.sigma0.points, -npi * a), (_extend(graph.sigma_up.points), npi * (2 + a))],
            PHI: [(graph.sigma0.points, -npi * a), (_extend(graph.sigma_minus.points), npi * (2 + a))],
        }
        if sigma is not None:
            cuts[VARPHI] = [(_extend(sigma.sigma_minus_arc), 2 * npi), (np.array([0.0, 1e12]), npi * a)]
        self.cuts = cuts
        self.prefix = {
            PHITILDE: self._prefix(p.zeta_minus, graph.sigma_minus.points),
            PHI: self._prefix(p.zeta_plus, graph.sigma_up.points),
        }
        self.prefix[VARPHI] = self.prefix[PHI]
        # the sector at zeta- holding sigma- lies across sigma0 from the sector
        # where phitilde -> 0, so the limit there is -pi i A
        self.base = {PHITILDE: -npi * a, PHI: 0j, VARPHI: 0j}
        ang = np.linspace(0, 2 * np.pi, 33)[:-1]
        self.circle = self.rc * np.exp(1j * ang)

    def _prefix(self, zeta, arc):
        d0 = 0.25 * min(abs(self.p.delta), abs(zeta))
        k = int(np.searchsorted(np.abs(arc - zeta) > d0, True))
        k = max(k, 2)
        pre = arc[:k]
        # a few nodes suffice: the arc is nearly straight this close to the zero
        idx = np.unique(np.linspace(0, k - 1, 6).round().astype(int))
        return pre[idx]

    def _leg_ok(self, a, b, end_is_target=False):
        if a == b:
            return True
        if segment_crossings(a, b, self.gamma):
            return False
        d0 = polyline_distance(np.array([a, b]), 0.0)[0]
        need = self.eps0 if not end_is_target else min(self.eps0, 0.5 * abs(b))
        if d0 < need:
            return False
        if not end_is_target and polyline_distance(self.gamma, b)[0] < self.clear:
            return False
        return True

    def plan(self, variant, z):
        pre = self.prefix[variant]
        s = pre[-1]
        if self._leg_ok(s, z, True):
            return np.append(pre, z)
        circ = self.circle
        n = len(circ)
        ins = [self._leg_ok(s, c) for c in circ]
        outs = [self._leg_ok(c, z, True) for c in circ]
        best = None
        for i in range(n):
            if not ins[i]:
                continue
            for j in range(n):
                if not outs[j]:
                    continue
                for direction in (1, -1):
                    steps = (j - i) % n if direction == 1 else (i - j) % n
                    idx = [(i + direction * k) % n for k in range(steps + 1)]
                    L = abs(circ[i] - s) + steps * abs(circ[1] - circ[0]) + abs(z - circ[j])
                    if best is None or L < best[0]:
                        best = (L, idx)
        if best is None:
            raise OutOfDomain(f"no admissible integration path to z={z}")
        return np.concatenate([pre, circ[best[1]], [z]])

    def raw(self, variant, z):
        path = self.plan(variant, z)
        base = path[0]
        val = self.base[variant] + 0.5 * antiderivative_w(self.p, base, z, path, cut=self.gamma)
        for arc, jump in self.cuts[variant]:
            val += np.sum(polyline_crossings(path, arc)[2]) * jump
        return val, path


def phi_eval(p, graph, z, variant=PHI, sigma=None, engine=None):
    """phi (base zeta+), phitilde (base zeta-), phihat (near zeta-), varphi (re-cut phi)."""
    p.require_regular()
    eng = engine or _PhiEngine(p, graph, sigma)
    z = complex(z)
    if variant == PHIHAT:
        val = local_phi(p, graph, z, p.zeta_minus)
        return PhiValue(val, variant, graph.face_of(z))
    if variant == VARPHI and sigma is None and eng.sigma is None:
        raise OutOfDomain("varphi needs the contour Sigma_A")
    val, _ = eng.raw(variant, z)
    return PhiValue(complex(val), variant, graph.face_of(z))


def local_phi(p, graph, z, zeta, radius=None):
    """1/2 int_zeta^z R_A/t along the straight segment (valid near the zero)."""
    gam = graph.gamma.points if hasattr(graph, "gamma") else graph
    seg = np.array([zeta, z])
    inner = gam[2:-2]
    if segment_crossings(zeta, z, inner):
        raise OutOfDomain("segment from the zero crosses gamma")
    return complex(0.5 * antiderivative_w(p, zeta, z, seg, cut=gam))


def phi_engine(p, graph, sigma=None):
    return _PhiEngine(p, graph, sigma)


def check_conformal_images(p, graph, samples, engine=None):
    """Check phitilde maps faces to Re<0, the strip 0<Re<pi Im A, and Re>pi Im A."""
    eng = engine or _PhiEngine(p, graph)
    width = np.pi * p.a.imag
    faces = graph.face_of(np.asarray(samples, dtype=complex))
    report = {"violations": [], "re_by_face": {OMEGA_PLUS: [], OMEGA_MINUS_1: [], OMEGA_MINUS_2: []}}
    for z, f in zip(samples, faces):
        v = eng.raw(PHITILDE, complex(z))[0]
        report["re_by_face"][str(f)].append(v.real)
        ok = {OMEGA_PLUS: v.real < 0, OMEGA_MINUS_1: 0 < v.real < width, OMEGA_MINUS_2: v.real > width}[str(f)]
        if not ok:
            report["violations"].append((complex(z), str(f), complex(v)))
    strip = report["re_by_face"][OMEGA_MINUS_1]
    report["strip_extent"] = (min(strip), max(strip)) if strip else None
    report["strip_width"] = width
    return report


def strip_edges(p, graph, engine=None, count=8, nudge=1e-9):
    """Re phitilde just inside Omega-(1) along its two boundary trajectories.

    Sigma- carries the left edge of the strip image and sigma_down the right
    edge.  Returns (left values, right values, width estimate).
    """
    eng = engine or _PhiEngine(p, graph)
    edges = []
    for arc in (graph.sigma_minus.points, graph.sigma_down.points):
        n = len(arc)
        vals = []
        for k in np.linspace(0.1 * n, 0.6 * n, count).astype(int):
            t = arc[k + 1] - arc[k - 1]
            nrm = 1j * t / abs(t)
            for sgn in (1.0, -1.0):
                z = arc[k] + sgn * nudge * nrm
                if graph.face_of(z) == OMEGA_MINUS_1:
                    vals.append(eng.raw(PHITILDE, z)[0].real)
                    break
        edges.append(np.array(vals))
    left, right = edges
    return left, right, float(np.mean(right) - np.mean(left))


def sample_faces(p, graph, n_per_face, seed=0, radius=None):
    """Random points in each face, away from the critical arcs."""
    rng = np.random.default_rng(seed)
    rad = radius or 1.2 * max(abs(p.zeta_minus), abs(p.zeta_plus), 1.0)
    arcs = [t.points for t in graph.arcs().values()]
    out = {OMEGA_PLUS: [], OMEGA_MINUS_1: [], OMEGA_MINUS_2: []}
    tries = 0
    while min(len(v) for v in out.values()) < n_per_face and tries < 200:
        tries += 1
        z = rad * (rng.uniform(-1, 1, 4000) + 1j * rng.uniform(-1, 1, 4000))
        dmin = np.min([polyline_distance(a, z) for a in arcs], axis=0)
        z = z[(dmin > 0.02 * rad) & (np.abs(z) > 0.02 * rad)]
        for zz, f in zip(z, graph.face_of(z)):
            if len(out[str(f)]) < n_per_face:
                out[str(f)].append(complex(zz))
    return {k: np.array(v) for k, v in out.items()}


# --- gamma parametrized by the equilibrium measure -----------------------------


def _tau_of_u(u):
    a, b = u ** 3, (1.0 - u) ** 3
    return a / (a + b)


def _dtau_du(u):
    a, b = u ** 3, (1.0 - u) ** 3
    return 3.0 * u ** 2 * (1.0 - u) ** 2 / (a + b) ** 2


class GammaParam:
    """gamma as the curve z(tau), tau = Im w / (2 pi) in [0, 1].

    Along gamma, d mu = R_+(t) dt / (2 pi i t) = d tau, so mu is the uniform
    measure in tau.  The substitution tau(u) = u^3 / (u^3 + (1-u)^3) makes
    z(tau(u)) smooth in u at both zeros.
    """

    def __init__(self, p, gamma):
        self.p = p
        self.pts = gamma.points
        self.w = gamma.w_values
        self.r = gamma.r_values
        self.tau_pts = np.imag(self.w) / (2 * np.pi)
        self.total = complex(self.w[-1])

    def _w_at(self, z, k):
        """w(z) and R(z), continued from the traced points ``k`` (vectorized)."""
        p = self.p
        x, wts = gauss_legendre(10)
        a = self.pts[k]
        ref = self.r[k].copy()
        end0, end1 = k == 0, k == len(self.pts) - 1
        ref[end0] = self.r[1]
        ref[end1] = self.r[-2]
        # t = a + (z - a) s^2 keeps the integrand smooth when a is a zero
        u = (z - a)[:, None]
        t = a[:, None] + u * x[None, :] ** 2
        s = np.sqrt(d_of(p, t))
        s = np.where(np.real(s * np.conj(ref[:, None])) < 0, -s, s)
        # continue the sign along the nodes (they move away from a monotonically)
        for j in range(1, len(x)):
            flip = np.real(s[:, j] * np.conj(s[:, j - 1])) < 0
            s[flip, j:] = -s[flip, j:]
        inc = np.sum(wts[None, :] * s / t * 2.0 * x[None, :], axis=1) * (z - a)
        rz = np.sqrt(d_of(p, z))
        rz = np.where(np.real(rz * np.conj(s[:, -1])) < 0, -rz, rz)
        return self.w[k] + inc, rz

    def z_of_tau(self, tau):
        """Points of gamma with w = 2 pi i tau (vectorized Newton on w)."""
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        tp, pts = self.tau_pts, self.pts
        zm, zp = pts[0], pts[-1]
        t1, t2 = tp[1], tp[-2]
        tc = np.clip(tau, 1e-300, 1.0 - 1e-16)
        z = np.interp(tc, tp, pts.real) + 1j * np.interp(tc, tp, pts.imag)
        lo, hi = tc < t1, tc > t2
        z[lo] = zm + (pts[1] - zm) * (tc[lo] / t1) ** (2.0 / 3.0)
        z[hi] = zp + (pts[-2] - zp) * ((1.0 - tc[hi]) / (1.0 - t2)) ** (2.0 / 3.0)
        target = 2j * np.pi * tc
        active = np.ones(len(z), dtype=bool)
        for _ in range(40):
            if not active.any():
                break
            za = z[active]
            k = np.argmin(np.abs(za[:, None] - pts[None, :]), axis=1)
            wz, rz = self._w_at(za, k)
            # a node sitting exactly on a zero is already converged
            at_zero = (np.abs(rz) == 0) | ~np.isfinite(wz)
            dz = np.where(at_zero, 0.0, (wz - target[active]) * za / np.where(at_zero, 1.0, rz))
            z[active] = za - dz
            done = np.abs(dz) < 1e-15 * (1.0 + np.abs(za))
            idx = np.nonzero(active)[0]
            active[idx[done]] = False
        z[tau <= 0.0] = zm
        z[tau >= 1.0] = zp
        return z

    def nodes(self, u_edges, m=16):
        """Gauss-Legendre nodes in u over the panels ``u_edges``."""
        x, wts = gauss_legendre(m)
        a, b = u_edges[:-1, None], u_edges[1:, None]
        u = (a + (b - a) * x).ravel()
        wu = ((b - a) * wts).ravel()
        return u, wu * _dtau_du(u)


@dataclass
class EquilibriumMeasure:
    nodes: np.ndarray
    weights: np.ndarray
    density: np.ndarray
    mass: float
    u: np.ndarray = None
    param: object = None
    panels: np.ndarray = None
    m_per_panel: int = 16
    scale: float = 1.0

    def moments(self, kmax=4):
        return np.array([np.sum(self.weights * self.nodes ** k) for k in range(1, kmax + 1)])


def _arclength_mass(p, gamma, max_chord=0.005):
    """Independent mass: chord quadrature of R_+/(2 pi i t) along the traced arc."""
    from .trajectories import densify, increment_from_zero

    pts = densify(gamma.points, max_chord)
    x, wts = gauss_legendre(8)
    r = np.sqrt(d_of(p, pts))
    # sign continuation from the traced values (R_+ orientation)
    ref = gamma.r_values[len(gamma.r_values) // 2]
    mid = gamma.points[len(gamma.points) // 2]
    k0 = int(np.argmin(np.abs(pts - mid)))
    flips = np.sign(np.real(r[2:-1] * np.conj(r[1:-2])))
    cum = np.concatenate([[1.0], np.cumprod(flips)])
    rr = r[1:-1] * cum
    if np.real(rr[k0 - 1] * np.conj(ref)) < 0:
        rr = -rr
    total = increment_from_zero(p, pts[0], pts[1], rr[0]) - increment_from_zero(p, pts[-1], pts[-2], rr[-1])
    for a, b, ra in zip(pts[1:-2], pts[2:-1], rr[:-1]):
        t = a + (b - a) * x
        s = np.sqrt(d_of(p, t))
        s = np.where(np.real(s * np.conj(ra)) < 0, -s, s)
        total += np.sum(wts * s / t) * (b - a)
    return total / (2j * np.pi)


def equilibrium_measure(p, gamma, m=256, m_per_panel=16):
    """Quadrature representation of d mu = R_+(z) dz / (2 pi i z) on gamma."""
    p.require_regular()
    if m < 16:
        raise ValueError("need at least 16 nodes")
    param = GammaParam(p, gamma)
    npan = max(int(np.ceil(m / m_per_panel)), 1)
    edges = np.linspace(0.0, 1.0, npan + 1)
    u, w = param.nodes(edges, m_per_panel)
    z = param.z_of_tau(_tau_of_u(u))
    r_plus = np.sqrt(d_of(p, z))
    # R_+ at each node: align with the traced branch nearby
    kk = np.argmin(np.abs(z[:, None] - gamma.points[None, 1:-1]), axis=1) + 1
    r_plus = np.where(np.real(r_plus * np.conj(gamma.r_values[kk])) < 0, -r_plus, r_plus)
    tang = _tangents(gamma.points, kk)
    dens_c = r_plus / (2j * np.pi * z) * tang
    if np.any(dens_c.real <= 0):
        raise NegativeDensity("density is not positive: wrong side or orientation")
    mass = _arclength_mass(p, gamma)
    return EquilibriumMeasure(z, w, np.abs(dens_c), float(mass.real), u, param, edges, m_per_panel)


def _tangents(points, kk):
    t = points[np.minimum(kk + 1, len(points) - 1)] - points[np.maximum(kk - 1, 0)]
    return t / np.abs(t)


# --- the contour Sigma_A ---------------------------------------------------------


def _arg02pi(z):
    a = np.angle(z)
    return a + 2 * np.pi if a < 0 else a


def _ascent_arc(p, gamma_pts, zeta, lower, r_far, kappa=0.05, beta_max=np.radians(80), max_steps=20000):
    """Steered ascent of h = Re(1/2 int R_A/t) from a zero towards +infinity.

    The step direction is the gradient of h rotated by at most ``beta_max``
    towards a guide field that sweeps around the origin (counterclockwise for
    the lower arc, clockwise for the upper one) and then runs to +infinity.
    Returns the polyline or None if the arc hits the positive axis or the origin.
    """
    sing = np.array([0.0, p.zeta_minus, p.zeta_plus])
    best = None
    for d0 in emanating_directions(p, "-" if zeta == p.zeta_minus else "+", "orthogonal"):
        z = zeta + 1e-3 * (1.0 + abs(p.delta)) * d0
        r = r_global(p, z, gamma_pts)
        if np.real((r / z) * d0) <= 0:
            continue
        pts = [zeta, z]
        ok = False
        for _ in range(max_steps):
            grad = np.conj(r / z)
            grad = grad / abs(grad)
            ga = _arg02pi(z)
            if lower:
                guide = (z / abs(z)) * np.exp(1j * np.pi / 3) if ga < 1.75 * np.pi else np.exp(-0.15j)
            else:
                guide = (z / abs(z)) * np.exp(-1j * np.pi / 3) if ga > 0.25 * np.pi else np.exp(0.15j)
            rel = np.angle(guide / grad)
            step_dir = grad * np.exp(1j * np.clip(rel, -beta_max, beta_max))
            h = kappa * min(np.min(np.abs(sing - z)), 1.0 + abs(z))
            zn = z + h * step_dir
            rn = np.sqrt(complex(d_of(p, zn)))
            r = rn if np.real(rn * np.conj(r)) >= 0 else -rn
            # crossing the positive axis is not allowed
            if (z.imag > 0) != (zn.imag > 0) and (z.real + zn.real) > 0:
                break
            z = zn
            pts.append(z)
            if abs(z) < 1e-3 * min(abs(p.zeta_minus), 1.0):
                break
            if abs(z) > r_far and z.real > 0 and ((z.imag < 0) == lower):
                ok = True
                break
        if ok:
            arc = np.array(pts)
            if best is None or len(arc) < len(best):
                best = arc
    return best


def build_sigma(p, graph, r_far=None):
    """Sigma- from zeta- and Sigma+ from zeta+ to +infinity (below/above R_+)."""
    gam = graph.gamma if hasattr(graph, "gamma") else graph
    r_far = r_far or 50.0 * (1.0 + abs(p.a))
    smin = _ascent_arc(p, gam.points, p.zeta_minus, True, r_far)
    splus = _ascent_arc(p, gam.points, p.zeta_plus, False, r_far)
    if smin is None or splus is None:
        raise ConstructionFailed("could not build Sigma- / Sigma+ by steered ascent")
    sig = ContourSigmaA(smin, gam, splus)
    loop = sig.polyline()
    big = 2.0 * np.max(np.abs(loop))
    # close through the right half plane: from the upper end back to the lower one
    t1, t0 = np.angle(loop[-1]), np.angle(loop[0])
    arc = big * np.exp(1j * np.linspace(t1, t0 if t0 < t1 else t0 - 2 * np.pi, 50))
    w = winding_number(np.concatenate([loop, arc]), 0.0)
    sig.meta["winding_about_origin"] = w
    sig.orientation = "clockwise" if w == -1 else "counterclockwise"
    return sig


# --- potentials -------------------------------------------------------------------


def psi_eval(p, z, side=None):
    """External field -(Re A/2) log|z| + (Im A/2) arg z + Re z/2, arg in (0, 2 pi).

    On the positive axis ``side`` selects the upper ("upper", arg 0) or lower
    ("lower", arg 2 pi) boundary value; a negative zero imaginary part counts
    as the lower side.
    """
    z = np.asarray(z, dtype=complex)
    arg = np.angle(z)
    arg = np.where(arg < 0, arg + 2 * np.pi, arg)
    on = (z.imag == 0) & (z.real >= 0)
    if np.any(on):
        lower = np.signbit(z.imag)
        if side is None and np.any(on & ~lower):
            raise OnCut("psi is discontinuous across the positive axis")
        if side == "upper":
            arg = np.where(on, 0.0, arg)
        else:
            arg = np.where(on & (lower | (side == "lower")), 2 * np.pi, arg)
    val = -0.5 * p.a.real * np.log(np.abs(z)) + 0.5 * p.a.imag * arg + 0.5 * z.real
    return float(val) if val.ndim == 0 else val


def _u_nearest(mu, z):
    j = int(np.argmin(np.abs(mu.nodes - z)))
    # refine by ternary search on |z(u) - z| around the nearest node
    lo = mu.u[max(j - 1, 0)] if j > 0 else 0.0
    hi = mu.u[min(j + 1, len(mu.u) - 1)] if j < len(mu.u) - 1 else 1.0
    for _ in range(40):
        a, b = lo + (hi - lo) / 3, hi - (hi - lo) / 3
        za, zb = mu.param.z_of_tau(_tau_of_u(np.array([a, b])))
        if abs(za - z) < abs(zb - z):
            hi = b
        else:
            lo = a
    us = 0.5 * (lo + hi)
    return us, abs(mu.param.z_of_tau(_tau_of_u(np.array([us])))[0] - z)


def mu_rule(mu, z):
    """Nodes and weights of mu adapted to a target point z (log kernels)."""
    edges = mu.panels
    m = mu.m_per_panel
    zn = mu.nodes.reshape(-1, m)
    span = np.abs(zn[:, -1] - zn[:, 0]) * 1.2 + 1e-300
    dist = np.min(np.abs(zn - z), axis=1)
    near = dist < 2.0 * span
    if not near.any():
        return mu.nodes, mu.weights
    us, delta = _u_nearest(mu, z)
    # a window of panels around the nearest point is replaced by graded panels
    idx = np.nonzero(near)[0]
    i0, i1 = idx.min(), idx.max()
    ua, ub = edges[i0], edges[i1 + 1]
    # convert the distance to a u-scale through the local speed
    zz = mu.param.z_of_tau(_tau_of_u(np.array([max(us - 1e-6, 0.0), min(us + 1e-6, 1.0)])))
    speed = abs(zz[1] - zz[0]) / (min(us + 1e-6, 1.0) - max(us - 1e-6, 0.0))
    du = max(delta / max(speed, 1e-300), 1e-14)
    graded = [us]
    for sgn, lim in ((-1, ua), (1, ub)):
        L = abs(lim - us)
        k = 0
        while L * 0.5 ** k > 0.25 * du and k < 48:
            graded.append(us + sgn * L * 0.5 ** k)
            k += 1
        graded.append(lim)
    gedges = np.unique(np.clip(graded, ua, ub))
    # panels wider than the base panels are split again
    fine = [gedges[0]]
    base = (ub - ua) / (i1 - i0 + 1)
    for a, b in zip(gedges[:-1], gedges[1:]):
        n = max(int(np.ceil((b - a) / base)), 1)
        fine.extend(a + (b - a) * np.arange(1, n + 1) / n)
    fine = np.array(fine)
    x, wts = gauss_legendre(8)
    a, b = fine[:-1, None], fine[1:, None]
    u = (a + (b - a) * x).ravel()
    w = ((b - a) * wts).ravel() * _dtau_du(u)
    nz = mu.param.z_of_tau(_tau_of_u(u))
    keep = np.ones(len(mu.nodes), dtype=bool)
    keep.reshape(-1, m)[i0 : i1 + 1] = False
    return np.concatenate([mu.nodes[keep], nz]), np.concatenate([mu.weights[keep], mu.scale * w])


def v_potential(mu, z):
    """Logarithmic potential V(z) = -int log|t - z| d mu(t)."""
    zs = np.atleast_1d(np.asarray(z, dtype=complex))
    out = np.empty(len(zs))
    for i, zz in enumerate(zs):
        nodes, w = mu_rule(mu, zz)
        d = np.abs(nodes - zz)
        d = np.where(d == 0, 1e-300, d)
        out[i] = -np.sum(w * np.log(d))
    return float(out[0]) if np.ndim(z) == 0 else out


def _log02pi(z):
    z = np.asarray(z, dtype=complex)
    a = np.angle(z)
    return np.log(np.abs(z)) + 1j * np.where(a < 0, a + 2 * np.pi, a)


def compute_ell(p, graph, sigma, radii=(1e3, 1e4, 1e5), engine=None):
    """Constant of the g-identity, from the limit along the negative axis.

    ell = lim [2 log z + A log z - z + 2 varphi(z)], z = -X, with Richardson
    extrapolation in 1/X.  Returns (ell, report); ell is complex in general,
    and -Re(ell)/2 is the equilibrium constant of V + psi on gamma.
    """
    eng = engine or _PhiEngine(p, graph, sigma)
    vals = []
    for X in radii:
        z = complex(-X, 0.0)
        ph = eng.raw(VARPHI, z)[0]
        lz = _log02pi(z)
        vals.append(2 * lz + p.a * lz - z + 2 * ph)
    vals = np.array(vals)
    r = radii[1] / radii[0]
    rich = (r * vals[1:] - vals[:-1]) / (r - 1.0)
    spread = float(np.max(np.abs(np.diff(rich)))) if len(rich) > 1 else float(abs(vals[-1] - vals[-2]))
    # the combination has a pure power series in 1/X: fit c0 + c1/X + c2/X^2
    V = np.vander(1.0 / np.asarray(radii, dtype=float), len(radii), increasing=True)
    ell = complex(np.linalg.solve(V, vals)[0])
    rep = {"raw": vals, "richardson": rich, "spread": spread, "imag": ell.imag,
           "equilibrium_constant": -0.5 * ell.real}
    if spread > 1e-6 * (1.0 + abs(ell)):
        raise NoConvergence(f"ell not stable across radii (spread {spread:.3g})")
    return ell, rep


def g_identity(p, graph, sigma, ell, z, engine=None):
    """g(z) = (-A log z + z + ell)/2 - varphi(z), log with arg in (0, 2 pi)."""
    eng = engine or _PhiEngine(p, graph, sigma)
    lz = _log02pi(complex(z))
    return complex(0.5 * (-p.a * lz + z + ell) - eng.raw(VARPHI, complex(z))[0])


def g_quadrature(mu, sigma, z):
    """g(z) = int log(z - s) d mu(s), cut along gamma[zeta-, s] u Sigma-.

    The branch of log(z - s) is continued along the polyline that starts far
    out on Sigma-, runs back to zeta- and then along gamma to s.
    """
    z = complex(z)
    nodes, w = mu_rule(mu, z)
    order = np.argsort(_s_position(mu, nodes))
    nodes, w = nodes[order], w[order]
    smin = sigma.sigma_minus_arc
    q, is_node = _densify_for(np.concatenate([smin[::-1], nodes]), z, len(nodes))
    # value at the far end of Sigma-: arg(z - q0) taken in (0, 2 pi)
    s0 = np.log(q[0] - z) + 1j * np.pi
    steps = np.log((z - q[1:]) / (z - q[:-1]))
    cum = np.concatenate([[s0], s0 + np.cumsum(steps)])
    return complex(np.sum(w * cum[is_node]))


def _s_position(mu, nodes):
    k = np.argmin(np.abs(nodes[:, None] - mu.param.pts[None, :]), axis=1)
    return k + 1e-6 * np.abs(nodes - mu.param.pts[k]) * np.sign(
        np.real((nodes - mu.param.pts[k]) * np.conj(mu.param.pts[np.minimum(k + 1, len(mu.param.pts) - 1)] - mu.param.pts[k]))
    )


def _densify_for(q, z, n_tail):
    """Refine q so every step subtends a small angle at z.

    Returns the refined polyline and a mask of the last ``n_tail`` original
    vertices (the mu nodes).
    """
    d = np.minimum(np.abs(q[:-1] - z), np.abs(q[1:] - z))
    n = np.minimum(np.ceil(np.abs(q[1:] - q[:-1]) / (0.25 * np.maximum(d, 1e-300))), 10000).astype(int)
    n = np.maximum(n, 1)
    pieces = [q[:1]]
    for a, b, k in zip(q[:-1], q[1:], n):
        pieces.append(a + (b - a) * np.arange(1, k + 1) / k)
    out = np.concatenate(pieces)
    vert = np.concatenate([[0], np.cumsum(n)])
    mask = np.zeros(len(out), dtype=bool)
    mask[vert[-n_tail:]] = True
    return out, mask


# --- equilibrium checks -----------------------------------------------------------


def total_field(p, mu, z):
    return v_potential(mu, z) + psi_eval(p, z)


def _gamma_tangent(p, mu, idx):
    """Unit tangent of gamma (zeta- -> zeta+) at nodes: dz ~ 2 pi i z / R_+ d tau."""
    z = mu.nodes[idx]
    r = np.sqrt(d_of(p, z))
    pts, rv = mu.param.pts, mu.param.r
    kk = np.argmin(np.abs(z[:, None] - pts[None, 1:-1]), axis=1) + 1
    r = np.where(np.real(r * np.conj(rv[kk])) < 0, -r, r)
    t = 1j * z / r
    return t / np.abs(t)


def sigma_samples(sigma, max_radius, step=None):
    """Points along Sigma- and Sigma+ (zeros excluded) up to ``max_radius``."""
    out = []
    for arc in (sigma.sigma_minus_arc, sigma.sigma_plus_arc):
        a = arc[1:]
        a = a[np.abs(a) <= max_radius]
        out.append(a)
    return np.concatenate(out)


def check_equilibrium(p, mu, sigma, ell, n_interior=24, n_sprop=12, h=1e-4, sigma_radius=None):
    """Constancy on gamma, inequality on Sigma+-, and the S-property."""
    const = -0.5 * complex(ell).real
    scale = 1.0 + abs(complex(ell))
    tau_nodes = _tau_of_u(mu.u)
    interior = np.nonzero((tau_nodes > 0.05) & (tau_nodes < 0.95))[0]
    pick = interior[np.linspace(0, len(interior) - 1, n_interior).round().astype(int)]
    zs = mu.nodes[pick]
    off_axis = ~((np.abs(zs.imag) < 1e-3) & (zs.real > 0))
    vals = total_field(p, mu, zs[off_axis])
    stdev = float(np.std(vals))
    mass = float(np.sum(mu.weights))
    rad = sigma_radius or 2.0 * max(abs(p.zeta_minus), abs(p.zeta_plus), 1.0)
    ss = sigma_samples(sigma, rad)
    sig_vals = total_field(p, mu, ss)
    min_excess = float(np.min(sig_vals - const))
    # S-property with one-sided second-order stencils on each side
    spick = interior[np.linspace(0, len(interior) - 1, n_sprop + 2).round().astype(int)[1:-1]]
    tang = _gamma_tangent(p, mu, spick)
    nrm = 1j * tang
    mism = []
    for z0, n in zip(mu.nodes[spick], nrm):
        if abs(z0.imag) < 4 * h and z0.real > 0:
            continue
        f0 = total_field(p, mu, z0)
        fp = total_field(p, mu, np.array([z0 + h * n, z0 + 2 * h * n]))
        fm = total_field(p, mu, np.array([z0 - h * n, z0 - 2 * h * n]))
        dplus = (-3 * f0 + 4 * fp[0] - fp[1]) / (2 * h)
        dminus = (-3 * f0 + 4 * fm[0] - fm[1]) / (2 * h)
        mism.append(abs(dplus - dminus))
    sprop = float(max(mism)) if mism else 0.0
    report = {
        "mass": mass,
        "mass_ok": abs(mass - 1.0) <= 1e-8,
        "constant": const,
        "mean_on_gamma": float(np.mean(vals)),
        "stdev_on_gamma": stdev,
        "constancy_ok": stdev <= 1e-6 * scale and abs(np.mean(vals) - const) <= 1e-6 * scale,
        "min_excess_on_sigma": min_excess,
        "inequality_ok": min_excess >= -1e-6,
        "s_property_mismatch": sprop,
        "s_property_ok": sprop < 1e-4,
    }
    report["ok"] = all(report[k] for k in ("mass_ok", "constancy_ok", "inequality_ok", "s_property_ok"))
    return report


# --- independent oracle: discrete energy minimization ------------------------------


def _project_simplex(v):
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1), 0.0)


@dataclass
class DiscreteMeasure:
    nodes: np.ndarray
    weights: np.ndarray
    on_gamma: np.ndarray
    energy: float
    iterations: int

    def moments(self, kmax=4):
        return np.array([np.sum(self.weights * self.nodes ** k) for k in range(1, kmax + 1)])


def oracle_nodes(p, sigma, m, side_length=None):
    """m nodes uniform in arclength on gamma plus truncated Sigma+-."""
    from .trajectories import refine_on_level

    Lg = arc_length(sigma.gamma.points)[-1]
    gam = refine_on_level(sigma.gamma, p, Lg / (8.0 * m))
    side = side_length or 0.5 * Lg
    parts = []
    for arc in (sigma.sigma_minus_arc, sigma.sigma_plus_arc):
        s = arc_length(arc)
        k = int(np.searchsorted(s, side))
        parts.append(arc[: max(k, 2)])
    sm, sp = parts
    poly = np.concatenate([sm[::-1], gam[1:-1], sp])
    s = arc_length(poly)
    t = (np.arange(m) + 0.5) / m * s[-1]
    nodes = np.interp(t, s, poly.real) + 1j * np.interp(t, s, poly.imag)
    s_lo = arc_length(sm)[-1]
    on_gamma = (t > s_lo) & (t < s_lo + Lg)
    return nodes, on_gamma, s[-1] / m


def _phi2(y):
    ay = np.abs(y)
    with np.errstate(divide="ignore", invalid="ignore"):
        lg = np.where(ay > 0, np.log(np.where(ay > 0, ay, 1.0)), 0.0)
    return 0.5 * y * y * lg - 0.75 * y * y


def _cell_kernel(x):
    """Mean of -log|s - t| over two unit cells whose centres are x apart.

    Point evaluation between neighbouring cells is off by O(1) and a zero
    diagonal lets the minimizer clump mass onto a few nodes.
    """
    return -(_phi2(x + 1.0) - 2.0 * _phi2(x) + _phi2(x - 1.0))


def energy_minimize_oracle(p, sigma, m=400, max_iter=20000, tol=1e-12, side_length=None):
    """Minimize sum_{i,j} w_i w_j K_ij + 2 sum_i w_i psi(z_i) on the simplex.

    K_ij is the mean of log(1/|s - t|) over the arclength cells of nodes i and
    j, which tends to log(1/|z_i - z_j|) away from the diagonal.

    Projected gradient with Nesterov momentum and step 1/L (L the Lipschitz
    constant of the gradient); restarts whenever the energy goes up.
    """
    nodes, on_gamma, cell = oracle_nodes(p, sigma, m, side_length)
    K = _cell_kernel(np.abs(nodes[:, None] - nodes[None, :]) / cell) - np.log(cell)
    psi = psi_eval(p, nodes)

    def energy(w):
        return float(w @ K @ w + 2.0 * w @ psi)

    L = 2.0 * np.linalg.norm(K, 2)
    w = np.full(m, 1.0 / m)
    y = w.copy()
    t = 1.0
    e_old = energy(w)
    e_start = e_old
    it = 0
    for it in range(1, max_iter + 1):
        grad = 2.0 * (K @ y) + 2.0 * psi
        w_new = _project_simplex(y - grad / L)
        e_new = energy(w_new)
        if e_new > e_old:
            # restart momentum
            y = w.copy()
            t = 1.0
            continue
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = w_new + (t - 1.0) / t_new * (w_new - w)
        step = np.max(np.abs(w_new - w))
        w, t = w_new, t_new
        if abs(e_old - e_new) < tol * (1.0 + abs(e_new)) and step < 1e-10:
            e_old = e_new
            break
        e_old = e_new
    if not e_old < e_start:
        raise NoDescentProgress("projected gradient made no progress")
    return DiscreteMeasure(nodes, w, on_gamma, e_old, it)
