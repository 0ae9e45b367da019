"""Tracing of horizontal and orthogonal trajectories and the critical graph."""

from dataclasses import dataclass, field

import numpy as np

from ._geometry import gauss_legendre, points_in_polygon, polyline_distance, resample, segment_crossings
from .core import d_of, r_global
from .errors import (
    ArcThroughOrigin,
    BoundaryCase,
    GraphInconsistent,
    MaxLengthExceeded,
    NotFound,
    StepCollapse,
)

HORIZONTAL = "horizontal"
ORTHOGONAL = "orthogonal"

OMEGA_PLUS = "Omega+"
OMEGA_MINUS_1 = "Omega-(1)"
OMEGA_MINUS_2 = "Omega-(2)"


def level_angle(kind, theta=None):
    """Angle t such that Re(exp(i t) w) is constant along the trajectory."""
    if theta is not None:
        return float(theta)
    if kind == HORIZONTAL:
        return 0.0
    if kind == ORTHOGONAL:
        return -np.pi / 2
    raise ValueError(f"unknown trajectory kind {kind!r}")


@dataclass(frozen=True)
class Terminal:
    kind: str  # "zero", "origin", "infinity"
    zero: str = ""  # "-" or "+"
    winding: int = 0
    direction: str = ""  # "+i", "-i", "+", "-"
    reached: bool = True

    def label(self):
        if self.kind == "zero":
            return f"AtZero({'zeta' + self.zero})"
        if self.kind == "origin":
            return f"AtOrigin({self.winding})"
        return f"AtInfinity({self.direction}inf)"


@dataclass
class Trajectory:
    kind: str
    points: np.ndarray
    w_values: np.ndarray
    terminal: Terminal
    r_values: np.ndarray = None
    theta: float = 0.0
    start_zero: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def arclength(self):
        return np.concatenate([[0.0], np.cumsum(np.abs(np.diff(self.points)))])

    def level_drift(self):
        lv = np.real(np.exp(1j * self.theta) * self.w_values)
        return float(np.max(np.abs(lv - lv[0])))

    def reversed(self):
        w = self.w_values[::-1] - self.w_values[-1]
        r = None if self.r_values is None else self.r_values[::-1]
        return Trajectory(self.kind, self.points[::-1].copy(), w, self.terminal, r, self.theta,
                          self.start_zero, dict(self.meta))


@dataclass
class StopRules:
    capture: float = None  # default 1e-4 (1 + |delta|)
    r0: float = None  # default 1e-6 (1 + |A|)
    r_inf: float = None  # default 50 (1 + |A|)
    max_winding: int = 20
    max_steps: int = 200000
    kappa: float = 0.05
    h_max: float = None

    def resolved(self, p):
        scale = 1.0 + abs(p.delta)
        return StopRules(
            self.capture if self.capture is not None else 1e-4 * scale,
            self.r0 if self.r0 is not None else 1e-6 * (1.0 + abs(p.a)),
            self.r_inf if self.r_inf is not None else 50.0 * (1.0 + abs(p.a)),
            self.max_winding,
            self.max_steps,
            self.kappa,
            self.h_max if self.h_max is not None else 0.05 * scale,
        )


def _align(s, ref):
    return np.where(np.real(s * np.conj(ref)) < 0, -s, s)


def _sqrt_near(p, z, ref):
    return _align(np.sqrt(d_of(p, z)), ref)


def emanating_directions(p, at, kind=HORIZONTAL, theta=None):
    """The three unit directions of critical trajectories leaving a zero."""
    p.require_regular()
    zeta = p.zero(at)
    dprime = p.delta if zeta == p.zeta_plus and at in ("+", "plus", "zeta_plus") else -p.delta
    c = np.sqrt(dprime) / zeta
    t0 = level_angle(kind, theta)
    base = (np.pi / 2 - t0 - np.angle(c)) / 1.5
    ang = base + np.arange(3) * (2 * np.pi / 3)
    return np.exp(1j * ang)


def _gl_increment(p, a, b, ra, m=8):
    x, wts = gauss_legendre(m)
    t = a + (b - a) * x
    s = _sqrt_near(p, t, ra)
    return complex(np.sum(wts * s / t) * (b - a))


def increment_from_zero(p, zeta, z1, r1, m=12):
    """Integral of R/t from the zero ``zeta`` to z1 (R continued to r1 at z1)."""
    x, wts = gauss_legendre(m)
    u = z1 - zeta
    t = zeta + u * x * x
    s = np.sqrt(d_of(p, t))
    # R(t) ~ c (t - zeta)^(1/2) keeps its phase along the ray
    s = _align(s, r1)
    return complex(np.sum(wts * s / t * 2.0 * u * x))


def _field(p, z, r, rot):
    q = rot * r / z
    return 1j * np.conj(q) / abs(q)


def trace(p, start, direction, kind=HORIZONTAL, stop=None, theta=None, r_start=None,
          level=0.0, forbid=None):
    """Trace the trajectory Re(exp(i theta) w) = const from ``start``.

    ``start`` may be a regular point or one of the zeros; ``direction`` is a unit
    complex number (from :func:`emanating_directions` at a zero).  ``forbid`` is
    an optional callable z -> bool that aborts the trace (terminal "forbidden").
    """
    p.require_regular()
    rules = (stop or StopRules()).resolved(p)
    th = level_angle(kind, theta)
    rot = np.exp(1j * th)
    zeros = {"-": p.zeta_minus, "+": p.zeta_plus}
    start_zero = ""
    for key, zz in zeros.items():
        if abs(start - zz) < p.branch_radius:
            start_zero = key
    direction = complex(direction) / abs(direction)
    if start_zero:
        zeta = zeros[start_zero]
        h0 = 1e-3 * min(1.0 + abs(p.delta), abs(zeta) if zeta != 0 else 1.0)
        h0 = min(h0, 1e-3 * abs(p.delta))
        z = zeta + h0 * direction
        r = np.sqrt(complex(d_of(p, z)))
        if r_start is not None:
            r = complex(_align(r, r_start))
        for _newton in range(3):
            w = increment_from_zero(p, zeta, z, r)
            q = rot * r / z
            z = z - (np.real(rot * w) - np.real(rot * level)) * np.conj(q) / abs(q) ** 2
            r = complex(_sqrt_near(p, z, r))
        w = increment_from_zero(p, zeta, z, r)
        pts, ws, rs = [complex(zeta), z], [0j, w], [0j, r]
        tangent = direction
    else:
        z = complex(start)
        r = np.sqrt(complex(d_of(p, z)))
        if r_start is not None:
            r = complex(_align(r, r_start))
        w = 0j
        pts, ws, rs = [z], [0j], [r]
        u0 = _field(p, z, r, rot)
        tangent = u0 if np.real(u0 * np.conj(direction)) >= 0 else -u0
    c_level = float(np.real(rot * level)) if start_zero else float(np.real(rot * ws[0]))
    sing = np.array([0.0, p.zeta_minus, p.zeta_plus])
    total_arg = 0.0
    left_start = not start_zero
    terminal = None
    for _ in range(rules.max_steps):
        d = np.abs(sing - z)
        dmin = d.min()
        h = min(rules.kappa * dmin, rules.h_max * (1.0 + abs(z) / (1.0 + abs(p.delta))))
        if h < 1e-15 * (1.0 + abs(z)):
            raise StepCollapse(f"step size underflow at z={z}")

        def f(zz, rr, tt):
            rr = complex(_sqrt_near(p, zz, rr))
            u = _field(p, zz, rr, rot)
            return (u if np.real(u * np.conj(tt)) >= 0 else -u), rr

        k1, _ = f(z, r, tangent)
        k2, _ = f(z + 0.5 * h * k1, r, k1)
        k3, _ = f(z + 0.5 * h * k2, r, k2)
        k4, _ = f(z + h * k3, r, k3)
        znew = z + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        for _newton in range(2):
            rnew = complex(_sqrt_near(p, znew, r))
            wnew = w + _gl_increment(p, z, znew, r)
            mis = np.real(rot * wnew) - c_level
            q = rot * rnew / znew
            znew = znew - mis * np.conj(q) / abs(q) ** 2
        rnew = complex(_sqrt_near(p, znew, r))
        wnew = w + _gl_increment(p, z, znew, r)
        tangent = (znew - z) / abs(znew - z)
        total_arg += float(np.angle(znew / z))
        z, r, w = znew, rnew, wnew
        pts.append(z)
        ws.append(w)
        rs.append(r)
        if start_zero and not left_start and abs(z - zeros[start_zero]) > 1e3 * rules.capture:
            left_start = True
        # zero capture
        for key, zz in zeros.items():
            if key == start_zero and not left_start:
                continue
            if abs(z - zz) < rules.capture:
                inc = -increment_from_zero(p, zz, z, r)
                lev = np.real(rot * (w + inc)) - c_level
                if abs(lev) < 1e-5 * (1.0 + abs(p.delta)):
                    pts.append(complex(zz))
                    ws.append(w + inc)
                    rs.append(0j)
                    terminal = Terminal("zero", zero=key)
                    break
        if terminal is not None:
            break
        if abs(z) < rules.r0:
            terminal = Terminal("origin", winding=int(np.fix(total_arg / (2 * np.pi))))
            break
        if abs(total_arg) > 2 * np.pi * rules.max_winding:
            terminal = Terminal("origin", winding=int(np.fix(total_arg / (2 * np.pi))), reached=False)
            break
        if abs(z) > rules.r_inf:
            terminal = Terminal("infinity", direction=_asymptotic_direction(z, th))
            break
        if forbid is not None and forbid(z):
            terminal = Terminal("forbidden", reached=False)
            break
    else:
        raise MaxLengthExceeded(f"no terminal after {rules.max_steps} steps")
    traj = Trajectory(kind if theta is None else "theta", np.array(pts), np.array(ws), terminal,
                      np.array(rs), th, start_zero)
    traj.meta["winding"] = total_arg / (2 * np.pi)
    return traj


def _asymptotic_direction(z, th):
    # w ~ z at infinity: Re(e^{i th} z) bounded, so z runs along +-i e^{-i th}
    if abs(th) < 1e-12:
        return "+i" if z.imag > 0 else "-i"
    if abs(th + np.pi / 2) < 1e-12:
        return "+" if z.real > 0 else "-"
    axis = 1j * np.exp(-1j * th)
    s = np.real(z * np.conj(axis))
    return f"{'+' if s > 0 else '-'}{np.angle(axis):.6f}"


def densify(points, max_chord):
    """Insert points so that no chord exceeds ``max_chord``."""
    pts = np.asarray(points, dtype=complex)
    out = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        m = int(np.ceil(abs(b - a) / max_chord))
        if m > 1:
            out.extend(a + (b - a) * np.arange(1, m) / m)
        out.append(b)
    return np.array(out)


def refine_on_level(traj, p, max_chord, with_values=False):
    """Points of ``traj`` with inserted nodes Newton-projected back onto the level curve.

    With ``with_values`` also returns w and R at every node.
    """
    rot = np.exp(1j * traj.theta)
    pts, ws, rs = traj.points, traj.w_values, traj.r_values
    level = float(np.real(rot * ws[1])) if len(ws) > 1 else 0.0
    out, wout, rout = [pts[0]], [ws[0]], [rs[0]]
    for k in range(len(pts) - 1):
        a, b = pts[k], pts[k + 1]
        m = int(np.ceil(abs(b - a) / max_chord))
        # integrate from an end where R does not vanish
        base = k if rs[k] != 0 else k + 1
        za, wa, ra = pts[base], ws[base], rs[base]
        for j in range(1, m):
            c = a + (b - a) * j / m
            for _newton in range(3):
                rc = complex(_sqrt_near(p, c, ra))
                wc = wa + _gl_increment(p, za, c, ra)
                q = rot * rc / c
                c = c - (np.real(rot * wc) - level) * np.conj(q) / abs(q) ** 2
            out.append(c)
            if with_values:
                wout.append(wa + _gl_increment(p, za, c, ra))
                rout.append(complex(_sqrt_near(p, c, ra)))
        out.append(b)
        wout.append(ws[k + 1])
        rout.append(rs[k + 1])
    if with_values:
        return np.array(out), np.array(wout), np.array(rout)
    return np.array(out)


def smooth_resample(points, step):
    return resample(np.asarray(points, dtype=complex), step)


# --- homotopy class -----------------------------------------------------


def _arg_0_2pi(z):
    a = np.angle(z)
    return np.where(a < 0, a + 2 * np.pi, a)


def homotopy_class(arc, p):
    """'F_A' if ``arc`` (zeta- -> zeta+) deforms in C\\{0} off the positive axis."""
    arc = np.asarray(arc, dtype=complex)
    scale = 1e-12 * (1.0 + np.max(np.abs(arc)))
    if polyline_distance(arc, 0.0)[0] < scale:
        raise ArcThroughOrigin("arc passes through the origin")
    cont = float(np.sum(np.angle(arc[1:] / arc[:-1])))
    ref = float(_arg_0_2pi(arc[-1]) - _arg_0_2pi(arc[0]))
    k = int(np.rint((cont - ref) / (2 * np.pi)))
    return "F_A" if k == 0 else "complement"


def period(traj, p):
    """One-sided integral of R_+/t along a zero-to-zero arc (left side of travel)."""
    return complex(traj.w_values[-1] - traj.w_values[0])


def _orient_plus(traj, p, cut):
    """Re-sign w so that R matches the left-side boundary value of r_global."""
    pts = traj.points
    k = len(pts) // 2
    r_plus = r_global(p, pts[k], cut, side="+")
    rk = traj.r_values[k]
    sgn = 1.0 if np.real(rk * np.conj(r_plus)) >= 0 else -1.0
    traj.w_values = sgn * traj.w_values
    traj.r_values = sgn * traj.r_values
    return traj


def find_short_trajectories(p, stop=None):
    """All horizontal critical arcs from zeta- that end at zeta+ (oriented -> +)."""
    p.require_regular()
    out = []
    for d in emanating_directions(p, "-", HORIZONTAL):
        t = trace(p, p.zeta_minus, d, HORIZONTAL, stop)
        if t.terminal.kind == "zero" and t.terminal.zero == "+":
            _orient_plus(t, p, t.points)
            t.meta["homotopy_class"] = homotopy_class(t.points, p)
            out.append(t)
    return out


def find_short_trajectory(p, stop=None):
    """The short trajectory in the class F_A, oriented zeta- -> zeta+."""
    arcs = find_short_trajectories(p, stop)
    if not arcs:
        raise NotFound(f"no short trajectory found for A={p.a}")
    good = [t for t in arcs if t.meta["homotopy_class"] == "F_A"] or arcs
    # tie-break: period closest to 2 pi i
    good.sort(key=lambda t: abs(period(t, p) - 2j * np.pi))
    return good[0]


# --- critical graph -------------------------------------------------------


@dataclass
class CriticalGraph:
    p: object
    gamma: Trajectory
    sigma0: Trajectory
    sigma_minus: Trajectory
    sigma_up: Trajectory
    sigma_down: Trajectory
    _plus_poly: np.ndarray = None
    _minus2_poly: np.ndarray = None

    def arcs(self):
        return {"gamma": self.gamma, "sigma0": self.sigma0, "sigma_minus": self.sigma_minus,
                "sigma_up": self.sigma_up, "sigma_down": self.sigma_down}

    def face_of(self, z):
        """Face label(s) of point(s) z: Omega+, Omega-(1) or Omega-(2)."""
        scalar = np.ndim(z) == 0
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        plus = points_in_polygon(self._plus_poly, z)
        m2 = points_in_polygon(self._minus2_poly, z)
        lab = np.where(plus, OMEGA_PLUS, np.where(m2, OMEGA_MINUS_2, OMEGA_MINUS_1))
        return str(lab[0]) if scalar else lab

    def terminal_multiset(self):
        return sorted(t.terminal.label() for t in self.arcs().values())


def _close_via(path, through):
    """Close an open path whose ends lie far out by a large arc through ``through``."""
    big = 1e3 * np.max(np.abs(path))
    a_end, a_start = path[-1], path[0]
    e1 = a_end / abs(a_end) * big
    e0 = a_start / abs(a_start) * big
    t1, t0 = np.angle(e1), np.angle(e0)
    tt = np.angle(through)
    # go from t1 to t0 passing tt
    ccw = (t0 - t1) % (2 * np.pi)
    if (tt - t1) % (2 * np.pi) <= ccw:
        angs = t1 + np.linspace(0, ccw, 200)
    else:
        cw = (t1 - t0) % (2 * np.pi)
        angs = t1 - np.linspace(0, cw, 200)
    return np.concatenate([path, [e1], big * np.exp(1j * angs), [e0]])


def build_critical_graph(p, stop=None):
    """Trace the five critical horizontal arcs and set up the face classifier."""
    p.require_regular()
    if not p.a.imag > 0:
        from .errors import DegenerateParameter

        raise DegenerateParameter("the critical graph is assembled for Im A > 0")
    from_minus = [trace(p, p.zeta_minus, d, HORIZONTAL, stop) for d in emanating_directions(p, "-")]
    from_plus = [trace(p, p.zeta_plus, d, HORIZONTAL, stop) for d in emanating_directions(p, "+")]

    def pick(trs, pred, name):
        hits = [t for t in trs if pred(t.terminal)]
        if len(hits) != 1:
            labels = [t.terminal.label() for t in trs]
            raise GraphInconsistent(f"{name}: expected one arc, terminals {labels}")
        return hits[0]

    gamma = pick(from_minus, lambda t: t.kind == "zero" and t.zero == "+", "gamma")
    _orient_plus(gamma, p, gamma.points)
    gamma.meta["homotopy_class"] = homotopy_class(gamma.points, p)
    sigma0 = pick(from_minus, lambda t: t.kind == "origin", "sigma0")
    sigma_minus = pick(from_minus, lambda t: t.kind == "infinity" and t.direction == "-i", "sigma_minus")
    pick(from_plus, lambda t: t.kind == "zero" and t.zero == "-", "gamma (reverse)")
    sigma_up = pick(from_plus, lambda t: t.kind == "infinity" and t.direction == "+i", "sigma_up")
    sigma_down = pick(from_plus, lambda t: t.kind == "infinity" and t.direction == "-i", "sigma_down")
    g = CriticalGraph(p, gamma, sigma0, sigma_minus, sigma_up, sigma_down)
    left = np.concatenate([sigma_minus.points[::-1], gamma.points[1:], sigma_up.points[1:]])
    g._plus_poly = _close_via(left, -1.0)
    right = np.concatenate([sigma_down.points[::-1], sigma_up.points[1:]])
    g._minus2_poly = _close_via(right, 1.0)
    return g


def orthogonal_critical_graph(p, stop=None):
    """The six orthogonal critical arcs (three from each zero)."""
    p.require_regular()
    arcs = []
    for at in ("-", "+"):
        for d in emanating_directions(p, at, ORTHOGONAL):
            arcs.append(trace(p, p.zero(at), d, ORTHOGONAL, stop))
    boundary = abs(p.a.real) < 1e-12 or abs(p.a.real + 1.0) < 1e-12
    if boundary:
        raise BoundaryCase(f"Re A = {p.a.real}: closed orthogonal trajectory structure", arcs)
    return arcs


def crossings_with(path, arc_points):
    """Signed crossings of the polyline ``path`` with ``arc_points``."""
    out = []
    path = np.asarray(path, dtype=complex)
    for i, (a, b) in enumerate(zip(path[:-1], path[1:])):
        for t, k, s, side in segment_crossings(a, b, arc_points):
            out.append((i + t, k + s, side))
    return out
