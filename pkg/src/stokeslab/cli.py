"""Command-line interface.

Exit codes: 0 ok, 1 a check failed, 2 bad configuration, 3 numerical failure.
Complex flags take the form ``--a=-3+2i`` (``i`` or ``j``, scientific notation allowed).
"""

import argparse
import math
import os
import re
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import io
from .errors import DegenerateParameter, StokesLabError

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULT_TOLERANCES = {
    "period": 1e-8,
    "mass": 1e-8,
    "constancy": 1e-6,
    "s_property": 1e-4,
    "orthogonality": 1e-8,
    "moment_ratio": 0.7,
    "decay_low": 0.3,
    "decay_high": 0.7,
    "zero_distance": 0.15,
}


class ConfigError(ValueError):
    pass


def parse_complex(text):
    """'-3+2i', '4i', '1e-3-2.5e1i', 'i' -> complex."""
    s = str(text).strip().replace(" ", "").replace("I", "i").replace("J", "j").replace("i", "j")
    s = re.sub(r"(^|[+-])j$", r"\g<1>1j", s)
    try:
        return complex(s)
    except ValueError:
        raise ConfigError(f"cannot parse complex number {text!r}") from None


def parse_int_list(text):
    try:
        out = [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from None
    if not out or any(n < 1 for n in out):
        raise ConfigError(f"degrees must be positive, got {text!r}")
    return out


def parse_complex_list(text):
    return [parse_complex(x) for x in re.split(r"[;,](?![^()]*\))", str(text)) if x.strip()]


def parse_tolerances(items):
    tol = dict(DEFAULT_TOLERANCES)
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"tolerance override must be NAME=VALUE, got {item!r}")
        key, val = item.split("=", 1)
        if key not in tol:
            raise ConfigError(f"unknown tolerance {key!r}; known: {', '.join(sorted(tol))}")
        try:
            v = float(val)
        except ValueError:
            raise ConfigError(f"tolerance {key} is not a number: {val!r}") from None
        if not math.isfinite(v) or v <= 0:
            raise ConfigError(f"tolerance {key} must be positive and finite, got {val}")
        tol[key] = v
    return tol


@dataclass
class RunConfig:
    command: str
    a: complex = complex(-3, 2)
    n_list: list = field(default_factory=lambda: [30])
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output: str = "."
    seed: int = 0
    options: dict = field(default_factory=dict)

    def path(self, name):
        os.makedirs(self.output, exist_ok=True)
        return os.path.join(self.output, name)


def _emit(obj):
    print(io.dumps(obj))


def _setup(a):
    from .core import zeros_of_d
    from .trajectories import build_critical_graph

    p = zeros_of_d(a)
    if p.degenerate:
        raise DegenerateParameter(f"degenerate parameter A = {a}")
    return p, build_critical_graph(p)


def _conj_pts(pts, p):
    pts = np.asarray(pts, dtype=complex)
    return np.conj(pts) if p.conjugated else pts


# --- commands ------------------------------------------------------------------------


def cmd_graph(cfg):
    from .trajectories import orthogonal_critical_graph, period

    p, g = _setup(cfg.a)
    arcs = {k: _conj_pts(t.points, p) for k, t in g.arcs().items()}
    dashed = {}
    summary = {
        "a": cfg.a,
        "zeta_minus": _conj_pts(p.zeta_minus, p),
        "zeta_plus": _conj_pts(p.zeta_plus, p),
        "terminals": {k: t.terminal.label() for k, t in g.arcs().items()},
        "sigma0_winding": g.sigma0.meta.get("winding"),
        "period": period(g.gamma, p),
    }
    if cfg.options.get("orthogonal"):
        try:
            orth = orthogonal_critical_graph(p)
        except StokesLabError as exc:
            orth = getattr(exc, "structure", None) or []
            summary["orthogonal_note"] = str(exc)
        for k, t in enumerate(orth):
            dashed[f"orthogonal_{k}"] = _conj_pts(t.points, p)
        summary["orthogonal_terminals"] = [t.terminal.label() for t in orth]
    io.polylines_csv(cfg.options.get("csv") or cfg.path("graph.csv"), {**arcs, **dashed})
    if not p.conjugated:
        for name, t in g.arcs().items():
            io.trajectory_csv(cfg.path(f"trajectory_{name}.csv"), t)
    svg = cfg.options.get("svg") or cfg.path("graph.svg")
    span = 2.5 * max(abs(p.zeta_minus), abs(p.zeta_plus), 1.0)
    io.svg_overlay(svg, solid=arcs, dashed=dashed,
                   dots={"zeros": _conj_pts([p.zeta_minus, p.zeta_plus, 0], p)},
                   window=(-span, span, -span, span), title=f"critical graph A={cfg.a}")
    summary["svg"] = svg
    _emit(summary)
    return EXIT_OK


def cmd_figure1(cfg):
    from .asymptotics import geometry, zero_side_check
    from .laguerre import rescaled_zeros

    geo = geometry(cfg.a)
    gam = _conj_pts(geo.dense, geo.p)
    reports = []
    for n in cfg.n_list:
        zs = rescaled_zeros(n, cfg.a, seed=cfg.seed)
        rep = zero_side_check(n, cfg.a, zs)
        stem = f"figure1_n{n}"
        io.write_csv(cfg.path(stem + ".csv"), ["zero", "side", "distance"],
                     zip(zs.roots, rep["sides"], rep["distances"]))
        io.svg_overlay(cfg.path(stem + ".svg"), solid={"gamma": gam}, dots={"zeros": zs.roots},
                       title=f"zeros of p_{n}, A={cfg.a}")
        reports.append({"n": n, "max_distance": rep["max_distance"], "plus_side": rep["plus_side"],
                        "minus_side": rep["minus_side"], "inequality_holds": rep["inequality_holds"],
                        "digits": zs.digits})
    out = {"a": cfg.a, "runs": reports}
    if len(reports) > 1:
        d = [r["max_distance"] for r in reports]
        out["distance_decreases"] = all(y < x for x, y in zip(d, d[1:]))
    _emit(out)
    limit = cfg.tolerances["zero_distance"]
    if cfg.options.get("check") and any(r["max_distance"] >= limit for r in reports):
        return EXIT_CHECK
    return EXIT_OK


def cmd_measure(cfg):
    from .equilibrium import build_sigma, check_equilibrium, compute_ell, equilibrium_measure

    p, g = _setup(cfg.a)
    m = int(cfg.options.get("nodes") or 256)
    mu = equilibrium_measure(p, g.gamma, m=m)
    sigma = build_sigma(p, g)
    ell, _ = compute_ell(p, g, sigma)
    chk = check_equilibrium(p, mu, sigma, ell)
    nodes = _conj_pts(mu.nodes, p)
    s = np.abs(nodes[0] - p.zeta_minus) + np.concatenate([[0.0], np.cumsum(np.abs(np.diff(nodes)))])
    io.write_csv(cfg.path("measure.csv"), ["arclength", "node", "density", "weight"],
                 zip(s, nodes, mu.density, mu.weights))
    moments = mu.moments(4)
    _emit({"a": cfg.a, "mass": mu.mass, "moments": np.conj(moments) if p.conjugated else moments,
           "ell": ell.conjugate() if p.conjugated else ell, "check": chk})
    return EXIT_OK if chk["ok"] else EXIT_CHECK


def cmd_gfun(cfg):
    from .equilibrium import build_sigma, compute_ell, equilibrium_measure, g_identity, g_quadrature

    p, g = _setup(cfg.a)
    sigma = build_sigma(p, g)
    ell, _ = compute_ell(p, g, sigma)
    mu = equilibrium_measure(p, g.gamma)
    pts = cfg.options.get("z") or [4 + 4j, -3 + 1j, 2 - 3j]
    rows = []
    for z in pts:
        zz = z.conjugate() if p.conjugated else z
        gi, gq = g_identity(p, g, sigma, ell, zz), g_quadrature(mu, sigma, zz)
        if p.conjugated:
            gi, gq = gi.conjugate(), gq.conjugate()
        rows.append([z, gi, gq, abs(gi - gq)])
    io.write_csv(cfg.path("gfun.csv"), ["z", "g_identity", "g_quadrature", "difference"], rows)
    _emit({"a": cfg.a, "ell": ell.conjugate() if p.conjugated else ell,
           "rows": [{"z": r[0], "identity": r[1], "quadrature": r[2], "difference": r[3]} for r in rows]})
    return EXIT_OK


def _alpha(cfg, n):
    al = cfg.options.get("alpha")
    return al if al is not None else n * cfg.a


def cmd_lag_eval(cfg):
    from .laguerre import LaguerreContext, laguerre_eval

    pts = cfg.options.get("z") or [1.0 + 0j]
    out = []
    for n in cfg.n_list:
        ctx = LaguerreContext(n, _alpha(cfg, n), cfg.options.get("digits"))
        for z in pts:
            v = laguerre_eval(ctx, z)
            out.append({"n": n, "alpha": ctx.alpha, "z": z, "log_value": v.log_value,
                        "value": v.value() if v.log_abs < 700 else None})
    _emit(out)
    return EXIT_OK


def cmd_lag_zeros(cfg):
    from .laguerre import LaguerreContext, zeros

    out = []
    for n in cfg.n_list:
        ctx = LaguerreContext(n, _alpha(cfg, n), cfg.options.get("digits"))
        zs = zeros(ctx, seed=cfg.seed)
        roots = zs.roots / n if cfg.options.get("scaled") else zs.roots
        io.write_csv(cfg.path(f"zeros_n{n}.csv"), ["zero", "log_residual"], zip(roots, zs.residuals))
        out.append({"n": n, "alpha": ctx.alpha, "digits": zs.digits, "iterations": zs.iterations,
                    "max_log_residual": float(np.max(zs.residuals)), "zeros": roots})
    _emit(out)
    return EXIT_OK


def _ortho(a, n):
    from .equilibrium import build_sigma
    from .laguerre import orthogonality_report

    p, g = _setup(a)
    sigma = build_sigma(p, g)
    alpha = n * p.a
    rep = orthogonality_report(n, alpha, sigma)
    return rep


def cmd_ortho_test(cfg):
    tol = cfg.tolerances["orthogonality"]
    out, ok = [], True
    for n in cfg.n_list:
        rep = _ortho(cfg.a, n)
        rel = rep.relative[:-1]
        good = max(rel) < tol and rep.closed_form_error < tol
        ok &= good
        out.append({"n": n, "max_relative": max(rel), "closed_form_error": rep.closed_form_error,
                    "digits": rep.digits, "ok": good})
    _emit(out)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_asymp_compare(cfg):
    from .asymptotics import band_probe_points, compare, decay_fit, outer_probe_points, summarize

    pts = cfg.options.get("z")
    if not pts:
        pts = list(outer_probe_points(cfg.a)) + list(band_probe_points(cfg.a))
    rows, per_n = [], {}
    for n in cfg.n_list:
        table = compare(n, cfg.a, pts)
        per_n[n] = summarize(table)
        rows += [[n, r.z, r.regime, r.log10_error] for r in table]
    io.write_csv(cfg.path("asymptotics.csv"), ["n", "z", "regime", "log10_error"], rows)
    fits = {}
    if len(cfg.n_list) > 1:
        for reg in per_n[cfg.n_list[0]]:
            errs = [per_n[n][reg]["max"] for n in cfg.n_list if reg in per_n[n]]
            if len(errs) == len(cfg.n_list):
                fits[reg] = decay_fit(cfg.n_list, errs)
    _emit({"a": cfg.a, "summary": per_n, "decay": fits})
    return EXIT_OK


# --- verify --------------------------------------------------------------------------


EXPECTED_TERMINALS = sorted(["zero+", "origin", "infinity-i", "infinity+i", "infinity-i"])


def _terminal_key(term):
    return {"zero": "zero" + term.zero, "origin": "origin"}.get(term.kind, "infinity" + term.direction)


def _decay_ok(e1, e2, tol):
    r = e2 / e1
    return tol["decay_low"] <= r <= tol["decay_high"], r


def run_checks(a, quick=False, tol=None):
    """The acceptance checks for one parameter; returns a list of result dicts."""
    from .asymptotics import compare, outer_probe_points
    from .equilibrium import build_sigma, check_equilibrium, compute_ell, equilibrium_measure
    from .laguerre import orthogonality_report, rescaled_zeros, zero_moments
    from .trajectories import period

    tol = tol or dict(DEFAULT_TOLERANCES)
    results = []

    def record(name, ok, **info):
        results.append({"check": name, "ok": bool(ok), **info})

    t0 = time.time()
    p, g = _setup(a)
    err = abs(period(g.gamma, p) - 2j * math.pi)
    record("period", err < tol["period"], error=err)
    keys = sorted(_terminal_key(t.terminal) for t in g.arcs().values())
    record("topology", keys == EXPECTED_TERMINALS,
           terminals=sorted(t.terminal.label() for t in g.arcs().values()))
    sigma = build_sigma(p, g)
    rep = orthogonality_report(8, 8 * p.a, sigma)
    rel = max(rep.relative[:-1])
    record("orthogonality", rel < tol["orthogonality"] and rep.closed_form_error < tol["orthogonality"],
           max_relative=rel, closed_form_error=rep.closed_form_error)
    z0 = outer_probe_points(p.a, count=1)[0]
    e = [compare(n, p.a, [z0])[0].rel_error for n in (20, 40)]
    ok, r = _decay_ok(e[0], e[1], tol)
    record("outer_decay", ok, point=z0, errors=e, ratio=r)
    if not quick:
        ell, _ = compute_ell(p, g, sigma)
        mu = equilibrium_measure(p, g.gamma)
        chk = check_equilibrium(p, mu, sigma, ell)
        record("equilibrium", chk["ok"], mass=chk["mass"], stdev=chk["stdev_on_gamma"],
               min_excess=chk["min_excess_on_sigma"], s_property=chk["s_property_mismatch"])
        m = mu.moments(3)
        errs = [np.abs(zero_moments(rescaled_zeros(n, p.a), 3)[1:] - m) for n in (20, 40)]
        big = errs[0] > 1e-10
        ratio = float(np.max(errs[1][big] / errs[0][big])) if big.any() else 0.0
        record("weak_moments", ratio <= tol["moment_ratio"], ratio=ratio)
    return results, time.time() - t0


def cmd_verify(cfg):
    results, elapsed = run_checks(cfg.a, cfg.options.get("quick"), cfg.tolerances)
    ok = all(r["ok"] for r in results)
    _emit({"a": cfg.a, "ok": ok, "elapsed": elapsed, "checks": results})
    return EXIT_OK if ok else EXIT_CHECK


COMMANDS = {
    "graph": cmd_graph,
    "figure1": cmd_figure1,
    "measure": cmd_measure,
    "gfun": cmd_gfun,
    "lag-eval": cmd_lag_eval,
    "lag-zeros": cmd_lag_zeros,
    "ortho-test": cmd_ortho_test,
    "asymp-compare": cmd_asymp_compare,
    "verify": cmd_verify,
}


# --- argument handling -----------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    ap = _Parser(prog="stokeslab", description="Laguerre polynomials with varying complex parameters.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, a_default="-3+2i", n_default="30"):
        sp.add_argument("--a", default=a_default, help="parameter A, e.g. --a=-3+2i")
        sp.add_argument("--n", default=n_default, help="degree(s), comma separated")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", action="append", metavar="NAME=VALUE", help="tolerance override")
        return sp

    sp = common(sub.add_parser("graph", help="trace the critical graph"))
    sp.add_argument("--svg")
    sp.add_argument("--csv")
    sp.add_argument("--orthogonal", action="store_true")
    sp = common(sub.add_parser("figure1", help="zeros of p_n over the curve gamma"))
    sp.add_argument("--check", action="store_true", help="exit 1 if a zero is far from gamma")
    sp = common(sub.add_parser("measure", help="equilibrium measure and its checks"))
    sp.add_argument("--nodes", type=int)
    sp = common(sub.add_parser("gfun", help="g-function by identity and by quadrature"))
    sp.add_argument("--z")
    for name in ("lag-eval", "lag-zeros"):
        sp = common(sub.add_parser(name), n_default="10")
        sp.add_argument("--alpha", help="alpha directly (default n*A)")
        sp.add_argument("--digits", type=int)
        sp.add_argument("--z")
        if name == "lag-zeros":
            sp.add_argument("--scaled", action="store_true", help="report zeros of L(nz)")
    common(sub.add_parser("ortho-test", help="orthogonality integrals"), n_default="8")
    sp = common(sub.add_parser("asymp-compare", help="exact vs strong asymptotics"), n_default="20,40,80")
    sp.add_argument("--z")
    sp = common(sub.add_parser("verify", help="run the acceptance checks"), a_default="1+i")
    sp.add_argument("--quick", action="store_true")
    return ap


def _join_negative_values(argv):
    """Allow '--a -3+2i' by gluing option and a value that starts with '-'."""
    out, k = [], 0
    while k < len(argv):
        if argv[k] in ("--a", "--alpha", "--z") and k + 1 < len(argv):
            out.append(f"{argv[k]}={argv[k + 1]}")
            k += 2
        else:
            out.append(argv[k])
            k += 1
    return out


def config_from_args(argv):
    ns = build_parser().parse_args(_join_negative_values(list(argv)))
    opts = {k: v for k, v in vars(ns).items() if k not in ("command", "a", "n", "out", "seed", "tol")}
    if opts.get("alpha") is not None:
        opts["alpha"] = parse_complex(opts["alpha"])
    if opts.get("z"):
        opts["z"] = parse_complex_list(opts["z"])
    if opts.get("digits") is not None and opts["digits"] < 15:
        raise ConfigError("--digits must be >= 15")
    return RunConfig(ns.command, parse_complex(ns.a), parse_int_list(ns.n), parse_tolerances(ns.tol),
                     ns.out, ns.seed, opts)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        from .laguerre import env_precision

        env_precision()
        cfg = config_from_args(argv)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[cfg.command](cfg)
    except DegenerateParameter as exc:
        print(f"degenerate parameter: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StokesLabError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
