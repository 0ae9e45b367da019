"""CSV, JSON and SVG output.  Complex numbers are written as (re, im) with 17 significant digits."""

import csv
import json
import math
from xml.sax.saxutils import escape

import numpy as np

from .logcomplex import LogComplex

FLOAT_FMT = "{:.17g}"


def fmt(x):
    return FLOAT_FMT.format(float(x))


def write_csv(path, header, rows):
    """Rows may contain complex numbers; each becomes two columns (header gets _re/_im)."""
    rows = [list(r) for r in rows]
    cplx = [any(isinstance(r[i], (complex, np.complexfloating)) for r in rows) for i in range(len(header))]
    head = []
    for h, c in zip(header, cplx):
        head.extend([f"{h}_re", f"{h}_im"] if c else [h])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(head)
        for r in rows:
            out = []
            for v, c in zip(r, cplx):
                if c:
                    v = complex(v)
                    out.extend([fmt(v.real), fmt(v.imag)])
                elif isinstance(v, (float, np.floating)):
                    out.append(fmt(v))
                else:
                    out.append(v)
            w.writerow(out)
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def polylines_csv(path, arcs):
    """One row per vertex: arc name, vertex index, re, im."""
    rows = []
    for name, pts in arcs.items():
        for k, z in enumerate(np.asarray(pts, dtype=complex)):
            rows.append([name, k, fmt(z.real), fmt(z.imag)])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["arc", "index", "re", "im"])
        w.writerows(rows)
    return path


def trajectory_csv(path, traj):
    """Columns s (arclength), re z, im z, re w, im w."""
    pts = np.asarray(traj.points, dtype=complex)
    s = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(pts)))])
    w = np.asarray(traj.w_values, dtype=complex)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["s", "re_z", "im_z", "re_w", "im_w"])
        for si, z, wi in zip(s, pts, w):
            out.writerow([fmt(si), fmt(z.real), fmt(z.imag), fmt(wi.real), fmt(wi.imag)])
    return path


def to_jsonable(obj):
    if isinstance(obj, LogComplex):
        return {"log_re": obj.log_value.real, "log_im": obj.log_value.imag, "zero": obj.zero_flag}
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.ndarray):
        if obj.ndim == 0:
            return to_jsonable(obj.item())
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return obj


def dumps(obj):
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True)


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj) + "\n")
    return path


# --- SVG --------------------------------------------------------------------------

PALETTE = ["#1f4e9c", "#b8321a", "#2a7f3f", "#7a3d99", "#c98a10", "#333333"]


def _bounds(items, pad=0.08):
    pts = np.concatenate([np.asarray(p, dtype=complex).ravel() for p in items if len(p)])
    pts = pts[np.isfinite(pts)]
    x0, x1 = pts.real.min(), pts.real.max()
    y0, y1 = pts.imag.min(), pts.imag.max()
    dx, dy = max(x1 - x0, 1e-9), max(y1 - y0, 1e-9)
    return x0 - pad * dx, x1 + pad * dx, y0 - pad * dy, y1 + pad * dy


def svg_overlay(path, solid=None, dashed=None, dots=None, window=None, width=640, title=None):
    """Arcs in ``solid`` drawn as lines, ``dashed`` as dashed lines, ``dots`` as filled circles.

    Each argument maps a label to a point array.  ``window`` = (x0, x1, y0, y1)
    clips the view; by default it fits everything drawn.
    """
    solid, dashed, dots = solid or {}, dashed or {}, dots or {}
    if window is None:
        window = _bounds(list(solid.values()) + list(dashed.values()) + list(dots.values()))
    x0, x1, y0, y1 = window
    height = int(round(width * (y1 - y0) / (x1 - x0)))
    sx = width / (x1 - x0)

    def xy(z):
        return (z.real - x0) * sx, (y1 - z.imag) * sx

    def poly(pts):
        pts = np.asarray(pts, dtype=complex)
        pts = pts[np.isfinite(pts)]
        return " ".join("{:.2f},{:.2f}".format(*xy(z)) for z in pts)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f"<title>{escape(title)}</title>")
    # axes through the origin when visible
    if x0 < 0 < x1:
        X, _ = xy(0j)
        out.append(f'<line x1="{X:.2f}" y1="0" x2="{X:.2f}" y2="{height}" stroke="#bbbbbb" stroke-width="0.5"/>')
    if y0 < 0 < y1:
        _, Y = xy(0j)
        out.append(f'<line x1="0" y1="{Y:.2f}" x2="{width}" y2="{Y:.2f}" stroke="#bbbbbb" stroke-width="0.5"/>')
    for k, (name, pts) in enumerate(solid.items()):
        out.append(f'<polyline class="trajectory" data-name="{escape(name)}" fill="none" '
                   f'stroke="{PALETTE[k % len(PALETTE)]}" stroke-width="1.5" points="{poly(pts)}"/>')
    for k, (name, pts) in enumerate(dashed.items()):
        out.append(f'<polyline class="orthogonal" data-name="{escape(name)}" fill="none" '
                   f'stroke="#777777" stroke-width="1" stroke-dasharray="4,3" points="{poly(pts)}"/>')
    for name, pts in dots.items():
        out.append(f'<g class="points" data-name="{escape(name)}" fill="black">')
        for z in np.asarray(pts, dtype=complex):
            if x0 <= z.real <= x1 and y0 <= z.imag <= y1:
                X, Y = xy(z)
                out.append(f'<circle cx="{X:.2f}" cy="{Y:.2f}" r="2"/>')
        out.append("</g>")
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
    return path
