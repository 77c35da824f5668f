"""SVG pictures of walks with their frontier."""

from __future__ import annotations

from xml.sax.saxutils import quoteattr

import numpy as np

from .grid_geometry import edges_of_path
from .sim import Walk


def _fmt(v: float) -> str:
    return f"{v:g}"


def render_svg(walk: Walk, frontier=None, *, annuli=(), boxes=(), scale: float = 4.0,
               margin: float = 2.0) -> str:
    """One <path> per distinct walk edge, the frontier as one more <path>
    (class "frontier"), then optional circles and rectangles.

    ``frontier`` is a FrontierCurve or an (L+1, 2) vertex array.  ``annuli``
    holds (cx, cy, r, R) tuples and ``boxes`` (x0, y0, x1, y1) in lattice units.
    """
    verts = walk.vertices
    pts = [verts]
    fv = None
    if frontier is not None:
        fv = np.asarray(getattr(frontier, "vertices", frontier))
        pts.append(fv)
    for cx, cy, r, R in annuli:
        pts.append(np.array([[cx - R, cy - R], [cx + R, cy + R]]))
    for x0, y0, x1, y1 in boxes:
        pts.append(np.array([[x0, y0], [x1, y1]]))
    allp = np.vstack(pts)
    x0, y0 = allp.min(axis=0) - margin
    x1, y1 = allp.max(axis=0) + margin
    w, h = x1 - x0, y1 - y0
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{_fmt(x0)} {_fmt(-y1)} {_fmt(w)} {_fmt(h)}" '
           f'width="{_fmt(w * scale)}" height="{_fmt(h * scale)}">',
           '<g class="walk" stroke="#7a8fa6" stroke-width="0.3" fill="none" stroke-linecap="round">']
    for x, y, o in edges_of_path(verts).tolist():
        ex, ey = (x + 1, y) if o == 0 else (x, y + 1)
        out.append(f'<path d="M{x} {-y}L{ex} {-ey}"/>')
    out.append("</g>")
    if fv is not None:
        d = "".join(("M" if i == 0 else "L") + f"{int(a)} {-int(b)}" for i, (a, b) in enumerate(fv.tolist()))
        out.append(f'<path class="frontier" d={quoteattr(d)} stroke="#c0392b" stroke-width="0.5" '
                   'fill="none" stroke-linejoin="round"/>')
    for cx, cy, r, R in annuli:
        for rad in (r, R):
            out.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(-cy)}" r="{_fmt(rad)}" stroke="#2c7a3f" '
                       'stroke-width="0.3" fill="none"/>')
    for bx0, by0, bx1, by1 in boxes:
        out.append(f'<rect x="{_fmt(bx0)}" y="{_fmt(-by1)}" width="{_fmt(bx1 - bx0)}" '
                   f'height="{_fmt(by1 - by0)}" stroke="#8e44ad" stroke-width="0.3" fill="none"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
