"""Minimal SVG 1.1 plots of planar curves next to their images."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from .errors import UnsupportedDimensionError

PANEL = 360
PAD = 24
STYLE = """
  .domain { fill: none; stroke: #1f77b4; stroke-width: 1.2; }
  .image { fill: none; stroke: #d62728; stroke-width: 1.2; }
  .witness { fill: none; stroke: #2ca02c; stroke-width: 2.4; }
  .cone { fill: #2ca02c; fill-opacity: 0.12; stroke: #2ca02c; stroke-dasharray: 4 3; }
  .frame { fill: none; stroke: #999; }
  text { font: 12px sans-serif; }
"""


def curve_payload(f, curves, samples=200, title=""):
    """Sampled domain curves and their images, ready for :func:`emit_svg`."""
    dom, img = [], []
    for c in curves:
        u = np.linspace(0.0, c.n_pieces, samples * c.n_pieces + 1)
        pts = c.at(u)
        dom.append(pts)
        img.append(f(pts))
    return {"title": title, "domain": dom, "image": img}


def certificate_payload(f, cert, samples=400, title="witness"):
    seg = cert.curve
    pts = seg.at(np.linspace(0.0, 1.0, samples + 1))
    return {"title": title, "domain": [], "image": [], "witness": (pts, f(pts)),
            "cone": {"apex": cert.x, "axis": cert.h0, "half_angle": cert.delta, "radius": cert.R}}


def _cone_outline(cone, arc=48):
    x = np.asarray(cone["apex"], float)
    h = np.asarray(cone["axis"], float)
    base = math.atan2(h[1], h[0])
    ang = base + np.linspace(-cone["half_angle"], cone["half_angle"], arc)
    rim = x + cone["radius"] * np.column_stack([np.cos(ang), np.sin(ang)])
    return np.vstack([x, rim, x])


def _fit(groups):
    pts = np.vstack([g for g in groups if len(g)])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    scale = (PANEL - 2 * PAD) / span

    def tx(p):
        p = np.asarray(p, float)
        return np.column_stack([PAD + (p[:, 0] - lo[0]) * scale, PANEL - PAD - (p[:, 1] - lo[1]) * scale])

    return tx


def _path(points, cls, closed=False):
    d = " ".join(f"{'M' if i == 0 else 'L'}{x:.2f},{y:.2f}" for i, (x, y) in enumerate(points))
    return f'<path class="{cls}" d="{d}{" Z" if closed else ""}"/>'


def emit_svg(payload, path):
    """Write a two-panel SVG: domain curves on the left, images on the right."""
    dom = [np.asarray(c, float) for c in payload.get("domain", [])]
    img = [np.asarray(c, float) for c in payload.get("image", [])]
    wit = payload.get("witness")
    cone = payload.get("cone")
    left, right = list(dom), list(img)
    if wit is not None:
        left.append(np.asarray(wit[0], float))
        right.append(np.asarray(wit[1], float))
    if cone is not None:
        left.append(_cone_outline(cone))
    if not left and not right:
        raise ValueError("nothing to plot")
    for arr in left + right:
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise UnsupportedDimensionError("SVG output needs planar (n = 2) curves")
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{2 * PANEL}" height="{PANEL + 40}">',
             f"<style>{STYLE}</style>",
             f'<text x="{PAD}" y="16">{escape(payload.get("title", ""))}</text>']
    for k, (group, label) in enumerate(((left, "domain"), (right, "image"))):
        if not group:
            continue
        tx = _fit(group)
        parts.append(f'<g transform="translate({k * PANEL},30)">')
        parts.append(f'<rect class="frame" x="0" y="0" width="{PANEL}" height="{PANEL}"/>')
        if k == 0:
            if cone is not None:
                parts.append(_path(tx(_cone_outline(cone)), "cone", closed=True))
            parts += [_path(tx(c), "domain") for c in dom]
            if wit is not None:
                parts.append(_path(tx(wit[0]), "witness"))
        else:
            parts += [_path(tx(c), "image") for c in img]
            if wit is not None:
                parts.append(_path(tx(wit[1]), "witness"))
        parts.append(f'<text x="{PAD}" y="{PANEL - 6}">{label}</text></g>')
    legend = [("domain", "curve"), ("image", "image of curve")]
    if wit is not None:
        legend.append(("witness", "witness segment / image"))
    if cone is not None:
        legend.append(("cone", "search cone"))
    for i, (cls, text) in enumerate(legend):
        x = PANEL + 10 + 170 * (i % 2)
        y = 12 + 14 * (i // 2)
        parts.append(f'<line class="{cls}" x1="{x}" y1="{y - 4}" x2="{x + 18}" y2="{y - 4}"/>')
        parts.append(f'<text x="{x + 22}" y="{y}">{escape(text)}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
