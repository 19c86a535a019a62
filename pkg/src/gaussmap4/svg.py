"""Static SVG figures of singular curves and their images on S_i.

Left panels show each chart domain with its traced singular curves and cusp
markers; the right panel shows the singular values on S_i, stereographically
projected from the point antipodal to their mean direction.  Output is
plain SVG 1.1 with fixed number formatting, so identical input gives
byte-identical files.
"""

from __future__ import annotations

import numpy as np

from .atlas import ImplicitDomain

PANEL = 280
PAD = 16
COLORS = ("#1f5fa8", "#b2182b", "#1a9850", "#7b3294", "#e08214", "#4d4d4d")


def _fmt(x):
    return f"{x:.2f}"


class _Canvas:
    def __init__(self, width, height):
        self.w, self.h = width, height
        self.items = []

    def polyline(self, pts, color, width=1.2, closed=False):
        if len(pts) < 2:
            return
        tag = "polygon" if closed else "polyline"
        body = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
        self.items.append(f'<{tag} points="{body}" fill="none" stroke="{color}" stroke-width="{width}"/>')

    def circle(self, x, y, r, color, fill="none"):
        self.items.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(r)}" stroke="{color}" fill="{fill}"/>')

    def rect(self, x, y, w, h):
        self.items.append(f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" height="{_fmt(h)}" '
                          f'fill="none" stroke="#999999" stroke-width="0.6"/>')

    def text(self, x, y, s, size=11):
        s = s.replace("&", "&amp;").replace("<", "&lt;")
        self.items.append(f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-family="sans-serif" font-size="{size}">{s}</text>')

    def render(self):
        head = (f'<?xml version="1.0" encoding="UTF-8"?>\n'
                f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{self.w}" '
                f'height="{self.h}" viewBox="0 0 {self.w} {self.h}">\n')
        return head + "\n".join(self.items) + ("\n" if self.items else "") + "</svg>\n"


class _Frame:
    """Affine map of a data box into a square panel (y axis pointing up)."""

    def __init__(self, box, x0, y0, size=PANEL):
        umin, umax, vmin, vmax = box
        span = max(umax - umin, vmax - vmin) or 1.0
        self.s = (size - 2 * PAD) / span
        self.cx, self.cy = 0.5 * (umin + umax), 0.5 * (vmin + vmax)
        self.ox, self.oy = x0 + size / 2, y0 + size / 2

    def __call__(self, pts):
        pts = np.atleast_2d(pts)
        return np.stack([self.ox + (pts[:, 0] - self.cx) * self.s,
                         self.oy - (pts[:, 1] - self.cy) * self.s], 1)


def _domain_outline(atlas, chart, n=256):
    dom = chart.domain
    if isinstance(dom, ImplicitDomain):
        phi = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        r, _ = dom.boundary_radius(phi, atlas.params)
        return np.stack([dom.center[0] + r * np.cos(phi), dom.center[1] + r * np.sin(phi)], 1)
    return np.array([[dom.umin, dom.vmin], [dom.umax, dom.vmin], [dom.umax, dom.vmax], [dom.umin, dom.vmax]])


def _stereo(points, axis):
    """Stereographic projection of points on a sphere (any radius) from -axis."""
    R = np.linalg.norm(points, axis=1, keepdims=True)
    p = points / R
    a = axis / np.linalg.norm(axis)
    e1 = np.cross(a, [1.0, 0.0, 0.0] if abs(a[0]) < 0.9 else [0.0, 1.0, 0.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(a, e1)
    den = 1.0 + p @ a
    return np.stack([(p @ e1) / den, (p @ e2) / den], 1)


def _component_row(cv, atlas, top, sset, classification, title):
    charts = atlas.charts
    ncol = min(len(charts), 2)
    if title:
        cv.text(PAD, top + 11, title)
    top += 16
    pieces = [] if sset is None else sset.pieces
    cusps = [] if classification is None else classification.cusps
    for j, chart in enumerate(charts):
        x0 = PAD + (j % ncol) * PANEL
        y0 = top + (j // ncol) * PANEL
        cv.rect(x0, y0, PANEL, PANEL)
        fr = _Frame(chart.domain.bbox, x0, y0)
        cv.polyline(fr(_domain_outline(atlas, chart)), "#999999", 0.8, closed=True)
        cv.text(x0 + 4, y0 + 12, chart.name, 10)
        for k, pc in enumerate(pieces):
            if pc.chart == chart.name:
                cv.polyline(fr(pc.points), COLORS[k % len(COLORS)], closed=pc.closed)
        for c in cusps:
            if c.chart == chart.name:
                (x, y), = fr(c.location)
                cv.circle(x, y, 3.5, "#000000", "#000000" if c.sign < 0 else "#ffffff")
    # image panel
    x0 = PAD * 2 + ncol * PANEL
    cv.rect(x0, top, PANEL, PANEL)
    cv.text(x0 + 4, top + 12, "singular values", 10)
    if classification is not None and classification.samples:
        allimg = np.vstack([s.image for s in classification.samples])
        axis = allimg.mean(0)
        if np.linalg.norm(axis) < 1e-9 * np.linalg.norm(allimg, axis=1).max():
            axis = np.array([0.0, 0.0, 1.0])
        proj = [_stereo(s.image, axis) for s in classification.samples]
        allp = np.vstack(proj)
        lo, hi = allp.min(0), allp.max(0)
        fr = _Frame((lo[0], hi[0], lo[1], hi[1]), x0, top)
        for k, (s, p) in enumerate(zip(classification.samples, proj)):
            cv.polyline(fr(p), COLORS[k % len(COLORS)], closed=s.closed)
        for c in cusps:
            (x, y), = fr(_stereo(c.image[None], axis))
            cv.circle(x, y, 3.5, "#000000", "#000000" if c.sign < 0 else "#ffffff")


def singular_figure(atlas, rows):
    """SVG text with one row per component.

    ``rows`` is a list of ``(title, singular_set, classification)``; either of
    the last two may be None, which draws the chart domains only.  Cusps are
    drawn as filled (negative) or open (positive) circles.
    """
    ncol = min(len(atlas.charts), 2)
    nrow = max((len(atlas.charts) + ncol - 1) // ncol, 1)
    row_h = nrow * PANEL + 16 + PAD
    cv = _Canvas(ncol * PANEL + PANEL + 3 * PAD, max(len(rows), 1) * row_h + PAD)
    for r, (title, sset, cls) in enumerate(rows):
        _component_row(cv, atlas, PAD + r * row_h, sset, cls, title)
    return cv.render()


def write_svg(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
