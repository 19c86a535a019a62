"""Surface definition files.

A surface file is line-oriented text made of sections::

    # comment
    [surface]
    name = example
    topology_hint = 0

    [params]
    R = 1

    [define]
    h = (R^2 - u^2 - v^2) / 2

    [chart A]
    x1 = u
    x2 = v
    x3 = sqrt(h)
    x4 = 0
    domain = rect
    u = -1, 1
    v = -1, 1
    orientation = 1

    [glue]
    A.umin = A.umax
    A.vmin = B.vmin reversed
    A.vmax = point

    [options]
    grid = 256

    [expected]
    chi_plus_1 = 2

Values of ``[params]`` are constant expressions.  ``[define]`` entries are
expressions in u, v and the parameters that may be used by name in later
definitions, chart coordinates and domain functions.  Rectangle charts take
``u``/``v`` ranges (constant expressions); implicit charts take ``domain =
implicit`` with ``h``, ``k`` (the domain is {h >= 0, k >= 0}), ``bbox = umin,
umax, vmin, vmax`` and an optional ``center``.  Glue lines identify two sides
(rectangle sides match by edge parameter, implicit sides "h"/"k" match
pointwise) or collapse a side to a point.  Unknown sections and keys are
rejected with their line and column.  ``[expected]`` holds numeric reference
values that reports print next to the computed ones; they are never used in
a computation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from . import exprlang as el
from .atlas import Atlas, ExprChart, Glue, ImplicitDomain, RectDomain
from .errors import ParseError

CHART_KEYS = ("x1", "x2", "x3", "x4", "domain", "u", "v", "h", "k", "bbox", "center", "orientation")
OPTION_KEYS = ("grid", "tol", "component", "method", "mesh", "quad")
SURFACE_KEYS = ("name", "topology_hint")


@dataclass
class Entry:
    key: str
    value: str
    line: int
    col: int        # column of the value


@dataclass
class ChartSpec:
    name: str
    entries: dict = field(default_factory=dict)   # key -> Entry


@dataclass
class SurfaceFile:
    name: str = "surface"
    topology_hint: int | None = None
    params: dict = field(default_factory=dict)      # name -> Entry
    defines: dict = field(default_factory=dict)     # name -> Entry
    charts: list = field(default_factory=list)
    glue: list = field(default_factory=list)        # Entry(key=lhs, value=rhs)
    options: dict = field(default_factory=dict)     # name -> Entry
    expected: dict = field(default_factory=dict)    # name -> Entry (reference values)

    # evaluation -------------------------------------------------------------

    def param_values(self, overrides=None):
        vals = {}
        for name, e in self.params.items():
            expr = el.parse(e.value, set(vals), e.line, e.col)
            vals[name] = float(el.evaluate(expr, 0.0, 0.0, vals))
        for name, value in (overrides or {}).items():
            if name not in self.params:
                raise ParseError(f"unknown parameter {name!r} in override")
            vals[name] = float(value)
        return vals

    def _defs(self, known):
        defs = {}
        for name, e in self.defines.items():
            defs[name] = el.parse(e.value, set(known) | set(defs), e.line, e.col)
        return defs

    def option(self, name, default=None, kind=float):
        e = self.options.get(name)
        if e is None:
            return default
        try:
            return kind(e.value)
        except ValueError:
            raise ParseError(f"bad value for option {name!r}: {e.value!r}", e.line, e.col) from None

    def build(self, overrides=None):
        """Construct the :class:`~gaussmap4.atlas.Atlas` described by the file."""
        params = self.param_values(overrides)
        defs = self._defs(params)
        known = set(params) | set(defs)

        def expr(e):
            return el.substitute(el.parse(e.value, known, e.line, e.col), defs)

        def const_list(e, n):
            parts = _split(e, n)
            return [float(el.evaluate(el.parse(t, set(params), e.line, c), 0.0, 0.0, params))
                    for t, c in parts]

        charts = []
        for spec in self.charts:
            ent = spec.entries
            for key in ("x1", "x2", "x3", "x4", "domain"):
                if key not in ent:
                    raise ParseError(f"chart {spec.name!r} lacks {key!r}", _first_line(spec), 1)
            coords = tuple(expr(ent[f"x{j}"]) for j in range(1, 5))
            kind = ent["domain"].value.strip()
            if kind == "rect":
                for key in ("u", "v"):
                    if key not in ent:
                        raise ParseError(f"rect chart {spec.name!r} lacks {key!r}", _first_line(spec), 1)
                u0, u1 = const_list(ent["u"], 2)
                v0, v1 = const_list(ent["v"], 2)
                dom = RectDomain(u0, u1, v0, v1)
            elif kind == "implicit":
                for key in ("h", "k", "bbox"):
                    if key not in ent:
                        raise ParseError(f"implicit chart {spec.name!r} lacks {key!r}", _first_line(spec), 1)
                center = tuple(const_list(ent["center"], 2)) if "center" in ent else (0.0, 0.0)
                dom = ImplicitDomain(expr(ent["h"]), expr(ent["k"]), tuple(const_list(ent["bbox"], 4)), center)
            else:
                e = ent["domain"]
                raise ParseError(f"domain must be 'rect' or 'implicit', got {kind!r}", e.line, e.col)
            orient = 1
            if "orientation" in ent:
                e = ent["orientation"]
                if e.value.strip() not in ("1", "+1", "-1"):
                    raise ParseError("orientation must be 1 or -1", e.line, e.col)
                orient = int(e.value)
            charts.append(ExprChart(spec.name, coords, dom, orient))
        names = {c.name for c in charts}
        glue = []
        for g in self.glue:
            a, sa = _side_ref(g.key, g.line, 1, names)
            rhs = g.value.split()
            if rhs == ["point"]:
                glue.append(Glue(a, sa))
                continue
            rev = False
            if len(rhs) == 2 and rhs[1] == "reversed":
                rev = True
            elif len(rhs) != 1:
                raise ParseError("glue target must be CHART.SIDE [reversed] or 'point'", g.line, g.col)
            b, sb = _side_ref(rhs[0], g.line, g.col, names)
            glue.append(Glue(a, sa, b, sb, rev))
        return Atlas(charts, glue, params, self.topology_hint, self.name)

    # printing ---------------------------------------------------------------

    def to_text(self):
        out = ["[surface]", f"name = {self.name}"]
        if self.topology_hint is not None:
            out.append(f"topology_hint = {self.topology_hint}")
        for title, table in (("params", self.params), ("define", self.defines)):
            if table:
                out += ["", f"[{title}]"] + [f"{k} = {e.value}" for k, e in table.items()]
        for spec in self.charts:
            out += ["", f"[chart {spec.name}]"] + [f"{k} = {e.value}" for k, e in spec.entries.items()]
        if self.glue:
            out += ["", "[glue]"] + [f"{g.key} = {g.value}" for g in self.glue]
        if self.options:
            out += ["", "[options]"] + [f"{k} = {e.value}" for k, e in self.options.items()]
        if self.expected:
            out += ["", "[expected]"] + [f"{k} = {e.value}" for k, e in self.expected.items()]
        return "\n".join(out) + "\n"

    def canonical(self):
        """Content comparison key (ignores comments, whitespace and line numbers)."""
        return self.to_text()


def _first_line(spec):
    return min((e.line for e in spec.entries.values()), default=1)


def _split(e, n):
    parts, col = [], e.col
    for piece in e.value.split(","):
        lead = len(piece) - len(piece.lstrip())
        parts.append((piece.strip(), col + lead))
        col += len(piece) + 1
    if len(parts) != n or any(not p for p, _ in parts):
        raise ParseError(f"expected {n} comma-separated values", e.line, e.col)
    return parts


_SIDE = re.compile(r"^([A-Za-z_][\w+\-]*)\.(umin|umax|vmin|vmax|h|k)$")


def _side_ref(text, line, col, names):
    m = _SIDE.match(text.strip())
    if not m:
        raise ParseError(f"bad side reference {text.strip()!r}", line, col)
    if m.group(1) not in names:
        raise ParseError(f"unknown chart {m.group(1)!r}", line, col)
    return m.group(1), m.group(2)


_HEADER = re.compile(r"^\[\s*([a-z]+)(?:\s+([A-Za-z_][\w+\-]*))?\s*\]$")
_NAME = re.compile(r"^[A-Za-z_][\w.+\-]*$")


def loads(text):
    """Parse surface-file text; raises :class:`ParseError` with line and column."""
    sf = SurfaceFile()
    section, chart = None, None
    seen_charts = set()
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        body = line.strip()
        if body.startswith("["):
            m = _HEADER.match(body)
            if not m:
                raise ParseError(f"bad section header {body!r}", ln, indent + 1)
            kind, arg = m.group(1), m.group(2)
            if kind == "chart":
                if not arg:
                    raise ParseError("chart section needs a name", ln, indent + 1)
                if arg in seen_charts:
                    raise ParseError(f"duplicate chart {arg!r}", ln, indent + 1)
                seen_charts.add(arg)
                chart = ChartSpec(arg)
                sf.charts.append(chart)
            elif kind in ("surface", "params", "define", "glue", "options", "expected") and not arg:
                chart = None
            else:
                raise ParseError(f"unknown section {body!r}", ln, indent + 1)
            section = kind
            continue
        if "=" not in body:
            raise ParseError("expected 'key = value'", ln, indent + 1)
        key, value = body.split("=", 1)
        vcol = indent + len(key) + 2 + (len(value) - len(value.lstrip()))
        key, value = key.strip(), value.strip()
        if not value:
            raise ParseError(f"empty value for {key!r}", ln, vcol)
        entry = Entry(key, value, ln, vcol)
        if section is None:
            raise ParseError("entry outside of any section", ln, indent + 1)
        if section != "glue" and not _NAME.match(key):
            raise ParseError(f"bad key {key!r}", ln, indent + 1)
        if section == "surface":
            if key not in SURFACE_KEYS:
                raise ParseError(f"unknown key {key!r} in [surface]", ln, indent + 1)
            if key == "name":
                sf.name = value
            else:
                try:
                    sf.topology_hint = int(value)
                except ValueError:
                    raise ParseError("topology_hint must be an integer", ln, vcol) from None
        elif section in ("params", "define"):
            table = sf.params if section == "params" else sf.defines
            if key in sf.params or key in sf.defines or key in el.VARIABLES or key in el.CONSTANTS:
                raise ParseError(f"name {key!r} already in use", ln, indent + 1)
            table[key] = entry
        elif section == "chart":
            if key not in CHART_KEYS:
                raise ParseError(f"unknown key {key!r} in chart {chart.name!r}", ln, indent + 1)
            if key in chart.entries:
                raise ParseError(f"duplicate key {key!r}", ln, indent + 1)
            chart.entries[key] = entry
        elif section == "glue":
            sf.glue.append(entry)
        elif section == "options":
            if key not in OPTION_KEYS:
                raise ParseError(f"unknown option {key!r}", ln, indent + 1)
            sf.options[key] = entry
        elif section == "expected":
            try:
                float(value)
            except ValueError:
                raise ParseError(f"expected value for {key!r} must be a number", ln, vcol) from None
            sf.expected[key] = entry
    # syntax-check every expression now so errors carry locations
    params = set(sf.params)
    for name, e in sf.params.items():
        el.parse(e.value, params, e.line, e.col)
    known = params | set(sf.defines)
    for e in sf.defines.values():
        el.parse(e.value, known, e.line, e.col)
    for spec in sf.charts:
        for key, e in spec.entries.items():
            if key in ("x1", "x2", "x3", "x4", "h", "k"):
                el.parse(e.value, known, e.line, e.col)
    return sf


def load(path):
    return loads(Path(path).read_text())


def load_atlas(path, overrides=None):
    return load(path).build(overrides)
