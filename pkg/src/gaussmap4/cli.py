"""Command-line interface.

    gaussmap4 invariants FILE [--chart NAME] [--point U,V] [--grid N] [--tol X]
    gaussmap4 singular   FILE [--component I] [--grid N] [--tol X] [--svg PATH]
    gaussmap4 verify-gb  FILE [--grid N] [--tol X]
    gaussmap4 genericity FILE [--component I] [--grid N] [--tol X]

Every command accepts ``--param name=value`` (repeatable) and ``--report
PATH``.  Reports are line-oriented ``key = value`` text with ``#`` comments;
the header lists the built-in defaults and the settings actually used, so a
report can be regenerated from its own header.  Reports go to stdout and, with
``--report``, to a file as well.

Exit codes: 0 success, 1 a verify-gb identity fails, 2 bad input (syntax,
unknown names, unreadable file, bad flags), 3 domain or numerical failure,
4 surface not closed, 5 genericity violation in verify-gb.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import errors
from .invariants import invariants_at
from .singular import (check_G1, check_G2, check_G3, classify_points, rank_scan,
                       trace_singular_set)
from .surface import load
from .svg import singular_figure, write_svg
from .topology import gauss_bonnet_report

# built-in defaults per command; --tol means something different for each
DEFAULTS = {
    "invariants": {"grid": 64, "tol": 1e-8, "method": "auto"},
    "singular": {"grid": 512, "tol": 1e-9, "method": "auto"},
    "verify-gb": {"grid": 512, "tol": 0.02, "mesh": 128, "quad": 64, "method": "auto"},
    "genericity": {"grid": 512, "tol": 1e-6, "method": "auto"},
}
TOL_MEANING = {
    "invariants": "|K| and |Delta| below tol count as flat points",
    "singular": "|transversality| below tol marks a cusp candidate",
    "verify-gb": "GB1 tolerance relative to 2 pi max(|chi|, 1)",
    "genericity": "minimum normalized gradient for (G1)",
}


def fmt(x):
    """Deterministic text for a report value."""
    if isinstance(x, (bool, np.bool_)):
        return "pass" if x else "fail"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if x != x:
            return "nan"
        if x == 0.0:
            return "0"
        return f"{x:.10g}"
    if x is None:
        return "none"
    return str(x)


class Report:
    def __init__(self, command, path, settings, overrides):
        self.lines = [f"# gaussmap4 {command}", f"# file = {Path(path).name}"]
        d = DEFAULTS[command]
        self.lines.append("# defaults: " + ", ".join(f"{k} = {fmt(v)}" for k, v in d.items()))
        self.lines.append(f"# tol: {TOL_MEANING[command]}")
        for k in d:
            self.lines.append(f"# {k} = {fmt(settings[k])}")
        for k, v in sorted(overrides.items()):
            self.lines.append(f"# param {k} = {fmt(v)}")

    def comment(self, text):
        self.lines.append(f"# {text}")

    def __setitem__(self, key, value):
        self.lines.append(f"{key} = {fmt(value)}")

    def text(self):
        return "\n".join(self.lines) + "\n"


# argument handling ------------------------------------------------------------------

def _param(text):
    name, sep, value = text.partition("=")
    if not sep or not name.strip():
        raise argparse.ArgumentTypeError(f"expected name=value, got {text!r}")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"parameter value must be a number: {value!r}") from None


def _point(text):
    try:
        u, v = (float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected U,V, got {text!r}") from None
    return u, v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file", help="surface definition file")
    common.add_argument("--grid", type=int, help="grid resolution per chart")
    common.add_argument("--tol", type=float, help="command tolerance (see report header)")
    common.add_argument("--param", type=_param, action="append", default=[], metavar="NAME=VALUE",
                        help="override a surface parameter")
    common.add_argument("--report", metavar="PATH", help="also write the report to PATH")
    comp = argparse.ArgumentParser(add_help=False)
    comp.add_argument("--component", type=int, choices=(1, 2),
                      help="Gauss map component (default: both)")

    p = argparse.ArgumentParser(prog="gaussmap4", description="Gauss maps of surfaces in R^4")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("invariants", parents=[common], help="K, K^N, Delta, |H|^2, J(g1), J(g2)")
    s.add_argument("--chart", help="chart for --point (default: first chart)")
    s.add_argument("--point", type=_point, metavar="U,V", help="evaluate at one point")
    s = sub.add_parser("singular", parents=[common, comp], help="trace and classify singular curves")
    s.add_argument("--svg", metavar="PATH", help="write a figure of the curves and their images")
    sub.add_parser("verify-gb", parents=[common], help="Gauss-Bonnet type identities")
    sub.add_parser("genericity", parents=[common, comp], help="(G1)-(G3) and Gauss map rank")
    return p


def _settings(args, sf):
    d = DEFAULTS[args.command]
    out = {}
    for key, default in d.items():
        kind = type(default)
        val = sf.option(key, default, kind)
        flag = getattr(args, key, None)
        out[key] = kind(flag) if flag is not None else val
    if out.get("grid", 1) < 2:
        raise errors.ParseError("grid must be at least 2")
    return out


def _components(args):
    return (args.component,) if getattr(args, "component", None) else (1, 2)


# commands ---------------------------------------------------------------------------

FIELDS = ("K", "KN", "Delta", "H2", "Jg1", "Jg2")


def cmd_invariants(args, atlas, st, rep):
    if args.point is not None:
        chart = atlas.chart(args.chart) if args.chart else atlas.charts[0]
        u, v = args.point
        if not chart.domain.contains(np.array([u]), np.array([v]), atlas.params):
            raise errors.OutOfDomain(f"({u}, {v}) lies outside chart {chart.name!r}")
        inv = invariants_at(chart, np.array([u]), np.array([v]), atlas.params, st["method"])
        rep["chart"] = chart.name
        rep["u"], rep["v"] = u, v
        for k, val in inv.as_dict().items():
            rep[k] = float(np.asarray(val).ravel()[0])
        return 0
    charts = [atlas.chart(args.chart)] if args.chart else atlas.charts
    vals = {k: [] for k in FIELDS}
    for chart in charts:
        U, V, mask = atlas.interior_grid(chart, st["grid"])
        inv = invariants_at(chart, U[mask], V[mask], atlas.params, st["method"])
        for k, val in inv.as_dict().items():
            vals[k].append(np.asarray(val))
    vals = {k: np.concatenate(v) for k, v in vals.items()}
    rep["charts"] = " ".join(c.name for c in charts)
    rep["points"] = int(vals["K"].size)
    for k in FIELDS:
        a = vals[k]
        rep[f"{k}.min"] = a.min()
        rep[f"{k}.max"] = a.max()
        rep[f"{k}.maxabs"] = np.abs(a).max()
    flat = (np.abs(vals["K"]) < st["tol"]) & (np.abs(vals["Delta"]) < st["tol"])
    rep["flat_points"] = int(flat.sum())
    return 0


def _singular_sections(rep, atlas, i, st, tol_cusp=1e-9):
    sset = trace_singular_set(atlas, i, st["grid"], st["method"])
    cls = classify_points(atlas, sset, st["method"], t_tol=tol_cusp)
    rep.comment(f"component {i}")
    p = f"g{i}"
    rep[f"{p}.curves"] = len(cls.samples)
    rep[f"{p}.closed_loops"] = len(sset.loops)
    rep[f"{p}.open_chains"] = len(sset.open_chains)
    rep[f"{p}.residual_max"] = sset.residual_max
    rep[f"{p}.g1_grid_witnesses"] = len(sset.g1_violations)
    for k, s in enumerate(cls.samples):
        q = f"{p}.curve.{k}"
        rep[f"{q}.closed"] = "yes" if s.closed else "no"
        rep[f"{q}.charts"] = " ".join(dict.fromkeys(s.charts))
        rep[f"{q}.points"] = len(s.points)
        labels = cls.labels[k]
        for j, (ch, pt) in enumerate(zip(s.charts, s.points)):
            rep[f"{q}.{j}"] = f"{ch} {pt[0]:.9f} {pt[1]:.9f} {labels[j]}"
    rep[f"{p}.cusps"] = len(cls.cusps)
    rep[f"{p}.cusps_plus"] = cls.n_plus
    rep[f"{p}.cusps_minus"] = cls.n_minus
    for k, c in enumerate(cls.cusps):
        rep[f"{p}.cusp.{k}"] = (f"{c.chart} {c.location[0]:.9f} {c.location[1]:.9f} "
                               f"sign={c.sign:+d} tangency={fmt(c.tangency)}")
    rep[f"{p}.degenerate"] = len(cls.degenerate)
    for k, w in enumerate(cls.degenerate):
        rep[f"{p}.degenerate.{k}"] = " ".join(fmt(x) for x in w)
    return sset, cls


def cmd_singular(args, atlas, st, rep):
    rows = []
    for i in _components(args):
        sset, cls = _singular_sections(rep, atlas, i, st, st["tol"])
        rows.append((f"g{i}", sset, cls))
        g1 = check_G1(sset, cls)
        rep[f"g{i}.G1"] = g1.passed
        for k, w in enumerate(g1.witnesses):
            rep[f"g{i}.G1.witness.{k}"] = " ".join(fmt(x) for x in w)
    if args.svg:
        write_svg(args.svg, singular_figure(atlas, rows))
    return 0


def _check_lines(rep, prefix, chk):
    rep[f"{prefix}"] = chk.passed
    rep[f"{prefix}.value"] = chk.value
    if chk.detail:
        rep[f"{prefix}.detail"] = chk.detail
    for k, w in enumerate(chk.witnesses[:10]):
        w = w if isinstance(w, (tuple, list)) else (w,)
        rep[f"{prefix}.witness.{k}"] = " ".join(fmt(x) for x in w)


def cmd_genericity(args, atlas, st, rep):
    for i in _components(args):
        sset = trace_singular_set(atlas, i, st["grid"], st["method"])
        cls = classify_points(atlas, sset, st["method"])
        g1 = check_G1(sset, cls, st["tol"])
        g2 = check_G2(sset, cls, g1)
        rep.comment(f"component {i}")
        _check_lines(rep, f"g{i}.G1", g1)
        _check_lines(rep, f"g{i}.G2", g2)
        if g1.passed:
            _check_lines(rep, f"g{i}.G3", check_G3(cls))
        else:
            rep[f"g{i}.G3"] = "skipped"
            rep[f"g{i}.G3.detail"] = "G1 fails"
    rep.comment("Gauss map rank")
    _check_lines(rep, "rank", rank_scan(atlas, min(st["grid"], 128), st["method"]))
    return 0


COMPONENT_KEYS = ("chi_plus", "chi_minus", "n_plus_regions", "n_minus_regions", "S_plus",
                  "S_minus", "S_unsigned", "deg", "int_abs", "int_abs_err", "int_kg",
                  "int_kg_err", "loops", "quine_lhs", "quine_rhs")


def _gb_lines(rep, gb, sf):
    rep["name"] = gb.name
    rep["chi_M"] = gb.chi_M
    rep["topology_hint"] = gb.topology_hint
    rep["int_K"] = gb.int_K
    rep["int_KN"] = gb.int_KN
    computed = {"chi_M": gb.chi_M, "int_K": gb.int_K, "int_KN": gb.int_KN}
    for cr in gb.components:
        for k in COMPONENT_KEYS:
            val = getattr(cr, k)
            rep[f"g{cr.component}.{k}"] = val
            computed[f"{k}_{cr.component}"] = val
    for k, v in gb.genericity.items():
        rep[f"genericity.{k}"] = v
    for k in sorted(gb.residuals):
        rep[f"residual.{k}"] = gb.residuals[k]
    for k in sorted(gb.checks):
        rep[f"check.{k}"] = gb.checks[k]
    if sf.expected:
        rep.comment("reference values from the surface file, next to the computed ones")
    for k, e in sf.expected.items():
        ref = float(e.value)
        got = computed.get(k)
        rep[f"expected.{k}"] = ref
        if got is None:
            rep[f"computed.{k}"] = "unknown key"
            continue
        if k.startswith("deg"):
            got = float(np.rint(got))
        rep[f"computed.{k}"] = got
        rep[f"agrees.{k}"] = "yes" if abs(float(got) - ref) < 1e-9 else "no"
    for note in gb.notes:
        if not note.startswith("expected "):
            rep.comment(note)


def cmd_verify_gb(args, atlas, st, rep):
    try:
        gb = gauss_bonnet_report(atlas, st["grid"], st["mesh"], st["quad"], st["method"],
                                 gb_tol=st["tol"])
    except errors.GenericityViolation as exc:
        if exc.report is not None:
            _gb_lines(rep, exc.report, args._surface)
        rep["result"] = "genericity violation"
        raise
    _gb_lines(rep, gb, args._surface)
    rep["result"] = "pass" if gb.passed else "fail"
    return 0 if gb.passed else 1


COMMANDS = {"invariants": cmd_invariants, "singular": cmd_singular,
            "verify-gb": cmd_verify_gb, "genericity": cmd_genericity}

EXIT = ((errors.ParseError, 2), (errors.NotClosedSurface, 4), (errors.GenericityViolation, 5),
        (errors.GaussMapError, 3), (FloatingPointError, 3))


def _emit(rep, args):
    text = rep.text()
    sys.stdout.write(text)
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")


def main(argv=None):
    args = build_parser().parse_args(argv)
    rep = None
    try:
        try:
            sf = load(args.file)
        except OSError as exc:
            raise errors.ParseError(f"cannot read {args.file}: {exc.strerror}") from None
        args._surface = sf
        overrides = dict(args.param)
        atlas = sf.build(overrides)
        st = _settings(args, sf)
        rep = Report(args.command, args.file, st, overrides)
        with np.errstate(all="ignore"):
            code = COMMANDS[args.command](args, atlas, st, rep)
        _emit(rep, args)
        return code
    except tuple(e for e, _ in EXIT) as exc:
        code = next(c for e, c in EXIT if isinstance(exc, e))
        if rep is not None:
            rep.comment(f"error: {type(exc).__name__}: {exc}")
            _emit(rep, args)
        print(f"gaussmap4: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
