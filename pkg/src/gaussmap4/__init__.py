"""Gauss maps of surfaces immersed in R^4.

Second-order invariants, the two Gauss map components g1 and g2, their
singular curves with fold/cusp classification, genericity checks and
Gauss-Bonnet type identities verified by quadrature on closed surfaces.
"""

from .atlas import Atlas, Chart, ExprChart, ImplicitDomain, PolyChart, RectDomain, monge_chart
from .errors import (GaussMapError, GenericityViolation, GradientVanishes, NotClosedSurface,
                     ParseError)
from .integrate import curve_integral_kg, integrate_surface, mapping_degree
from .invariants import curvatures, invariants_at, jacobian_by_pullback
from .singular import (check_G1, check_G2, check_G3, classify_points, rank_scan,
                       trace_singular_set)
from .surface import load, load_atlas, loads
from .topology import build_mesh, gauss_bonnet_report

__version__ = "0.1.0"

__all__ = [
    "Atlas", "Chart", "ExprChart", "ImplicitDomain", "PolyChart", "RectDomain", "monge_chart",
    "GaussMapError", "GenericityViolation", "GradientVanishes", "NotClosedSurface", "ParseError",
    "curve_integral_kg", "integrate_surface", "mapping_degree",
    "curvatures", "invariants_at", "jacobian_by_pullback",
    "check_G1", "check_G2", "check_G3", "classify_points", "rank_scan", "trace_singular_set",
    "load", "load_atlas", "loads", "build_mesh", "gauss_bonnet_report",
]
