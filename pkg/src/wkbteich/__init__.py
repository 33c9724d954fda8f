"""Triangulations, cluster coordinates and the WKB correspondence for quadratic differentials."""

from __future__ import annotations

from .errors import NumericalError, ValidationError, WKBError
from .qdiff import RationalQD, critical_data, octagon_check, periods, strip_decomposition, wkb_triangulation
from .quiver import Seed, mutate_matrix, mutate_seed, quiver_from_triangulation
from .surface import IdealTriangulation, MarkedBorderedSurface, arc_count, exchange_matrix, flip
from .teich import ChartPoint, flip_coordinates, mutate_chart
from .vortex import GridDomain, asymptotic_experiment, path_length, solve

__version__ = "0.1.0"

__all__ = [
    "ChartPoint",
    "GridDomain",
    "IdealTriangulation",
    "MarkedBorderedSurface",
    "NumericalError",
    "RationalQD",
    "Seed",
    "ValidationError",
    "WKBError",
    "arc_count",
    "asymptotic_experiment",
    "critical_data",
    "exchange_matrix",
    "flip",
    "flip_coordinates",
    "mutate_chart",
    "mutate_matrix",
    "mutate_seed",
    "octagon_check",
    "path_length",
    "periods",
    "quiver_from_triangulation",
    "solve",
    "strip_decomposition",
    "wkb_triangulation",
]
