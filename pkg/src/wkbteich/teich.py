"""Cross ratios, cluster coordinates, flips of charts and seed-level gluing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence, Union

import numpy as np

from .errors import (
    CoincidentPoints,
    IndexOutOfRange,
    InvalidOrder,
    NonPositiveInput,
    NotFlippable,
    Overflow,
    ValidationError,
)
from .quiver import Seed, mutate_seed
from .surface import IdealTriangulation, TaggedTriangulation, flip

__all__ = [
    "ChartPoint",
    "cross_ratio",
    "lambda_cross_ratio",
    "cluster_from_Y",
    "flip_coordinates",
    "mutate_chart",
    "compatible_length",
    "asymptotic_ratio",
]

Chart = Union[IdealTriangulation, TaggedTriangulation, Seed]


@dataclass(frozen=True)
class ChartPoint:
    """Positive coordinates attached to a chart (triangulation or seed)."""

    chart: Chart
    coords: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        c = {int(k): float(v) for k, v in dict(self.coords).items()}
        bad = {k: v for k, v in c.items() if not (v > 0 and math.isfinite(v))}
        if bad:
            raise NonPositiveInput(f"chart coordinates must be finite and positive: {bad}")
        object.__setattr__(self, "coords", dict(sorted(c.items())))

    def vector(self) -> np.ndarray:
        return np.array([self.coords[k] for k in sorted(self.coords)])

    def to_json(self, chart_id: str = "") -> dict[str, Any]:
        return {"chart_id": chart_id, "coords": {str(k): v for k, v in self.coords.items()}}


def cross_ratio(z1: float, z2: float, z3: float, z4: float) -> float:
    """``(z1-z2)(z3-z4) / ((z2-z3)(z1-z4))`` for points of the extended real line.

    A point at infinity drops the two factors that contain it.
    """
    pts = [float(z) for z in (z1, z2, z3, z4)]
    finite = [z for z in pts if math.isfinite(z)]
    if any(math.isnan(z) for z in pts) or len(set(finite)) != len(finite) or len(finite) < 3:
        raise CoincidentPoints(f"cross ratio needs four distinct points, got {pts}")

    def f(a: int, b: int) -> float:
        za, zb = pts[a], pts[b]
        if math.isinf(za) or math.isinf(zb):
            return 1.0
        return za - zb

    return f(0, 1) * f(2, 3) / (f(1, 2) * f(0, 3))


def lambda_cross_ratio(l12: float, l23: float, l34: float, l14: float) -> float:
    vals = (l12, l23, l34, l14)
    if not all(v > 0 and math.isfinite(v) for v in vals):
        raise NonPositiveInput(f"lambda lengths must be positive, got {vals}")
    return l12 * l34 / (l23 * l14)


def cluster_from_Y(T: IdealTriangulation, Y: Mapping[int, float]) -> dict[int, float]:
    """Cluster coordinates from cross ratios; self-folded internal edges get ``Y_a * Y_b``."""
    X = {a: float(Y[a]) for a in T.arcs}
    for t in T.selffolded:
        X[t.internal] = float(Y[t.internal]) * float(Y[t.encircling])
    return X


def _triangulation_of(chart: Chart) -> IdealTriangulation:
    if isinstance(chart, TaggedTriangulation):
        return chart.triangulation
    if isinstance(chart, IdealTriangulation):
        return chart
    raise ValidationError("flip_coordinates needs a triangulation chart")


def flip_coordinates(T: Chart, eps: np.ndarray, gamma: int, X: ChartPoint) -> ChartPoint:
    """Coordinate change under the flip of ``gamma``.

    ``X'_gamma = 1/X_gamma`` and
    ``X'_a = X_a (1 + X_gamma^(-sgn e))^(-e)`` with ``e = eps[a, gamma]``.
    """
    tri = _triangulation_of(T)
    if gamma not in tri.slots or not tri.flippable(gamma):
        raise NotFlippable(f"arc {gamma} cannot be flipped")
    eps = np.asarray(eps, dtype=np.int64)
    xg = X.coords[gamma]
    out = {}
    for a, xa in X.coords.items():
        if a == gamma:
            out[a] = 1.0 / xg
            continue
        e = int(eps[a, gamma])
        if e == 0:
            out[a] = xa
        elif e > 0:
            out[a] = xa * (1.0 + 1.0 / xg) ** (-e)
        else:
            out[a] = xa * (1.0 + xg) ** (-e)
    new = flip(tri, gamma)
    if isinstance(T, TaggedTriangulation):
        return ChartPoint(TaggedTriangulation(new, T.signs), out)
    return ChartPoint(new, out)


def mutate_chart(s: Seed, k: int, X: ChartPoint) -> ChartPoint:
    """Gluing map between the charts of ``s`` and ``mutate_seed(s, k)``.

    ``X`` extends multiplicatively from the basis to the whole lattice, and
    the new coordinate on ``e'_j`` is ``X_{e'_j} (1 + X_{e_k})^<e'_j, e_k>``.
    """
    if not 0 <= k < s.rank:
        raise IndexOutOfRange(f"index {k} outside 0..{s.rank - 1}")
    logx = np.log(np.array([X.coords[i] for i in range(s.rank)]))
    t = mutate_seed(s, k)
    ek = s.basis[k]
    log1p_xk = math.log1p(X.coords[k])
    out = {}
    for j in range(s.rank):
        v = t.basis[j]
        c = s.coordinates(v)
        out[j] = math.exp(float(c @ logx) + s.pair(v, ek) * log1p_xk)
    return ChartPoint(t, out)


def compatible_length(
    a: complex, m: int, principal: Sequence[complex] | Any | None = None
) -> float:
    """Boundary length compatible with the pole data.

    For ``m <= 2``: ``4 pi sqrt|a| |sin(theta/2)|`` with ``theta = arg a`` in
    ``[0, 2 pi)``.  For ``m >= 3``: the real part of the analytic residue of
    the principal part, taken in absolute value since the principal part is
    only defined up to sign.  ``principal`` may be a ``PrincipalPart`` or a
    coefficient list ``[c_r, ..., c_1]`` of ``z^-r .. z^-1``.
    """
    if m < 1:
        raise InvalidOrder(f"pole order must be positive, got {m}")
    if m <= 2:
        theta = math.atan2(complex(a).imag, complex(a).real) % (2 * math.pi)
        return 4 * math.pi * math.sqrt(abs(a)) * abs(math.sin(theta / 2))
    if principal is None:
        raise InvalidOrder("poles of order >= 3 need the principal part")
    if hasattr(principal, "residue"):
        res = complex(principal.residue)
    else:
        coeffs = list(principal)
        res = complex(coeffs[-1]) if coeffs else 0j
    return abs(res.real)


def asymptotic_ratio(X: float, Z: complex, R: float) -> float:
    """``X * exp(R * Re Z)`` evaluated in log space."""
    if not (X > 0 and R > 0) or not all(map(math.isfinite, (X, R, complex(Z).real, complex(Z).imag))):
        raise NonPositiveInput("need finite X > 0, R > 0 and finite Z")
    expo = math.log(X) + R * complex(Z).real
    if expo > math.log(np.finfo(float).max):
        raise Overflow(f"exponent {expo:.3g} exceeds the floating range")
    return math.exp(expo)
