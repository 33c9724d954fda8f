"""Marked bordered surfaces, ideal triangulations, taggings and flips.

A triangulation is stored as a gluing complex.  Every triangle lists its
three sides in counterclockwise order together with its three corners; side
``j`` runs from corner ``j`` to corner ``j + 1``.  Arcs carry ids
``0 .. n-1``, boundary segments carry negative ids, and corners carry
marked-point labels.  Two sides with the same arc id are glued with
opposite orientations, so the labels alone determine the surface.

A self-folded triangle is a triangle whose side list repeats an arc
``(a, a, b)``: ``a`` is the internal edge, ``b`` the encircling edge, and
the corner between the two copies of ``a`` is the enclosed puncture.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Mapping

import numpy as np

from .errors import (
    InvalidSurface,
    InvalidTriangulation,
    NotFlippable,
    SurfaceMismatch,
    ValidationError,
)

__all__ = [
    "MarkedBorderedSurface",
    "Triangle",
    "IdealTriangulation",
    "TaggedTriangulation",
    "arc_count",
    "exchange_matrix",
    "flip",
    "tagged_equal",
    "canonical_form",
    "canonical_key",
    "relabel_canonical",
    "flip_graph",
    "polygon",
    "punctured_polygon",
    "punctured_torus",
    "selffolded_digon",
    "hexagon_patch",
    "catalog",
    "triangulation_to_json",
    "triangulation_from_json",
]


@dataclass(frozen=True)
class MarkedBorderedSurface:
    """Compact oriented surface with marked points.

    ``boundary`` holds the number of marked points on each boundary
    component; ``punctures`` counts interior marked points.
    """

    genus: int
    boundary: tuple[int, ...] = ()
    punctures: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "boundary", tuple(int(k) for k in self.boundary))
        if int(self.genus) != self.genus or self.genus < 0:
            raise InvalidSurface(f"genus must be a nonnegative integer, got {self.genus!r}")
        if int(self.punctures) != self.punctures or self.punctures < 0:
            raise InvalidSurface(f"puncture count must be nonnegative, got {self.punctures!r}")
        if any(k < 1 for k in self.boundary):
            raise InvalidSurface("every boundary component needs at least one marked point")
        if self.marked_points < 1:
            raise InvalidSurface("a marked bordered surface needs at least one marked point")

    @property
    def marked_points(self) -> int:
        return sum(self.boundary) + self.punctures

    @property
    def blown_up_boundary(self) -> tuple[int, ...]:
        """Boundary list of the real blow-up: one extra 0 entry per puncture."""
        return self.boundary + (0,) * self.punctures

    @property
    def amenable(self) -> bool:
        g, b, p = self.genus, self.boundary, self.punctures
        if not b and p == 1:
            return False
        if g == 0 and not b and p <= 5:
            return False
        if g == 0 and len(b) == 1:
            k = b[0]
            if p == 0 and k <= 4:
                return False
            if p == 1 and k in (1, 2, 4):
                return False
            if p == 2 and k == 2:
                return False
        if g == 0 and p == 0 and sorted(b) == [1, 1]:
            return False
        return True

    def to_json(self) -> dict[str, Any]:
        return {"genus": self.genus, "boundary": list(self.boundary), "punctures": self.punctures}

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> MarkedBorderedSurface:
        try:
            return cls(int(data["genus"]), tuple(data.get("boundary", ())), int(data.get("punctures", 0)))
        except (KeyError, TypeError) as exc:
            raise InvalidSurface(f"malformed surface record: {exc}") from exc


def arc_count(surface: MarkedBorderedSurface) -> int:
    """Number of arcs in any ideal triangulation of ``surface``."""
    n = 6 * surface.genus - 6 + sum(k + 3 for k in surface.blown_up_boundary)
    if n < 1:
        raise InvalidSurface(f"{surface} admits no triangulation with at least one arc (n={n})")
    return n


@dataclass(frozen=True, order=True)
class Triangle:
    edges: tuple[int, int, int]
    vertices: tuple[int, int, int]

    def __post_init__(self) -> None:
        object.__setattr__(self, "edges", tuple(int(e) for e in self.edges))
        object.__setattr__(self, "vertices", tuple(int(v) for v in self.vertices))
        if len(self.edges) != 3 or len(self.vertices) != 3:
            raise InvalidTriangulation("a triangle has three sides and three corners")

    def rotated(self, r: int) -> Triangle:
        r %= 3
        return Triangle(self.edges[r:] + self.edges[:r], self.vertices[r:] + self.vertices[:r])

    def canonical(self) -> Triangle:
        return min(self.rotated(r) for r in range(3))

    @property
    def selffolded(self) -> bool:
        return len(set(self.edges)) < 3

    def _fold_rotation(self) -> Triangle:
        for r in range(3):
            t = self.rotated(r)
            if t.edges[0] == t.edges[1]:
                return t
        raise InvalidTriangulation("triangle is not self-folded")

    @property
    def internal(self) -> int:
        return self._fold_rotation().edges[0]

    @property
    def encircling(self) -> int:
        return self._fold_rotation().edges[2]

    @property
    def enclosed_puncture(self) -> int:
        return self._fold_rotation().vertices[1]


class _UnionFind:
    def __init__(self) -> None:
        self.parent: dict[Any, Any] = {}

    def find(self, x: Any) -> Any:
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: Any, b: Any) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


@dataclass(frozen=True)
class IdealTriangulation:
    """Ideal triangulation as a labelled gluing complex (see module docstring).

    Triangles are stored in canonical rotation and sorted, so equality is
    structural equality of the complex.
    """

    surface: MarkedBorderedSurface
    triangles: tuple[Triangle, ...]
    _info: dict[str, Any] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        tris = tuple(sorted(Triangle(t.edges, t.vertices).canonical() for t in self.triangles))
        object.__setattr__(self, "triangles", tris)
        object.__setattr__(self, "_info", _analyse(self.surface, tris))

    @classmethod
    def from_edges(
        cls, surface: MarkedBorderedSurface, sides: Iterable[Iterable[int]]
    ) -> IdealTriangulation:
        """Build a triangulation from side lists alone, inferring corner labels."""
        sides = [tuple(int(e) for e in s) for s in sides]
        uf = _UnionFind()
        slots: dict[int, list[tuple[int, int]]] = {}
        for ti, s in enumerate(sides):
            if len(s) != 3:
                raise InvalidTriangulation("a triangle has three sides")
            for j, e in enumerate(s):
                uf.find((ti, j))
                if e >= 0:
                    slots.setdefault(e, []).append((ti, j))
        for e, sl in slots.items():
            if len(sl) != 2:
                raise InvalidTriangulation(f"arc {e} must occupy exactly two sides")
            (t1, j1), (t2, j2) = sl
            uf.union((t1, j1), (t2, (j2 + 1) % 3))
            uf.union((t1, (j1 + 1) % 3), (t2, j2))
        labels: dict[Any, int] = {}
        tris = []
        for ti in range(len(sides)):
            vs = []
            for j in range(3):
                root = uf.find((ti, j))
                vs.append(labels.setdefault(root, len(labels)))
            tris.append(Triangle(sides[ti], tuple(vs)))
        return cls(surface, tuple(tris))

    # -- derived data -------------------------------------------------
    @property
    def n(self) -> int:
        return self._info["n"]

    @property
    def arcs(self) -> tuple[int, ...]:
        return tuple(range(self.n))

    @property
    def boundary_segments(self) -> tuple[int, ...]:
        return self._info["bsegs"]

    @property
    def punctures(self) -> tuple[int, ...]:
        return self._info["punctures"]

    @property
    def marked_points(self) -> tuple[int, ...]:
        return self._info["vertices"]

    @property
    def valency(self) -> dict[int, int]:
        return dict(self._info["valency"])

    @property
    def slots(self) -> dict[int, tuple[tuple[int, int], ...]]:
        """Arc id -> the two (triangle index, side index) slots it occupies."""
        return self._info["slots"]

    def endpoints(self, arc: int) -> tuple[int, int]:
        t, j = self.slots[arc][0]
        tri = self.triangles[t]
        return tri.vertices[j], tri.vertices[(j + 1) % 3]

    @cached_property
    def selffolded(self) -> tuple[Triangle, ...]:
        return tuple(t for t in self.triangles if t.selffolded)

    @cached_property
    def projection(self) -> dict[int, int]:
        """Map sending a self-folded internal edge to its encircling edge."""
        pi = {a: a for a in self.arcs}
        for t in self.selffolded:
            pi[t.internal] = t.encircling
        return pi

    @property
    def regular(self) -> bool:
        val = self._info["valency"]
        return all(val[p] >= 3 for p in self.punctures)

    def flippable(self, arc: int) -> bool:
        (t1, _), (t2, _) = self.slots[arc]
        return t1 != t2


def _analyse(surface: MarkedBorderedSurface, tris: tuple[Triangle, ...]) -> dict[str, Any]:
    slots: dict[int, list[tuple[int, int]]] = {}
    bslots: dict[int, list[tuple[int, int]]] = {}
    for ti, t in enumerate(tris):
        for j, e in enumerate(t.edges):
            (slots if e >= 0 else bslots).setdefault(e, []).append((ti, j))
    for e, sl in slots.items():
        if len(sl) != 2:
            raise InvalidTriangulation(f"arc {e} occupies {len(sl)} sides, expected 2")
    for e, sl in bslots.items():
        if len(sl) != 1:
            raise InvalidTriangulation(f"boundary segment {e} occupies {len(sl)} sides, expected 1")
    n = len(slots)
    if sorted(slots) != list(range(n)):
        raise InvalidTriangulation("arc ids must be 0 .. n-1")
    expected = arc_count(surface)
    if n != expected:
        raise InvalidTriangulation(f"triangulation has {n} arcs but the surface needs {expected}")

    # corner gluing must agree with the corner labels
    uf = _UnionFind()
    for ti in range(len(tris)):
        for j in range(3):
            uf.find((ti, j))
    for e, ((t1, j1), (t2, j2)) in slots.items():
        a, b = tris[t1], tris[t2]
        if a.vertices[j1] != b.vertices[(j2 + 1) % 3] or a.vertices[(j1 + 1) % 3] != b.vertices[j2]:
            raise InvalidTriangulation(f"corner labels disagree across arc {e}")
        uf.union((t1, j1), (t2, (j2 + 1) % 3))
        uf.union((t1, (j1 + 1) % 3), (t2, j2))
    label_of_class: dict[Any, int] = {}
    for ti, t in enumerate(tris):
        for j in range(3):
            root = uf.find((ti, j))
            if label_of_class.setdefault(root, t.vertices[j]) != t.vertices[j]:
                raise InvalidTriangulation("one marked point carries two labels")
    if len(set(label_of_class.values())) != len(label_of_class):
        raise InvalidTriangulation("two distinct marked points share a label")
    vertices = tuple(sorted(set(label_of_class.values())))

    # boundary components from boundary segments
    succ: dict[int, int] = {}
    for e, ((ti, j),) in bslots.items():
        u, v = tris[ti].vertices[j], tris[ti].vertices[(j + 1) % 3]
        if u in succ:
            raise InvalidTriangulation(f"marked point {u} starts two boundary segments")
        succ[u] = v
    if sorted(succ.values()) != sorted(succ):
        raise InvalidTriangulation("boundary segments do not close up into circles")
    comps = []
    seen: set[int] = set()
    for start in sorted(succ):
        if start in seen:
            continue
        k, v = 0, start
        while v not in seen:
            seen.add(v)
            v = succ[v]
            k += 1
        comps.append(k)
    punctures = tuple(v for v in vertices if v not in succ)
    if sorted(comps) != sorted(surface.boundary):
        raise InvalidTriangulation(
            f"boundary components carry {sorted(comps)} marked points, surface expects {sorted(surface.boundary)}"
        )
    if len(punctures) != surface.punctures:
        raise InvalidTriangulation(
            f"complex has {len(punctures)} punctures, surface expects {surface.punctures}"
        )
    chi = len(vertices) - (n + len(bslots)) + len(tris)
    if chi != 2 - 2 * surface.genus - len(surface.boundary):
        raise InvalidTriangulation(f"Euler characteristic {chi} does not match the surface")

    valency = {v: 0 for v in vertices}
    for e, ((ti, j), _) in slots.items():
        valency[tris[ti].vertices[j]] += 1
        valency[tris[ti].vertices[(j + 1) % 3]] += 1
    return {
        "n": n,
        "slots": {e: tuple(sl) for e, sl in sorted(slots.items())},
        "bsegs": tuple(sorted(bslots)),
        "vertices": vertices,
        "punctures": punctures,
        "valency": valency,
    }


def exchange_matrix(T: IdealTriangulation) -> np.ndarray:
    """Signed adjacency matrix of the arcs of ``T``.

    Entry ``(a, b)`` counts, over non-self-folded triangles, +1 when the
    projection of ``b`` immediately follows that of ``a`` counterclockwise
    and -1 when it follows clockwise.
    """
    n = T.n
    core = np.zeros((n, n), dtype=np.int64)
    for t in T.triangles:
        if t.selffolded:
            continue
        for j in range(3):
            a, b = t.edges[j], t.edges[(j + 1) % 3]
            if a >= 0 and b >= 0:
                core[a, b] += 1
                core[b, a] -= 1
    pi = np.array([T.projection[a] for a in range(n)], dtype=np.int64)
    return core[np.ix_(pi, pi)]


def flip(T: IdealTriangulation, gamma: int) -> IdealTriangulation:
    """Replace arc ``gamma`` by the other diagonal of its quadrilateral.

    The new arc keeps the id ``gamma``.
    """
    if gamma not in T.slots:
        raise NotFlippable(f"{gamma} is not an arc of the triangulation")
    (t1, j1), (t2, j2) = T.slots[gamma]
    if t1 == t2:
        raise NotFlippable(f"arc {gamma} is the internal edge of a self-folded triangle")
    A = T.triangles[t1].rotated(j1)
    B = T.triangles[t2].rotated(j2)
    _, a, b = A.edges
    v0, v1, v2 = A.vertices
    _, c, d = B.edges
    u2 = B.vertices[2]
    new1 = Triangle((gamma, b, c), (u2, v2, v0))
    new2 = Triangle((gamma, d, a), (v2, u2, v1))
    rest = [t for i, t in enumerate(T.triangles) if i not in (t1, t2)]
    return IdealTriangulation(T.surface, tuple(rest + [new1, new2]))


# -- taggings ---------------------------------------------------------------


@dataclass(frozen=True)
class TaggedTriangulation:
    """Signed triangulation ``(T, eps)`` viewed as a tagged triangulation."""

    triangulation: IdealTriangulation
    signing: Mapping[int, int]
    canonical: bool = False

    def __post_init__(self) -> None:
        sig = {int(p): int(s) for p, s in dict(self.signing).items()}
        if set(sig) != set(self.triangulation.punctures):
            raise ValidationError("a signing must be defined exactly on the punctures")
        if any(s not in (1, -1) for s in sig.values()):
            raise ValidationError("signs must be +1 or -1")
        object.__setattr__(self, "signing", tuple(sorted(sig.items())))

    @property
    def signs(self) -> dict[int, int]:
        return dict(self.signing)

    @property
    def surface(self) -> MarkedBorderedSurface:
        return self.triangulation.surface

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TaggedTriangulation):
            return NotImplemented
        return tagged_equal(self, other)

    def __hash__(self) -> int:
        c, _ = canonical_form(self)
        return hash((c.triangulation, c.signing))


def canonical_form(tt: TaggedTriangulation) -> tuple[TaggedTriangulation, dict[int, int]]:
    """Force the sign at every self-folded puncture to +1.

    Returns the canonical representative and the induced relabelling of
    tagged arcs: where a sign was flipped, the internal and encircling
    labels trade places.
    """
    T = tt.triangulation
    sig = tt.signs
    relabel = {a: a for a in T.arcs}
    for t in T.selffolded:
        p = t.enclosed_puncture
        if sig[p] == -1:
            sig[p] = 1
            relabel[t.internal], relabel[t.encircling] = t.encircling, t.internal
    return TaggedTriangulation(T, sig, canonical=True), relabel


def tagged_equal(a: TaggedTriangulation, b: TaggedTriangulation) -> bool:
    if a.surface != b.surface:
        raise SurfaceMismatch("tagged triangulations live on different surfaces")
    ca, _ = canonical_form(a)
    cb, _ = canonical_form(b)
    return ca.triangulation == cb.triangulation and ca.signing == cb.signing


# -- canonical labelling and flip graphs ------------------------------------


def _traverse(T: IdealTriangulation, start: tuple[int, int]) -> tuple[tuple, dict[int, int]]:
    """Breadth-first walk of the complex from ``start``; returns code and arc map."""
    new_id: dict[int, int] = {}
    code = []
    seen = set()
    queue = deque([start])
    while queue:
        ti, r = queue.popleft()
        if ti in seen:
            continue
        seen.add(ti)
        tri = T.triangles[ti].rotated(r)
        row = []
        for j, e in enumerate(tri.edges):
            if e >= 0:
                if e not in new_id:
                    new_id[e] = len(new_id)
                row.append(new_id[e])
                for tj, jj in T.slots[e]:
                    if (tj, jj) != (ti, (j + r) % 3) and tj not in seen:
                        queue.append((tj, jj))
            else:
                row.append(e)
        code.append((tuple(row), tri.vertices))
    return tuple(code), new_id


def canonical_key(T: IdealTriangulation) -> tuple:
    """Invariant of ``T`` under relabelling of arcs.

    Corner labels and boundary-segment ids are kept fixed, so for a polygon
    two triangulations share a key exactly when they use the same diagonals.
    """
    return _canonical(T)[0]


def _canonical(T: IdealTriangulation) -> tuple[tuple, dict[int, int]]:
    if T.boundary_segments:
        anchor = max(T.boundary_segments)
        for ti, t in enumerate(T.triangles):
            if anchor in t.edges:
                return _traverse(T, (ti, t.edges.index(anchor)))
    best = None
    for e, sl in T.slots.items():
        for start in sl:
            cand = _traverse(T, start)
            if best is None or cand[0] < best[0]:
                best = cand
    assert best is not None
    return best


def relabel_canonical(T: IdealTriangulation) -> IdealTriangulation:
    _, new_id = _canonical(T)
    tris = tuple(
        Triangle(tuple(new_id[e] if e >= 0 else e for e in t.edges), t.vertices) for t in T.triangles
    )
    return IdealTriangulation(T.surface, tris)


def flip_graph(
    T0: IdealTriangulation, limit: int = 10_000
) -> tuple[list[IdealTriangulation], set[tuple[int, int]]]:
    """Explore all triangulations reachable from ``T0`` by flips.

    Triangulations are identified up to arc relabelling.  Returns the
    canonical representatives and the undirected edge set of the graph.
    """
    start = relabel_canonical(T0)
    index = {canonical_key(start): 0}
    nodes = [start]
    edges: set[tuple[int, int]] = set()
    queue = deque([0])
    while queue:
        i = queue.popleft()
        T = nodes[i]
        for arc in T.arcs:
            if not T.flippable(arc):
                continue
            U = relabel_canonical(flip(T, arc))
            key = canonical_key(U)
            if key not in index:
                if len(nodes) >= limit:
                    raise ValidationError(f"flip graph exceeds {limit} vertices")
                index[key] = len(nodes)
                nodes.append(U)
                queue.append(index[key])
            j = index[key]
            if i != j:
                edges.add((min(i, j), max(i, j)))
    return nodes, edges


# -- catalogue --------------------------------------------------------------


def polygon(k: int) -> IdealTriangulation:
    """Fan triangulation of the unpunctured disk with ``k`` marked points."""
    if k < 4:
        raise InvalidSurface("a polygon needs at least 4 marked points to carry an arc")
    diag = {i: i - 2 for i in range(2, k - 1)}

    def side(u: int, v: int) -> int:
        if (v - u) % k == 1:
            return -1 - u
        if (u - v) % k == 1:
            return -1 - v
        return diag[max(u, v)]

    tris = [Triangle((side(0, i), side(i, i + 1), side(i + 1, 0)), (0, i, i + 1)) for i in range(1, k - 1)]
    return IdealTriangulation(MarkedBorderedSurface(0, (k,), 0), tuple(tris))


def punctured_polygon(k: int) -> IdealTriangulation:
    """Once-punctured disk with ``k`` boundary points, all spokes to the puncture."""
    if k < 1:
        raise InvalidSurface("need at least one boundary marked point")
    P = k
    tris = [Triangle((-1 - j, (j + 1) % k, j), (j, (j + 1) % k, P)) for j in range(k)]
    return IdealTriangulation(MarkedBorderedSurface(0, (k,), 1), tuple(tris))


def punctured_torus() -> IdealTriangulation:
    """Once-punctured torus from a square with one diagonal."""
    t = Triangle((0, 1, 2), (0, 0, 0))
    return IdealTriangulation(MarkedBorderedSurface(1, (), 1), (t, t))


def selffolded_digon() -> IdealTriangulation:
    """Once-punctured digon triangulated by a self-folded triangle."""
    inner = Triangle((0, 0, 1), (0, 2, 0))
    outer = Triangle((-1, -2, 1), (0, 1, 0))
    return IdealTriangulation(MarkedBorderedSurface(0, (2,), 1), (inner, outer))


def hexagon_patch() -> IdealTriangulation:
    """Punctured hexagon with its six sides as arcs, collared by a 12-gon.

    Spokes get ids 0..5, hexagon sides 6..11.  The quiver is the
    six-cycle of spokes with a triangle hanging off each side.
    """
    P = 12
    tris = []
    for j in range(6):
        h, hn, x = 2 * j, (2 * j + 2) % 12, 2 * j + 1
        tris.append(Triangle((6 + j, (j + 1) % 6, j), (h, hn, P)))
        tris.append(Triangle((-1 - h, -1 - x, 6 + j), (h, x, hn)))
    return IdealTriangulation(MarkedBorderedSurface(0, (12,), 1), tuple(tris))


def catalog() -> dict[str, IdealTriangulation]:
    cat = {f"polygon{k}": polygon(k) for k in range(4, 9)}
    cat.update({f"punctured_polygon{k}": punctured_polygon(k) for k in (3, 4, 5)})
    cat["punctured_torus"] = punctured_torus()
    cat["selffolded_digon"] = selffolded_digon()
    cat["hexagon_patch"] = hexagon_patch()
    return cat


# -- JSON -------------------------------------------------------------------


def triangulation_to_json(T: IdealTriangulation, signing: Mapping[int, int] | None = None) -> dict[str, Any]:
    tris = []
    for t in T.triangles:
        if t.selffolded:
            f = t._fold_rotation()
            tris.append(
                {"kind": "selffolded", "edges": {"internal": f.edges[0], "encircling": f.edges[2]},
                 "vertices": list(f.vertices)}
            )
        else:
            tris.append({"kind": "ordinary", "edges": list(t.edges), "vertices": list(t.vertices)})
    out: dict[str, Any] = {"surface": T.surface.to_json(), "triangles": tris}
    sig = dict(signing) if signing is not None else {p: 1 for p in T.punctures}
    out["signing"] = {str(p): int(s) for p, s in sorted(sig.items())}
    return out


def triangulation_from_json(data: Mapping[str, Any] | str) -> tuple[IdealTriangulation, dict[int, int]]:
    """Parse the triangulation schema.  Corner labels are optional."""
    if isinstance(data, str):
        data = json.loads(data)
    try:
        surface = MarkedBorderedSurface.from_json(data["surface"])
        sides = []
        corners = []
        for rec in data["triangles"]:
            if rec.get("kind", "ordinary") == "selffolded":
                e = rec["edges"]
                sides.append((int(e["internal"]), int(e["internal"]), int(e["encircling"])))
            else:
                sides.append(tuple(int(x) for x in rec["edges"]))
            corners.append(rec.get("vertices"))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidTriangulation(f"malformed triangulation record: {exc}") from exc
    if all(c is not None for c in corners):
        T = IdealTriangulation(surface, tuple(Triangle(s, tuple(c)) for s, c in zip(sides, corners)))
    else:
        T = IdealTriangulation.from_edges(surface, sides)
    raw = data.get("signing") or {}
    signing = {int(p): int(s) for p, s in raw.items()} if raw else {p: 1 for p in T.punctures}
    return T, signing
