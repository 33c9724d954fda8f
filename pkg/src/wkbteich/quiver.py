"""Quivers with potential from triangulations, and mutation of matrices and seeds."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Any, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import IndexOutOfRange, NonRegularTriangulation, UnknownArrow, ValidationError
from .surface import IdealTriangulation, exchange_matrix

__all__ = [
    "Quiver",
    "Potential",
    "Seed",
    "quiver_from_triangulation",
    "potential_from_triangulation",
    "cyclic_derivative",
    "mutate_matrix",
    "mutate_seed",
    "seed_from_triangulation",
    "seeds_isomorphic",
]

Word = tuple[Hashable, ...]


@dataclass(frozen=True)
class Quiver:
    """Vertices ``0 .. n-1``; arrow ``i`` is ``arrows[i] = (source, target)``."""

    n: int
    arrows: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "arrows", tuple((int(s), int(t)) for s, t in self.arrows))
        for s, t in self.arrows:
            if not (0 <= s < self.n and 0 <= t < self.n):
                raise IndexOutOfRange(f"arrow {s}->{t} leaves the vertex set")

    def matrix(self) -> np.ndarray:
        """Skew matrix with entry ``(i, j)`` = #(j -> i) - #(i -> j)."""
        B = np.zeros((self.n, self.n), dtype=np.int64)
        for s, t in self.arrows:
            B[t, s] += 1
            B[s, t] -= 1
        return B

    def multiplicity(self, source: int, target: int) -> int:
        return sum(1 for a in self.arrows if a == (source, target))

    def two_acyclic(self) -> bool:
        pairs = Counter(self.arrows)
        return all(s != t and (t, s) not in pairs for s, t in pairs)

    def to_json(self) -> dict[str, Any]:
        return {"vertices": self.n, "arrows": [list(a) for a in self.arrows]}


def _min_rotation(word: Sequence[Hashable]) -> Word:
    word = tuple(word)
    return min((word[i:] + word[:i] for i in range(len(word))), key=lambda w: [repr(x) for x in w])


@dataclass(frozen=True)
class Potential:
    """Finite signed sum of cycles, each stored in its minimal rotation.

    A word ``(a1, ..., ad)`` follows the path-algebra convention: ``a_i``
    starts where ``a_{i+1}`` ends.  ``arrows`` lists the arrow identifiers
    that may be differentiated against; it defaults to those in the cycles.
    """

    terms: tuple[tuple[int, Word], ...]
    arrows: frozenset = frozenset()

    def __post_init__(self) -> None:
        acc: dict[Word, int] = {}
        for coeff, word in self.terms:
            if len(word) < 1:
                raise ValidationError("cycles must have positive length")
            key = _min_rotation(word)
            acc[key] = acc.get(key, 0) + int(coeff)
        terms = tuple(sorted(((c, w) for w, c in acc.items() if c != 0), key=lambda cw: [repr(x) for x in cw[1]]))
        object.__setattr__(self, "terms", terms)
        known = set(self.arrows)
        for _, w in terms:
            known.update(w)
        object.__setattr__(self, "arrows", frozenset(known))

    @classmethod
    def of(cls, *terms: tuple[int, Iterable[Hashable]], arrows: Iterable[Hashable] = ()) -> Potential:
        return cls(tuple((c, tuple(w)) for c, w in terms), frozenset(arrows))

    def __len__(self) -> int:
        return len(self.terms)

    def to_json(self) -> list[dict[str, Any]]:
        return [{"coefficient": c, "cycle": list(w)} for c, w in self.terms]


def cyclic_derivative(W: Potential, a: Hashable) -> dict[Word, int]:
    """Formal sum ``sum_i a_{i+1} ... a_d a_1 ... a_{i-1}`` over occurrences of ``a``."""
    if a not in W.arrows:
        raise UnknownArrow(a)
    out: dict[Word, int] = {}
    for coeff, word in W.terms:
        for i, x in enumerate(word):
            if x == a:
                path = word[i + 1 :] + word[:i]
                out[path] = out.get(path, 0) + coeff
    return {p: c for p, c in out.items() if c != 0}


def _corner_arrows(T: IdealTriangulation) -> tuple[list[tuple[int, int]], dict[tuple[int, int], int]]:
    """One arrow per corner whose two sides are arcs; keyed by (triangle, corner)."""
    arrows: list[tuple[int, int]] = []
    at_corner: dict[tuple[int, int], int] = {}
    for ti, t in enumerate(T.triangles):
        for j in range(3):
            a, b = t.edges[j], t.edges[(j + 1) % 3]
            if a >= 0 and b >= 0:
                at_corner[(ti, (j + 1) % 3)] = len(arrows)
                arrows.append((b, a))
    return arrows, at_corner


def _require_regular(T: IdealTriangulation) -> None:
    if not T.regular:
        bad = {p: v for p, v in T.valency.items() if p in T.punctures and v < 3}
        raise NonRegularTriangulation(f"punctures with valency < 3: {bad}")


def quiver_from_triangulation(T: IdealTriangulation) -> Quiver:
    """Quiver with one vertex per arc and ``eps_ij`` arrows ``j -> i`` when positive."""
    _require_regular(T)
    arrows, _ = _corner_arrows(T)
    counts = Counter(arrows)
    for (s, t), m in counts.items():
        if (t, s) in counts:
            raise NonRegularTriangulation(f"arcs {s} and {t} give a 2-cycle; reduction is not supported")
    quiver = Quiver(T.n, tuple(arrows))
    assert np.array_equal(quiver.matrix(), exchange_matrix(T))
    return quiver


def potential_from_triangulation(T: IdealTriangulation, signing: Mapping[int, int]) -> Potential:
    """Triangle 3-cycles minus signed puncture cycles.

    Arrow identifiers are indices into ``quiver_from_triangulation(T).arrows``.
    """
    quiver = quiver_from_triangulation(T)
    _, at_corner = _corner_arrows(T)
    terms: list[tuple[int, Word]] = []
    for ti, t in enumerate(T.triangles):
        if all(e >= 0 for e in t.edges):
            # traversal order: corner 1, corner 0, corner 2; stored reversed
            path = (at_corner[(ti, 1)], at_corner[(ti, 0)], at_corner[(ti, 2)])
            terms.append((1, tuple(reversed(path))))
    corners_at: dict[int, list[tuple[int, int]]] = {}
    for ti, c in sorted(at_corner):
        corners_at.setdefault(T.triangles[ti].vertices[c], []).append((ti, c))
    for p in T.punctures:
        if p not in signing:
            raise ValidationError(f"signing misses puncture {p}")
        pool = corners_at.get(p, [])
        start = pool[0]
        walk = [start]
        while True:
            ti, c = walk[-1]
            j = (c - 1) % 3
            arc = T.triangles[ti].edges[j]
            nxt = next(sl for sl in T.slots[arc] if sl != (ti, j))
            if nxt == start:
                break
            walk.append(nxt)
        if len(walk) != len(pool):
            raise NonRegularTriangulation(f"corners at puncture {p} do not form one cycle")
        path = [at_corner[corner] for corner in walk]
        terms.append((-int(signing[p]), tuple(reversed(path))))
    return Potential(tuple(terms), frozenset(range(len(quiver.arrows))))


def mutate_matrix(eps: np.ndarray, k: int) -> np.ndarray:
    """Matrix mutation at index ``k``."""
    eps = np.asarray(eps, dtype=np.int64)
    n = eps.shape[0]
    if not 0 <= k < n:
        raise IndexOutOfRange(f"index {k} outside 0..{n - 1}")
    if not np.array_equal(eps, -eps.T):
        raise ValidationError("exchange matrix must be skew-symmetric")
    col = eps[:, k][:, None]
    row = eps[k, :][None, :]
    out = eps + np.sign(col) * np.maximum(col * row, 0)
    out[k, :] = -eps[k, :]
    out[:, k] = -eps[:, k]
    return out


@dataclass(frozen=True)
class Seed:
    """Lattice ``Z^n`` with basis rows ``basis[i] = e_i`` and skew form ``form``."""

    basis: np.ndarray
    form: np.ndarray

    def __post_init__(self) -> None:
        E = np.array(self.basis, dtype=np.int64)
        F = np.array(self.form, dtype=np.int64)
        if E.ndim != 2 or E.shape[0] != E.shape[1] or F.shape != E.shape:
            raise ValidationError("basis and form must be square matrices of equal size")
        if not np.array_equal(F, -F.T):
            raise ValidationError("skew form must be skew-symmetric")
        if round(abs(np.linalg.det(E))) != 1:
            raise ValidationError("basis must be unimodular")
        E.setflags(write=False)
        F.setflags(write=False)
        object.__setattr__(self, "basis", E)
        object.__setattr__(self, "form", F)

    @classmethod
    def standard(cls, matrix: np.ndarray) -> Seed:
        m = np.asarray(matrix, dtype=np.int64)
        return cls(np.eye(m.shape[0], dtype=np.int64), m)

    @property
    def rank(self) -> int:
        return self.basis.shape[0]

    def pair(self, u: np.ndarray, v: np.ndarray) -> int:
        return int(np.asarray(u) @ self.form @ np.asarray(v))

    def matrix(self) -> np.ndarray:
        """Gram matrix ``<e_i, e_j>``."""
        return self.basis @ self.form @ self.basis.T

    def coordinates(self, v: np.ndarray) -> np.ndarray:
        """Integer coefficients of ``v`` in the basis."""
        c = np.linalg.solve(self.basis.T.astype(float), np.asarray(v, dtype=float))
        return np.rint(c).astype(np.int64)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Seed):
            return NotImplemented
        return np.array_equal(self.basis, other.basis) and np.array_equal(self.form, other.form)

    def __hash__(self) -> int:
        return hash((self.basis.tobytes(), self.form.tobytes()))

    def to_json(self) -> dict[str, Any]:
        return {"basis": self.basis.tolist(), "form": self.form.tolist()}


def mutate_seed(s: Seed, k: int) -> Seed:
    """Basis mutation: ``e_k -> -e_k`` and ``e_j -> e_j + [<e_k, e_j>]_+ e_k``."""
    if not 0 <= k < s.rank:
        raise IndexOutOfRange(f"index {k} outside 0..{s.rank - 1}")
    G = s.matrix()
    E = s.basis.copy()
    ek = s.basis[k]
    for j in range(s.rank):
        if j == k:
            E[j] = -ek
        else:
            E[j] = s.basis[j] + max(int(G[k, j]), 0) * ek
    return Seed(E, s.form)


def seed_from_triangulation(T: IdealTriangulation) -> Seed:
    """Seed whose cluster chart matches the flip law on ``T``.

    The Gram matrix is the transpose of the exchange matrix; with this
    identification the seed gluing map coincides with coordinate flips.
    """
    return Seed.standard(exchange_matrix(T).T)


def seeds_isomorphic(a: Seed, b: Seed) -> bool:
    """Equal forms and equal bases after sorting basis vectors."""
    if not np.array_equal(a.form, b.form):
        return False
    ka = sorted(map(tuple, a.basis.tolist()))
    kb = sorted(map(tuple, b.basis.tolist()))
    return ka == kb
