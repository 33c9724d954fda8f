from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wkbteich import surface as S
from wkbteich.errors import CoincidentPoints, InvalidOrder, NonPositiveInput, NotFlippable, Overflow
from wkbteich.quiver import Seed, mutate_seed, seed_from_triangulation
from wkbteich.teich import (
    ChartPoint,
    asymptotic_ratio,
    cluster_from_Y,
    compatible_length,
    cross_ratio,
    flip_coordinates,
    lambda_cross_ratio,
    mutate_chart,
)

REGULAR = {k: T for k, T in S.catalog().items() if T.regular}
positive = st.floats(0.05, 20.0, allow_nan=False)


def test_cross_ratio_values():
    assert cross_ratio(0, 1, 2, 3) == pytest.approx((0 - 1) * (2 - 3) / ((1 - 2) * (0 - 3)))
    assert cross_ratio(math.inf, 0, 1, 2) == pytest.approx((1 - 2) / (0 - 1))
    with pytest.raises(CoincidentPoints):
        cross_ratio(0, 0, 1, 2)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=4, max_size=4, unique=True), st.floats(0.1, 5), st.floats(-3, 3))
def test_cross_ratio_affine_invariant(z, a, b):
    if min(abs(x - y) for x, y in itertools.combinations(z, 2)) < 1e-3:
        return
    assert cross_ratio(*[a * x + b for x in z]) == pytest.approx(cross_ratio(*z), rel=1e-8)


def test_lambda_cross_ratio():
    assert lambda_cross_ratio(2, 3, 5, 7) == pytest.approx(10 / 21)
    with pytest.raises(NonPositiveInput):
        lambda_cross_ratio(1, 0, 1, 1)


def test_cluster_from_Y_selffolded_product():
    T = S.selffolded_digon()
    t = T.selffolded[0]
    Y = {a: 2.0 + a for a in T.arcs}
    X = cluster_from_Y(T, Y)
    assert X[t.internal] == pytest.approx(Y[t.internal] * Y[t.encircling])
    assert X[t.encircling] == Y[t.encircling]


def test_chart_point_positive():
    with pytest.raises(NonPositiveInput):
        ChartPoint(S.polygon(5), {0: 1.0, 1: -2.0})


def test_flip_coordinates_a2_exchange():
    T = S.polygon(5)
    B = S.exchange_matrix(T)
    X = ChartPoint(T, {0: 2.0, 1: 3.0})
    Y = flip_coordinates(T, B, 0, X)
    assert Y.coords[0] == pytest.approx(0.5)
    e = int(B[1, 0])
    expected = 3.0 * (1 + 2.0 ** (-np.sign(e))) ** (-e)
    assert Y.coords[1] == pytest.approx(expected)


def test_flip_coordinates_rejects_internal():
    T = S.selffolded_digon()
    X = ChartPoint(T, {a: 1.0 for a in T.arcs})
    with pytest.raises(NotFlippable):
        flip_coordinates(T, S.exchange_matrix(T), T.selffolded[0].internal, X)


@pytest.mark.parametrize("name", sorted(REGULAR))
@settings(max_examples=15, deadline=None)
@given(data=st.data())
def test_flip_law_matches_seed_gluing(name, data):
    T = REGULAR[name]
    s = seed_from_triangulation(T)
    X = ChartPoint(T, {a: data.draw(positive) for a in T.arcs})
    Xs = ChartPoint(s, X.coords)
    for _ in range(3):
        a = data.draw(st.sampled_from([a for a in T.arcs if T.flippable(a)]))
        X = flip_coordinates(T, S.exchange_matrix(T), a, X)
        Xs = mutate_chart(s, a, Xs)
        T, s = X.chart, mutate_seed(s, a)
        for k in T.arcs:
            assert Xs.coords[k] == pytest.approx(X.coords[k], rel=1e-12)


@pytest.mark.parametrize("name", sorted(REGULAR))
@settings(max_examples=10, deadline=None)
@given(data=st.data())
def test_double_mutation_identity(name, data):
    s = seed_from_triangulation(REGULAR[name])
    X = ChartPoint(s, {i: data.draw(positive) for i in range(s.rank)})
    k = data.draw(st.integers(0, s.rank - 1))
    t = mutate_seed(s, k)
    back = mutate_chart(t, k, mutate_chart(s, k, X))
    for i in range(s.rank):
        assert back.coords[i] == pytest.approx(X.coords[i], rel=1e-12)


def _isomorphism(s: Seed, t: Seed) -> tuple[int, ...] | None:
    G, H = s.matrix(), t.matrix()
    for perm in itertools.permutations(range(s.rank)):
        if np.array_equal(H[np.ix_(perm, perm)], G):
            return perm
    return None


@settings(max_examples=30, deadline=None)
@given(positive, positive)
def test_a2_pentagon_periodicity(x0, x1):
    s = Seed.standard(np.array([[0, 1], [-1, 0]]))
    X = ChartPoint(s, {0: x0, 1: x1})
    t, Y = s, X
    for i in range(5):
        Y = mutate_chart(t, i % 2, Y)
        t = mutate_seed(t, i % 2)
    perm = _isomorphism(s, t)
    assert perm is not None
    # the isomorphism sends e_i to e'_perm[i] and must carry coordinates along
    for i in range(2):
        assert Y.coords[perm[i]] == pytest.approx(X.coords[i], rel=1e-12)


def test_a2_no_shorter_period():
    s = Seed.standard(np.array([[0, 1], [-1, 0]]))
    X = ChartPoint(s, {0: 2.0, 1: 3.0})
    t, Y = s, X
    for i in range(4):
        Y = mutate_chart(t, i % 2, Y)
        t = mutate_seed(t, i % 2)
        assert sorted(Y.coords.values()) != pytest.approx([2.0, 3.0])


@pytest.mark.parametrize("a, m, expected", [
    (-1.0, 2, 4 * math.pi),
    (1.0, 2, 0.0),
    (1j, 1, 4 * math.pi * math.sin(math.pi / 4)),
    (4.0 * (-1), 2, 8 * math.pi),
])
def test_compatible_length_low_order(a, m, expected):
    assert compatible_length(a, m) == pytest.approx(expected, abs=1e-12)


def test_compatible_length_high_order():
    assert compatible_length(1.0, 3, [2.0, -1.5 + 3j]) == pytest.approx(1.5)
    with pytest.raises(InvalidOrder):
        compatible_length(1.0, 4)
    with pytest.raises(InvalidOrder):
        compatible_length(1.0, 0)


def test_asymptotic_ratio():
    assert asymptotic_ratio(math.exp(-2.0), 0.5 + 1j, 4.0) == pytest.approx(1.0)
    with pytest.raises(Overflow):
        asymptotic_ratio(1.0, 1.0, 1e6)
    with pytest.raises(NonPositiveInput):
        asymptotic_ratio(0.0, 1.0, 1.0)
