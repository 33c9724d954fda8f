from __future__ import annotations

import cmath
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import simpson

from conftest import differentials
from wkbteich import qdiff as Q
from wkbteich import surface as S
from wkbteich.errors import Incomplete, NotAPole, NotGMN, OctagonCollision, SaddleDetected, ValidationError

CASES = differentials()
THETAS = (0.37, -0.81)


def _oracle_square_period() -> complex:
    # x = -cos u maps [0, pi] onto the saddle [-1, 1]; sqrt(x^2 - 1) = i sin u there
    u = np.linspace(0.0, math.pi, 4001)
    half = simpson(np.sin(u) ** 2, x=u)
    return 2j * half


def _match_up_to_sign(a, b, tol):
    for z in a:
        assert min(min(abs(z - w), abs(z + w)) for w in b) <= tol * max(1.0, abs(z))


@pytest.fixture(scope="module")
def decomps():
    out = {}
    for name, phi in CASES.items():
        for th in THETAS:
            p = phi.rotated(th)
            out[name, th] = (p, Q.strip_decomposition(p))
    return out


# -- differentials and critical data -------------------------------------------


def test_rotation_and_scaling():
    phi = CASES["cubic"]
    z = 0.3 - 0.7j
    assert phi.rotated(0.4)(z) == pytest.approx(cmath.exp(0.8j) * phi(z))
    assert phi.scaled(3.0)(z) == pytest.approx(9.0 * phi(z))


def test_derivative_matches_finite_difference():
    phi = CASES["pole3"]
    z, h = 0.6 + 0.4j, 1e-6
    fd = (phi(z + h) - phi(z - h)) / (2 * h)
    assert phi.derivative(z) == pytest.approx(fd, rel=1e-7)


@pytest.mark.parametrize("name, zeros, orders", [
    ("square", 2, [6]),
    ("cubic", 3, [7]),
    ("quartic", 4, [8]),
    ("punctured", 2, [2, 4]),
    ("pole3", 2, [3, 3]),
])
def test_critical_data(name, zeros, orders):
    crit = Q.critical_data(CASES[name])
    assert len(crit.zeros) == zeros
    assert sorted(p.order for p in crit.poles) == orders
    assert sum(p.order for p in crit.poles) - zeros == 4


def test_pole_directions_at_infinity():
    crit = Q.critical_data(CASES["square"])
    (p,) = crit.poles
    assert p.at_infinity and len(p.directions) == 4
    dirs = sorted(p.z_directions())
    assert np.allclose(np.diff(dirs), math.pi / 2)


def test_double_pole_residue():
    crit = Q.critical_data(CASES["punctured"])
    p = crit.poles[crit.pole_at(0)]
    r = p.residues
    assert abs(abs(r[0]) - 4 * math.pi) < 1e-9 and r[0] == -r[1]
    pp = Q.principal_part(CASES["punctured"], 0)
    assert abs(abs(pp.residue) - 1.0) < 1e-12
    assert abs(abs(4j * math.pi * pp.residue) - abs(r[0])) < 1e-9


def test_odd_order_principal_part():
    pp = Q.principal_part(CASES["pole3"], 0)
    assert pp.eps == 0.5 and pp.residue == 0


def test_pole_lookup():
    crit = Q.critical_data(CASES["punctured"])
    with pytest.raises(NotAPole):
        crit.pole_at(5.0)


@pytest.mark.parametrize("num, den, err", [
    ((0, 0, 1), (1,), NotGMN),          # double zero
    ((1,), (1,), NotGMN),               # no finite critical point
    ((1,), (0, 0, 0, 0, 0, 0, 1), NotGMN),  # zero at infinity
])
def test_not_gmn(num, den, err):
    with pytest.raises(err):
        Q.critical_data(Q.RationalQD(num, den))


def test_json_roundtrip():
    phi = CASES["pole3"].rotated(0.2)
    back = Q.RationalQD.from_json(json.loads(json.dumps(phi.to_json())))
    assert back(0.3 + 0.1j) == pytest.approx(phi(0.3 + 0.1j))


def test_json_from_roots():
    phi = Q.RationalQD.from_json({"zeros": [[1, 0], [-1, 0]], "theta": 0.25})
    assert phi(2.0) == pytest.approx(3 * cmath.exp(0.5j))


def test_json_rejects_garbage():
    with pytest.raises(ValidationError):
        Q.RationalQD.from_json({"numerator": "x"})


# -- trajectories ---------------------------------------------------------------


@pytest.mark.parametrize("start", [2j, 0.5 + 1j, -3 + 0.2j])
def test_trajectory_goes_to_pole_with_small_drift(start):
    phi = CASES["square"].rotated(-0.3)
    tr = Q.trace_trajectory(phi, start)
    assert tr.termination.kind == "into_pole"
    assert tr.drift < 1e-7
    # flat parametrisation: |dz| sqrt|phi| integrates to the length
    z = tr.points
    mid = 0.5 * (z[1:] + z[:-1])
    approx = np.sum(np.abs(np.diff(z)) * np.sqrt(np.abs(phi(mid))))
    assert approx == pytest.approx(tr.length, rel=1e-3)


def test_trajectory_branches_go_opposite_ways():
    phi = CASES["square"].rotated(-0.3)
    a = Q.trace_trajectory(phi, 1j, 1)
    b = Q.trace_trajectory(phi, 1j, -1)
    assert a.termination.direction != b.termination.direction


def test_trajectory_dense_output():
    phi = CASES["cubic"].rotated(0.37)
    tr = Q.trace_trajectory(phi, 0.2 + 0.9j)
    assert tr.sample(tr.times[[0, -1]]) == pytest.approx(tr.points[[0, -1]])


def test_trajectory_cannot_start_on_zero():
    with pytest.raises(ValidationError):
        Q.trace_trajectory(CASES["square"], 1.0)


# -- decomposition, periods, WKB triangulation ---------------------------------------


@pytest.mark.parametrize("name, strips, halves, boundary, punctures", [
    ("square", 1, 4, (4,), 0),
    ("cubic", 2, 5, (5,), 0),
    ("quartic", 3, 6, (6,), 0),
    ("punctured", 2, 2, (2,), 1),
    ("pole3", 2, 2, (1, 1), 0),
])
@pytest.mark.parametrize("theta", THETAS)
def test_decomposition_shape(decomps, name, strips, halves, boundary, punctures, theta):
    phi, dec = decomps[name, theta]
    assert len(dec.strips) == strips
    assert len(dec.half_planes) == halves
    res = Q.wkb_triangulation(phi, dec)
    T = res.triangulation
    assert T.surface == S.MarkedBorderedSurface(0, boundary, punctures)
    assert T.n == strips == S.arc_count(T.surface)
    assert sorted(res.arc_to_saddle.values()) == list(range(strips))


@pytest.mark.parametrize("key", [(n, t) for n in CASES for t in THETAS])
def test_periods_upper_half_plane(decomps, key):
    phi, dec = decomps[key]
    pv = Q.periods(phi, dec)
    assert all(z.imag > 0 for z in pv.Z)
    assert max(pv.error) < 1e-9


def test_square_period_against_oracle(decomps):
    oracle = _oracle_square_period()
    assert abs(oracle - 1j * math.pi) < 1e-12
    phi = CASES["square"]
    (Z,) = Q.periods(phi, Q.strip_decomposition(phi)).Z
    assert abs(Z - oracle) < 1e-8 * math.pi
    for th in THETAS:
        phi, dec = decomps["square", th]
        (Z,) = Q.periods(phi, dec).Z
        # e^{i theta} iπ may leave the upper half plane; normalisation fixes the sign
        assert min(abs(Z - s * cmath.exp(1j * th) * oracle) for s in (1, -1)) < 1e-8 * math.pi


@pytest.mark.parametrize("name", ["cubic", "quartic", "pole3"])
def test_rotation_equivariance(name):
    base, step = 0.37, 0.21
    phi = CASES[name]
    Z0 = Q.periods(phi.rotated(base), Q.strip_decomposition(phi.rotated(base))).Z
    p1 = phi.rotated(base + step)
    Z1 = Q.periods(p1, Q.strip_decomposition(p1)).Z
    _match_up_to_sign(Z1, [cmath.exp(1j * step) * z for z in Z0], 1e-8)


@pytest.mark.parametrize("theta", THETAS)
def test_double_pole_period_sum_is_residue(decomps, theta):
    phi, dec = decomps["punctured", theta]
    Z = Q.periods(phi, dec).Z
    crit = Q.critical_data(phi)
    res = crit.poles[crit.pole_at(0)].residues[0]
    assert min(abs(sum(Z) - s * res) for s in (1, -1)) < 1e-8 * abs(res)


def test_signing_for_double_pole(decomps):
    phi, dec = decomps["punctured", 0.37]
    res = Q.wkb_triangulation(phi, dec)
    assert set(res.signing.values()) <= {1, -1}
    assert set(res.signing) == set(res.triangulation.punctures)


def test_saddle_detected_on_critical_phase():
    with pytest.raises(SaddleDetected):
        Q.strip_decomposition(CASES["square"].rotated(math.pi / 2))


def test_simple_pole_incomplete():
    with pytest.raises(Incomplete):
        Q.strip_decomposition(Q.RationalQD((-1, 0, 1), (0, 1)).rotated(0.3))


def test_decomposition_json(decomps):
    phi, dec = decomps["cubic", 0.37]
    text = json.dumps(dec.to_json(), sort_keys=True)
    assert json.loads(text)


def test_render_svg(decomps):
    phi, dec = decomps["quartic", 0.37]
    svg = Q.render_svg(dec, Q.octagon_check(phi, 0, 0.4, dec=dec))
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")


# -- octagon identity ------------------------------------------------------------------


@pytest.mark.parametrize("key", [(n, t) for n in CASES for t in THETAS])
def test_octagon_first_saddle(decomps, key):
    phi, dec = decomps[key]
    oc = Q.octagon_check(phi, 0, 0.4, dec=dec)
    assert abs(oc.lhs - oc.rhs) < 1e-6
    assert len(oc.horizontal_sides) == 4 and len(oc.vertical_sides) == 4
    assert oc.closure < 1e-6


@settings(max_examples=8, deadline=None)
@given(st.floats(0.1, 1.2) | st.floats(-1.2, -0.1), st.floats(0.2, 0.8))
def test_octagon_square_family(theta, margin):
    phi = CASES["square"].rotated(theta)
    oc = Q.octagon_check(phi, 0, margin)
    assert abs(oc.lhs - oc.rhs) < 1e-6
    # the horizontal sides pair up: opposite sides have equal flat length
    L = oc.lengths
    assert L[0] == pytest.approx(L[2], rel=1e-8) and L[1] == pytest.approx(L[3], rel=1e-8)


def test_octagon_margin_out_of_range(decomps):
    phi, dec = decomps["square", 0.37]
    with pytest.raises(ValidationError):
        Q.octagon_check(phi, 0, 0.0, dec=dec)


def test_octagon_closed_loop_saddle_rejected():
    zeros = [0.5 + 0.5j, -0.5 + 0.4j, 0.3 - 0.6j, 2.2 + 0.1j]
    phi = Q.RationalQD.from_roots(zeros, [(0, 2), (1.5, 2), (-1.5 + 0.3j, 2)]).rotated(0.37)
    dec = Q.strip_decomposition(phi)
    assert len(dec.strips) == 6
    loops = [k for k, s in enumerate(dec.saddles) if s.zeros[0] == s.zeros[1]]
    assert loops
    errors = []
    for k in range(len(dec.saddles)):
        try:
            oc = Q.octagon_check(phi, k, 0.1, dec=dec)
            errors.append(abs(oc.lhs - oc.rhs))
        except OctagonCollision:
            errors.append(None)
    assert all(errors[k] is None for k in loops)
    assert sum(e is not None for e in errors) >= 3
    assert all(e < 1e-6 for e in errors if e is not None)
