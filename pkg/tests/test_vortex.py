from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wkbteich import qdiff as Q
from wkbteich import vortex as V
from wkbteich.errors import BadDomain, PathLeavesDomain, ValidationError

SQUARE = Q.RationalQD((-1, 0, 1)).rotated(-0.3)


def _coth_solution(x0: float):
    """``w = log coth(x + x0)`` solves ``w'' = e^{2w} - e^{-2w}``, the vortex equation for ``|phi| = 1``."""
    return lambda z: np.log(1.0 / np.tanh(np.real(z) + x0))


@pytest.fixture(scope="module")
def square_field():
    dom = V.GridDomain.for_differential(SQUARE, -4, 4, -4, 4, 0.08)
    return V.solve(SQUARE, dom, 1e-10)


# -- domains --------------------------------------------------------------------


@pytest.mark.parametrize("kwargs", [
    dict(x0=0, x1=1, y0=0, y1=1, h=0),
    dict(x0=1, x1=0, y0=0, y1=1, h=0.1),
    dict(x0=0, x1=0.2, y0=0, y1=1, h=0.1),
])
def test_bad_domains(kwargs):
    with pytest.raises(BadDomain):
        V.GridDomain(**kwargs)


def test_domain_excises_finite_poles():
    phi = Q.RationalQD((-1, 0, 1), (0, 0, 1))
    dom = V.GridDomain.for_differential(phi, -3, 3, -3, 3, 0.05)
    ((c, r),) = dom.excisions
    assert c == 0 and 0 < r < 1
    assert np.min(np.abs(phi(c + r * np.exp(1j * np.linspace(0, 6, 20))))) > 10
    assert not dom.active[np.unravel_index(np.argmin(np.abs(dom.z)), dom.shape)]


def test_domain_validation():
    with pytest.raises(BadDomain):
        V.GridDomain.box(1.02, 0.02).validate(SQUARE)
    phi = Q.RationalQD((-1, 0, 1), (0, 0, 1))
    with pytest.raises(BadDomain):
        V.GridDomain.box(3, 0.05).validate(phi)


# -- solver ---------------------------------------------------------------------


@pytest.mark.parametrize("c", [1.0, 2.5, 0.3j, -4.0])
def test_constant_differential_exact(c):
    phi = Q.RationalQD((c,))
    f = V.solve(phi, V.GridDomain.box(2, 0.1), 1e-10)
    active = f.domain.active
    assert np.max(np.abs(f.w[active] - 0.5 * math.log(abs(c)))) <= 1e-10
    assert np.max(np.abs(f.w_tilde[active])) <= 1e-10


def test_jacobian_matches_finite_differences():
    sys_ = V.BochnerSystem(SQUARE, V.GridDomain.box(2, 0.1))
    rng = np.random.default_rng(7)
    u = 0.5 * np.log(sys_.phi_abs[sys_.active] + 0.1) + 0.1 * rng.standard_normal(sys_.n)
    J = sys_.jacobian(u)
    for _ in range(3):
        v = rng.standard_normal(sys_.n)
        eps = 1e-6
        fd = (sys_.residual(u + eps * v) - sys_.residual(u - eps * v)) / (2 * eps)
        assert np.max(np.abs(J @ v - fd)) / np.max(np.abs(fd)) < 1e-5


def test_second_order_convergence():
    g = _coth_solution(1.5)
    phi = Q.RationalQD((1.0,))
    errs = []
    for h in (0.1, 0.05, 0.025):
        dom = V.GridDomain.box(1, h)
        f = V.solve(phi, dom, 1e-12, boundary=g)
        errs.append(float(np.max(np.abs(f.w - g(dom.z)))))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(3 <= r <= 5 for r in ratios), ratios


def test_custom_initial_guess(square_field):
    f = V.solve(SQUARE, square_field.domain, 1e-10, w0=square_field.w)
    assert f.iterations == 0


def test_tolerance_must_be_positive():
    with pytest.raises(ValidationError):
        V.solve(SQUARE, V.GridDomain.box(2, 0.1), 0.0)


def test_field_is_subsolution_and_positive(square_field):
    f = square_field
    active = f.domain.active
    assert f.residual < 1e-10
    wt = f.w_tilde[active]
    wt = wt[np.isfinite(wt)]
    h = f.domain.h
    # discretisation error of the five-point scheme bounds any negative excursion
    assert wt.min() >= -h**2
    phi_abs = f.phi_abs[active]
    ok = phi_abs > 0
    assert np.min(f.J[active][ok] / (2 * phi_abs[ok])) >= -h**2


def test_decay_profile_negative_slope(square_field):
    prof = V.decay_profile(square_field)
    assert len(prof) > 10
    assert V.fit_decay(prof) < 0


def test_fit_decay_needs_data():
    with pytest.raises(ValidationError):
        V.fit_decay([(0.1, 1.0), (0.2, -1.0)])


# -- lengths --------------------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0, 2 * math.pi), st.floats(0.1, 0.8))
def test_path_length_flat_metric(x, y, angle, ell):
    # for constant phi the field vanishes and the length is 2 |Re(dz)|
    phi = Q.RationalQD((1.0,))
    f = V.solve(phi, V.GridDomain.box(2, 0.1), 1e-12)
    a = complex(x, y)
    b = a + ell * complex(math.cos(angle), math.sin(angle))
    assert V.path_length(f, phi, [a, b]) == pytest.approx(2 * ell * abs(math.cos(angle)), abs=1e-9)


def test_path_length_trajectory_vs_polyline(square_field):
    tr = Q.trace_trajectory(SQUARE, 0.4 + 1.2j, options=Q.TraceOptions(max_length=1.0))
    a = V.path_length(square_field, SQUARE, tr)
    b = V.path_length(square_field, SQUARE, tr.points)
    assert a == pytest.approx(b, rel=1e-3)
    assert a >= 2 * tr.length * (1 - 1e-6)


def test_path_leaving_domain(square_field):
    with pytest.raises(PathLeavesDomain):
        V.path_length(square_field, SQUARE, [0, 10])


def test_experiment_rejects_small_box():
    with pytest.raises(BadDomain):
        V.asymptotic_experiment(SQUARE, 0, [1, 2], V.GridDomain.box(1.5, 0.1))


def test_experiment_rejects_bad_R():
    with pytest.raises(ValidationError):
        V.asymptotic_experiment(SQUARE, 0, [2, 1], V.GridDomain.box(4, 0.1))


def test_experiment_coarse():
    dom = V.GridDomain.for_differential(SQUARE, -4, 4, -4, 4, 0.08)
    res = V.asymptotic_experiment(SQUARE, 0, [2, 4], dom, margin=0.5, tol=1e-9)
    assert res.ReZ == pytest.approx(math.pi * math.sin(0.3), rel=1e-9)
    assert res.decreasing()
    assert res.csv().splitlines()[0] == "R,S,R_ReZ,deviation,ratio"
    vert = [sum(r.vertical) for r in res.rows]
    assert vert[1] < vert[0]
