"""Meromorphic quadratic differentials on the Riemann sphere.

A differential is ``phi = scale * N(z) / D(z) dz^2`` with complex polynomial
coefficients in ascending order.  The module locates critical points,
expands square roots at poles, traces trajectories of the flat structure,
decomposes a saddle-free differential into horizontal strips and half planes,
and computes periods of the standard saddle classes.

Square roots are never taken pointwise along a path.  Trajectories integrate
the pair ``(z, s)`` with ``s^2 = phi(z)`` so the branch is carried by the ODE,
and quadratures pick at each node the root closest to the interpolated
tracked value.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.integrate import solve_ivp

from .errors import (
    BranchTrackingLost,
    DecompositionAmbiguous,
    DegenerateRoots,
    Incomplete,
    NotAPole,
    NotGMN,
    OctagonCollision,
    QuadratureFailure,
    RealResidue,
    SaddleDetected,
    ValidationError,
)
from .surface import IdealTriangulation, MarkedBorderedSurface, Triangle, arc_count

__all__ = [
    "RationalQD",
    "Pole",
    "CriticalData",
    "PrincipalPart",
    "TraceOptions",
    "Termination",
    "Trajectory",
    "Separatrix",
    "Region",
    "StandardSaddle",
    "StripDecomposition",
    "PeriodVector",
    "WKBResult",
    "OctagonResult",
    "critical_data",
    "principal_part",
    "trace_trajectory",
    "strip_decomposition",
    "periods",
    "wkb_triangulation",
    "octagon_check",
    "render_svg",
]

INF = None  # marker for the point at infinity


def _as_complex_list(values: Iterable[Any]) -> tuple[complex, ...]:
    out = []
    for v in values:
        if isinstance(v, (list, tuple)):
            if len(v) != 2:
                raise ValidationError(f"complex numbers are [re, im] pairs, got {v!r}")
            out.append(complex(float(v[0]), float(v[1])))
        else:
            out.append(complex(v))
    return tuple(out)


def _trim(c: Sequence[complex]) -> tuple[complex, ...]:
    c = list(c)
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return tuple(c)


@dataclass(frozen=True)
class RationalQD:
    """``scale * N(z)/D(z) dz^2``; coefficient tuples run from degree 0 upwards."""

    numerator: tuple[complex, ...]
    denominator: tuple[complex, ...] = (1 + 0j,)
    scale: complex = 1 + 0j

    def __post_init__(self) -> None:
        num = _trim(_as_complex_list(self.numerator))
        den = _trim(_as_complex_list(self.denominator))
        if not num or all(c == 0 for c in num):
            raise NotGMN("the zero differential is not allowed")
        if not den or all(c == 0 for c in den):
            raise ValidationError("denominator must be a nonzero polynomial")
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "denominator", den)
        object.__setattr__(self, "scale", complex(self.scale))
        if self.scale == 0 or not cmath.isfinite(self.scale):
            raise ValidationError("scale must be finite and nonzero")

    @classmethod
    def from_roots(
        cls,
        zeros: Sequence[complex] = (),
        poles: Sequence[tuple[complex, int]] = (),
        scale: complex = 1,
    ) -> RationalQD:
        num = P.polyfromroots(list(zeros)) if len(zeros) else np.array([1.0])
        den_roots = [p for p, m in poles for _ in range(int(m))]
        den = P.polyfromroots(den_roots) if den_roots else np.array([1.0])
        return cls(tuple(num), tuple(den), scale)

    @property
    def deg_num(self) -> int:
        return len(self.numerator) - 1

    @property
    def deg_den(self) -> int:
        return len(self.denominator) - 1

    @property
    def order_at_infinity(self) -> int:
        """Pole order at infinity (negative for a zero there)."""
        return self.deg_num - self.deg_den + 4

    def rotated(self, theta: float) -> RationalQD:
        """``e^{2 i theta} phi``."""
        return replace(self, scale=self.scale * cmath.exp(2j * theta))

    def scaled(self, R: float) -> RationalQD:
        """``R^2 phi``."""
        return replace(self, scale=self.scale * R * R)

    def __call__(self, z: Any) -> Any:
        return self.scale * P.polyval(z, self.numerator) / P.polyval(z, self.denominator)

    def derivative(self, z: Any) -> Any:
        dnum, dden = self._derivatives
        n = P.polyval(z, self.numerator)
        d = P.polyval(z, self.denominator)
        return self.scale * (P.polyval(z, dnum) * d - n * P.polyval(z, dden)) / (d * d)

    @property
    def _derivatives(self) -> tuple[np.ndarray, np.ndarray]:
        cached = self.__dict__.get("_dcache")
        if cached is None:
            cached = (P.polyder(np.asarray(self.numerator)), P.polyder(np.asarray(self.denominator)))
            object.__setattr__(self, "_dcache", cached)
        return cached

    def to_json(self) -> dict[str, Any]:
        def enc(cs: Sequence[complex]) -> list[list[float]]:
            return [[c.real, c.imag] for c in cs]

        return {"numerator": enc(self.numerator), "denominator": enc(self.denominator),
                "scale": [self.scale.real, self.scale.imag]}

    @classmethod
    def from_json(cls, data: Mapping[str, Any] | str) -> RationalQD:
        """Accepts ``numerator``/``denominator`` coefficient lists (ascending)
        or ``zeros``/``poles`` root data, plus optional ``scale`` and ``theta``."""
        if isinstance(data, str):
            data = json.loads(data)
        try:
            scale = _as_complex_list([data.get("scale", 1.0)])[0]
            if "numerator" in data:
                phi = cls(_as_complex_list(data["numerator"]),
                          _as_complex_list(data.get("denominator", [1.0])), scale)
            else:
                zeros = _as_complex_list(data.get("zeros", []))
                poles = [(_as_complex_list([p])[0], int(m)) for p, m in data.get("poles", [])]
                phi = cls.from_roots(zeros, poles, scale)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed differential record: {exc}") from exc
        if "theta" in data:
            phi = phi.rotated(float(data["theta"]))
        return phi


# -- critical data ----------------------------------------------------------


@dataclass(frozen=True)
class Pole:
    point: complex | None
    order: int
    leading: complex
    directions: tuple[float, ...] = ()

    @property
    def at_infinity(self) -> bool:
        return self.point is None

    @property
    def residues(self) -> tuple[complex, complex] | None:
        if self.order != 2:
            return None
        r = 4j * math.pi * cmath.sqrt(self.leading)
        return (r, -r)

    def z_directions(self) -> tuple[float, ...]:
        """Asymptotic directions as arguments in the z-plane."""
        if self.at_infinity:
            return tuple((-d) % (2 * math.pi) for d in self.directions)
        return self.directions

    def label(self) -> str:
        return "inf" if self.at_infinity else f"{self.point.real:.6g}{self.point.imag:+.6g}i"


@dataclass(frozen=True)
class CriticalData:
    zeros: tuple[complex, ...]
    poles: tuple[Pole, ...]

    @property
    def simple_poles(self) -> tuple[Pole, ...]:
        return tuple(p for p in self.poles if p.order == 1)

    @property
    def finite_points(self) -> tuple[complex, ...]:
        return self.zeros + tuple(p.point for p in self.poles if p.point is not None)

    def pole_at(self, point: complex | None, tol: float = 1e-8) -> int:
        for i, p in enumerate(self.poles):
            if point is None and p.point is None:
                return i
            if point is not None and p.point is not None and abs(p.point - point) <= tol * (1 + abs(point)):
                return i
        raise NotAPole(f"{point} is not a pole")

    def to_json(self) -> dict[str, Any]:
        return {
            "zeros": [[z.real, z.imag] for z in self.zeros],
            "poles": [
                {
                    "point": None if p.point is None else [p.point.real, p.point.imag],
                    "order": p.order,
                    "leading": [p.leading.real, p.leading.imag],
                    "directions": list(p.z_directions()),
                    **({"residues": [[r.real, r.imag] for r in p.residues]} if p.residues else {}),
                }
                for p in self.poles
            ],
        }


def _roots(coeffs: Sequence[complex]) -> np.ndarray:
    if len(coeffs) <= 1:
        return np.zeros(0, dtype=complex)
    r = np.roots(np.asarray(coeffs, dtype=complex)[::-1]).astype(complex)
    # polish simple roots with a couple of Newton steps
    d = P.polyder(coeffs)
    for _ in range(3):
        f = P.polyval(r, coeffs)
        fp = P.polyval(r, d)
        ok = np.abs(fp) > 1e-12 * (1 + np.abs(f))
        r = np.where(ok, r - np.where(ok, f / np.where(ok, fp, 1), 0), r)
    return r


def _cluster(roots: np.ndarray, radius: float) -> list[list[complex]]:
    groups: list[list[complex]] = []
    for r in sorted(roots.tolist(), key=lambda c: (c.real, c.imag)):
        for g in groups:
            if min(abs(r - x) for x in g) <= radius * (1 + abs(r)):
                g.append(r)
                break
        else:
            groups.append([r])
    return groups


def _multiplicity_ok(coeffs: Sequence[complex], c: complex, m: int, tol: float) -> bool:
    scale = max(abs(x) for x in coeffs) * (1 + abs(c)) ** (len(coeffs) - 1)
    d = np.asarray(coeffs, dtype=complex)
    for j in range(m):
        if abs(P.polyval(c, d)) > tol * scale * math.factorial(j + 1) * 10 ** j:
            return False
        d = P.polyder(d)
    return True


def critical_data(phi: RationalQD, tol: float = 1e-9, gmn: bool = True) -> CriticalData:
    """Zeros, poles with orders, leading coefficients and asymptotic directions.

    With ``gmn=False`` only the root locations are checked, so differentials
    such as ``dz^2`` are accepted.
    """
    radius = max(1e-4, 10 * tol)
    zero_groups = _cluster(_roots(phi.numerator), radius)
    zeros = []
    for g in zero_groups:
        c = complex(np.mean(g))
        if len(g) > 1:
            if _multiplicity_ok(phi.numerator, c, len(g), 1e-6):
                raise NotGMN(f"zero of order {len(g)} at {c:.6g}")
            raise DegenerateRoots(f"zeros cluster near {c:.6g} within {radius:g}")
        zeros.append(c)
    poles: list[Pole] = []
    for g in _cluster(_roots(phi.denominator), 1e-3):
        c = complex(np.mean(g))
        m = len(g)
        if not _multiplicity_ok(phi.denominator, c, m, 1e-5):
            raise DegenerateRoots(f"poles cluster near {c:.6g}")
        dm = P.polyder(phi.denominator, m)
        lead = phi.scale * P.polyval(c, phi.numerator) * math.factorial(m) / P.polyval(c, dm)
        poles.append(_make_pole(c, m, complex(lead)))
    for z in zeros:
        for p in poles:
            if abs(z - p.point) <= radius * (1 + abs(z)):
                raise DegenerateRoots(f"zero and pole collide near {z:.6g}")
    m_inf = phi.order_at_infinity
    if m_inf >= 1:
        lead = phi.scale * phi.numerator[-1] / phi.denominator[-1]
        poles.append(_make_pole(None, m_inf, complex(lead)))
    if not gmn:
        return CriticalData(tuple(sorted(zeros, key=lambda c: (c.real, c.imag))), tuple(poles))
    if m_inf == -1:
        raise ValidationError("a zero at infinity is not supported; move it with a Mobius change of variable")
    elif m_inf <= -2:
        raise NotGMN(f"zero of order {-m_inf} at infinity")
    if not poles:
        raise NotGMN("a GMN differential needs at least one pole")
    if not zeros and not any(p.order == 1 for p in poles):
        raise NotGMN("a GMN differential needs at least one zero or simple pole")
    zeros.sort(key=lambda c: (round(c.real, 9), round(c.imag, 9)))
    return CriticalData(tuple(zeros), tuple(poles))


def _make_pole(point: complex | None, m: int, lead: complex) -> Pole:
    dirs: tuple[float, ...] = ()
    if m >= 3:
        a = cmath.phase(lead)
        dirs = tuple(((a + 2 * math.pi * j) / (m - 2)) % (2 * math.pi) for j in range(m - 2))
        dirs = tuple(sorted(dirs))
    return Pole(point, m, lead, dirs)


# -- principal parts --------------------------------------------------------


@dataclass(frozen=True)
class PrincipalPart:
    """``z^-eps (c_r z^-r + ... + c_1 z^-1) dz`` up to a global sign."""

    order: int
    eps: float
    coefficients: tuple[complex, ...]

    @property
    def residue(self) -> complex:
        if self.eps or not self.coefficients:
            return 0j
        return self.coefficients[-1]


def _laurent(phi: RationalQD, pole: Pole, terms: int) -> np.ndarray:
    """Coefficients ``a_0, a_1, ...`` with ``phi = t^-m sum a_j t^j dt^2``."""
    if pole.at_infinity:
        num = np.asarray(phi.numerator[::-1], dtype=complex)
        den = np.asarray(phi.denominator[::-1], dtype=complex)
    else:
        num = _compose_shift(phi.numerator, pole.point)
        den = _compose_shift(phi.denominator, pole.point)[pole.order :]
    out = np.zeros(terms, dtype=complex)
    num = np.concatenate([num, np.zeros(terms, dtype=complex)])
    den = np.concatenate([den, np.zeros(terms, dtype=complex)])
    for k in range(terms):
        out[k] = (num[k] - sum(out[i] * den[k - i] for i in range(k))) / den[0]
    return phi.scale * out


def _compose_shift(coeffs: Sequence[complex], p: complex) -> np.ndarray:
    res = np.array([0j])
    for c in reversed(coeffs):
        res = P.polyadd(P.polymul(res, [p, 1.0]), [c])
    return np.asarray(res, dtype=complex)


def _sqrt_series(a: np.ndarray) -> np.ndarray:
    g = np.zeros_like(a)
    g[0] = cmath.sqrt(a[0])
    for k in range(1, len(a)):
        g[k] = (a[k] - sum(g[i] * g[k - i] for i in range(1, k))) / (2 * g[0])
    return g


def principal_part(phi: RationalQD, p: complex | None | Pole, coord: complex = 1.0,
                   crit: CriticalData | None = None) -> PrincipalPart:
    """Principal part of ``sqrt(phi)`` at the pole ``p`` in the chart ``t = coord*(z - p)``
    (``t = coord/z`` at infinity)."""
    crit = crit or critical_data(phi)
    pole = p if isinstance(p, Pole) else crit.poles[crit.pole_at(p)]
    m = pole.order
    a = _laurent(phi, pole, m + 1)
    c = complex(coord)
    a = np.array([a[j] * c ** (m - j - 2) for j in range(len(a))])
    g = _sqrt_series(a)
    if m % 2 == 0:
        r = m // 2
        coeffs = tuple(complex(g[k]) for k in range(r))
        return PrincipalPart(m, 0.0, coeffs)
    r = (m - 1) // 2
    return PrincipalPart(m, 0.5, tuple(complex(g[k]) for k in range(r)))


# -- trajectories -----------------------------------------------------------


@dataclass(frozen=True)
class TraceOptions:
    max_length: float | None = None
    eps_hit: float = 1e-6
    rtol: float = 1e-11
    atol: float = 1e-13
    drift_tol: float = 1e-7
    start_radius: float = 1e-3
    pole_radius: float | None = None
    infinity_radius: float | None = None
    samples_per_step: int = 4
    restarts: int = 6


@dataclass(frozen=True)
class Termination:
    kind: str  # "hit_zero", "into_pole", "truncated", "completed"
    zero: int | None = None
    pole: int | None = None
    direction: int | None = None

    def end(self) -> tuple:
        if self.kind == "into_pole":
            return ("pole", self.pole, -1 if self.direction is None else self.direction)
        if self.kind == "hit_zero":
            return ("zero", self.zero, -1)
        return (self.kind, -1, -1)


@dataclass
class Trajectory:
    points: np.ndarray
    roots: np.ndarray
    times: np.ndarray
    theta: float
    termination: Termination
    drift: float = 0.0
    dense: list[Callable[[np.ndarray], np.ndarray]] = field(default_factory=list, repr=False)

    @property
    def length(self) -> float:
        return float(self.times[-1] - self.times[0])

    @property
    def start(self) -> complex:
        return complex(self.points[0])

    @property
    def end_point(self) -> complex:
        return complex(self.points[-1])

    @property
    def end_root(self) -> complex:
        return complex(self.roots[-1])

    def sample(self, t: np.ndarray) -> np.ndarray:
        """Positions at flat parameters ``t`` (from the dense output)."""
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape, dtype=complex)
        for lo, hi, fn in self.dense:
            sel = (t >= lo - 1e-15) & (t <= hi + 1e-15)
            if np.any(sel):
                out[sel] = fn(t[sel])[0]
        return out

    def to_json(self, every: int = 1) -> dict[str, Any]:
        pts = self.points[::every]
        if len(self.points) and (len(self.points) - 1) % every:
            pts = np.append(pts, self.points[-1])
        return {
            "points": [[float(z.real), float(z.imag)] for z in pts],
            "length": self.length,
            "termination": self.termination.kind,
            "end": list(self.termination.end()),
        }


def _auto_radii(crit: CriticalData, opts: TraceOptions) -> tuple[dict[int, float], float]:
    pts = crit.finite_points
    scale = max([1.0] + [abs(z) for z in pts])
    R_inf = opts.infinity_radius or 8.0 * scale
    radii = {}
    for i, p in enumerate(crit.poles):
        if p.point is None:
            continue
        others = [abs(p.point - q) for q in pts if q != p.point]
        d = min(others) if others else 1.0
        radii[i] = opts.pole_radius or 0.05 * d
    return radii, R_inf


def _length_budget(crit: CriticalData, opts: TraceOptions) -> float:
    """Flat length that comfortably reaches every pole neighbourhood."""
    if opts.max_length is not None:
        return opts.max_length
    radii, R_inf = _auto_radii(crit, opts)
    total = 100.0
    for i, p in enumerate(crit.poles):
        a = math.sqrt(abs(p.leading))
        if p.order >= 3:
            k = p.order / 2 - 1
            r = 1 / R_inf if p.point is None else radii[i]
            total += 8 * a * r ** (-k) / k
        elif p.order == 2:
            total += 50 * a * (1 + abs(math.log(radii.get(i, 1 / R_inf))))
    return total


def _integrate(
    phi: RationalQD,
    crit: CriticalData,
    z0: complex,
    s0: complex,
    theta: float,
    length: float,
    opts: TraceOptions,
    mode: str = "trace",
    ignore_zero: int | None = None,
) -> Trajectory:
    """Integrate ``dz/dt = e^{i theta}/s`` with ``ds/dt = phi'(z) e^{i theta}/(2 s^2)``.

    In ``trace`` mode a trajectory runs until it settles into a pole; in
    ``move`` mode it runs for ``length`` and any pole neighbourhood stops it.
    """
    d = cmath.exp(1j * theta)
    radii, R_inf = _auto_radii(crit, opts)
    if mode == "move":
        # poles are at infinite flat distance; these only guard the arithmetic
        radii = {i: r * 1e-6 for i, r in radii.items()}
        R_inf *= 1e6

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        z, s = y
        dz = d / s
        return np.array([dz, phi.derivative(z) * dz / (2 * s)])

    events, tags = _rebuild_events(crit, opts, radii, R_inf, ignore_zero)

    pts: list[np.ndarray] = [np.array([z0])]
    roots: list[np.ndarray] = [np.array([s0])]
    times: list[np.ndarray] = [np.array([0.0])]
    dense: list = []
    t0, y0 = 0.0, np.array([z0, s0], dtype=complex)
    termination = Termination("completed" if mode == "move" else "truncated")
    restarts = 0
    while True:
        if length - t0 <= 0:
            break
        sol = solve_ivp(rhs, (t0, length), y0, method="DOP853", rtol=opts.rtol, atol=opts.atol,
                        events=events or None, dense_output=True)
        if sol.status == -1:
            raise BranchTrackingLost(f"integration failed: {sol.message}")
        ts = sol.t
        k = max(1, opts.samples_per_step)
        fine = np.concatenate([np.linspace(a, b, k, endpoint=False)[1:] if b > a else [] for a, b in zip(ts[:-1], ts[1:])] + [ts[1:]])
        fine = np.sort(fine)
        ys = sol.sol(fine) if len(fine) else np.zeros((2, 0), dtype=complex)
        pts.append(ys[0])
        roots.append(ys[1])
        times.append(fine)
        dense.append((float(ts[0]), float(ts[-1]), sol.sol))
        if sol.status == 0:
            if mode == "move":
                termination = Termination("completed")
            break
        fired = [i for i, te in enumerate(sol.t_events) if len(te)]
        kind, idx = tags[fired[0]]
        zf, sf = sol.y[0, -1], sol.y[1, -1]
        if kind == "zero":
            termination = Termination("hit_zero", zero=idx)
            break
        pole = crit.poles[idx]
        dz = d / sf
        if mode == "move" or pole.order < 3:
            termination = Termination("into_pole", pole=idx)
            break
        if pole.point is None:
            arg, radial = cmath.phase(zf), (zf.conjugate() * dz).real
        else:
            arg, radial = cmath.phase(zf - pole.point), -((zf - pole.point).conjugate() * dz).real
        # a trajectory of angle theta is horizontal for e^{-2 i theta} phi
        dirs = _make_pole(pole.point, pole.order, pole.leading * d.conjugate() ** 2).z_directions()
        gaps = [abs((arg - a + math.pi) % (2 * math.pi) - math.pi) for a in dirs]
        j = int(np.argmin(gaps))
        if gaps[j] < math.pi / (2 * (pole.order - 2)) and radial > 0:
            termination = Termination("into_pole", pole=idx, direction=j)
            break
        restarts += 1
        if restarts > opts.restarts:
            break
        # not yet inside the funnel: continue with a deeper threshold
        if pole.point is None:
            R_inf *= 2
        else:
            radii[idx] *= 0.5
        events, tags = _rebuild_events(crit, opts, radii, R_inf, ignore_zero)
        t0, y0 = float(sol.t[-1]), sol.y[:, -1].copy()

    traj = Trajectory(np.concatenate(pts), np.concatenate(roots), np.concatenate(times), theta, termination,
                      dense=dense)
    bad = np.abs(traj.roots ** 2 - phi(traj.points)) > 1e-6 * (np.abs(phi(traj.points)) + 1e-300)
    if np.any(bad[1:]):
        raise BranchTrackingLost("tracked square root drifted off the differential")
    return traj


def _rebuild_events(crit: CriticalData, opts: TraceOptions, radii: dict[int, float], R_inf: float,
                    ignore_zero: int | None) -> tuple[list, list]:
    events: list = []
    tags: list = []
    for k, zk in enumerate(crit.zeros):
        if k == ignore_zero:
            continue

        def ev(t: float, y: np.ndarray, zk: complex = zk) -> float:
            return abs(y[0] - zk) - opts.eps_hit

        ev.terminal = True
        ev.direction = -1
        events.append(ev)
        tags.append(("zero", k))
    for i, p in enumerate(crit.poles):
        if p.point is None:
            def ev(t: float, y: np.ndarray, R: float = R_inf) -> float:
                return R - abs(y[0])
        else:
            def ev(t: float, y: np.ndarray, c: complex = p.point, r: float = radii[i]) -> float:
                return abs(y[0] - c) - r
        ev.terminal = True
        ev.direction = -1
        events.append(ev)
        tags.append(("pole", i))
    return events, tags


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(n)
        _GL_CACHE[n] = ((x + 1) / 2, w / 2)
    return _GL_CACHE[n]


def _pick_root(phi_vals: np.ndarray, guess: np.ndarray) -> np.ndarray:
    r = np.sqrt(phi_vals.astype(complex))
    flip = np.abs(r - guess) > np.abs(r + guess)
    r = np.where(flip, -r, r)
    amb = np.abs(r - guess) > 0.5 * np.abs(r)
    if np.any(amb):
        raise BranchTrackingLost("branch choice became ambiguous along a chord")
    return r


def contour_integral(phi: RationalQD, points: np.ndarray, roots: np.ndarray, n: int = 8) -> np.ndarray:
    """Cumulative ``int sqrt(phi) dz`` along chords, branch fixed by ``roots`` at vertices."""
    x, w = _gauss(n)
    a, b = points[:-1], points[1:]
    sa, sb = roots[:-1], roots[1:]
    nodes = a[:, None] + (b - a)[:, None] * x[None, :]
    guess = sa[:, None] + (sb - sa)[:, None] * x[None, :]
    vals = _pick_root(phi(nodes), guess)
    seg = (b - a) * (vals @ w)
    return np.concatenate([[0j], np.cumsum(seg)])


def _singular_chord(phi: RationalQD, p: complex, z1: complex, s1: complex, n: int = 16) -> complex:
    """``int_p^{z1} sqrt(phi) dz`` for a simple zero ``p``; branch fixed by ``s1 = sqrt(phi(z1))``."""
    delta = z1 - p
    sd = cmath.sqrt(delta)
    x, w = _gauss(n)
    tau = x[::-1]  # walk from z1 towards p so the branch is continued
    z = p + delta * tau ** 2
    g_target = np.sqrt((phi(z) / (z - p)).astype(complex))
    g = np.empty_like(g_target)
    prev = s1 / sd
    for i, val in enumerate(g_target):
        val = val if abs(val - prev) <= abs(val + prev) else -val
        g[i] = val
        prev = val
    integrand = 2 * delta * sd * tau ** 2 * g
    return complex(np.sum(integrand * w[::-1]))


def trace_trajectory(
    phi: RationalQD,
    start: complex,
    branch: int = 1,
    *,
    theta: float = 0.0,
    options: TraceOptions | None = None,
    crit: CriticalData | None = None,
) -> Trajectory:
    """Trace the trajectory of angle ``theta`` (0 = horizontal) from ``start``.

    ``branch`` picks the sign of ``sqrt(phi(start))`` and hence the direction
    of travel.  Parametrized by flat arclength.
    """
    opts = options or TraceOptions()
    crit = crit or critical_data(phi)
    start = complex(start)
    for zk in crit.zeros:
        if abs(start - zk) <= opts.eps_hit:
            raise ValidationError("cannot start a trajectory on a zero")
    s0 = cmath.sqrt(phi(start)) * (1 if branch >= 0 else -1)
    traj = _integrate(phi, crit, start, s0, theta, _length_budget(crit, opts), opts)
    traj.drift = _drift(phi, traj)
    if traj.drift > opts.drift_tol:
        raise BranchTrackingLost(f"Im int sqrt(phi) drifted by {traj.drift:.3g}")
    return traj


def _drift(phi: RationalQD, traj: Trajectory) -> float:
    w = contour_integral(phi, traj.points, traj.roots) * cmath.exp(-1j * traj.theta)
    return float(np.max(np.abs(w.imag))) if len(w) else 0.0


# -- strip decomposition ----------------------------------------------------


@dataclass
class Separatrix:
    zero: int
    index: int
    angle: float
    trajectory: Trajectory
    offset: float = 0.0

    @property
    def end(self) -> tuple:
        return self.trajectory.termination.end()


@dataclass
class Region:
    kind: str  # "strip" or "half_plane"
    ends: tuple[tuple, tuple]
    sectors: list[tuple[int, int]]


@dataclass
class StandardSaddle:
    strip: int
    zeros: tuple[int, int]
    points: np.ndarray
    roots: np.ndarray
    w: np.ndarray
    zeta: complex

    @property
    def theta(self) -> float:
        return cmath.phase(self.zeta)

    def to_json(self) -> dict[str, Any]:
        return {"strip": self.strip, "zeros": list(self.zeros),
                "points": [[float(z.real), float(z.imag)] for z in self.points],
                "half_period": [self.zeta.real, self.zeta.imag]}


@dataclass
class StripDecomposition:
    phi: RationalQD
    crit: CriticalData
    separatrices: list[Separatrix]
    strips: list[Region]
    half_planes: list[Region]
    saddles: list[StandardSaddle]
    surface: MarkedBorderedSurface
    options: TraceOptions

    def to_json(self) -> dict[str, Any]:
        def reg(r: Region) -> dict[str, Any]:
            return {"ends": [list(e) for e in r.ends], "sectors": [list(s) for s in r.sectors]}

        return {
            "surface": self.surface.to_json(),
            "strips": [reg(r) for r in self.strips],
            "half_planes": [reg(r) for r in self.half_planes],
            "saddles": [s.to_json() for s in self.saddles],
        }


def _separatrix_angles(phi: RationalQD, p: complex) -> tuple[float, float, float]:
    c = phi.derivative(p)
    base = cmath.phase(c) / 2
    return tuple(((2.0 / 3.0) * (j * math.pi - base)) for j in range(3))


def _local_root(phi: RationalQD, p: complex, z: complex, sigma: int) -> complex:
    """Branch of ``sqrt(phi(z))`` near the zero ``p`` continuous with ``sigma*sqrt(c)*(z-p)^{1/2}``."""
    c = phi.derivative(p)
    guess = sigma * cmath.sqrt(c) * cmath.sqrt(z - p)
    r = cmath.sqrt(phi(z))
    return r if abs(r - guess) <= abs(r + guess) else -r


def _local_root_dir(phi: RationalQD, p: complex, psi: float, r0: float, sigma: int) -> tuple[complex, complex]:
    z = p + r0 * cmath.exp(1j * psi)
    c = phi.derivative(p)
    guess = sigma * cmath.sqrt(c) * math.sqrt(r0) * cmath.exp(0.5j * psi)
    r = cmath.sqrt(phi(z))
    return z, (r if abs(r - guess) <= abs(r + guess) else -r)


def _start_on_separatrix(phi: RationalQD, p: complex, psi: float, r0: float) -> tuple[complex, complex, complex]:
    """Point at distance ``r0`` from ``p`` where ``int_p sqrt(phi)`` is real and positive."""
    j = None
    sigma = 1
    for _ in range(2):
        z, s = _local_root_dir(phi, p, psi, r0, sigma)
        w = _singular_chord(phi, p, z, s)
        if w.real < 0:
            sigma = -sigma
            continue
        break
    # refine the angle so that Im w = 0 to rounding
    for _ in range(6):
        z, s = _local_root_dir(phi, p, psi, r0, sigma)
        w = _singular_chord(phi, p, z, s)
        if abs(w.imag) < 1e-15 * max(abs(w), 1e-300):
            break
        # d(arg w)/d(psi) = 3/2 for a simple zero
        psi -= (2.0 / 3.0) * cmath.phase(w)
    del j
    return z, s, w


def strip_decomposition(phi: RationalQD, options: TraceOptions | None = None,
                        crit: CriticalData | None = None) -> StripDecomposition:
    """Separatrix graph, strips, half planes and standard saddle connections."""
    opts = options or TraceOptions()
    crit = crit or critical_data(phi)
    if crit.simple_poles:
        raise Incomplete("simple poles present; the differential is not complete")
    if not crit.zeros:
        raise NotGMN("no zeros to start separatrices from")
    pts = crit.finite_points
    budget = _length_budget(crit, opts)
    seps: list[Separatrix] = []
    for k, p in enumerate(crit.zeros):
        others = [abs(p - q) for q in pts if q != p]
        r0 = min(opts.start_radius, 0.01 * min(others)) if others else opts.start_radius
        for j, psi in enumerate(_separatrix_angles(phi, p)):
            z, s, w0 = _start_on_separatrix(phi, p, psi, r0)
            traj = _integrate(phi, crit, z, s, 0.0, budget, opts, ignore_zero=k)
            term = traj.termination
            if term.kind == "hit_zero":
                raise SaddleDetected(
                    f"separatrix from zero {k} reaches zero {term.zero}; rotate the phase slightly"
                )
            if term.kind != "into_pole":
                raise SaddleDetected(
                    f"separatrix from zero {k} did not reach a pole within flat length {budget:.4g}"
                )
            traj.drift = _drift(phi, traj)
            if traj.drift > opts.drift_tol:
                raise BranchTrackingLost(f"separatrix drift {traj.drift:.3g}")
            seps.append(Separatrix(k, j, psi, traj, w0.real))

    strips, halves, guesses = _pair_sectors(phi, crit, seps, opts, budget)
    surface = MarkedBorderedSurface(
        0,
        tuple(p.order - 2 for p in crit.poles if p.order >= 3),
        sum(1 for p in crit.poles if p.order == 2),
    )
    n = arc_count(surface)
    if len(strips) != n:
        raise DecompositionAmbiguous(f"found {len(strips)} strips, the surface needs {n}")
    dec = StripDecomposition(phi, crit, seps, strips, halves, [], surface, opts)
    dec.saddles = [_standard_saddle(dec, i, guesses[i]) for i in range(len(strips))]
    return dec


def _crossings(a: np.ndarray, b: np.ndarray) -> list[tuple[int, float, int, float]]:
    """Proper intersections of polylines ``a`` and ``b`` as (segment, param) pairs."""
    p, r = a[:-1], np.diff(a)
    q, u = b[:-1], np.diff(b)
    lo_a = np.minimum(a[:-1].real, a[1:].real), np.minimum(a[:-1].imag, a[1:].imag)
    hi_a = np.maximum(a[:-1].real, a[1:].real), np.maximum(a[:-1].imag, a[1:].imag)
    lo_b = np.minimum(b[:-1].real, b[1:].real), np.minimum(b[:-1].imag, b[1:].imag)
    hi_b = np.maximum(b[:-1].real, b[1:].real), np.maximum(b[:-1].imag, b[1:].imag)
    ov = ((lo_a[0][:, None] <= hi_b[0][None, :]) & (lo_b[0][None, :] <= hi_a[0][:, None])
          & (lo_a[1][:, None] <= hi_b[1][None, :]) & (lo_b[1][None, :] <= hi_a[1][:, None]))
    out = []
    for i, j in zip(*np.nonzero(ov)):
        den = (r[i].conjugate() * u[j]).imag
        if den == 0:
            continue
        qp = q[j] - p[i]
        t = (qp.conjugate() * u[j]).imag / den
        v = (qp.conjugate() * r[i]).imag / den
        if 0 <= t <= 1 and 0 <= v <= 1:
            out.append((int(i), float(t), int(j), float(v)))
    return out


def _probe(phi: RationalQD, crit: CriticalData, seps: list[Separatrix], k: int, j: int,
           opts: TraceOptions, budget: float) -> tuple[int, int, complex] | None:
    """Trace a near-vertical ray into sector ``(k, j)``.

    Returns the zero and sector across the strip with a first guess for the
    half period, or ``None`` when the ray escapes to a pole (a half plane).
    """
    p1 = crit.zeros[k]
    psi_a = _separatrix_angles(phi, p1)[j]
    sigma = 1 if j % 2 == 0 else -1
    others = [abs(p1 - q) for q in crit.finite_points if q != p1]
    r0 = min(opts.start_radius, 0.01 * min(others)) if others else opts.start_radius
    for theta in (math.pi / 2 - 0.05, math.pi / 2 + 0.2, math.pi / 2 - 0.3):
        z0, s0 = _local_root_dir(phi, p1, psi_a + 2 * theta / 3, r0, sigma)
        wq = _singular_chord(phi, p1, z0, s0)
        ray = _integrate(phi, crit, z0, s0, theta, budget, opts, ignore_zero=k)
        if ray.termination.kind == "hit_zero":
            continue
        first = None
        for sep in seps:
            for i, u, q, v in _crossings(ray.points, sep.trajectory.points):
                t_ray = ray.times[i] + u * (ray.times[i + 1] - ray.times[i])
                if first is None or t_ray < first[0]:
                    first = (t_ray, i, u, sep, q, v)
        if first is None:
            if ray.termination.kind == "into_pole":
                return None
            raise DecompositionAmbiguous(f"probe from zero {k} sector {j} neither crossed nor escaped")
        t_ray, i, u, sep, q, v = first
        tr = sep.trajectory
        t_sep = tr.times[q] + v * (tr.times[q + 1] - tr.times[q])
        s_ray = ray.roots[i] + u * (ray.roots[i + 1] - ray.roots[i])
        s_sep = tr.roots[q] + v * (tr.roots[q + 1] - tr.roots[q])
        sign = 1 if (s_ray / s_sep).real > 0 else -1
        zeta0 = wq + t_ray * cmath.exp(1j * theta) - sign * (sep.offset + t_sep)
        tangent = tr.points[q + 1] - tr.points[q]
        motion = ray.points[i + 1] - ray.points[i]
        jb = sep.index if (tangent.conjugate() * motion).imag < 0 else (sep.index - 1) % 3
        return sep.zero, jb, zeta0
    raise SaddleDetected(f"probes from zero {k} keep meeting zeros")


def _pair_sectors(phi: RationalQD, crit: CriticalData, seps: list[Separatrix], opts: TraceOptions,
                  budget: float) -> tuple[list[Region], list[Region], list[complex]]:
    end_of = {(s.zero, s.index): s.end for s in seps}

    def ends(k: int, j: int) -> tuple:
        return tuple(sorted((end_of[(k, j)], end_of[(k, (j + 1) % 3)])))

    partner: dict[tuple[int, int], tuple[int, int, complex] | None] = {}
    for k in range(len(crit.zeros)):
        for j in range(3):
            partner[(k, j)] = _probe(phi, crit, seps, k, j, opts, budget)
    # a probe that escapes inside an excised pole disk says nothing; accept
    # the claim made from the other side of the strip
    claimed: dict[tuple[int, int], tuple[int, int]] = {}
    for key, val in sorted(partner.items()):
        if val is not None:
            claimed[(val[0], val[1])] = key
    strips: list[tuple[Region, complex]] = []
    halves: list[Region] = []
    done: set[tuple[int, int]] = set()
    for key, val in sorted(partner.items()):
        if key in done:
            continue
        if val is None:
            if key in claimed:
                continue
            e = ends(*key)
            if not all(x[0] == "pole" and x[2] >= 0 and x[1] == e[0][1] for x in e):
                raise DecompositionAmbiguous(f"sector {key} escapes but is not a half plane")
            halves.append(Region("half_plane", e, [key]))
            done.add(key)
            continue
        other = (val[0], val[1])
        back = partner.get(other)
        if other in done or (back is not None and (back[0], back[1]) != key) or ends(*key) != ends(*other):
            raise DecompositionAmbiguous(f"sector {key} and {other} do not bound a common strip")
        strips.append((Region("strip", ends(*key), [key, other]), val[2]))
        done.update((key, other))
    strips.sort(key=lambda rz: (rz[0].ends, sorted(rz[0].sectors)))
    return [r for r, _ in strips], halves, [z for _, z in strips]


def _standard_saddle(dec: StripDecomposition, index: int, guess: complex) -> StandardSaddle:
    """Straight segment in the flat chart joining the two zeros of a strip."""
    phi, crit, opts = dec.phi, dec.crit, dec.options
    (ka, ja), (kb, jb) = dec.strips[index].sectors
    p1, p2 = crit.zeros[ka], crit.zeros[kb]
    psi_a = _separatrix_angles(phi, p1)[ja]
    sigma = 1 if ja % 2 == 0 else -1
    others = [abs(p1 - q) for q in crit.finite_points if q != p1]
    r0 = min(opts.start_radius, 0.01 * min(others))
    zeta = guess
    for _ in range(8):
        theta = cmath.phase(zeta)
        if not 0 < theta < math.pi:
            raise SaddleDetected("standard saddle connection has a real period")
        psi = psi_a + 2 * theta / 3
        z0, s0 = _local_root_dir(phi, p1, psi, r0, sigma)
        wq = _singular_chord(phi, p1, z0, s0)
        stop = max(abs(zeta) - abs(wq) - max(10 * abs(wq), 1e-3 * abs(zeta)), 0.0)
        traj = _integrate(phi, crit, z0, s0, theta, stop, opts, mode="move", ignore_zero=ka)
        if traj.termination.kind == "hit_zero":
            if traj.termination.zero != kb:
                raise SaddleDetected("saddle connection search met a third zero")
        ze, se = traj.end_point, traj.end_root
        w_end = wq + traj.length * cmath.exp(1j * theta)
        tail = -_singular_chord(phi, p2, ze, se)
        new = w_end + tail
        if abs(new - zeta) <= 1e-13 * abs(new):
            zeta = new
            break
        zeta = new
    else:
        raise QuadratureFailure("saddle connection shooting did not converge")
    if zeta.imag <= 1e-12 * abs(zeta):
        raise SaddleDetected("standard saddle connection has a real period")
    points = np.concatenate([[p1], traj.points, [p2]])
    roots = np.concatenate([[0j], traj.roots, [0j]])
    w = np.concatenate([[0j], wq + traj.times * cmath.exp(1j * theta), [zeta]])
    return StandardSaddle(index, (ka, kb), points, roots, w, zeta)


@dataclass
class PeriodVector:
    Z: np.ndarray
    saddles: list[StandardSaddle]
    error: np.ndarray

    def to_json(self) -> list[list[float]]:
        return [[float(z.real), float(z.imag)] for z in self.Z]


def _saddle_integral(phi: RationalQD, sad: StandardSaddle, n: int) -> complex:
    pts, roots = sad.points, sad.roots
    head = _singular_chord(phi, pts[0], pts[1], roots[1], n=2 * n)
    body = contour_integral(phi, pts[1:-1], roots[1:-1], n=n)[-1]
    tail = -_singular_chord(phi, pts[-1], pts[-2], roots[-2], n=2 * n)
    return head + body + tail


def periods(phi: RationalQD, dec: StripDecomposition, rtol: float = 1e-10) -> PeriodVector:
    """``Z = 2 int sqrt(phi)`` along each standard saddle connection, with ``Im Z > 0``."""
    Z, err = [], []
    for sad in dec.saddles:
        a = 2 * _saddle_integral(phi, sad, 6)
        b = 2 * _saddle_integral(phi, sad, 12)
        e = abs(a - b)
        if e > rtol * abs(b):
            raise QuadratureFailure(f"period quadrature disagrees by {e:.3g}")
        if abs(b.imag) <= 1e-12 * abs(b):
            raise SaddleDetected("period lies on the real axis")
        Z.append(b if b.imag > 0 else -b)
        err.append(e)
    return PeriodVector(np.array(Z), dec.saddles, np.array(err))


# -- WKB triangulation ------------------------------------------------------


@dataclass
class WKBResult:
    triangulation: IdealTriangulation
    signing: dict[int, int]
    arc_to_saddle: dict[int, int]
    vertex_labels: dict[int, tuple]

    def to_json(self) -> dict[str, Any]:
        from .surface import triangulation_to_json

        out = triangulation_to_json(self.triangulation, self.signing)
        out["arc_to_saddle"] = {str(a): s for a, s in sorted(self.arc_to_saddle.items())}
        out["marked_points"] = {str(v): list(e) for v, e in sorted(self.vertex_labels.items())}
        return out


def wkb_triangulation(
    phi: RationalQD,
    dec: StripDecomposition,
    residues: Mapping[int, complex] | None = None,
) -> WKBResult:
    """One arc per strip, one triangle per zero, signing from chosen residues.

    ``residues`` maps the index of each double pole in ``dec.crit.poles`` to
    the chosen residue; by default ``4 pi i sqrt(a_p)`` with the principal
    square root.
    """
    crit = dec.crit
    ends: dict[tuple, int] = {}
    for i, p in enumerate(crit.poles):
        if p.order >= 3:
            for j in range(p.order - 2):
                ends[("pole", i, j)] = len(ends)
        elif p.order == 2:
            ends[("pole", i, -1)] = len(ends)
    region_of: dict[tuple[int, int], int] = {}
    for a, r in enumerate(dec.strips):
        for sec in r.sectors:
            region_of[sec] = a
    for h, r in enumerate(dec.half_planes):
        region_of[r.sectors[0]] = -1 - h
    tris = []
    for k in range(len(crit.zeros)):
        sk = [s for s in dec.separatrices if s.zero == k]
        verts = tuple(ends[sk[j].end] for j in range(3))
        edges = tuple(region_of[(k, j)] for j in range(3))
        tris.append(Triangle(edges, verts))
    T = IdealTriangulation(dec.surface, tuple(tris))
    signing = {}
    for i, p in enumerate(crit.poles):
        if p.order != 2:
            continue
        r = complex(residues[i]) if residues and i in residues else p.residues[0]
        if abs(r.imag) <= 1e-12 * max(abs(r), 1e-300):
            raise RealResidue(f"residue at pole {i} is real")
        signing[ends[("pole", i, -1)]] = 1 if r.imag > 0 else -1
    labels = {v: e for e, v in ends.items()}
    return WKBResult(T, signing, {a: a for a in range(len(dec.strips))}, labels)


# -- octagon ----------------------------------------------------------------


@dataclass
class OctagonResult:
    lhs: float
    rhs: float
    lengths: tuple[float, float, float, float]
    commanded: tuple[float, float, float, float]
    vertical: tuple[float, float, float, float]
    sides: list[tuple[str, Trajectory]]
    zeta: complex
    closure: float

    @property
    def horizontal_sides(self) -> list[Trajectory]:
        return [t for kind, t in self.sides if kind == "horizontal"]

    @property
    def vertical_sides(self) -> list[Trajectory]:
        return [t for kind, t in self.sides if kind == "vertical"]

    def polyline(self) -> np.ndarray:
        return np.concatenate([t.points if i == 0 else t.points[1:] for i, (_, t) in enumerate(self.sides)])


def _move(phi: RationalQD, crit: CriticalData, z: complex, s: complex, dw: complex,
          opts: TraceOptions) -> Trajectory:
    traj = _integrate(phi, crit, z, s, cmath.phase(dw), abs(dw), opts, mode="move")
    if traj.termination.kind == "hit_zero":
        raise OctagonCollision(f"octagon side runs into zero {traj.termination.zero}")
    if traj.termination.kind == "into_pole":
        raise OctagonCollision(f"octagon side runs into pole {traj.termination.pole}")
    return traj


def _winding(poly: np.ndarray, c: complex) -> float:
    v = poly - c
    ang = np.angle(np.append(v[1:], v[:1]) / v)
    return float(np.sum(ang) / (2 * math.pi))


def _flat_length(phi: RationalQD, traj: Trajectory, n: int = 400) -> float:
    """Flat length of a traced side measured from its geometry alone."""
    x, w = _gauss(3)

    def chords(m: int) -> float:
        t = np.linspace(traj.times[0], traj.times[-1], m + 1)
        z = traj.sample(t)
        a, b = z[:-1], z[1:]
        nodes = a[:, None] + (b - a)[:, None] * x[None, :]
        return float(np.sum(np.abs(b - a) * (np.sqrt(np.abs(phi(nodes))) @ w)))

    coarse, fine = chords(n), chords(2 * n)
    return (4 * fine - coarse) / 3


def octagon_check(
    phi: RationalQD,
    saddle: StandardSaddle | StripDecomposition | int,
    margin: float,
    options: TraceOptions | None = None,
    dec: StripDecomposition | None = None,
) -> OctagonResult:
    """Octagon of alternating vertical and horizontal sides around a saddle connection.

    The flat chart of the strip puts the first zero at 0 and the second at
    ``zeta``.  Sides are traced with the branch carried continuously, so the
    loop encircles both zeros once.  ``lhs`` is the real part of the contour
    quadrature of ``sqrt(phi) dz`` around the traced loop; ``rhs`` is the
    alternating sum of the measured flat lengths of the horizontal sides.
    """
    opts = options or TraceOptions()
    if isinstance(saddle, StripDecomposition):
        dec, saddle = saddle, saddle.saddles[0]
    elif isinstance(saddle, int):
        if dec is None:
            dec = strip_decomposition(phi, opts)
        saddle = dec.saddles[saddle]
    crit = dec.crit if dec is not None else critical_data(phi)
    if margin <= 0:
        raise ValidationError("margin must be positive")
    if saddle.zeros[0] == saddle.zeros[1]:
        raise OctagonCollision("the saddle connection is a closed loop; any octagon around it encloses a pole")
    zeta = saddle.zeta
    X, h = zeta.real, zeta.imag
    mu, delta = margin, margin / 2
    xR, xL = max(0.0, X) + mu, min(0.0, X) - mu

    k = int(np.argmin(np.abs(saddle.w[1:-1] - zeta / 2))) + 1
    to_mid = _move(phi, crit, saddle.points[k], saddle.roots[k], zeta / 2 - saddle.w[k], opts)
    a = _move(phi, crit, to_mid.end_point, to_mid.end_root, xR - X / 2, opts)
    b = _move(phi, crit, a.end_point, a.end_root, -1j * (h / 2 + delta), opts)
    z, s = b.end_point, b.end_root
    commanded = (xR - X + mu, X + mu - xL, mu - xL, xR + mu)
    plan = [
        ("vertical", 1j * (h + 2 * delta)),
        ("horizontal", -commanded[0]),
        ("vertical", -2j * delta),
        ("horizontal", commanded[1]),
        ("vertical", 1j * (h + 2 * delta)),
        ("horizontal", -commanded[2]),
        ("vertical", -2j * delta),
        ("horizontal", commanded[3]),
    ]
    sides: list[tuple[str, Trajectory]] = []
    for kind, dw in plan:
        traj = _move(phi, crit, z, s, dw, opts)
        sides.append((kind, traj))
        z, s = traj.end_point, traj.end_root
    start = sides[0][1].start
    closure = abs(z - start)
    loop_pts = np.concatenate([t.points if i == 0 else t.points[1:] for i, (_, t) in enumerate(sides)])
    loop_roots = np.concatenate([t.roots if i == 0 else t.roots[1:] for i, (_, t) in enumerate(sides)])
    if closure > 1e-6 * max(1.0, abs(zeta)):
        raise OctagonCollision(f"octagon fails to close (gap {closure:.3g})")
    loop_pts = np.append(loop_pts, start)
    loop_roots = np.append(loop_roots, sides[0][1].roots[0])
    ka, kb = saddle.zeros
    for i, zk in enumerate(crit.zeros):
        wn = round(_winding(loop_pts, zk))
        if (i in (ka, kb)) != (abs(wn) == 1) or abs(wn) > 1:
            raise OctagonCollision(f"octagon winds {wn} times around zero {i}")
    for p in crit.poles:
        if p.point is not None and round(_winding(loop_pts, p.point)) != 0:
            raise OctagonCollision("octagon encloses a pole")
    total = contour_integral(phi, loop_pts, loop_roots, n=8)[-1]
    horizontal = [t for kind, t in sides if kind == "horizontal"]
    vertical = [t for kind, t in sides if kind == "vertical"]
    L = tuple(_flat_length(phi, t) for t in horizontal)
    rhs = -L[0] + L[1] - L[2] + L[3]
    return OctagonResult(
        lhs=float(total.real),
        rhs=float(rhs),
        lengths=L,
        commanded=commanded,
        vertical=tuple(t.length for t in vertical),
        sides=sides,
        zeta=zeta,
        closure=closure,
    )


# -- SVG ----------------------------------------------------------------------


def render_svg(dec: StripDecomposition, octagon: OctagonResult | None = None, size: int = 480,
               leaves_per_strip: int = 3) -> str:
    """Separatrices bold, generic leaves thin, saddle connections highlighted."""
    pts = list(dec.crit.finite_points)
    extent = 1.6 * max([1.0] + [abs(z) for z in pts])
    sx = size / (2 * extent)

    def xy(z: complex) -> str:
        return f"{(z.real + extent) * sx:.3f},{(extent - z.imag) * sx:.3f}"

    def poly(points: np.ndarray, style: str) -> str:
        keep = points[np.abs(points) < 3 * extent]
        if len(keep) < 2:
            return ""
        step = max(1, len(keep) // 400)
        keep = np.append(keep[::step], keep[-1])
        return f'<polyline fill="none" {style} points="' + " ".join(xy(z) for z in keep) + '"/>'

    body = [f'<rect width="{size}" height="{size}" fill="white"/>']
    leaf_opts = replace(dec.options, max_length=_length_budget(dec.crit, dec.options))
    for sad in dec.saddles:
        mid = len(sad.points) // 2
        for i in range(1, leaves_per_strip + 1):
            j = max(1, min(len(sad.points) - 2, i * len(sad.points) // (leaves_per_strip + 1)))
            for sign in (1, -1):
                try:
                    tr = _integrate(dec.phi, dec.crit, sad.points[j], sign * sad.roots[j], 0.0,
                                    leaf_opts.max_length, leaf_opts)
                except BranchTrackingLost:
                    continue
                body.append(poly(tr.points, 'stroke="#888888" stroke-width="0.6"'))
        del mid
    for sep in dec.separatrices:
        body.append(poly(sep.trajectory.points, 'stroke="black" stroke-width="2"'))
    for sad in dec.saddles:
        body.append(poly(sad.points, 'stroke="#d62728" stroke-width="2.5"'))
    if octagon is not None:
        body.append(poly(octagon.polyline(), 'stroke="#1f77b4" stroke-width="1.2"'))
    for z in dec.crit.zeros:
        c = xy(z).split(",")
        body.append(f'<circle cx="{c[0]}" cy="{c[1]}" r="3" fill="black"/>')
    for p in dec.crit.poles:
        if p.point is not None:
            c = xy(p.point).split(",")
            body.append(f'<circle cx="{c[0]}" cy="{c[1]}" r="4" fill="none" stroke="black"/>')
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
            f'viewBox="0 0 {size} {size}">')
    return "\n".join([head] + [b for b in body if b] + ["</svg>"]) + "\n"
