"""Grid solver for ``Delta w = e^{2w} - |phi|^2 e^{-2w}`` and pullback lengths.

``w = 1/2 log H`` where ``H`` is the holomorphic energy of the harmonic map
with Hopf differential ``phi``.  The background metric is ``|dz|^2``, so the
Laplacian is the flat 5-point stencil.  Lengths of paths under the pullback
metric

    ds^2 = 2 Re(phi dz^2) + (e^{2w} + |phi|^2 e^{-2w}) |dz|^2

are evaluated in the rearranged form

    ds^2 = 4 Re(sqrt(phi) dz)^2 + 4 |phi| |dz|^2 sinh^2(w~),  w~ = w - 1/2 log|phi|,

which avoids cancellation on vertical paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra
from scipy.sparse.linalg import spsolve

from .errors import BadDomain, NewtonDiverged, PathLeavesDomain, ValidationError
from .qdiff import (
    OctagonResult,
    RationalQD,
    StandardSaddle,
    StripDecomposition,
    TraceOptions,
    Trajectory,
    critical_data,
    octagon_check,
    strip_decomposition,
)

__all__ = [
    "GridDomain",
    "BochnerSystem",
    "VortexField",
    "solve",
    "decay_profile",
    "fit_decay",
    "path_length",
    "ExperimentRow",
    "ExperimentResult",
    "asymptotic_experiment",
]


@dataclass(frozen=True)
class GridDomain:
    """Rectangle ``[x0, x1] x [y0, y1]`` with spacing ``h`` and excised disks."""

    x0: float
    x1: float
    y0: float
    y1: float
    h: float
    excisions: tuple[tuple[complex, float], ...] = ()

    def __post_init__(self) -> None:
        if not self.h > 0:
            raise BadDomain("grid spacing must be positive")
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise BadDomain("empty rectangle")
        nx, ny = self.shape
        if min(nx, ny) < 5:
            raise BadDomain("grid must have at least 5 nodes per side")
        for c, r in self.excisions:
            if not r > 0:
                raise BadDomain("excision radii must be positive")
        object.__setattr__(self, "excisions", tuple((complex(c), float(r)) for c, r in self.excisions))

    @classmethod
    def box(cls, half_width: float, h: float, excisions: Sequence[tuple[complex, float]] = ()) -> GridDomain:
        return cls(-half_width, half_width, -half_width, half_width, h, tuple(excisions))

    @classmethod
    def for_differential(cls, phi: RationalQD, x0: float, x1: float, y0: float, y1: float, h: float,
                         threshold: float = 10.0) -> GridDomain:
        """Excise each finite pole inside the box with a disk on whose boundary ``|phi|`` exceeds ``threshold``."""
        crit = critical_data(phi, gmn=False)
        ex = []
        for p in crit.poles:
            if p.point is None:
                continue
            c = p.point
            if not (x0 < c.real < x1 and y0 < c.imag < y1):
                continue
            r = 4 * h
            while r < 1.0:
                ring = c + r * np.exp(2j * np.pi * np.arange(64) / 64)
                if np.min(np.abs(phi(ring))) > threshold:
                    break
                r *= 1.25
            ex.append((c, r))
        return cls(x0, x1, y0, y1, h, tuple(ex))

    @property
    def shape(self) -> tuple[int, int]:
        nx = int(round((self.x1 - self.x0) / self.h)) + 1
        ny = int(round((self.y1 - self.y0) / self.h)) + 1
        return nx, ny

    @property
    def xs(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.shape[0])

    @property
    def ys(self) -> np.ndarray:
        return self.y0 + self.h * np.arange(self.shape[1])

    @property
    def z(self) -> np.ndarray:
        """Node positions, indexed ``[i, j]`` with ``i`` along x."""
        return self.xs[:, None] + 1j * self.ys[None, :]

    def excised(self, z: np.ndarray) -> np.ndarray:
        out = np.zeros(np.shape(z), dtype=bool)
        for c, r in self.excisions:
            out |= np.abs(z - c) <= r
        return out

    @property
    def active(self) -> np.ndarray:
        """Unknown nodes: interior of the rectangle minus the excised disks."""
        nx, ny = self.shape
        mask = np.zeros((nx, ny), dtype=bool)
        mask[1:-1, 1:-1] = True
        return mask & ~self.excised(self.z)

    def contains(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z)
        inside = (z.real >= self.x0) & (z.real <= self.x1) & (z.imag >= self.y0) & (z.imag <= self.y1)
        return inside & ~self.excised(z)

    def validate(self, phi: RationalQD) -> None:
        crit = critical_data(phi, gmn=False)
        margin = 3 * self.h
        for z in crit.zeros:
            if not (self.x0 + margin < z.real < self.x1 - margin and self.y0 + margin < z.imag < self.y1 - margin):
                raise BadDomain(f"zero {z:.4g} is not well inside the rectangle")
            for c, r in self.excisions:
                if abs(z - c) <= r + margin:
                    raise BadDomain(f"zero {z:.4g} is within 3h of an excised disk")
        for p in crit.poles:
            if p.point is None:
                continue
            c = p.point
            inside = self.x0 <= c.real <= self.x1 and self.y0 <= c.imag <= self.y1
            if inside and not any(abs(c - e) < r for e, r in self.excisions):
                raise BadDomain(f"pole {c:.4g} lies in the grid without an excised disk")

    def to_json(self) -> dict[str, Any]:
        return {"box": [self.x0, self.x1, self.y0, self.y1], "h": self.h,
                "excisions": [[c.real, c.imag, r] for c, r in self.excisions]}


def _boundary_value(phi: RationalQD) -> Callable[[np.ndarray], np.ndarray]:
    return lambda z: 0.5 * np.log(np.abs(phi(z)))


class BochnerSystem:
    """Discrete ``F(u) = L u + b - e^{2u} + |phi|^2 e^{-2u}`` on the active nodes."""

    def __init__(self, phi: RationalQD, dom: GridDomain,
                 boundary: Callable[[np.ndarray], np.ndarray] | None = None) -> None:
        self.phi = phi
        self.dom = dom
        z = dom.z
        self.active = dom.active
        self.index = -np.ones(self.active.shape, dtype=np.int64)
        self.index[self.active] = np.arange(int(self.active.sum()))
        self.n = int(self.active.sum())
        if self.n == 0:
            raise BadDomain("no active nodes")
        with np.errstate(divide="ignore"):
            self.phi_abs = np.abs(phi(z))
        g = boundary or _boundary_value(phi)
        self.dirichlet = np.where(self.active, 0.0, 0.0)
        fixed = ~self.active
        with np.errstate(divide="ignore"):
            self.dirichlet[fixed] = g(z[fixed])
        if not np.all(np.isfinite(self.dirichlet[fixed])):
            raise BadDomain("boundary data is not finite (a zero lies on the boundary)")
        h2 = dom.h * dom.h
        rows, cols, vals = [], [], []
        b = np.zeros(self.n)
        ii, jj = np.nonzero(self.active)
        k = self.index[ii, jj]
        rows.append(k)
        cols.append(k)
        vals.append(np.full(self.n, -4.0 / h2))
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            ni, nj = ii + di, jj + dj
            nb = self.index[ni, nj]
            inner = nb >= 0
            rows.append(k[inner])
            cols.append(nb[inner])
            vals.append(np.full(int(inner.sum()), 1.0 / h2))
            b[k[~inner]] += self.dirichlet[ni[~inner], nj[~inner]] / h2
        self.L = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                               shape=(self.n, self.n))
        self.b = b
        self.phi2 = self.phi_abs[self.active] ** 2

    def residual(self, u: np.ndarray) -> np.ndarray:
        return self.L @ u + self.b - np.exp(2 * u) + self.phi2 * np.exp(-2 * u)

    def jacobian(self, u: np.ndarray) -> sp.csr_matrix:
        return (self.L - sp.diags(2 * np.exp(2 * u) + 2 * self.phi2 * np.exp(-2 * u))).tocsc()

    def to_grid(self, u: np.ndarray) -> np.ndarray:
        w = self.dirichlet.copy()
        w[self.active] = u
        return w


@dataclass
class VortexField:
    phi: RationalQD
    domain: GridDomain
    w: np.ndarray
    residual: float
    iterations: int
    log: list[tuple[int, float, float]] = field(default_factory=list)

    @property
    def phi_abs(self) -> np.ndarray:
        return np.abs(self.phi(self.domain.z))

    @property
    def w_tilde(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return self.w - 0.5 * np.log(self.phi_abs)

    @property
    def H(self) -> np.ndarray:
        return np.exp(2 * self.w)

    @property
    def L(self) -> np.ndarray:
        return self.phi_abs ** 2 * np.exp(-2 * self.w)

    @property
    def J(self) -> np.ndarray:
        return self.H - self.L

    def metadata(self) -> dict[str, Any]:
        nx, ny = self.domain.shape
        return {"iterations": self.iterations, "residual": self.residual,
                "grid": {"nx": nx, "ny": ny, "active": int(self.domain.active.sum()), "h": self.domain.h}}

    def interpolate_w_tilde(self, z: np.ndarray) -> np.ndarray:
        """Bilinear interpolation of ``w~`` (of ``w`` in cells touching a zero)."""
        dom = self.domain
        z = np.asarray(z, dtype=complex)
        if not np.all(dom.contains(z)):
            raise PathLeavesDomain("path leaves the active region")
        nx, ny = dom.shape
        fx = (z.real - dom.x0) / dom.h
        fy = (z.imag - dom.y0) / dom.h
        i = np.clip(np.floor(fx).astype(int), 0, nx - 2)
        j = np.clip(np.floor(fy).astype(int), 0, ny - 2)
        tx, ty = fx - i, fy - j
        wt = self.w_tilde

        def bil(a: np.ndarray) -> np.ndarray:
            return ((1 - tx) * (1 - ty) * a[i, j] + tx * (1 - ty) * a[i + 1, j]
                    + (1 - tx) * ty * a[i, j + 1] + tx * ty * a[i + 1, j + 1])

        corners = np.stack([wt[i, j], wt[i + 1, j], wt[i, j + 1], wt[i + 1, j + 1]])
        smooth = np.all(np.isfinite(corners), axis=0)
        out = np.empty(z.shape)
        with np.errstate(invalid="ignore"):
            out[smooth] = bil(wt)[smooth]
        if np.any(~smooth):
            with np.errstate(divide="ignore"):
                out[~smooth] = bil(self.w)[~smooth] - 0.5 * np.log(np.abs(self.phi(z[~smooth])))
        return out


def solve(
    phi: RationalQD,
    dom: GridDomain,
    tol: float = 1e-10,
    *,
    w0: np.ndarray | None = None,
    boundary: Callable[[np.ndarray], np.ndarray] | None = None,
    max_iter: int = 60,
    damping_floor: float = 1e-6,
) -> VortexField:
    """Damped Newton iteration until ``||F||_inf < tol``."""
    if not tol > 0:
        raise ValidationError("tolerance must be positive")
    if boundary is None:
        dom.validate(phi)
    system = BochnerSystem(phi, dom, boundary)
    if w0 is None:
        a = system.phi_abs[system.active]
        delta = 1e-6 * float(np.max(system.phi_abs[np.isfinite(system.phi_abs)]))
        u = 0.5 * np.log(a + delta)
    else:
        u = np.asarray(w0, dtype=float)
        u = u[system.active] if u.shape == system.active.shape else u.copy()
    F = system.residual(u)
    norm = float(np.max(np.abs(F)))
    log = [(0, norm, 1.0)]
    it = 0
    while norm >= tol:
        if it >= max_iter:
            raise NewtonDiverged(f"no convergence after {max_iter} iterations (residual {norm:.3g})")
        step = spsolve(system.jacobian(u), -F)
        lam = 1.0
        while True:
            trial = u + lam * step
            Ft = system.residual(trial)
            nt = float(np.max(np.abs(Ft)))
            if np.isfinite(nt) and nt <= (1 - 1e-4 * lam) * norm:
                break
            lam *= 0.5
            if lam < damping_floor:
                raise NewtonDiverged(f"damping fell below {damping_floor:g} at residual {norm:.3g}")
        u, F, norm = trial, Ft, nt
        it += 1
        log.append((it, norm, lam))
    return VortexField(phi, dom, system.to_grid(u), norm, it, log)


def decay_profile(f: VortexField, phi: RationalQD | None = None, bins: int = 24) -> list[tuple[float, float]]:
    """Per-bin supremum of ``w~`` against flat distance to the nearest zero."""
    phi = phi or f.phi
    dom = f.domain
    nx, ny = dom.shape
    z = dom.z
    root = np.sqrt(np.abs(phi(z)))
    idx = np.arange(nx * ny).reshape(nx, ny)
    rows, cols, wts = [], [], []
    for a, b in ((idx[:-1, :], idx[1:, :]), (idx[:, :-1], idx[:, 1:])):
        rows.append(a.ravel())
        cols.append(b.ravel())
        wts.append((dom.h * (root.ravel()[a.ravel()] + root.ravel()[b.ravel()]) / 2) + 1e-300)
    graph = sp.csr_matrix((np.concatenate(wts), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(nx * ny, nx * ny))
    crit = critical_data(phi, gmn=False)
    n = nx * ny
    # super-source with edges to nodes near each zero, weighted by the local flat distance
    extra_r, extra_c, extra_w = [], [], []
    for z0 in crit.zeros:
        c = abs(phi.derivative(z0))
        near = np.abs(z - z0) <= 2 * dom.h
        for k in idx[near]:
            d = (2.0 / 3.0) * math.sqrt(c) * abs(z.ravel()[k] - z0) ** 1.5
            extra_r.append(n)
            extra_c.append(int(k))
            extra_w.append(d + 1e-300)
    big = sp.bmat([[graph, None], [sp.csr_matrix((extra_w, (np.zeros(len(extra_w), dtype=int), extra_c)),
                                                  shape=(1, n)), None]], format="csr")
    big.resize((n + 1, n + 1))
    dist = dijkstra(big, directed=False, indices=n)[:n].reshape(nx, ny)
    wt = f.w_tilde
    keep = dom.active & np.isfinite(wt) & np.isfinite(dist)
    if not np.any(keep):
        return []
    d, v = dist[keep], wt[keep]
    edges = np.linspace(0, float(d.max()), bins + 1)
    out = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (d >= lo) & (d < hi)
        if np.any(sel):
            out.append((float((lo + hi) / 2), float(v[sel].max())))
    return out


def fit_decay(profile: Sequence[tuple[float, float]], lo: float = 0.25, hi: float = 0.75) -> float:
    """Slope of ``log(sup w~)`` against flat distance over the middle range of bins."""
    pts = [(r, v) for r, v in profile if v > 0]
    if len(pts) < 3:
        raise ValidationError("too few positive bins to fit")
    a, b = int(lo * len(pts)), max(int(hi * len(pts)), int(lo * len(pts)) + 3)
    sel = pts[a:b]
    r = np.array([p[0] for p in sel])
    v = np.log(np.array([p[1] for p in sel]))
    return float(np.polyfit(r, v, 1)[0])


def _path_samples(path: Any, n_gauss: int = 4) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Quadrature nodes, tangents ``dz/dt`` and weights for a polyline or traced trajectory."""
    x, w = np.polynomial.legendre.leggauss(n_gauss)
    x, w = (x + 1) / 2, w / 2
    if isinstance(path, Trajectory):
        t = np.unique(path.times)
        a, b = t[:-1], t[1:]
        tq = (a[:, None] + (b - a)[:, None] * x[None, :]).ravel()
        wq = ((b - a)[:, None] * w[None, :]).ravel()
        zq = np.empty(tq.shape, dtype=complex)
        dz = np.empty(tq.shape, dtype=complex)
        d = np.exp(1j * path.theta)
        for lo, hi, fn in path.dense:
            sel = (tq >= lo) & (tq <= hi)
            y = fn(tq[sel])
            zq[sel] = y[0]
            dz[sel] = d / y[1]
        return zq, dz, wq
    pts = np.asarray(path, dtype=complex)
    if pts.ndim != 1 or len(pts) < 2:
        raise ValidationError("a path needs at least two points")
    a, b = pts[:-1], pts[1:]
    zq = (a[:, None] + (b - a)[:, None] * x[None, :]).ravel()
    dz = np.repeat(b - a, len(x))
    wq = np.tile(w, len(a))
    return zq, dz, wq


def path_length(f: VortexField, phi: RationalQD, path: Any) -> float:
    """Length of the harmonic image of ``path`` (a polyline or a traced trajectory)."""
    zq, dz, wq = _path_samples(path)
    wt = f.interpolate_w_tilde(zq)
    vals = phi(zq)
    absphi = np.abs(vals)
    sq = np.sqrt(vals.astype(complex))
    # Re(sqrt(phi) dz)^2 is insensitive to the sign of the root
    rad = 4 * (sq * dz).real ** 2 + 4 * absphi * np.abs(dz) ** 2 * np.sinh(wt) ** 2
    return float(np.sum(np.sqrt(np.maximum(rad, 0.0)) * wq))


@dataclass(frozen=True)
class ExperimentRow:
    R: float
    S: float
    RReZ: float
    deviation: float
    ratio: float
    horizontal: tuple[float, ...]
    vertical: tuple[float, ...]
    iterations: int
    residual: float


@dataclass
class ExperimentResult:
    rows: list[ExperimentRow]
    ReZ: float
    octagon: OctagonResult
    domain: GridDomain

    def decreasing(self) -> bool:
        d = [r.deviation for r in self.rows]
        return all(b < a for a, b in zip(d, d[1:]))

    def verdict(self, eps: float = 0.1) -> bool:
        return self.decreasing() and abs(self.rows[-1].ratio - 1) <= eps

    def csv(self) -> str:
        lines = ["R,S,R_ReZ,deviation,ratio"]
        for r in self.rows:
            lines.append(f"{r.R:.6g},{r.S:.12e},{r.RReZ:.12e},{r.deviation:.12e},{r.ratio:.12e}")
        return "\n".join(lines) + "\n"

    def metadata(self) -> dict[str, Any]:
        return {
            "ReZ": self.ReZ,
            "domain": self.domain.to_json(),
            "octagon": {"lhs": self.octagon.lhs, "rhs": self.octagon.rhs,
                        "lengths": list(self.octagon.lengths)},
            "solves": [{"R": r.R, "iterations": r.iterations, "residual": r.residual,
                        "horizontal": list(r.horizontal), "vertical": list(r.vertical)} for r in self.rows],
        }


def asymptotic_experiment(
    phi: RationalQD,
    gamma: StandardSaddle | int,
    R_list: Sequence[float],
    dom: GridDomain,
    *,
    margin: float = 0.5,
    tol: float = 1e-9,
    dec: StripDecomposition | None = None,
    options: TraceOptions | None = None,
) -> ExperimentResult:
    """Alternating half-lengths of the octagon's horizontal sides under ``R^2 phi``.

    The horizontal foliation of ``R^2 phi`` is that of ``phi``, so the octagon
    is traced once and its sides are reused for every ``R``.
    """
    R_list = [float(r) for r in R_list]
    if not R_list or any(r <= 0 for r in R_list) or any(b <= a for a, b in zip(R_list, R_list[1:])):
        raise ValidationError("R_list must be positive and strictly increasing")
    if dec is None:
        dec = strip_decomposition(phi, options)
    oct_ = octagon_check(phi, gamma, margin, options, dec=dec)
    ReZ = 2 * oct_.zeta.real
    for t in oct_.horizontal_sides + oct_.vertical_sides:
        if not np.all(dom.contains(t.points)):
            raise BadDomain("the octagon does not fit inside the grid domain")
    rows = []
    for R in R_list:
        phiR = phi.scaled(R)
        field_ = solve(phiR, dom, tol)
        hl = tuple(path_length(field_, phiR, t) for t in oct_.horizontal_sides)
        vl = tuple(path_length(field_, phiR, t) for t in oct_.vertical_sides)
        S = (-hl[0] + hl[1] - hl[2] + hl[3]) / 2
        rows.append(ExperimentRow(R, S, R * ReZ, abs(S - R * ReZ), math.exp(S - R * ReZ), hl, vl,
                                  field_.iterations, field_.residual))
    return ExperimentResult(rows, ReZ, oct_, dom)
