"""Command line entry point.

Every subcommand except ``asymptotics`` prints a JSON document (sorted keys,
fixed indentation) to stdout; ``asymptotics`` prints a CSV table and a
PASS/FAIL line.  With ``--out DIR`` the artifacts are also written there.  Exit codes:
0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import random
import sys
import tempfile
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import qdiff, quiver, surface, teich, vortex
from .errors import NumericalError, SaddleDetected, ValidationError, WKBError

DEFAULT_ASYMPTOTICS: dict[str, Any] = {
    "differential": {"numerator": [-1.0, 0.0, 1.0]},
    "theta": -0.3,
    "R_list": [2, 4, 6, 8],
    "box": [-4.0, 4.0, -4.0, 4.0],
    "h": 0.02,
    "tol": 1e-9,
    "margin": 0.5,
    "saddle": 0,
    "eps": 0.1,
}


def _dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _load_config(path: str | None) -> dict[str, Any]:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationError("config must be a JSON object")
    return data


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ValidationError(f"expected comma separated integers, got {text!r}") from exc


def _complex_list(text: str) -> list[complex]:
    try:
        return [complex(x.strip().replace(" ", "")) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ValidationError(f"expected comma separated numbers, got {text!r}") from exc


def _cplx(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


# -- surfaces ---------------------------------------------------------------


def _surface_from_args(args: argparse.Namespace, cfg: dict[str, Any]) -> surface.MarkedBorderedSurface:
    if "surface" in cfg:
        return surface.MarkedBorderedSurface.from_json(cfg["surface"])
    boundary = tuple(_int_list(args.boundary)) if args.boundary else ()
    return surface.MarkedBorderedSurface(args.genus, boundary, args.punctures)


def standard_triangulation(S: surface.MarkedBorderedSurface) -> surface.IdealTriangulation:
    """A starting triangulation for the surfaces the catalogue covers."""
    surface.arc_count(S)
    if S.genus == 0 and len(S.boundary) == 1 and S.punctures == 0:
        return surface.polygon(S.boundary[0])
    if S.genus == 0 and len(S.boundary) == 1 and S.punctures == 1:
        return surface.punctured_polygon(S.boundary[0])
    if S.genus == 1 and not S.boundary and S.punctures == 1:
        return surface.punctured_torus()
    raise ValidationError("no built-in triangulation for this surface; pass one with --config")


def _triangulation_input(args: argparse.Namespace, cfg: dict[str, Any]) -> tuple[surface.IdealTriangulation, dict[int, int]]:
    if "triangles" in cfg:
        return surface.triangulation_from_json(cfg)
    name = getattr(args, "catalog", None)
    if name:
        cat = surface.catalog()
        if name not in cat:
            raise ValidationError(f"unknown catalogue entry {name!r}; choose from {sorted(cat)}")
        T = cat[name]
        return T, {p: 1 for p in T.punctures}
    T = standard_triangulation(_surface_from_args(args, cfg))
    return T, {p: 1 for p in T.punctures}


def cmd_triangulate(args: argparse.Namespace, cfg: dict[str, Any]) -> dict[str, Any]:
    T, signing = _triangulation_input(args, cfg)
    nodes, edges = surface.flip_graph(T, limit=args.limit)
    out: dict[str, Any] = {
        "surface": T.surface.to_json(),
        "arc_count": T.n,
        "triangulation": surface.triangulation_to_json(T, signing),
        "flip_graph": {"vertices": len(nodes), "edges": sorted([list(e) for e in edges])},
    }
    if len(nodes) <= args.list_max:
        out["triangulations"] = [surface.triangulation_to_json(U) for U in nodes]
    return out


def cmd_flip(args: argparse.Namespace, cfg: dict[str, Any]) -> dict[str, Any]:
    T, signing = _triangulation_input(args, cfg)
    arcs = _int_list(args.arcs) if args.arcs else list(cfg.get("arcs", []))
    coords = cfg.get("coords")
    X = teich.ChartPoint(T, {int(k): float(v) for k, v in coords.items()}) if coords else None
    steps = []
    for a in arcs:
        eps = surface.exchange_matrix(T)
        if X is not None:
            X = teich.flip_coordinates(T, eps, a, X)
            T = X.chart
        else:
            T = surface.flip(T, a)
        steps.append({"arc": a, "exchange_matrix": surface.exchange_matrix(T).tolist()})
    out = {"triangulation": surface.triangulation_to_json(T, signing), "steps": steps}
    if X is not None:
        out["coords"] = X.to_json()["coords"]
    return out


def cmd_quiver(args: argparse.Namespace, cfg: dict[str, Any]) -> dict[str, Any]:
    T, signing = _triangulation_input(args, cfg)
    Q = quiver.quiver_from_triangulation(T)
    W = quiver.potential_from_triangulation(T, signing)
    return {"exchange_matrix": surface.exchange_matrix(T).tolist(), "quiver": Q.to_json(),
            "potential": W.to_json(), "signing": {str(p): s for p, s in sorted(signing.items())}}


def cmd_mutate(args: argparse.Namespace, cfg: dict[str, Any]) -> dict[str, Any]:
    seq = _int_list(args.sequence) if args.sequence else list(cfg.get("sequence", []))
    if "seed" in cfg:
        seed = quiver.Seed(np.array(cfg["seed"]["basis"]), np.array(cfg["seed"]["form"]))
    elif "matrix" in cfg:
        seed = quiver.Seed.standard(np.array(cfg["matrix"]))
    elif "triangles" in cfg or args.catalog or args.boundary or args.punctures or args.genus:
        T, _ = _triangulation_input(args, cfg)
        seed = quiver.seed_from_triangulation(T)
    else:
        raise ValidationError("mutate needs a seed, a matrix or a triangulation")
    coords = cfg.get("coords")
    X = teich.ChartPoint(seed, {int(k): float(v) for k, v in coords.items()}) if coords else None
    matrix = seed.matrix()
    for k in seq:
        matrix = quiver.mutate_matrix(matrix, k)
        if X is not None:
            X = teich.mutate_chart(seed, k, X)
        seed = quiver.mutate_seed(seed, k)
    out = {"sequence": seq, "matrix": matrix.tolist(), "seed": seed.to_json()}
    if X is not None:
        out["coords"] = X.to_json()["coords"]
    return out


# -- differentials ------------------------------------------------------------


def _differential(args: argparse.Namespace, cfg: dict[str, Any]) -> qdiff.RationalQD:
    if args.numerator:
        den = _complex_list(args.denominator) if args.denominator else [1.0]
        phi = qdiff.RationalQD(tuple(_complex_list(args.numerator)), tuple(den))
    elif "differential" in cfg:
        phi = qdiff.RationalQD.from_json(cfg["differential"])
    elif any(k in cfg for k in ("numerator", "zeros")):
        phi = qdiff.RationalQD.from_json(cfg)
    else:
        raise ValidationError("no differential given; use --numerator or --config")
    theta = args.theta if args.theta is not None else cfg.get("theta", 0.0)
    return phi.rotated(float(theta))


def _decompose(phi: qdiff.RationalQD, args: argparse.Namespace) -> qdiff.StripDecomposition:
    try:
        return qdiff.strip_decomposition(phi)
    except SaddleDetected as exc:
        theta = args.theta if args.theta is not None else 0.0
        raise SaddleDetected(f"{exc}; try --theta {theta + 0.01:.4f}") from exc


def cmd_wkb(args: argparse.Namespace, cfg: dict[str, Any]) -> dict[str, Any]:
    phi = _differential(args, cfg)
    dec = _decompose(phi, args)
    pv = qdiff.periods(phi, dec)
    res = qdiff.wkb_triangulation(phi, dec)
    out = {
        "critical": dec.crit.to_json(),
        "strips": [{"ends": [list(e) for e in r.ends], "sectors": [list(s) for s in r.sectors]}
                   for r in dec.strips],
        "half_planes": len(dec.half_planes),
        "arcs": len(dec.strips),
        "periods": [_cplx(z) for z in pv.Z],
        "triangulation": res.to_json(),
        "saddles": [s.to_json() for s in dec.saddles],
    }
    if args.svg:
        _write_atomic(Path(args.svg), qdiff.render_svg(dec))
    return out


def cmd_periods(args: argparse.Namespace, cfg: dict[str, Any]) -> dict[str, Any]:
    phi = _differential(args, cfg)
    dec = _decompose(phi, args)
    pv = qdiff.periods(phi, dec)
    return {"periods": [_cplx(z) for z in pv.Z], "quadrature_error": [float(e) for e in pv.error],
            "zeros": [list(s.zeros) for s in dec.saddles]}


def cmd_octagon(args: argparse.Namespace, cfg: dict[str, Any]) -> dict[str, Any]:
    if args.random:
        rng = random.Random(args.seed)
        base = qdiff.RationalQD((-1.0, 0.0, 1.0))
        rows = []
        for _ in range(args.random):
            theta = rng.uniform(-1.2, 1.2)
            if abs(theta) < 0.05:
                theta = 0.05 if theta >= 0 else -0.05
            margin = rng.uniform(0.2, 0.8)
            res = qdiff.octagon_check(base.rotated(theta), 0, margin)
            rows.append({"theta": theta, "margin": margin, "lhs": res.lhs, "rhs": res.rhs,
                         "error": abs(res.lhs - res.rhs)})
        return {"configurations": rows, "max_error": max(r["error"] for r in rows)}
    phi = _differential(args, cfg)
    dec = _decompose(phi, args)
    res = qdiff.octagon_check(phi, args.saddle, args.margin, dec=dec)
    if args.svg:
        _write_atomic(Path(args.svg), qdiff.render_svg(dec, res))
    return {"lhs": res.lhs, "rhs": res.rhs, "difference": res.lhs - res.rhs,
            "horizontal_lengths": list(res.lengths), "vertical_lengths": list(res.vertical),
            "half_period": _cplx(res.zeta)}


def _domain(args: argparse.Namespace, cfg: dict[str, Any], phi: qdiff.RationalQD) -> vortex.GridDomain:
    box = cfg.get("box", [-4.0, 4.0, -4.0, 4.0])
    if args.box:
        box = [float(x) for x in args.box.split(",")]
    if len(box) != 4:
        raise ValidationError("box needs four numbers x0,x1,y0,y1")
    h = args.grid_h if args.grid_h is not None else float(cfg.get("h", 0.02))
    return vortex.GridDomain.for_differential(phi, *box, h)


def cmd_vortex(args: argparse.Namespace, cfg: dict[str, Any]) -> dict[str, Any]:
    phi = _differential(args, cfg)
    if args.scale is not None:
        phi = phi.scaled(args.scale)
    dom = _domain(args, cfg, phi)
    tol = args.tol if args.tol is not None else float(cfg.get("tol", 1e-10))
    f = vortex.solve(phi, dom, tol)
    prof = vortex.decay_profile(f, phi)
    wt = f.w_tilde[dom.active]
    wt = wt[np.isfinite(wt)]
    out = {"metadata": f.metadata(), "min_w_tilde": float(wt.min()), "decay_profile": [list(p) for p in prof]}
    try:
        out["decay_slope"] = vortex.fit_decay(prof)
    except ValidationError:
        out["decay_slope"] = None
    if args.out:
        np.save(Path(args.out) / "w.npy", f.w)
    return out


def cmd_asymptotics(args: argparse.Namespace, cfg: dict[str, Any]) -> dict[str, Any]:
    conf = dict(DEFAULT_ASYMPTOTICS)
    conf.update(cfg)
    R_list = [float(r) for r in conf["R_list"]]
    if any(b <= a for a, b in zip(R_list, R_list[1:])):
        raise ValidationError("R_list must be strictly increasing")
    phi = _differential(args, conf)
    dom = _domain(args, conf, phi)
    tol = args.tol if args.tol is not None else float(conf["tol"])
    if tol <= 0:
        raise ValidationError("tolerances must be positive")
    res = vortex.asymptotic_experiment(phi, int(conf["saddle"]), R_list, dom, margin=float(conf["margin"]),
                                       tol=tol)
    eps = float(conf["eps"])
    verdict = "PASS" if res.verdict(eps) else "FAIL"
    meta = res.metadata()
    meta["verdict"] = verdict
    if args.out:
        _write_atomic(Path(args.out) / "asymptotics.csv", res.csv())
        _write_atomic(Path(args.out) / "asymptotics.json", _dumps(meta))
    return {"table": res.csv(), "verdict": verdict, "metadata": meta}


COMMANDS = {
    "triangulate": cmd_triangulate,
    "flip": cmd_flip,
    "quiver": cmd_quiver,
    "mutate": cmd_mutate,
    "wkb": cmd_wkb,
    "periods": cmd_periods,
    "octagon": cmd_octagon,
    "vortex": cmd_vortex,
    "asymptotics": cmd_asymptotics,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wkbteich", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON input or experiment config")
    common.add_argument("--out", help="directory for output files")
    common.add_argument("--tol", type=float, help="solver tolerance")
    common.add_argument("--grid-h", type=float, help="grid spacing")
    common.add_argument("--svg", help="write an SVG picture to this path")
    sub = parser.add_subparsers(dest="command", required=True)

    def surf(p: argparse.ArgumentParser) -> None:
        p.add_argument("--genus", type=int, default=0)
        p.add_argument("--boundary", help="marked points per boundary component, e.g. 5 or 3,2")
        p.add_argument("--punctures", type=int, default=0)
        p.add_argument("--catalog", help="named catalogue triangulation")

    def diff(p: argparse.ArgumentParser) -> None:
        p.add_argument("--numerator", help="ascending coefficients, e.g. -1,0,1")
        p.add_argument("--denominator", help="ascending coefficients (default 1)")
        p.add_argument("--theta", type=float, help="phase: phi -> e^{2 i theta} phi")

    p = sub.add_parser("triangulate", parents=[common], help="triangulation and flip graph")
    surf(p)
    p.add_argument("--limit", type=int, default=5000)
    p.add_argument("--list-max", type=int, default=50, help="list triangulations when at most this many")
    p = sub.add_parser("flip", parents=[common], help="flip arcs in sequence")
    surf(p)
    p.add_argument("--arcs", help="comma separated arcs to flip")
    p = sub.add_parser("quiver", parents=[common], help="quiver with potential")
    surf(p)
    p = sub.add_parser("mutate", parents=[common], help="mutate a seed or matrix")
    surf(p)
    p.add_argument("--sequence", help="comma separated mutation indices")
    p = sub.add_parser("wkb", parents=[common], help="strips, WKB triangulation and periods")
    diff(p)
    p = sub.add_parser("periods", parents=[common], help="periods of standard saddle classes")
    diff(p)
    p = sub.add_parser("octagon", parents=[common], help="octagon contour identity")
    diff(p)
    p.add_argument("--saddle", type=int, default=0)
    p.add_argument("--margin", type=float, default=0.5)
    p.add_argument("--random", type=int, default=0, help="random (theta, margin) sweep of the z^2-1 family")
    p.add_argument("--seed", type=int, default=0)
    p = sub.add_parser("vortex", parents=[common], help="solve the vortex equation on a grid")
    diff(p)
    p.add_argument("--box", help="x0,x1,y0,y1")
    p.add_argument("--scale", type=float, help="solve for R^2 phi")
    p = sub.add_parser("asymptotics", parents=[common], help="length asymptotics experiment")
    diff(p)
    p.add_argument("--box", help="x0,x1,y0,y1")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config)
        if getattr(args, "tol", None) is not None and args.tol <= 0:
            raise ValidationError("tolerances must be positive")
        result = COMMANDS[args.command](args, cfg)
    except WKBError as exc:
        kind = "FAIL" if args.command == "asymptotics" else "error"
        print(f"{kind}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    if args.command == "asymptotics":
        sys.stdout.write(result["table"] + result["verdict"] + "\n")
        return 0 if result["verdict"] == "PASS" else NumericalError.exit_code
    text = _dumps(result)
    if args.out:
        _write_atomic(Path(args.out) / f"{args.command}.json", text)
    sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
