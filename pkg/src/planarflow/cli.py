"""Command-line entry point: ``python3 -m planarflow <subcommand> ...``.

Exit status is 0 on success, 1 on a domain error (a JSON object is written
to standard error) and 2 on a usage error. Printed numbers carry 12
significant digits; JSON files keep full precision.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import deque
from pathlib import Path

import numpy as np

from . import lab
from .current import (BondFound, check_cycle_law, check_node_law, classify_dual, divergence,
                      extend_flow_to_roundabout, extension_report, unit_current_flow)
from .errors import PlanarFlowError, StructuralError
from .fields import EdgeFunction
from .planarmap import PlanarMap, dual
from .tiling import emit, meridian_net_flow, parse, render, square_tiling, verify_tiling
from .transform import medial, roundabout, subdivide, weighted_subdivision

DEFAULT_SEED = 1729


class UsageError(Exception):
    pass


def fmt(x: float) -> str:
    """12 significant digits, keeping a trailing ``.0`` on integral values."""
    s = f"{float(x):.12g}"
    if s.lstrip("-").isdigit():
        s += ".0"
    return s


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (set, frozenset, tuple, np.ndarray)):
        return sorted(o) if isinstance(o, (set, frozenset)) else list(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _write(path: str, text: str) -> None:
    Path(path).write_text(text)


def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise StructuralError(f"{path}: invalid JSON ({exc})") from None


def _load_map(path: str) -> PlanarMap:
    return PlanarMap.from_dict(_read_json(path))


def _sidecar_path(map_path: str) -> Path:
    p = Path(map_path)
    return p.with_name(p.stem + ".ball.json")


def _resolve_sink(pmap: PlanarMap, spec: str, source: int, map_path: str, boundary: str | None):
    """``wired`` (sidecar boundary, else the farthest BFS sphere), a vertex, or a comma list."""
    if spec != "wired":
        try:
            ids = [int(s) for s in spec.split(",") if s.strip()]
        except ValueError:
            raise UsageError(f"bad --sink {spec!r}") from None
        return ids[0] if len(ids) == 1 else ids
    side = Path(boundary) if boundary else _sidecar_path(map_path)
    if side.exists():
        return sorted(int(v) for v in _read_json(str(side))["boundary"])
    if boundary:
        raise UsageError(f"boundary file {boundary} not found")
    dist = _bfs(pmap, source)
    return [int(v) for v in np.flatnonzero(dist == dist.max())]


def _bfs(pmap: PlanarMap, s: int) -> np.ndarray:
    dist = np.full(pmap.n_vertices, -1, dtype=np.int64)
    dist[s] = 0
    q = deque([s])
    while q:
        v = q.popleft()
        for w in pmap.neighbours(v):
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                q.append(w)
    return dist


# -- subcommands -----------------------------------------------------------------

def cmd_gen(a) -> int:
    ball = lab.gen(a.family, a.n, a.embedding)
    _write(a.out, _dump(ball.map.to_dict()))
    side = ball.sidecar()
    if a.n > 1 and a.family != "grid_minor":
        side["nesting_from_previous"] = lab.nesting(lab.gen(a.family, a.n - 1, a.embedding), ball).tolist()
    _write(a.sidecar or str(_sidecar_path(a.out)), _dump(side))
    print(f"vertices {ball.map.n_vertices} edges {ball.map.n_edges} root {ball.root} boundary {len(ball.boundary)}")
    return 0


def cmd_transform(a) -> int:
    g = _load_map(a.inp)
    if a.op == "dual":
        out, corr = dual(g)
        trace = {"op": "dual", "edge_trace": [{"edge": e, "source_edge": e} for e in range(out.n_edges)],
                 "vertex_origin_face": list(range(out.n_vertices))}
    else:
        if a.op == "roundabout":
            res = roundabout(g, full_cycles=a.full_cycles)
        elif a.op == "medial":
            res = medial(g)
        elif a.op == "gr":
            res = weighted_subdivision(g)
        else:
            if not a.counts:
                raise UsageError("subdivide needs --counts")
            data = _read_json(a.counts)
            if isinstance(data, dict):
                counts = np.zeros(g.n_edges, dtype=np.int64)
                for k, c in data.get("edges", data).items():
                    counts[int(k)] = int(c)
            else:
                counts = np.asarray(data, dtype=np.int64)
            res = subdivide(g, counts)
        out, trace = res.output, res.to_dict()
    _write(a.out, _dump(out.to_dict()))
    if a.trace:
        _write(a.trace, _dump(trace))
    print(f"vertices {out.n_vertices} edges {out.n_edges} faces {out.n_faces}")
    return 0


def cmd_solve(a) -> int:
    g = _load_map(a.inp)
    uc = unit_current_flow(g, a.source, _resolve_sink(g, a.sink, a.source, a.inp, a.boundary), method=a.method)
    if a.flow:
        _write(a.flow, _dump(uc.flow.to_dict()))
    if a.potential:
        _write(a.potential, _dump(uc.potential.to_dict()))
    print(f"resistance {fmt(uc.resistance)}")
    print(f"energy {fmt(float(np.sum(uc.flow.on_edges() ** 2)))}")
    return 0


def cmd_resist(a) -> int:
    g = _load_map(a.inp)
    uc = unit_current_flow(g, a.source, _resolve_sink(g, a.sink, a.source, a.inp, a.boundary), method=a.method)
    print(fmt(uc.resistance))
    return 0


def cmd_classify(a) -> int:
    g = _load_map(a.inp)
    f = EdgeFunction.from_dict(g, _read_json(a.flow))
    _, corr = dual(g)
    v = classify_dual(g, corr, f)
    if isinstance(v, BondFound):
        rep = {"verdict": "bond_found", "bond": sorted(v.bond), "side1": sorted(v.side1), "side2": sorted(v.side2),
               "net": v.net, "dual_cycle": sorted(v.dual_cycle)}
        print(f"bond_found edges {sorted(v.bond)} net {fmt(v.net)}")
    else:
        rep = {"verdict": "cycle_law_holds", "anchor": v.anchor, "rho": v.rho.to_dict()}
        print(f"cycle_law_holds anchor {v.anchor}")
    if a.out:
        _write(a.out, _dump(rep))
    return 0


def cmd_extend(a) -> int:
    g = _load_map(a.inp)
    f = EdgeFunction.from_dict(g, _read_json(a.flow))
    div = divergence(f)
    sinks = [int(w) for w in np.flatnonzero(np.abs(div) > a.tol) if w != a.source]
    rres = roundabout(g)
    src = int(g.first[a.source])
    sink_nodes = [int(g.first[w]) for w in sinks]
    ext = extend_flow_to_roundabout(g, rres, f, src, sink_nodes, tol=a.tol)
    rep = extension_report(g, rres, f, ext, src, sink_nodes, slack=a.tol)
    if a.out:
        _write(a.out, _dump(ext.to_dict()))
    if a.map_out:
        _write(a.map_out, _dump(rres.output.to_dict()))
    print(f"energy {fmt(rep.energy)} bound {fmt(rep.energy_bound)} worst_ratio {fmt(rep.worst_ratio)} "
          f"node_law {'ok' if rep.node_law.holds else 'FAIL'}")
    return 0 if rep.ok else 1


def cmd_tile(a) -> int:
    g = _load_map(a.inp)
    t = square_tiling(g, a.source, _resolve_sink(g, a.sink, a.source, a.inp, a.boundary), method=a.method)
    if a.json:
        _write(a.json, emit(t) + "\n")
    if a.svg:
        ms = [float(m) for m in a.meridians.split(",")] if a.meridians else []
        _write(a.svg, render(t, ms))
    print(f"height {fmt(t.height)} squares {len(t.squares)}")
    return 0


def _parse_levels(s: str) -> list[int]:
    try:
        if ":" in s:
            lo, hi = s.split(":")
            return list(range(int(lo), int(hi) + 1))
        return [int(x) for x in s.split(",")]
    except ValueError:
        raise UsageError(f"bad --levels {s!r}") from None


def cmd_profile(a) -> int:
    p = lab.resistance_profile(a.family, _parse_levels(a.levels), a.transform, a.embedding)
    if a.out:
        _write(a.out, _dump(p.to_dict()))
    for n, r, s in zip(p.levels, p.values, p.seconds):
        print(f"{n} {fmt(r)} {s:.3f}s")
    print(f"fit {p.fit.model} r2 {fmt(p.fit.r2)} verdict {p.verdict} (heuristic)")
    return 0


# -- verify --------------------------------------------------------------------------

def _check(name, ok, witness=None, **extra):
    out = {"check": name, "ok": bool(ok), "witness": witness}
    out.update(extra)
    return out


def map_checks(data) -> list[dict]:
    """Structural checks on raw map JSON, each with a witness on failure."""
    checks = []
    try:
        verts = sorted(data["vertices"], key=lambda r: r["id"])
        edges = sorted(data["edges"], key=lambda r: r["id"])
        darts = sorted(data.get("darts", []), key=lambda r: r["id"])
    except (KeyError, TypeError) as exc:
        return [_check("schema", False, str(exc))]
    dense = ([r["id"] for r in verts] == list(range(len(verts)))
             and [r["id"] for r in edges] == list(range(len(edges))))
    checks.append(_check("schema", dense, None if dense else "ids not dense"))
    D = 2 * len(edges)
    owner = {}
    bad = None
    for r in edges:
        ds = r.get("darts", [])
        if len(ds) != 2 or ds[0] == ds[1]:
            bad = bad or {"edge": r["id"]}
        for d in ds:
            if d in owner or not 0 <= d < D:
                bad = bad or {"dart": d}
            owner[d] = r["id"]
    checks.append(_check("twin_involution", bad is None, bad))
    seen = {}
    bad = None
    for r in verts:
        for d in r["rotation"]:
            if d in seen or d not in owner:
                bad = bad or {"dart": d}
            seen[d] = r["id"]
    missing = sorted(set(owner) - set(seen))
    if missing and bad is None:
        bad = {"dart": missing[0]}
    checks.append(_check("rotation_partition", bad is None, bad))
    bad = None
    for r in darts:
        d = r["id"]
        if seen.get(d) != r.get("origin") or owner.get(d) != r.get("edge"):
            bad = {"dart": d}
            break
    checks.append(_check("dart_table", bad is None, bad))
    if all(c["ok"] for c in checks):
        m = PlanarMap.from_dict(data)
        defects = m.euler_defects()
        worst = [c for c, x in enumerate(defects) if x != 0]
        checks.append(_check("euler", not worst, {"component": worst[0]} if worst else None))
        checks.append(_check("connected", True, None, value=m.is_connected()))
    return checks


def tiling_checks(t, tol, seed) -> list[dict]:
    rep = verify_tiling(t, tol=tol, seed=seed)
    checks = [_check(f"({k + 1}) {r.name}", r.ok, r.witness, worst=r.worst) for k, r in enumerate(rep.results)]
    rng = np.random.default_rng(seed)
    ms = rng.random(8)
    worst = max(abs(meridian_net_flow(t, float(m))) for m in ms)
    checks.append(_check("meridian_net_flow", worst <= tol, None, worst=worst))
    return checks


def flow_checks(g, f, terminals, tol) -> list[dict]:
    checks = [_check("finite", bool(np.all(np.isfinite(f.values))))]
    div = divergence(f)
    checks.append(_check("conservation", abs(float(div.sum())) <= tol * max(1, g.n_vertices), None,
                         worst=abs(float(div.sum()))))
    if terminals is not None:
        law = check_node_law(f, terminals, tol)
        checks.append(_check("node_law", law.holds, law.witness, worst=law.defect))
    cyc = check_cycle_law(f, tol)
    checks.append(_check("cycle_law", True, cyc.witness, value=cyc.holds, worst=cyc.defect))
    return checks


def profile_checks(d) -> list[dict]:
    p = lab.ResistanceProfile.from_dict(d)
    lv, vals = list(p.levels), list(p.values)
    checks = [_check("levels_increasing", all(b > a for a, b in zip(lv, lv[1:])))]
    drops = [n for n, a, b in zip(lv[1:], vals, vals[1:]) if b < a - 1e-9 * max(1.0, abs(a))]
    checks.append(_check("rayleigh_monotone", not drops, {"level": drops[0]} if drops else None))
    fit = lab.fit_growth(lv, vals)
    checks.append(_check("fit_reproduces", fit.model == p.fit.model, None, value=fit.model))
    verdict = lab.profile_verdict(lv, vals, fit)
    checks.append(_check("verdict_reproduces", verdict == p.verdict, None, value=verdict))
    return checks


def cmd_verify(a) -> int:
    if a.map:
        checks = map_checks(_read_json(a.map))
    elif a.tiling:
        checks = tiling_checks(parse(Path(a.tiling).read_text()), a.tol, a.seed)
    elif a.flow:
        if not a.inp:
            raise UsageError("verify --flow needs --in MAP")
        g = _load_map(a.inp)
        terms = [int(x) for x in a.terminals.split(",")] if a.terminals else None
        checks = flow_checks(g, EdgeFunction.from_dict(g, _read_json(a.flow)), terms, a.tol)
    else:
        checks = profile_checks(_read_json(a.profile))
    ok = all(c["ok"] for c in checks)
    sys.stdout.write(_dump({"ok": ok, "checks": checks}))
    return 0 if ok else 1


# -- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="planarflow", description="Flows, duals and tilings on plane maps.")
    sub = p.add_subparsers(dest="cmd", required=True)

    def terminals(sp, sink=True):
        sp.add_argument("--in", dest="inp", required=True, help="map JSON")
        sp.add_argument("--source", type=int, required=True)
        if sink:
            sp.add_argument("--sink", default="wired",
                            help="vertex, comma list, or 'wired' (sidecar boundary, else farthest sphere)")
            sp.add_argument("--boundary", help="sidecar JSON with a 'boundary' list")
            sp.add_argument("--method", choices=("direct", "cg", "dense"), default="direct")

    s = sub.add_parser("gen", help="generate a family ball")
    s.add_argument("--family", choices=lab.FAMILIES, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--embedding", choices=("A", "B"), default="A")
    s.add_argument("--out", required=True)
    s.add_argument("--sidecar", help="ball sidecar path (default: <out stem>.ball.json next to --out)")
    s.set_defaults(fn=cmd_gen)

    s = sub.add_parser("transform", help="dual, roundabout, medial, subdivide or gr")
    s.add_argument("--op", choices=("dual", "roundabout", "medial", "subdivide", "gr"), required=True)
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--counts")
    s.add_argument("--trace", help="write the per-edge provenance table here")
    s.add_argument("--full-cycles", action="store_true")
    s.set_defaults(fn=cmd_transform)

    s = sub.add_parser("solve", help="unit current flow")
    terminals(s)
    s.add_argument("--flow")
    s.add_argument("--potential")
    s.set_defaults(fn=cmd_solve)

    s = sub.add_parser("resist", help="effective resistance")
    terminals(s)
    s.set_defaults(fn=cmd_resist)

    s = sub.add_parser("classify", help="cycle law or bond witness for the dual of a flow")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--flow", required=True)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_classify)

    s = sub.add_parser("extend", help="extend a flow to the roundabout graph")
    terminals(s, sink=False)
    s.add_argument("--flow", required=True)
    s.add_argument("--out")
    s.add_argument("--map-out")
    s.add_argument("--tol", type=float, default=1e-9)
    s.set_defaults(fn=cmd_extend)

    s = sub.add_parser("tile", help="square tiling of the cylinder")
    terminals(s)
    s.add_argument("--json")
    s.add_argument("--svg")
    s.add_argument("--meridians")
    s.set_defaults(fn=cmd_tile)

    s = sub.add_parser("profile", help="wired resistance profile of a family")
    s.add_argument("--family", choices=lab.FAMILIES, required=True)
    s.add_argument("--levels", required=True, help="a:b or a comma list")
    s.add_argument("--transform", choices=lab.TRANSFORMS, default="none")
    s.add_argument("--embedding", choices=("A", "B"), default="A")
    s.add_argument("--out")
    s.set_defaults(fn=cmd_profile)

    s = sub.add_parser("verify", help="run the invariant suite on a file")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--map")
    g.add_argument("--tiling")
    g.add_argument("--flow")
    g.add_argument("--profile")
    s.add_argument("--in", dest="inp", help="map JSON (for --flow)")
    s.add_argument("--terminals", help="comma list of vertices exempt from the node law (for --flow)")
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.set_defaults(fn=cmd_verify)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"planarflow: error: {exc}", file=sys.stderr)
        return 2
    except PlanarFlowError as exc:
        json.dump({"error": exc.kind, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    except (OSError, ValueError) as exc:
        json.dump({"error": "io" if isinstance(exc, OSError) else "value", "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1


def main() -> None:
    sys.exit(run())
