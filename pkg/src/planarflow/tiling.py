"""Square tilings of finite plane networks on the cylinder ``(R/Z) x [0, R]``.

The unit current flow ``i`` from ``o`` fixes both coordinates. Heights are
voltages (``o`` at the top, the sink at 0, so the cylinder height is the
effective resistance). Widths come from the dual potential: every face ``F``
gets ``psi(F) in R/Z`` with ``psi(right(d)) = psi(left(d)) + i(d)``, which is
well defined modulo 1 because ``i`` is divergence free away from the
terminals and has intensity 1. The square of an edge whose positive dart is
``d`` occupies ``[psi(left d), psi(left d) + i(d)] x [V(head), V(origin)]``.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import asdict, dataclass, field

import numpy as np

from .current import unit_current_flow
from .errors import ContractError, DegenerateMeridianError, StructuralError, UnsupportedInputError
from .fields import EdgeFunction
from .planarmap import PlanarMap
from .transform import contract, contraction_vertex_map

ZERO_FLOW = 1e-12
TOL = 1e-8


@dataclass(frozen=True)
class Square:
    edge: int
    x: float
    y_top: float
    side: float
    upper: int
    lower: int
    left_face: int
    right_face: int
    current: float

    @property
    def y_bottom(self) -> float:
        return self.y_top - self.side


@dataclass(frozen=True)
class VertexSegment:
    vertex: int
    y: float
    x_start: float
    width: float


@dataclass(frozen=True)
class FaceSegment:
    face: int
    x: float
    y_top: float
    length: float


@dataclass(frozen=True)
class CylinderTiling:
    height: float
    source: int
    sinks: tuple
    squares: tuple
    vertex_segments: tuple
    face_segments: tuple
    circumference: float = 1.0

    def to_dict(self) -> dict:
        return {
            "circumference": self.circumference,
            "height": self.height,
            "source": self.source,
            "sinks": list(self.sinks),
            "squares": [asdict(s) for s in self.squares],
            "vertex_segments": [asdict(s) for s in self.vertex_segments],
            "face_segments": [asdict(s) for s in self.face_segments],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CylinderTiling":
        try:
            return cls(
                height=float(data["height"]),
                source=int(data["source"]),
                sinks=tuple(int(s) for s in data["sinks"]),
                squares=tuple(Square(**s) for s in data["squares"]),
                vertex_segments=tuple(VertexSegment(**s) for s in data["vertex_segments"]),
                face_segments=tuple(FaceSegment(**s) for s in data["face_segments"]),
                circumference=float(data.get("circumference", 1.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise StructuralError(f"bad tiling JSON: {exc}") from None

    def arrays(self) -> dict:
        sq = self.squares
        return {
            "x": np.array([s.x for s in sq]), "top": np.array([s.y_top for s in sq]),
            "side": np.array([s.side for s in sq]), "upper": np.array([s.upper for s in sq], dtype=np.int64),
            "lower": np.array([s.lower for s in sq], dtype=np.int64),
        }


def emit(t: CylinderTiling) -> str:
    return json.dumps(t.to_dict(), sort_keys=True, indent=1)


def parse(text: str) -> CylinderTiling:
    return CylinderTiling.from_dict(json.loads(text))


# -- construction ------------------------------------------------------------

def _mod1(x):
    y = np.mod(x, 1.0)
    return np.where(y >= 1.0, 0.0, y) if isinstance(y, np.ndarray) else (0.0 if y >= 1.0 else float(y))


def square_tiling(pmap: PlanarMap, o: int, sink, *, method: str = "direct") -> CylinderTiling:
    """Tile the cylinder by the unit current flow from ``o`` to ``sink``.

    ``sink`` is a vertex or a wired vertex set. The map must be connected.
    Several sinks are first merged into one vertex inside a face that holds
    all of them; face ids then refer to the faces of that merged map, and
    every sink carries the full bottom segment.
    """
    if not pmap.is_connected():
        raise ContractError("square tilings need a connected map")
    sinks = sorted({int(sink)} if np.isscalar(sink) else {int(s) for s in sink})
    if len(sinks) > 1:
        return _wired_tiling(pmap, o, sinks, method)
    uc = unit_current_flow(pmap, o, sink, method=method)
    i = uc.flow.values.copy()
    i[np.abs(i) < ZERO_FLOW] = 0.0
    volt = uc.voltage
    face_of = pmap.face_of
    twin = pmap.twin
    left = face_of[twin]
    psi = _face_potential(pmap, i, o)
    xs = _mod1(psi)

    squares = []
    for e in range(pmap.n_edges):
        a, b = (int(d) for d in pmap.edge_darts[e])
        d = b if i[a] < 0 else a
        cur = float(i[d])
        squares.append(Square(e, float(xs[left[d]]), float(volt[pmap.origin[d]]), abs(cur),
                              int(pmap.origin[d]), int(pmap.head[d]), int(left[d]), int(face_of[d]), cur))

    segs = []
    for v in range(pmap.n_vertices):
        segs.append(_vertex_segment(pmap, v, i, xs, volt, v == o))

    fsegs = []
    for F in pmap.faces:
        vs = pmap.origin[list(F.boundary)]
        top, bot = float(volt[vs].max()), float(volt[vs].min())
        fsegs.append(FaceSegment(F.id, float(xs[F.id]), top, top - bot))

    return CylinderTiling(float(uc.resistance), int(o), tuple(uc.sinks), tuple(squares), tuple(segs), tuple(fsegs))


def wire_sinks(pmap: PlanarMap, sinks) -> tuple[PlanarMap, np.ndarray]:
    """Identify ``sinks`` into one vertex while keeping the map planar.

    A hub is placed inside a face meeting every sink, joined to each of them
    and the new edges are contracted. Returns the merged map (edge ids
    unchanged) and the new vertex of every old vertex.
    """
    sinks = sorted({int(s) for s in sinks})
    want = set(sinks)
    face = next((F for F in pmap.faces if want <= {int(pmap.origin[d]) for d in F.boundary}), None)
    if face is None:
        raise UnsupportedInputError("wired sinks must lie on one common face")
    rot = [list(pmap.rotation(v)) for v in range(pmap.n_vertices)]
    edges = [tuple(int(x) for x in pmap.edge_darts[e]) for e in range(pmap.n_edges)]
    hub, n_d = pmap.n_vertices, pmap.n_darts
    spokes = []
    for d in face.boundary:
        v = int(pmap.origin[d])
        if v not in want:
            continue
        want.discard(v)
        a, b = n_d + 2 * len(spokes), n_d + 2 * len(spokes) + 1
        # the face corner at v sits just before d in its rotation
        r = rot[v]
        r.insert(r.index(int(d)), a)
        edges.append((a, b))
        spokes.append(b)
    # walking the face keeps it on the right, so the hub sees the spokes clockwise
    rot.append(list(reversed(spokes)))
    aug = PlanarMap(rot, edges)
    res = contract(aug, range(pmap.n_edges, aug.n_edges))
    return res.output, contraction_vertex_map(aug, res)[: pmap.n_vertices]


def _wired_tiling(pmap: PlanarMap, o: int, sinks: list, method: str) -> CylinderTiling:
    if o in sinks:
        raise ContractError("the source cannot be a sink")
    merged, vmap = wire_sinks(pmap, sinks)
    t = square_tiling(merged, int(vmap[o]), int(vmap[sinks[0]]), method=method)
    back = {int(vmap[v]): v for v in range(pmap.n_vertices) if v not in sinks}
    z = int(vmap[sinks[0]])
    back[z] = sinks[0]
    squares = tuple(Square(s.edge, s.x, s.y_top, s.side, back[s.upper], back[s.lower], s.left_face,
                           s.right_face, s.current) for s in t.squares)
    by_v = {back[s.vertex]: s for s in t.vertex_segments}
    bottom = by_v[sinks[0]]
    segs = tuple(VertexSegment(v, bottom.y, bottom.x_start, bottom.width) if v in sinks
                 else VertexSegment(v, by_v[v].y, by_v[v].x_start, by_v[v].width)
                 for v in range(pmap.n_vertices))
    return CylinderTiling(t.height, int(o), tuple(sinks), squares, segs, t.face_segments)


def _face_potential(pmap: PlanarMap, i: np.ndarray, o: int) -> np.ndarray:
    nf = pmap.n_faces
    psi = np.full(nf, np.nan)
    face_of = pmap.face_of
    rot = pmap.rotation(o)
    pos = [d for d in rot if i[d] > 0]
    anchor = int(face_of[pmap.twin[pos[0]]]) if pos else int(face_of[rot[0]]) if rot else 0
    psi[anchor] = 0.0
    # walk faces: crossing dart d from its left face to its right face adds i(d)
    by_face = [[] for _ in range(nf)]
    for d in range(pmap.n_darts):
        by_face[face_of[pmap.twin[d]]].append(d)
    q = deque([anchor])
    while q:
        f = q.popleft()
        for d in by_face[f]:
            g = face_of[d]
            if np.isnan(psi[g]):
                psi[g] = psi[f] + i[d]
                q.append(g)
    return psi


def _vertex_segment(pmap: PlanarMap, v: int, i: np.ndarray, xs: np.ndarray, volt: np.ndarray,
                    is_source: bool) -> VertexSegment:
    rot = pmap.rotation(v)
    y = float(volt[v])
    if not rot:
        return VertexSegment(v, y, 0.0, 0.0)
    face_of, twin = pmap.face_of, pmap.twin
    live = [d for d in rot if i[d] != 0.0]
    out_w = float(sum(i[d] for d in live if i[d] > 0))
    in_w = float(-sum(i[d] for d in live if i[d] < 0))
    width = max(out_w, in_w)
    if not live:
        return VertexSegment(v, y, float(xs[face_of[rot[0]]]), 0.0)
    if is_source:
        return VertexSegment(v, y, 0.0, min(1.0, width))
    k = len(live)
    start = None
    for j, d in enumerate(live):
        nxt = live[(j + 1) % k]
        if i[d] > 0 and i[nxt] < 0:
            start = xs[face_of[twin[d]]]  # left face of the last outgoing dart
            break
    if start is None:
        # only incoming (a sink) or only outgoing: the block wraps the whole segment
        d = live[0]
        start = xs[face_of[d]] if i[d] < 0 else xs[face_of[twin[d]]]
    return VertexSegment(v, y, float(start), width)


# -- circular interval helpers -----------------------------------------------

def circ_overlap(a, wa, b, wb):
    """Length of the intersection of arcs ``[a, a+wa]`` and ``[b, b+wb]`` on ``R/Z``."""
    a, wa, b, wb = (np.asarray(t, dtype=float) for t in (a, wa, b, wb))
    total = 0.0
    for k in (-1.0, 0.0, 1.0):
        lo = np.maximum(a, b + k)
        hi = np.minimum(a + wa, b + wb + k)
        total = total + np.clip(hi - lo, 0.0, None)
    return np.minimum(total, np.minimum(wa, wb))


def circ_offset(x, a):
    """Offset of ``x`` from ``a`` going in the positive direction, in ``[0, 1)``."""
    return np.mod(np.asarray(x, dtype=float) - a, 1.0)


def circ_dist(x, y):
    d = np.mod(np.asarray(x, dtype=float) - y, 1.0)
    return np.minimum(d, 1.0 - d)


def _arc_contains(a, w, x, wx, tol):
    """Is the arc ``[x, x+wx]`` inside ``[a, a+w]`` (up to ``tol``)?"""
    w = np.asarray(w, dtype=float)
    off = circ_offset(x, a)
    off = np.where(off > 1.0 - tol, off - 1.0, off)
    return ((off >= -tol) & (off + wx <= w + tol)) | (w >= 1.0 - tol)


# -- verification ------------------------------------------------------------

@dataclass(frozen=True)
class PropertyResult:
    name: str
    ok: bool
    worst: float
    witness: object = None


@dataclass(frozen=True)
class TilingReport:
    results: tuple = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)

    def __getitem__(self, k: int) -> PropertyResult:
        return self.results[k - 1]

    def to_dict(self) -> dict:
        return {"ok": self.ok, "properties": [
            {"property": k + 1, "name": r.name, "ok": r.ok, "worst": r.worst,
             "witness": r.witness} for k, r in enumerate(self.results)]}


def verify_tiling(t: CylinderTiling, tol: float = TOL, samples: int = 256, seed: int = 0) -> TilingReport:
    """Check the six structural properties using the tiling data alone."""
    A = t.arrays()
    x, top, side = A["x"], A["top"], A["side"]
    bottom = top - side
    vseg = {s.vertex: s for s in t.vertex_segments}
    fseg = {s.face: s for s in t.face_segments}
    res = []

    # (1) axis-parallel squares inside the cylinder
    bad = (~np.isfinite(x)) | (x < -tol) | (x >= 1.0 + tol) | (side < 0) | (bottom < -tol) | (top > t.height + tol)
    res.append(_result("axis-parallel squares inside the cylinder", bad, np.where(bad, 1.0, 0.0), t))

    # (2) side equals |i(e)|; the recorded currents obey Ohm's law and the node law off the terminals
    cur = np.array([s.current for s in t.squares])
    ohm = np.array([abs(s.y_top - vseg[s.lower].y - s.side) for s in t.squares])
    dev = np.maximum(np.abs(side - np.abs(cur)), ohm)
    div = np.zeros(len(t.vertex_segments))
    np.add.at(div, A["upper"], np.abs(cur))
    np.add.at(div, A["lower"], -np.abs(cur))
    terminals = {t.source, *t.sinks}
    node = np.array([abs(div[v]) if v not in terminals else 0.0 for v in range(len(div))])
    worst2 = max(float(dev.max(initial=0.0)), float(node.max(initial=0.0)))
    if dev.max(initial=0.0) >= node.max(initial=0.0):
        w2 = {"edge": int(np.argmax(dev))} if len(dev) else None
    else:
        w2 = {"vertex": int(np.argmax(node))}
    res.append(PropertyResult("side equals |current|", worst2 <= tol, worst2, w2 if worst2 > tol else None))

    # (3) interiors pairwise disjoint
    res.append(_disjointness(x, top, side, tol))

    # (4) squares cover the cylinder: area identity and random point sampling
    area = float(np.sum(side ** 2))
    area_err = abs(area - t.height * t.circumference)
    rng = np.random.default_rng(seed)
    pts = np.column_stack([rng.random(samples), rng.random(samples) * t.height])
    live = side > 0
    covered = np.zeros(samples, dtype=bool)
    xl, tl, sl = x[live], top[live], side[live]
    for s0 in range(0, samples, 64):
        px, py = pts[s0:s0 + 64, 0][:, None], pts[s0:s0 + 64, 1][:, None]
        inx = _arc_contains(xl[None, :], sl[None, :], px, 0.0, tol)
        iny = (py <= tl[None, :] + tol) & (py >= tl[None, :] - sl[None, :] - tol)
        covered[s0:s0 + 64] = np.any(inx & iny, axis=1)
    miss = np.flatnonzero(~covered)
    w4 = None
    if area_err > tol:
        w4 = {"area": area, "height": t.height}
    elif len(miss):
        w4 = {"point": [float(pts[miss[0], 0]), float(pts[miss[0], 1])]}
    res.append(PropertyResult("squares cover the cylinder", area_err <= tol and not len(miss),
                              max(area_err, float(len(miss))), w4))

    # (5) each square touches the segments of both endpoints
    worst5, w5 = 0.0, None
    for s in t.squares:
        for v, y in ((s.upper, s.y_top), (s.lower, s.y_bottom)):
            seg = vseg[v]
            err = abs(seg.y - y)
            if not _arc_contains(seg.x_start, seg.width, s.x, s.side, tol):
                err = max(err, _arc_excess(seg, s))
            if err > worst5:
                worst5, w5 = err, {"edge": s.edge, "vertex": v}
    res.append(PropertyResult("squares tangent to vertex segments", worst5 <= tol, worst5,
                              w5 if worst5 > tol else None))

    # (6) each square touches the segments of the faces on both sides
    worst6, w6 = 0.0, None
    for s in t.squares:
        for F, xx in ((s.left_face, s.x), (s.right_face, s.x + s.side)):
            seg = fseg[F]
            err = float(circ_dist(seg.x, xx))
            err = max(err, s.y_top - seg.y_top, (seg.y_top - seg.length) - s.y_bottom)
            if err > worst6:
                worst6, w6 = err, {"edge": s.edge, "face": F}
    res.append(PropertyResult("squares tangent to face segments", worst6 <= tol, worst6,
                              w6 if worst6 > tol else None))
    return TilingReport(tuple(res))


def _arc_excess(seg: VertexSegment, s: Square) -> float:
    inside = float(circ_overlap(seg.x_start, seg.width, s.x, s.side))
    if s.side == 0:
        return float(min(circ_dist(s.x, seg.x_start), circ_dist(s.x, seg.x_start + seg.width))) \
            if seg.width < 1 else 0.0
    return s.side - inside


def _result(name, bad, mag, t) -> PropertyResult:
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        return PropertyResult(name, False, float(mag.max()), {"edge": int(t.squares[k].edge)})
    return PropertyResult(name, True, 0.0, None)


def _disjointness(x, top, side, tol) -> PropertyResult:
    live = np.flatnonzero(side > tol)
    worst, wit = 0.0, None
    for s0 in range(0, len(live), 256):
        a = live[s0:s0 + 256]
        ox = circ_overlap(x[a][:, None], side[a][:, None], x[live][None, :], side[live][None, :])
        oy = np.clip(np.minimum(top[a][:, None], top[live][None, :])
                     - np.maximum(top[a][:, None] - side[a][:, None], top[live][None, :] - side[live][None, :]),
                     0.0, None)
        ov = np.minimum(ox, oy)
        ov[live[None, :] <= a[:, None]] = 0.0
        k = np.unravel_index(np.argmax(ov), ov.shape) if ov.size else None
        if k is not None and ov[k] > worst:
            worst, wit = float(ov[k]), {"edges": [int(a[k[0]]), int(live[k[1]])]}
    return PropertyResult("interiors pairwise disjoint", worst <= tol, worst, wit if worst > tol else None)


# -- meridians and strip flows -----------------------------------------------

def _boundary_xs(t: CylinderTiling) -> np.ndarray:
    A = t.arrays()
    return np.concatenate([A["x"], A["x"] + A["side"]])


def meridian_net_flow(t: CylinderTiling, m: float, *, budget: int = 64, eps: float = 1e-7) -> float:
    """Net current crossing the meridian at ``m`` from left to right.

    At every non-terminal vertex whose segment the meridian cuts, the part of
    the segment left of the meridian carries some outgoing width and some
    incoming width; their difference is the flow crossing there. ``m`` is
    nudged off square boundaries first.
    """
    m = _admissible_meridian(t, m, budget, eps)
    terminals = {t.source, *t.sinks}
    A = t.arrays()
    x, side = A["x"], A["side"]
    total = 0.0
    for seg in t.vertex_segments:
        if seg.vertex in terminals or seg.width <= 0:
            continue
        off = float(circ_offset(m, seg.x_start))
        if not 0.0 < off < seg.width:
            continue
        left_w = off
        outs = A["upper"] == seg.vertex
        ins = A["lower"] == seg.vertex
        out_left = float(np.sum(circ_overlap(seg.x_start, left_w, x[outs], side[outs])))
        in_left = float(np.sum(circ_overlap(seg.x_start, left_w, x[ins], side[ins])))
        total += out_left - in_left
    return total


def _admissible_meridian(t: CylinderTiling, m: float, budget: int, eps: float) -> float:
    edges = _boundary_xs(t)
    golden = (np.sqrt(5.0) - 1.0) / 2.0
    for k in range(budget + 1):
        cand = float(_mod1(m + k * golden * 1e-3))
        if edges.size == 0 or float(circ_dist(edges, cand).min()) > eps:
            return cand
    raise DegenerateMeridianError(f"no meridian near {m} avoids square boundaries after {budget} tries")


def _strip_flow(t: CylinderTiling, pmap: PlanarMap, x: int, lo: float, w: float) -> EdgeFunction:
    """Width of each square inside the arc ``[lo, lo+w]`` below the segment of ``x``."""
    if pmap.n_edges != len(t.squares) or pmap.n_vertices != len(t.vertex_segments):
        raise StructuralError("tiling does not match the map")
    y = t.vertex_segments[x].y
    vals = np.zeros(pmap.n_darts)
    for s in t.squares:
        if s.side <= 0 or s.y_top > y + TOL:
            continue
        wd = float(circ_overlap(lo, w, s.x, s.side))
        if wd <= 0:
            continue
        a, b = (int(d) for d in pmap.edge_darts[s.edge])
        d = a if pmap.origin[a] == s.upper else b
        vals[d] = wd
        vals[pmap.twin[d]] = -wd
    return EdgeFunction(pmap, vals, check=False)


def flow_below(t: CylinderTiling, pmap: PlanarMap, x: int) -> EdgeFunction:
    """Flow out of ``x`` through the strip directly below its vertex segment."""
    seg = t.vertex_segments[x]
    return _strip_flow(t, pmap, x, seg.x_start, seg.width)


def flow_in_rectangle(t: CylinderTiling, pmap: PlanarMap, m1: float, x: int, m2: float) -> EdgeFunction:
    """Flow out of ``x`` living in the rectangle bounded by two meridians, ``x`` and the bottom."""
    seg = t.vertex_segments[x]
    offs = []
    for m in (m1, m2):
        off = float(circ_offset(m, seg.x_start))
        if seg.width < 1.0 and off > seg.width + TOL:
            if off > 1.0 - TOL:
                off = 0.0
            else:
                raise ContractError(f"meridian {m} misses the segment of vertex {x}")
        offs.append(min(off, seg.width))
    lo, hi = sorted(offs)
    return _strip_flow(t, pmap, x, seg.x_start + lo, hi - lo)


# -- rendering ---------------------------------------------------------------

def render(t: CylinderTiling, meridians=(), width_px: int = 600) -> str:
    """SVG of the unrolled cylinder ``[0,1] x [0,height]`` (top of the picture is ``o``)."""
    h = t.height if t.height > 0 else 1.0
    scale = width_px
    H = h * scale
    pad = 10

    def X(v):
        return f"{pad + v * scale:.6f}"

    def Y(v):
        return f"{pad + (h - v) * scale:.6f}"

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width_px + 2 * pad}" '
           f'height="{H + 2 * pad:.6f}" viewBox="0 0 {width_px + 2 * pad} {H + 2 * pad:.6f}">',
           f'<rect x="{pad}" y="{pad}" width="{width_px}" height="{H:.6f}" fill="none" stroke="#999"/>']
    for s in t.squares:
        if s.side <= 0:
            out.append(f'<circle cx="{X(s.x)}" cy="{Y(s.y_top)}" r="1.5" fill="#333" data-edge="{s.edge}"/>')
            continue
        for x0, w in _unwrap(s.x, s.side):
            out.append(f'<rect class="square" x="{X(x0)}" y="{Y(s.y_top)}" width="{w * scale:.6f}" height="{s.side * scale:.6f}" '
                       f'fill="#cde" stroke="#124" stroke-width="1" data-edge="{s.edge}"/>')
    for v in t.vertex_segments:
        for x0, w in _unwrap(v.x_start, v.width):
            out.append(f'<line x1="{X(x0)}" y1="{Y(v.y)}" x2="{X(x0 + w)}" y2="{Y(v.y)}" '
                       f'stroke="#c00" stroke-width="2" data-vertex="{v.vertex}"/>')
    for f in t.face_segments:
        out.append(f'<line x1="{X(f.x)}" y1="{Y(f.y_top)}" x2="{X(f.x)}" y2="{Y(f.y_top - f.length)}" '
                   f'stroke="#080" stroke-dasharray="3,2" data-face="{f.face}"/>')
    for m in meridians:
        out.append(f'<line x1="{X(_mod1(m))}" y1="{Y(h)}" x2="{X(_mod1(m))}" y2="{Y(0)}" '
                   f'stroke="#00c" stroke-dasharray="1,3"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _unwrap(x0: float, w: float):
    if w >= 1.0:
        return [(0.0, 1.0)]
    if x0 + w <= 1.0:
        return [(x0, w)]
    return [(x0, 1.0 - x0), (0.0, x0 + w - 1.0)]
