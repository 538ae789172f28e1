"""Roundabout graph, plane line (medial) graph, subdivisions and contractions.

Every transform returns a :class:`TransformResult` whose ``edge_trace``
records where each output edge came from. Output dart ids always follow the
pattern ``2e`` / ``2e + 1`` for output edge ``e``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ContractError, ResourceError, UnsupportedInputError
from .planarmap import PlanarMap

ORIGINAL, ROUNDABOUT, SEGMENT = 0, 1, 2
_KIND_NAMES = {ORIGINAL: "original", ROUNDABOUT: "roundabout", SEGMENT: "segment"}

MAX_DARTS = 20_000_000


@dataclass(frozen=True)
class TransformResult:
    """Output map plus provenance tables.

    ``edge_kind[e]`` is ``ORIGINAL``, ``ROUNDABOUT`` or ``SEGMENT``.
    For original edges ``edge_source`` is the input edge; for roundabout edges
    it is the input vertex and ``edge_index`` the position in its rotation; for
    subdivision segments it is the input edge and ``edge_index`` the segment
    number counted from the edge's first dart. ``vertex_origin`` maps output
    vertices to the input object they represent (a vertex, or for the medial
    graph an edge; subdivision vertices map to ``-1``).
    """

    output: PlanarMap
    edge_kind: np.ndarray
    edge_source: np.ndarray
    edge_index: np.ndarray
    vertex_origin: np.ndarray
    op: str

    def trace(self, e: int) -> dict:
        kind = int(self.edge_kind[e])
        rec = {"kind": _KIND_NAMES[kind]}
        if kind == ORIGINAL:
            rec["edge"] = int(self.edge_source[e])
        elif kind == ROUNDABOUT:
            rec["vertex"] = int(self.edge_source[e])
            rec["position"] = int(self.edge_index[e])
        else:
            rec["edge"] = int(self.edge_source[e])
            rec["segment"] = int(self.edge_index[e])
        return rec

    def original_edge_map(self) -> np.ndarray:
        """Output edge id of each input edge kept as an ``ORIGINAL`` edge."""
        idx = np.flatnonzero(self.edge_kind == ORIGINAL)
        out = np.full(int(self.edge_source[idx].max()) + 1 if len(idx) else 0, -1, dtype=np.int64)
        out[self.edge_source[idx]] = idx
        return out

    def to_dict(self) -> dict:
        return {"op": self.op,
                "edge_trace": [self.trace(e) for e in range(self.output.n_edges)],
                "vertex_origin": [int(x) for x in self.vertex_origin]}


def _standard_darts(n_edges: int) -> np.ndarray:
    return np.arange(2 * n_edges, dtype=np.int64).reshape(-1, 2)


def _reject_loops(pmap: PlanarMap, op: str) -> None:
    if pmap.has_loops():
        raise UnsupportedInputError(f"{op}: maps with loops are not supported")


def roundabout(pmap: PlanarMap, *, full_cycles: bool = False) -> TransformResult:
    """Replace every vertex by a cycle through its edge-ends in rotation order.

    Output vertex ``d`` is the pair ``(origin(d), edge(d))`` for input dart
    ``d``. Output edge ``e < E`` is the input edge ``e``. Degree-1 vertices get
    no roundabout edge and degree-2 vertices a single one, unless
    ``full_cycles`` is set, in which case they get a loop and a parallel pair
    (the form whose contraction is exactly the plane line graph).
    """
    _reject_loops(pmap, "roundabout")
    D, E = pmap.n_darts, pmap.n_edges
    deg = pmap.degree[pmap.origin]
    sig = pmap.sigma
    if full_cycles:
        rb_darts = np.arange(D)
    else:
        keep = (deg >= 3) | ((deg == 2) & (np.arange(D) < sig))
        rb_darts = np.flatnonzero(keep)
    R = len(rb_darts)
    n_out_edges = E + R
    if 2 * n_out_edges > MAX_DARTS:
        raise ResourceError(f"roundabout would have {2 * n_out_edges} darts")
    # darts: original edge e -> (2e at node a, 2e+1 at node b)
    orig_dart = np.empty(D, dtype=np.int64)
    orig_dart[pmap.edge_darts[:, 0]] = 2 * np.arange(E)
    orig_dart[pmap.edge_darts[:, 1]] = 2 * np.arange(E) + 1
    # roundabout edge j joins node d=rb_darts[j] (dart 2(E+j), "to next")
    # and node sigma[d] (dart 2(E+j)+1, "to previous")
    to_next = np.full(D, -1, dtype=np.int64)
    to_prev = np.full(D, -1, dtype=np.int64)
    to_next[rb_darts] = 2 * (E + np.arange(R))
    to_prev[sig[rb_darts]] = 2 * (E + np.arange(R)) + 1
    n_d = 2 * n_out_edges
    origin = np.empty(n_d, dtype=np.int64)
    origin[orig_dart] = np.arange(D)
    origin[to_next[rb_darts]] = rb_darts
    origin[to_prev[sig[rb_darts]]] = sig[rb_darts]
    # rotation at node d: [original, to_next, to_prev] with missing slots skipped
    slots = np.stack([orig_dart, to_next, to_prev], axis=1)
    sigma = np.empty(n_d, dtype=np.int64)
    for k in range(3):
        present = slots[:, k] >= 0
        nxt = np.full(D, -1, dtype=np.int64)
        for j in (1, 2, 3):
            cand = slots[:, (k + j) % 3]
            fill = (nxt < 0) & (cand >= 0)
            nxt[fill] = cand[fill]
        sigma[slots[present, k]] = nxt[present]
    kind = np.concatenate([np.full(E, ORIGINAL), np.full(R, ROUNDABOUT)]).astype(np.int8)
    source = np.concatenate([np.arange(E), pmap.origin[rb_darts]])
    pos = _rotation_positions(pmap)
    index = np.concatenate([np.zeros(E, dtype=np.int64), pos[rb_darts]])
    out = PlanarMap.from_arrays(D, origin, sigma, orig_dart, _standard_darts(n_out_edges), check=D < 200_000)
    return TransformResult(out, kind, source, index, pmap.origin.copy(), "roundabout")


def _rotation_positions(pmap: PlanarMap) -> np.ndarray:
    """Position of each dart in its vertex rotation (list ranking by pointer jumping)."""
    D = pmap.n_darts
    is_first = np.zeros(D, dtype=bool)
    is_first[pmap.first[pmap.first >= 0]] = True
    pred = np.where(is_first, np.arange(D), pmap.sigma_inv)
    dist = (~is_first).astype(np.int64)
    while True:
        nxt = pred[pred]
        if np.array_equal(nxt, pred):
            return dist
        dist = dist + dist[pred]
        pred = nxt


def medial(pmap: PlanarMap) -> TransformResult:
    """Plane line graph: one vertex per edge, joined along rotation-consecutive pairs.

    Output vertex ``e`` is input edge ``e``; output edge ``d`` joins
    ``edge(d)`` and ``edge(sigma d)`` at vertex ``origin(d)``. The result is
    4-regular; a degree-1 vertex yields a loop and a degree-2 vertex a
    parallel pair. Loops of the input are allowed.
    """
    if np.any(pmap.degree == 0):
        raise UnsupportedInputError("medial: isolated vertices are not supported")
    D, E = pmap.n_darts, pmap.n_edges
    sig, sig_inv = pmap.sigma, pmap.sigma_inv
    # output edge j = input dart d; dart 2d sits at edge(d) ("next"), 2d+1 at edge(sigma d) ("prev")
    nxt = 2 * np.arange(D)
    prv = np.empty(D, dtype=np.int64)
    prv[sig] = 2 * np.arange(D) + 1  # prev slot of dart sigma[d] is the far end of edge d
    origin = np.empty(2 * D, dtype=np.int64)
    origin[nxt] = pmap.dart_edge
    origin[prv] = pmap.dart_edge
    # rotation at medial vertex e with darts (a, b): [next(a), prev(a), next(b), prev(b)]
    a, b = pmap.edge_darts[:, 0], pmap.edge_darts[:, 1]
    ring = np.stack([nxt[a], prv[a], nxt[b], prv[b]], axis=1)
    sigma = np.empty(2 * D, dtype=np.int64)
    for k in range(4):
        sigma[ring[:, k]] = ring[:, (k + 1) % 4]
    out = PlanarMap.from_arrays(E, origin, sigma, ring[:, 0], _standard_darts(D), check=D < 200_000)
    pos = _rotation_positions(pmap)
    return TransformResult(out, np.full(D, ROUNDABOUT, dtype=np.int8), pmap.origin.copy(), pos,
                           np.arange(E), "medial")


def subdivide(pmap: PlanarMap, counts) -> TransformResult:
    """Replace edge ``e`` by a path of ``counts[e] + 1`` edges.

    Input vertices keep their ids; new vertices are appended edge by edge.
    Segment ``k`` of edge ``e`` is counted from the endpoint of its first dart.
    """
    counts = np.asarray(counts, dtype=np.int64)
    if counts.shape != (pmap.n_edges,):
        raise ContractError(f"need one count per edge ({pmap.n_edges})")
    if np.any(counts < 0):
        raise ContractError("subdivision counts must be nonnegative")
    n_out_edges = int(np.sum(counts + 1))
    if 2 * n_out_edges > MAX_DARTS:
        raise ResourceError(f"subdivision would have {2 * n_out_edges} darts")
    V, E = pmap.n_vertices, pmap.n_edges
    seg_start = np.concatenate([[0], np.cumsum(counts + 1)[:-1]]).astype(np.int64)
    new_start = V + np.concatenate([[0], np.cumsum(counts)[:-1]]).astype(np.int64)
    n_out_vertices = V + int(counts.sum())
    n_d = 2 * n_out_edges
    # map each input dart to the output dart that replaces it at the same vertex
    a, b = pmap.edge_darts[:, 0], pmap.edge_darts[:, 1]
    replace = np.empty(pmap.n_darts, dtype=np.int64)
    replace[a] = 2 * seg_start
    replace[b] = 2 * (seg_start + counts) + 1
    origin = np.empty(n_d, dtype=np.int64)
    sigma = np.empty(n_d, dtype=np.int64)
    origin[replace] = pmap.origin
    sigma[replace] = replace[pmap.sigma]
    # internal path vertices: segment k runs from vertex p_k to p_{k+1}
    edge_of_seg = np.repeat(np.arange(E), counts + 1)
    k = np.arange(n_out_edges) - seg_start[edge_of_seg]
    internal_tail = k > 0
    tail_vertex = new_start[edge_of_seg] + k - 1
    internal_head = k < counts[edge_of_seg]
    head_vertex = new_start[edge_of_seg] + k
    fwd = 2 * np.arange(n_out_edges)
    bwd = fwd + 1
    origin[fwd[internal_tail]] = tail_vertex[internal_tail]
    origin[bwd[internal_head]] = head_vertex[internal_head]
    # an internal vertex has exactly two darts: backward of segment k and forward of segment k+1
    sigma[fwd[internal_tail]] = bwd[internal_tail] - 2
    sigma[bwd[internal_head]] = fwd[internal_head] + 2
    first = np.full(n_out_vertices, -1, dtype=np.int64)
    first[:V] = np.where(pmap.first >= 0, replace[np.maximum(pmap.first, 0)], -1)
    first[tail_vertex[internal_tail]] = fwd[internal_tail]
    # a subdivided loop still has its ends at the same input vertex, so nothing special
    out = PlanarMap.from_arrays(n_out_vertices, origin, sigma, first, _standard_darts(n_out_edges),
                                check=n_d < 400_000)
    vertex_origin = np.concatenate([np.arange(V), np.full(n_out_vertices - V, -1)])
    return TransformResult(out, np.full(n_out_edges, SEGMENT, dtype=np.int8), edge_of_seg, k,
                           vertex_origin, "subdivide")


def weight_profile_counts(pmap: PlanarMap) -> np.ndarray:
    """``r(e) = deg(v)^2 + deg(w)^2`` for each edge ``e = vw``."""
    deg = pmap.degree.astype(np.int64)
    ends = pmap.edge_endpoints
    return deg[ends[:, 0]] ** 2 + deg[ends[:, 1]] ** 2


def weighted_subdivision(pmap: PlanarMap) -> TransformResult:
    """``G[r]``: subdivide every edge ``r(e)`` times."""
    res = subdivide(pmap, weight_profile_counts(pmap))
    return TransformResult(res.output, res.edge_kind, res.edge_source, res.edge_index,
                           res.vertex_origin, "gr")


def contract(pmap: PlanarMap, edge_set: Iterable[int]) -> TransformResult:
    """Contract edges one by one, splicing rotations at each contracted edge.

    Contracting the edge with darts ``a`` (at ``x``) and ``b`` (at ``y``)
    gives the merged vertex the rotation of ``x`` read after ``a`` followed by
    the rotation of ``y`` read after ``b``.
    """
    edges = sorted({int(e) for e in edge_set})
    for e in edges:
        if not 0 <= e < pmap.n_edges:
            raise ContractError(f"unknown edge {e}")
    rot: dict[int, list[int]] = {v: list(pmap.rotation(v)) for v in range(pmap.n_vertices)}
    owner = list(range(pmap.n_vertices))  # union-find parent

    def find(v: int) -> int:
        while owner[v] != v:
            owner[v] = owner[owner[v]]
            v = owner[v]
        return v

    where: dict[int, int] = {int(d): int(pmap.origin[d]) for d in range(pmap.n_darts)}
    for e in edges:
        a, b = (int(x) for x in pmap.edge_darts[e])
        x, y = find(where[a]), find(where[b])
        if x == y:
            raise ContractError(f"edge {e} is a loop (or became one) and cannot be contracted")
        rx, ry = rot[x], rot[y]
        ia, ib = rx.index(a), ry.index(b)
        merged = rx[ia + 1:] + rx[:ia] + ry[ib + 1:] + ry[:ib]
        rot[x] = merged
        del rot[y]
        owner[y] = x
        for d in ry:
            where[d] = x
    removed = set(edges)
    kept = [e for e in range(pmap.n_edges) if e not in removed]
    new_edge = {e: i for i, e in enumerate(kept)}
    survivors = sorted(rot)
    new_vertex = {v: i for i, v in enumerate(survivors)}
    rotations = []
    for v in survivors:
        r = []
        for d in rot[v]:
            e = int(pmap.dart_edge[d])
            r.append(2 * new_edge[e] + (0 if d == pmap.edge_darts[e][0] else 1))
        rotations.append(r)
    out = PlanarMap(rotations, [(2 * i, 2 * i + 1) for i in range(len(kept))])
    vertex_origin = np.array(survivors, dtype=np.int64)
    return TransformResult(out, np.full(len(kept), ORIGINAL, dtype=np.int8), np.array(kept, dtype=np.int64),
                           np.zeros(len(kept), dtype=np.int64), vertex_origin, "contract")


def contraction_vertex_map(pmap: PlanarMap, res: TransformResult) -> np.ndarray:
    """Output vertex of every input vertex after :func:`contract`."""
    kept = set(res.edge_source.tolist())
    owner = list(range(pmap.n_vertices))

    def find(v):
        while owner[v] != v:
            owner[v] = owner[owner[v]]
            v = owner[v]
        return v

    for e in range(pmap.n_edges):
        if e not in kept:
            u, w = pmap.endpoints(e)
            ru, rw = find(u), find(w)
            if ru != rw:
                owner[max(ru, rw)] = min(ru, rw)
    rep = {int(v): i for i, v in enumerate(res.vertex_origin)}
    # representatives are the survivors, which are the smallest ids in their class
    return np.array([rep[min(_class_members(find, v, pmap.n_vertices, rep))] for v in range(pmap.n_vertices)])


def _class_members(find, v, n, rep):
    root = find(v)
    return [u for u in rep if find(u) == root]
