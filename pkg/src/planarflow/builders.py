"""Small named maps and seeded random map generators."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import ContractError
from .planarmap import PlanarMap


def from_neighbour_lists(rot: Sequence[Sequence[int]]) -> PlanarMap:
    """Simple plane graph from counterclockwise neighbour lists.

    Edge ids follow the order in which pairs ``u < w`` are met scanning the
    lists; dart ``2e`` leaves the smaller endpoint.
    """
    edge_id: dict[tuple[int, int], int] = {}
    for u, nbrs in enumerate(rot):
        for w in nbrs:
            key = (min(u, w), max(u, w))
            if key not in edge_id:
                edge_id[key] = len(edge_id)
    rotations = []
    for u, nbrs in enumerate(rot):
        r = []
        for w in nbrs:
            e = edge_id[(min(u, w), max(u, w))]
            r.append(2 * e if u < w else 2 * e + 1)
        rotations.append(r)
    return PlanarMap(rotations, [(2 * e, 2 * e + 1) for e in range(len(edge_id))])


def from_edge_list(n: int, edges: Sequence[tuple[int, int]], rotation_of) -> PlanarMap:
    """Map whose rotation at each vertex is given by a sort key on its darts.

    ``rotation_of(v, darts)`` returns the darts of ``v`` in counterclockwise
    order, where a dart is ``(d, other_endpoint)``.
    """
    at: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for e, (u, w) in enumerate(edges):
        at[u].append((2 * e, w))
        at[w].append((2 * e + 1, u))
    rotations = [[d for d, _ in rotation_of(v, at[v])] for v in range(n)]
    return PlanarMap(rotations, [(2 * e, 2 * e + 1) for e in range(len(edges))])


def from_geometry(points, edges: Sequence[tuple[int, int]]) -> PlanarMap:
    """Straight-line drawing; rotations sorted by angle counterclockwise."""
    pts = np.asarray(points, dtype=float)

    def order(v, darts):
        return sorted(darts, key=lambda dw: math.atan2(pts[dw[1], 1] - pts[v, 1],
                                                       pts[dw[1], 0] - pts[v, 0]))

    return from_edge_list(len(pts), edges, order)


def path(n: int) -> PlanarMap:
    """Path with ``n`` edges and ``n + 1`` vertices."""
    if n < 0:
        raise ContractError("path length must be nonnegative")
    if n == 0:
        return PlanarMap([[]], [])
    rot = [[1]] + [[i - 1, i + 1] for i in range(1, n)] + [[n - 1]]
    return from_neighbour_lists(rot)


def cycle(n: int) -> PlanarMap:
    """Cycle on ``n >= 3`` vertices drawn counterclockwise."""
    if n < 3:
        raise ContractError("simple cycle needs at least 3 vertices")
    return from_neighbour_lists([[(i + 1) % n, (i - 1) % n] for i in range(n)])


def star(k: int) -> PlanarMap:
    return from_neighbour_lists([list(range(1, k + 1))] + [[0] for _ in range(k)])


def k4() -> PlanarMap:
    pts = [(0.0, 0.0), (4.0, 0.0), (2.0, 3.5), (2.0, 1.2)]
    return from_geometry(pts, [(0, 1), (1, 2), (2, 0), (0, 3), (1, 3), (2, 3)])


def cube() -> PlanarMap:
    pts = [(0, 0), (4, 0), (4, 4), (0, 4), (1, 1), (3, 1), (3, 3), (1, 3)]
    edges = [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (7, 4),
             (0, 4), (1, 5), (2, 6), (3, 7)]
    return from_geometry(pts, edges)


def octahedron() -> PlanarMap:
    pts = [(0, 0), (6, 0), (3, 5.2), (3, 0.8), (4, 2.6), (2, 2.6)]
    edges = [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3),
             (0, 3), (1, 3), (1, 4), (2, 4), (2, 5), (0, 5)]
    return from_geometry(pts, edges)


def grid(width: int, height: int) -> PlanarMap:
    """``width x height`` vertices; vertex ``(i, j)`` has id ``j * width + i``."""
    pts = [(i, j) for j in range(height) for i in range(width)]
    edges = []
    for j in range(height):
        for i in range(width):
            v = j * width + i
            if i + 1 < width:
                edges.append((v, v + 1))
            if j + 1 < height:
                edges.append((v, v + width))
    return from_geometry(pts, edges)


# -- random maps -------------------------------------------------------------

def random_triangulation(n_vertices: int, rng: np.random.Generator, flips: int | None = None) -> PlanarMap:
    """Simple sphere triangulation with minimum degree 3.

    Grown from ``K4`` by inserting vertices into random faces, then mixed by
    random edge flips that keep the graph simple and every degree at least 3.
    """
    if n_vertices < 4:
        raise ContractError("triangulation needs at least 4 vertices")
    # K4: outer triangle 0,1,2 counterclockwise, vertex 3 inside
    rot: list[list[int]] = [[1, 3, 2], [2, 3, 0], [0, 3, 1], [0, 1, 2]]
    faces = _corner_faces(rot)
    while len(rot) < n_vertices:
        u, v, w = faces[int(rng.integers(len(faces)))]
        x = len(rot)
        _insert_after(rot[u], v, x)
        _insert_after(rot[v], w, x)
        _insert_after(rot[w], u, x)
        rot.append([u, v, w])
        faces = _corner_faces(rot)
    n_flips = 3 * n_vertices if flips is None else flips
    for _ in range(n_flips):
        u = int(rng.integers(len(rot)))
        v = rot[u][int(rng.integers(len(rot[u])))]
        _try_flip(rot, u, v)
    return from_neighbour_lists(rot)


def _insert_after(lst: list[int], after: int, x: int) -> None:
    lst.insert(lst.index(after) + 1, x)


def _succ(lst: list[int], x: int) -> int:
    return lst[(lst.index(x) + 1) % len(lst)]


def _corner_faces(rot: list[list[int]]) -> list[tuple[int, int, int]]:
    seen = set()
    out = []
    for u, nbrs in enumerate(rot):
        for v in nbrs:
            w = _succ(nbrs, v)
            key = min((u, v, w), (v, w, u), (w, u, v))
            if key not in seen:
                seen.add(key)
                out.append(key)
    return out


def _try_flip(rot: list[list[int]], u: int, v: int) -> bool:
    a = _succ(rot[u], v)
    b = _succ(rot[v], u)
    if a == b or b in rot[a] or len(rot[u]) <= 3 or len(rot[v]) <= 3:
        return False
    _insert_after(rot[a], u, b)
    _insert_after(rot[b], v, a)
    rot[u].remove(v)
    rot[v].remove(u)
    return True


def random_map(n_vertices: int, rng: np.random.Generator, keep: float = 0.7) -> PlanarMap:
    """Connected simple plane map: a random triangulation with some edges deleted.

    Each non-bridge edge survives with probability ``keep``; bridges are never
    removed, so the result stays connected.
    """
    tri = random_triangulation(n_vertices, rng)
    rot = [list(tri.neighbours(v)) for v in range(tri.n_vertices)]
    edges = [(min(tri.endpoints(e)), max(tri.endpoints(e))) for e in range(tri.n_edges)]
    order = rng.permutation(len(edges))
    for idx in order:
        if rng.random() < keep:
            continue
        u, w = edges[idx]
        rot[u].remove(w)
        rot[w].remove(u)
        if not _connected(rot):
            _restore(rot, tri, u, w)
    return from_neighbour_lists(rot)


def _restore(rot, tri: PlanarMap, u: int, w: int) -> None:
    # reinsert w into u's list at the position consistent with the original rotation
    for a, b in ((u, w), (w, u)):
        full = tri.neighbours(a)
        k = full.index(b)
        # predecessor among the surviving neighbours
        for step in range(1, len(full) + 1):
            p = full[(k - step) % len(full)]
            if p in rot[a]:
                _insert_after(rot[a], p, b)
                break
        else:
            rot[a].append(b)


def _connected(rot: list[list[int]]) -> bool:
    seen = {0}
    stack = [0]
    while stack:
        x = stack.pop()
        for y in rot[x]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return len(seen) == len(rot)


def from_csr(ptr, nbr, *, check: bool | None = None) -> PlanarMap:
    """Simple plane graph from CSR neighbour lists (vertex ``v`` owns ``nbr[ptr[v]:ptr[v+1]]``, CCW).

    Same numbering as :func:`from_neighbour_lists` (edges in order of first
    appearance of ``u < w``, dart ``2e`` leaving ``u``), built without Python loops.
    """
    ptr = np.asarray(ptr, dtype=np.int64)
    nbr = np.asarray(nbr, dtype=np.int64)
    n = len(ptr) - 1
    D = len(nbr)
    if D % 2:
        raise ContractError("neighbour lists are not symmetric")
    counts = np.diff(ptr)
    src = np.repeat(np.arange(n, dtype=np.int64), counts)
    if np.any(src == nbr):
        raise ContractError("loops are not allowed in neighbour lists")
    fwd = src < nbr
    key = np.minimum(src, nbr) * n + np.maximum(src, nbr)
    # edge id = rank of the forward dart among forward darts, in scan order
    fpos = np.flatnonzero(fwd)
    if len(fpos) * 2 != D:
        raise ContractError("neighbour lists are not symmetric")
    order = np.argsort(key[fpos], kind="stable")
    sorted_keys = key[fpos][order]
    if len(sorted_keys) > 1 and np.any(sorted_keys[1:] == sorted_keys[:-1]):
        raise ContractError("parallel edges are not allowed in neighbour lists")
    idx = np.searchsorted(sorted_keys, key)
    if np.any(idx >= len(sorted_keys)) or np.any(sorted_keys[np.minimum(idx, len(sorted_keys) - 1)] != key):
        raise ContractError("neighbour lists are not symmetric")
    edge_of_key = np.empty(len(fpos), dtype=np.int64)
    edge_of_key[order] = np.arange(len(fpos))
    e = edge_of_key[idx]
    # first appearance of the pair while scanning may be from the larger endpoint; renumber by first appearance
    first_seen = np.full(len(fpos), D, dtype=np.int64)
    np.minimum.at(first_seen, e, np.arange(D))
    rank = np.empty(len(fpos), dtype=np.int64)
    rank[np.argsort(first_seen, kind="stable")] = np.arange(len(fpos))
    e = rank[e]
    new_id = 2 * e + (~fwd).astype(np.int64)
    origin = np.empty(D, dtype=np.int64)
    origin[new_id] = src
    nxt = np.arange(1, D + 1, dtype=np.int64)
    ends = ptr[1:] - 1
    nz = counts > 0
    nxt[ends[nz]] = ptr[:-1][nz]
    sigma = np.empty(D, dtype=np.int64)
    sigma[new_id] = new_id[nxt]
    first = np.where(counts > 0, new_id[np.minimum(ptr[:-1], max(D - 1, 0))], -1) if D else np.full(n, -1)
    edge_darts = np.arange(D, dtype=np.int64).reshape(-1, 2)
    return PlanarMap.from_arrays(n, origin, sigma, first, edge_darts, check=(D < 200_000) if check is None else check)


def csr_from_lists(rot: Sequence[Sequence[int]]) -> tuple[np.ndarray, np.ndarray]:
    ptr = np.zeros(len(rot) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(r) for r in rot])
    nbr = np.fromiter((w for r in rot for w in r), dtype=np.int64, count=int(ptr[-1]))
    return ptr, nbr
