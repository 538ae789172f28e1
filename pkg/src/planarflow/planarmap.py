"""Planar combinatorial maps stored as rotation systems on darts.

A map with ``E`` edges has ``2E`` darts. Each edge owns a pair of darts
(its two orientations) exchanged by the twin involution. Every vertex carries
its rotation: the counterclockwise cyclic order of the darts leaving it.

Conventions used throughout the package:

* ``sigma[d]`` is the dart following ``d`` counterclockwise around its origin.
* Faces are the orbits of ``phi = sigma o twin``; the face of a dart is the
  face lying on its right-hand side.
* The dual dart ``d*`` crosses ``d`` from its left face to its right face.
  Dual darts reuse the primal ids, so ``d*`` has id ``d`` and the dual edge of
  ``e`` has id ``e``. With these choices ``sigma* = sigma^-1 o twin`` and the
  double dual is identified with the original map through ``d -> twin(d)``.
* Multigraphs and loops are allowed. The unbounded face is an ordinary face;
  ``outer_face`` is an optional marker and never changes any computation
  except where an anchor face is needed.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ContractError, StructuralError, UnsupportedInputError

__all__ = [
    "PlanarMap",
    "Face",
    "DualCorrespondence",
    "BondVerdict",
    "trace_faces",
    "dual",
    "dual_transfer",
    "find_bond",
    "bond_cycle_transfer",
    "is_cycle",
    "is_cut",
    "map_isomorphic",
]


def _frozen(a, dtype=np.int64) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _orbit_labels(perm: np.ndarray) -> tuple[int, np.ndarray]:
    """Label the cycles of a permutation, numbered by their smallest element."""
    n = len(perm)
    if n == 0:
        return 0, np.zeros(0, dtype=np.int64)
    g = coo_matrix((np.ones(n, dtype=np.int8), (np.arange(n), perm)), shape=(n, n))
    count, labels = connected_components(g, directed=True, connection="weak")
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first, kind="stable")
    relabel = np.empty(count, dtype=np.int64)
    relabel[order] = np.arange(count)
    return count, relabel[labels]


@dataclass(frozen=True)
class Face:
    id: int
    boundary: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.boundary)


class PlanarMap:
    """Immutable rotation system of a plane multigraph.

    Parameters
    ----------
    rotations : sequence of sequences of int
        For each vertex, the darts leaving it in counterclockwise order.
    edges : sequence of pairs of int
        For each edge, its two darts. Dart ids must be exactly ``0..2E-1``.
    outer_face : int, optional
        Metadata marker for the unbounded face.
    """

    def __init__(self, rotations: Sequence[Sequence[int]], edges: Sequence[Sequence[int]],
                 *, outer_face: int | None = None):
        edge_darts = np.array(edges, dtype=np.int64).reshape(-1, 2)
        n_darts = 2 * len(edge_darts)
        n_vertices = len(rotations)
        origin = np.full(n_darts, -1, dtype=np.int64)
        sigma = np.full(n_darts, -1, dtype=np.int64)
        first = np.full(n_vertices, -1, dtype=np.int64)
        for v, rot in enumerate(rotations):
            rot = list(rot)
            if not rot:
                continue
            for d in rot:
                if not 0 <= d < n_darts:
                    raise StructuralError(f"vertex {v}: dart {d} out of range")
                if origin[d] != -1:
                    raise StructuralError(f"dart {d} appears in more than one rotation slot")
                origin[d] = v
            first[v] = rot[0]
            sigma[rot] = rot[1:] + rot[:1]
        missing = np.flatnonzero(origin < 0)
        if len(missing):
            raise StructuralError(f"dart {int(missing[0])} is in no rotation")
        self._init_arrays(n_vertices, origin, sigma, first, edge_darts, outer_face, check=True)

    @classmethod
    def from_arrays(cls, n_vertices: int, origin, sigma, first, edge_darts,
                    *, outer_face: int | None = None, check: bool = True) -> "PlanarMap":
        """Build from flat arrays (used by the vectorised transforms)."""
        obj = cls.__new__(cls)
        obj._init_arrays(n_vertices, np.asarray(origin, dtype=np.int64),
                         np.asarray(sigma, dtype=np.int64),
                         np.asarray(first, dtype=np.int64),
                         np.asarray(edge_darts, dtype=np.int64).reshape(-1, 2),
                         outer_face, check)
        return obj

    def _init_arrays(self, n_vertices, origin, sigma, first, edge_darts, outer_face, check):
        n_darts = 2 * len(edge_darts)
        twin = np.full(n_darts, -1, dtype=np.int64)
        dart_edge = np.full(n_darts, -1, dtype=np.int64)
        if check:
            flat = edge_darts.ravel()
            if len(flat) and (flat.min() < 0 or flat.max() >= n_darts):
                raise StructuralError("edge references a dart id out of range")
            counts = np.bincount(flat, minlength=n_darts)
            if np.any(counts != 1):
                bad = int(np.flatnonzero(counts != 1)[0])
                raise StructuralError(f"twin involution broken at dart {bad}: "
                                      f"owned by {int(counts[bad])} edge slots")
            if len(origin) != n_darts or len(sigma) != n_darts:
                raise StructuralError("dart arrays have inconsistent lengths")
        twin[edge_darts[:, 0]] = edge_darts[:, 1]
        twin[edge_darts[:, 1]] = edge_darts[:, 0]
        dart_edge[edge_darts[:, 0]] = np.arange(len(edge_darts))
        dart_edge[edge_darts[:, 1]] = np.arange(len(edge_darts))
        if check and n_darts:
            if origin.min() < 0 or origin.max() >= n_vertices:
                raise StructuralError("dart origin out of range")
            if not np.array_equal(np.sort(sigma), np.arange(n_darts)):
                raise StructuralError("rotation successor is not a permutation")
            wrong = np.flatnonzero(origin[sigma] != origin)
            if len(wrong):
                d = int(wrong[0])
                raise StructuralError(f"malformed rotation: dart {int(sigma[d])} follows "
                                      f"dart {d} but has a different origin")
            n_orbits, _ = _orbit_labels(sigma)
            if n_orbits != len(np.unique(origin)):
                raise StructuralError("a vertex rotation splits into several cycles")
            has = np.zeros(n_vertices, dtype=bool)
            has[origin] = True
            for v in range(n_vertices):
                if has[v] != (first[v] >= 0) or (first[v] >= 0 and origin[first[v]] != v):
                    raise StructuralError(f"vertex {v}: rotation anchor inconsistent")
        sigma_inv = np.empty_like(sigma)
        sigma_inv[sigma] = np.arange(n_darts)
        self.n_vertices = int(n_vertices)
        self.origin = _frozen(origin)
        self.sigma = _frozen(sigma)
        self.sigma_inv = _frozen(sigma_inv)
        self.first = _frozen(first)
        self.edge_darts = _frozen(edge_darts)
        self.twin = _frozen(twin)
        self.dart_edge = _frozen(dart_edge)
        self.outer_face = outer_face

    # -- sizes -----------------------------------------------------------
    @property
    def n_edges(self) -> int:
        return len(self.edge_darts)

    @property
    def n_darts(self) -> int:
        return 2 * len(self.edge_darts)

    @cached_property
    def head(self) -> np.ndarray:
        return _frozen(self.origin[self.twin])

    @cached_property
    def degree(self) -> np.ndarray:
        return _frozen(np.bincount(self.origin, minlength=self.n_vertices))

    def endpoints(self, e: int) -> tuple[int, int]:
        a, b = self.edge_darts[e]
        return int(self.origin[a]), int(self.origin[b])

    @cached_property
    def edge_endpoints(self) -> np.ndarray:
        return _frozen(self.origin[self.edge_darts])

    def rotation(self, v: int) -> tuple[int, ...]:
        d0 = int(self.first[v])
        if d0 < 0:
            return ()
        out = [d0]
        d = int(self.sigma[d0])
        while d != d0:
            out.append(d)
            d = int(self.sigma[d])
        return tuple(out)

    def rotations(self) -> list[tuple[int, ...]]:
        return [self.rotation(v) for v in range(self.n_vertices)]

    def has_loops(self) -> bool:
        ends = self.edge_endpoints
        return bool(len(ends)) and bool(np.any(ends[:, 0] == ends[:, 1]))

    # -- faces -----------------------------------------------------------
    @cached_property
    def phi(self) -> np.ndarray:
        return _frozen(self.sigma[self.twin])

    @cached_property
    def _face_labels(self) -> tuple[int, np.ndarray]:
        return _orbit_labels(self.phi)

    @property
    def n_faces(self) -> int:
        return self._face_labels[0]

    @property
    def face_of(self) -> np.ndarray:
        """Face on the right-hand side of each dart."""
        return self._face_labels[1]

    def left_face(self, d: int) -> int:
        return int(self.face_of[self.twin[d]])

    @cached_property
    def faces(self) -> tuple[Face, ...]:
        count, labels = self._face_labels
        starts = np.full(count, -1, dtype=np.int64)
        # labels are numbered by smallest dart, so the first hit is the minimum
        seen = np.zeros(count, dtype=bool)
        for d, f in enumerate(labels):
            if not seen[f]:
                seen[f] = True
                starts[f] = d
        phi = self.phi
        out = []
        for f in range(count):
            d0 = int(starts[f])
            bd = [d0]
            d = int(phi[d0])
            while d != d0:
                bd.append(d)
                d = int(phi[d])
            out.append(Face(f, tuple(bd)))
        return tuple(out)

    # -- connectivity ----------------------------------------------------
    @cached_property
    def _components(self) -> tuple[int, np.ndarray]:
        n = self.n_vertices
        ends = self.edge_endpoints
        g = coo_matrix((np.ones(len(ends), dtype=np.int8), (ends[:, 0], ends[:, 1])), shape=(n, n))
        return connected_components(g, directed=False)

    @property
    def n_components(self) -> int:
        return int(self._components[0])

    @property
    def component_of(self) -> np.ndarray:
        return self._components[1]

    def is_connected(self) -> bool:
        return self.n_vertices > 0 and self.n_components == 1

    def euler_defects(self) -> list[int]:
        """``V - E + F - 2`` per connected component (all zero on valid maps)."""
        comp = self.component_of
        k = self.n_components
        v = np.bincount(comp, minlength=k)
        e = np.bincount(comp[self.edge_endpoints[:, 0]], minlength=k) if self.n_edges else np.zeros(k, int)
        f = np.zeros(k, dtype=np.int64)
        if self.n_darts:
            face_comp = np.zeros(self.n_faces, dtype=np.int64)
            face_comp[self.face_of] = comp[self.origin]
            f = np.bincount(face_comp, minlength=k)
        # an isolated vertex is a sphere with one face
        f = f + (e == 0)
        return [int(x) for x in (v - e + f - 2)]

    def neighbours(self, v: int) -> list[int]:
        return [int(self.head[d]) for d in self.rotation(v)]

    # -- serialisation ---------------------------------------------------
    def to_dict(self) -> dict:
        out = {
            "vertices": [{"id": v, "rotation": list(self.rotation(v))} for v in range(self.n_vertices)],
            "edges": [{"id": e, "darts": [int(a), int(b)]} for e, (a, b) in enumerate(self.edge_darts)],
            "darts": [{"id": d, "origin": int(self.origin[d]), "edge": int(self.dart_edge[d])}
                      for d in range(self.n_darts)],
        }
        if self.outer_face is not None:
            out["outer_face"] = int(self.outer_face)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PlanarMap":
        try:
            verts = sorted(data["vertices"], key=lambda r: r["id"])
            edges = sorted(data["edges"], key=lambda r: r["id"])
            darts = sorted(data.get("darts", []), key=lambda r: r["id"])
        except (KeyError, TypeError) as exc:
            raise StructuralError(f"map JSON missing field: {exc}") from None
        if [r["id"] for r in verts] != list(range(len(verts))):
            raise StructuralError("vertex ids must be dense from 0")
        if [r["id"] for r in edges] != list(range(len(edges))):
            raise StructuralError("edge ids must be dense from 0")
        for r in edges:
            if len(r["darts"]) != 2:
                raise StructuralError(f"edge {r['id']} must own exactly two darts")
        m = cls([r["rotation"] for r in verts], [r["darts"] for r in edges],
                outer_face=data.get("outer_face"))
        if darts:
            if [r["id"] for r in darts] != list(range(m.n_darts)):
                raise StructuralError("dart ids must be dense from 0")
            for r in darts:
                d = r["id"]
                if r["origin"] != m.origin[d]:
                    raise StructuralError(f"dart {d}: origin {r['origin']} disagrees with rotations")
                if r["edge"] != m.dart_edge[d]:
                    raise StructuralError(f"dart {d}: edge {r['edge']} disagrees with edge table")
        return m

    def __repr__(self) -> str:
        return f"PlanarMap(V={self.n_vertices}, E={self.n_edges}, F={self.n_faces if self.n_darts else 0})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, PlanarMap):
            return NotImplemented
        return (self.n_vertices == other.n_vertices
                and np.array_equal(self.edge_darts, other.edge_darts)
                and self.rotations() == other.rotations())

    __hash__ = None


def trace_faces(pmap: PlanarMap) -> list[Face]:
    return list(pmap.faces)


# -- duality -----------------------------------------------------------------

@dataclass(frozen=True)
class DualCorrespondence:
    """Dart bijection ``*`` from a primal map to its dual."""

    primal: PlanarMap
    dual: PlanarMap
    dart_to_dual: np.ndarray = field(repr=False)
    dart_to_primal: np.ndarray = field(repr=False)

    def edge_to_dual(self, e: int) -> int:
        return int(self.dual.dart_edge[self.dart_to_dual[self.primal.edge_darts[e][0]]])

    def edge_to_primal(self, e: int) -> int:
        return int(self.primal.dart_edge[self.dart_to_primal[self.dual.edge_darts[e][0]]])

    def primal_vertex_of_dual_face(self, face: int) -> int:
        """The primal vertex enclosed by a face of the dual."""
        d = self.dual.faces[face].boundary[0]
        return int(self.primal.origin[self.dart_to_primal[d]])

    def inverse(self) -> "DualCorrespondence":
        """Correspondence from the dual back to the primal, read as ``(G*)*``.

        ``*`` applied twice sends a dart to its reverse, so the inverse of the
        dart bijection is ``d* -> twin(d)`` when read as a duality again.
        """
        twin = self.primal.twin
        to_primal = twin[self.dart_to_primal]
        to_dual = np.empty_like(to_primal)
        to_dual[to_primal] = np.arange(len(to_primal))
        return DualCorrespondence(self.dual, self.primal, _frozen(to_primal), _frozen(to_dual))


def dual(pmap: PlanarMap) -> tuple[PlanarMap, DualCorrespondence]:
    """Dual map with one vertex per face and the dart correspondence."""
    if not pmap.is_connected():
        raise UnsupportedInputError("dual requires a connected map")
    if pmap.n_darts == 0:
        raise UnsupportedInputError("dual of a single vertex with no edges is undefined")
    twin = pmap.twin
    face_of = pmap.face_of
    d_origin = face_of[twin]
    d_sigma = pmap.sigma_inv[twin]
    first = np.full(pmap.n_faces, -1, dtype=np.int64)
    # anchor each dual rotation at the dart crossing the face's first boundary dart
    for f in pmap.faces:
        first[f.id] = twin[f.boundary[0]]
    # an outer-face marker of the primal names no face of the dual, so none is kept
    dmap = PlanarMap.from_arrays(pmap.n_faces, d_origin, d_sigma, first, pmap.edge_darts, outer_face=None)
    ident = _frozen(np.arange(pmap.n_darts))
    return dmap, DualCorrespondence(pmap, dmap, ident, ident)


def dual_transfer(f, corr: DualCorrespondence):
    """Push an antisymmetric dart function through ``*``: ``f*(d*) = f(d)``."""
    from .fields import EdgeFunction

    if f.map is not corr.primal and f.map != corr.primal:
        raise StructuralError("edge function does not live on the correspondence's primal map")
    values = np.empty(corr.dual.n_darts)
    values[corr.dart_to_dual] = f.values
    return EdgeFunction(corr.dual, values)


# -- cuts, bonds and cycles --------------------------------------------------

@dataclass(frozen=True)
class BondVerdict:
    is_bond: bool
    side1: frozenset = frozenset()
    side2: frozenset = frozenset()
    reason: str = ""

    def __bool__(self) -> bool:
        return self.is_bond


def _check_edge_ids(pmap: PlanarMap, edge_set: Iterable[int]) -> list[int]:
    edges = sorted({int(e) for e in edge_set})
    for e in edges:
        if not 0 <= e < pmap.n_edges:
            raise StructuralError(f"unknown edge id {e}")
    return edges


def _components_without(pmap: PlanarMap, removed: set[int]) -> np.ndarray:
    n = pmap.n_vertices
    keep = np.ones(pmap.n_edges, dtype=bool)
    keep[list(removed)] = False
    ends = pmap.edge_endpoints[keep]
    g = coo_matrix((np.ones(len(ends), dtype=np.int8), (ends[:, 0], ends[:, 1])), shape=(n, n))
    return connected_components(g, directed=False)[1]


def find_bond(pmap: PlanarMap, edge_set: Iterable[int]) -> BondVerdict:
    """Decide whether ``edge_set`` is a bond (minimal nonempty cut)."""
    edges = _check_edge_ids(pmap, edge_set)
    if not edges:
        return BondVerdict(False, reason="empty edge set")
    ends = pmap.edge_endpoints[edges]
    if np.any(ends[:, 0] == ends[:, 1]):
        return BondVerdict(False, reason="contains a loop")
    comp = pmap.component_of
    host = comp[ends[:, 0]]
    if np.any(host != host[0]):
        return BondVerdict(False, reason="edges lie in different components")
    inside = np.flatnonzero(comp == host[0])
    split = _components_without(pmap, set(edges))
    labels = np.unique(split[inside])
    if len(labels) != 2:
        return BondVerdict(False, reason=f"removal leaves {len(labels)} pieces in the component")
    a, b = split[ends[:, 0]], split[ends[:, 1]]
    if np.any(a == b):
        return BondVerdict(False, reason="some edge does not join the two sides")
    side1 = frozenset(int(v) for v in inside if split[v] == labels[0])
    side2 = frozenset(int(v) for v in inside if split[v] == labels[1])
    return BondVerdict(True, side1, side2, "bond")


def is_cut(pmap: PlanarMap, edge_set: Iterable[int]) -> bool:
    """True iff ``edge_set`` equals the edge boundary of some vertex set."""
    edges = _check_edge_ids(pmap, edge_set)
    split = _components_without(pmap, set(edges))
    # the cut edges must 2-colour the quotient by the pieces of G - F
    colour: dict[int, int] = {}
    adj: dict[int, list[int]] = {}
    for e in edges:
        u, w = pmap.endpoints(e)
        a, b = int(split[u]), int(split[w])
        if a == b:
            return False
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    for s in adj:
        if s in colour:
            continue
        colour[s] = 0
        queue = deque([s])
        while queue:
            x = queue.popleft()
            for y in adj[x]:
                if y not in colour:
                    colour[y] = 1 - colour[x]
                    queue.append(y)
                elif colour[y] == colour[x]:
                    return False
    return True


def is_cycle(pmap: PlanarMap, edge_set: Iterable[int]) -> bool:
    """True iff the edges form a single cycle (loops and 2-cycles included)."""
    edges = _check_edge_ids(pmap, edge_set)
    if not edges:
        return False
    deg: dict[int, int] = {}
    adj: dict[int, set[int]] = {}
    for e in edges:
        u, w = pmap.endpoints(e)
        deg[u] = deg.get(u, 0) + 1
        deg[w] = deg.get(w, 0) + 1
        adj.setdefault(u, set()).add(w)
        adj.setdefault(w, set()).add(u)
    if any(k != 2 for k in deg.values()):
        return False
    start = next(iter(adj))
    seen = {start}
    stack = [start]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return len(seen) == len(adj)


def bond_cycle_transfer(pmap: PlanarMap, corr: DualCorrespondence, edge_set: Iterable[int]) -> frozenset:
    """Image under ``*`` of a bond (a cycle of the dual) or of a cycle (a dual bond).

    The direction is inferred from which map ``pmap`` is in the correspondence.
    """
    if pmap is corr.primal or pmap == corr.primal:
        image = frozenset(corr.edge_to_dual(e) for e in _check_edge_ids(pmap, edge_set))
        target = corr.dual
    elif pmap is corr.dual or pmap == corr.dual:
        image = frozenset(corr.edge_to_primal(e) for e in _check_edge_ids(pmap, edge_set))
        target = corr.primal
    else:
        raise StructuralError("map is neither side of the correspondence")
    if find_bond(pmap, edge_set):
        if not is_cycle(target, image):
            raise ContractError("bond image is not a cycle; map and correspondence disagree")
    elif is_cycle(pmap, edge_set):
        if not find_bond(target, image):
            raise ContractError("cycle image is not a bond; map and correspondence disagree")
    else:
        raise ContractError("edge set is neither a bond nor a cycle")
    return image


# -- isomorphism -------------------------------------------------------------

def _code_from(pmap: PlanarMap, start: int, ref: list[tuple[int, int]] | None = None):
    """BFS relabelling from ``start``; compares against ``ref`` early if given."""
    label = {start: 0}
    order = [start]
    sigma, twin = pmap.sigma, pmap.twin
    code = []
    i = 0
    while i < len(order):
        d = order[i]
        pair = []
        for nxt in (int(sigma[d]), int(twin[d])):
            if nxt not in label:
                label[nxt] = len(order)
                order.append(nxt)
            pair.append(label[nxt])
        pair = (pair[0], pair[1])
        if ref is not None and (i >= len(ref) or ref[i] != pair):
            return None
        code.append(pair)
        i += 1
    if ref is not None and len(code) != len(ref):
        return None
    return code, order


def map_isomorphic(a: PlanarMap, b: PlanarMap) -> bool:
    """Orientation-preserving map isomorphism (dart bijection commuting with rotation and twin)."""
    if (a.n_vertices, a.n_edges) != (b.n_vertices, b.n_edges):
        return False
    if sorted(a.degree.tolist()) != sorted(b.degree.tolist()):
        return False
    if a.n_darts and a.n_faces != b.n_faces:
        return False
    # isolated vertices have no darts; they match by count (degree multiset)
    remaining_b = set(range(b.n_darts))
    remaining_a = set(range(a.n_darts))
    while remaining_a:
        s = min(remaining_a)
        code_a, orbit_a = _code_from(a, s)
        found = False
        for t in sorted(remaining_b):
            res = _code_from(b, t, code_a)
            if res is not None:
                remaining_b -= set(res[1])
                found = True
                break
        if not found:
            return False
        remaining_a -= set(orbit_a)
    return not remaining_b
