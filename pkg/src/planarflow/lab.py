"""Example graph families, wired resistance profiles and finite-scale probes.

Every family ``gen(family, n)`` returns a finite ball of a conceptual
infinite plane graph together with a root and a boundary to be wired. Vertex
``keys`` are stable across levels, so consecutive balls nest through
:func:`nesting`.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import breadth_first_order

from . import builders as B
from .current import (divergence, check_node_law, energy, unit_current_flow)
from .errors import ContractError, InvariantViolation, ResourceError
from .fields import EdgeFunction
from .planarmap import PlanarMap, find_bond
from .transform import ROUNDABOUT, contract, medial, roundabout, weighted_subdivision

FAMILIES = ("grid2d", "binary_tree", "tree_with_leaves", "grid_minor", "glued_cycles", "path_fringe")
TRANSFORMS = ("none", "roundabout", "medial", "gr")
MAX_GEN_DARTS = 6_000_000
GEOMETRIC_MAX_RATIO = 0.85


@dataclass(frozen=True)
class FamilyBall:
    family: str
    level: int
    map: PlanarMap
    root: int
    boundary: frozenset
    keys: tuple = field(repr=False)
    embedding: str | None = None

    def sidecar(self) -> dict:
        return {"family": self.family, "level": self.level, "embedding": self.embedding,
                "root": self.root, "boundary": sorted(self.boundary),
                "keys": [list(k) for k in self.keys]}


def nesting(small: FamilyBall, large: FamilyBall) -> np.ndarray:
    """Vertex injection from ``small`` into ``large`` matching keys."""
    index = {k: i for i, k in enumerate(large.keys)}
    try:
        return np.array([index[k] for k in small.keys], dtype=np.int64)
    except KeyError as exc:
        raise ContractError(f"balls do not nest: key {exc.args[0]} missing") from None


def gen(family: str, n: int, embedding: str = "A") -> FamilyBall:
    """Ball of level ``n`` of one of :data:`FAMILIES`."""
    if family not in FAMILIES:
        raise ContractError(f"unknown family {family!r}")
    n = int(n)
    if n < 1:
        raise ContractError("level must be at least 1")
    est = _estimate_darts(family, n)
    if est > MAX_GEN_DARTS:
        raise ResourceError(f"{family}({n}) would have about {est} darts (cap {MAX_GEN_DARTS})")
    if family == "grid2d":
        return _grid2d(n)
    if family == "binary_tree":
        return _binary_tree(n)
    if family == "tree_with_leaves":
        if embedding not in ("A", "B"):
            raise ContractError("embedding must be 'A' or 'B'")
        return _tree_with_leaves(n, embedding)
    if family == "grid_minor":
        return _grid_minor_ball(n)
    if family == "glued_cycles":
        return _glued_cycles(n)
    return _path_fringe(n)


def _estimate_darts(family: str, n: int) -> int:
    if family == "grid2d":
        return 8 * (2 * n + 1) ** 2
    if family == "binary_tree":
        return 4 * 2 ** (n + 1)
    if family == "tree_with_leaves":
        return 2 * (2 ** (n + 1) + (4 ** (n + 1) - 1) // 3)
    if family == "grid_minor":
        return 16 * (2 ** (n + 2) + 4) ** 2
    if family == "glued_cycles":
        return 8 * 2 ** (n + 1)
    return 8 * (2 * n + 1) ** 2 + 4 * 2 ** (n + 1)


# -- families ----------------------------------------------------------------

def _grid_rot(n: int):
    side = 2 * n + 1

    def vid(x, y):
        return (y + n) * side + (x + n)

    rot, keys = [], []
    for y in range(-n, n + 1):
        for x in range(-n, n + 1):
            r = []
            for dx, dy in ((1, 0), (0, 1), (-1, 0), (0, -1)):
                if abs(x + dx) <= n and abs(y + dy) <= n:
                    r.append(vid(x + dx, y + dy))
            rot.append(r)
            keys.append(("g", x, y))
    ring = frozenset(vid(x, y) for y in range(-n, n + 1) for x in range(-n, n + 1) if max(abs(x), abs(y)) == n)
    return rot, keys, vid, ring


def _grid2d(n: int) -> FamilyBall:
    rot, keys, vid, ring = _grid_rot(n)
    return FamilyBall("grid2d", n, B.from_csr(*B.csr_from_lists(rot)), vid(0, 0), ring, tuple(keys))


def _binary_tree(n: int) -> FamilyBall:
    size = 2 ** (n + 1) - 1
    first_leaf = 2 ** n - 1
    rot = []
    for h in range(size):
        kids = [2 * h + 1, 2 * h + 2] if h < first_leaf else []
        rot.append(kids if h == 0 else [(h - 1) // 2] + kids)
    keys = tuple(("t", h) for h in range(size))
    return FamilyBall("binary_tree", n, B.from_csr(*B.csr_from_lists(rot)), 0,
                      frozenset(range(first_leaf, size)), keys)


def _tree_with_leaves(n: int, embedding: str) -> FamilyBall:
    """Binary tree of depth ``n``; a tree vertex at level ``k`` carries ``2^k`` leaves.

    Embedding A keeps the parent edge between the two child edges and the
    leaves in one block; embedding B puts half of the leaves between the
    parent edge and each child edge. The root is the same in both.
    """
    n_tree = 2 ** (n + 1) - 1
    first_boundary = 2 ** n - 1
    rot: list[list[int]] = [[] for _ in range(n_tree)]
    keys = [("t", h) for h in range(n_tree)]
    nxt = n_tree
    for h in range(n_tree):
        k = (h + 1).bit_length() - 1
        parent = (h - 1) // 2
        m = 2 ** k
        leaves = list(range(nxt, nxt + m))
        nxt += m
        for j, leaf in enumerate(leaves):
            rot.append([h])
            keys.append(("l", h, j))
        c0, c1 = 2 * h + 1, 2 * h + 2
        if h >= first_boundary:
            rot[h] = [parent] + leaves
        elif h == 0:
            rot[h] = [c0, c1] + leaves
        elif embedding == "A":
            rot[h] = [c0, parent, c1] + leaves
        else:
            half = m // 2
            rot[h] = [parent] + leaves[:half] + [c0, c1] + leaves[half:]
    return FamilyBall("tree_with_leaves", n, B.from_csr(*B.csr_from_lists(rot)), 0,
                      frozenset(range(first_boundary, n_tree)), tuple(keys), embedding)


def _glued_cycles(n: int) -> FamilyBall:
    """Triangle with two chains of cycles ``C_2, ..., C_n`` (``|C_k| = 2^k``) glued at distinct edges.

    ``C_{k+1}`` is glued to ``C_k`` at the edge antipodal to the edge ``C_k``
    shares with its predecessor, and is drawn in the outer face.
    """
    if n < 2:
        raise ContractError("glued_cycles needs n >= 2")
    rot: list[list[int]] = [[1, 2], [2, 0], [0, 1]]  # triangle a=0, b=1, c=2, counterclockwise
    keys: list[tuple] = [("tri", 0), ("tri", 1), ("tri", 2)]
    boundary = set()
    for copy, (u, v) in enumerate(((1, 0), (2, 1))):  # darts with the outer face on their left
        for k in range(2, n + 1):
            L = 2 ** k - 1
            path = [u] + list(range(len(rot), len(rot) + L - 1)) + [v]
            for i in range(1, L):
                rot.append([path[i - 1], path[i + 1]])
                keys.append(("c", copy, k, i))
            ru, rv = rot[u], rot[v]
            ru.insert(ru.index(v) + 1, path[1])
            rv.insert(rv.index(u), path[-2])
            j = (L - 1) // 2
            u, v = path[j], path[j + 1]
        boundary.update((u, v))
    return FamilyBall("glued_cycles", n, B.from_csr(*B.csr_from_lists(rot)), 0, frozenset(boundary), tuple(keys))


def _path_fringe(n: int) -> FamilyBall:
    """Grid ball of radius ``n`` with a pendant path of length ``2^k`` at ``(k-1, 0)`` for ``k = 1..n``."""
    rot, keys, vid, ring = _grid_rot(n)
    for k in range(1, n + 1):
        base = vid(k - 1, 0)
        L = 2 ** k
        ids = list(range(len(rot), len(rot) + L))
        r = rot[base]
        east = vid(k, 0)
        r.insert(r.index(east) + 1, ids[0])  # into the face between east and north
        chain = [base] + ids
        for i in range(1, L + 1):
            rot.append([chain[i - 1]] + ([chain[i + 1]] if i < L else []))
            keys.append(("p", k, i))
    return FamilyBall("path_fringe", n, B.from_csr(*B.csr_from_lists(rot)), vid(0, 0), ring, tuple(keys))


# -- grid minor ---------------------------------------------------------------

@dataclass(frozen=True)
class _MinorLayout:
    depth: int
    size: int              # lattice side; point (x, y) is stored at (x + margin, y + margin)
    margin: int
    label: np.ndarray      # branch-set label of every lattice point
    level: np.ndarray      # level of each tree vertex (heap order)
    tree_label: np.ndarray  # label of each tree vertex's branch set
    kept: np.ndarray       # (child heap id, lattice point a, lattice point b) of each kept subdivision edge


def _minor_layout(depth: int, margin: int = 1) -> _MinorLayout:
    """Binary tree subdivided inside the quadrant, then all but one edge of each path contracted.

    Level-``k`` tree vertices sit on the antidiagonal ``x + y = 2^(k+1)`` at
    even ``x``. The path to the left child goes up then right; the path to
    the right child steps right once, then up, then right. Both have exactly
    ``2^(k+1)`` edges and the family of paths is vertex disjoint. Each path
    keeps its first edge (at the parent) and the rest merges into the child.
    """
    top = 2 ** (depth + 1)
    off = margin
    size = top + 2 + 2 * margin

    def pid(x, y):
        return (y + off) * size + (x + off)

    label = np.arange(size * size, dtype=np.int64) + (2 ** (depth + 1))  # singleton labels above tree ids
    n_tree = 2 ** (depth + 1) - 1
    level = np.zeros(n_tree, dtype=np.int64)
    pos = np.zeros((n_tree, 2), dtype=np.int64)
    pos[0] = (0, 2)
    label[pid(0, 2)] = 0
    kept = []
    for k in range(depth):
        S = 2 ** (k + 1)
        for j in range(2 ** k):
            h = 2 ** k - 1 + j
            x, y = 2 * j, S - 2 * j
            assert tuple(pos[h]) == (x, y)
            left = [(x, yy) for yy in range(y, 2 * S - 4 * j + 1)] + \
                   [(xx, 2 * S - 4 * j) for xx in range(x + 1, 4 * j + 1)]
            right = [(x, y)] + [(x + 1, yy) for yy in range(y, 2 * S - 4 * j - 1)] + \
                    [(xx, 2 * S - 4 * j - 2) for xx in range(x + 2, 4 * j + 3)]
            for c, path in ((2 * h + 1, left), (2 * h + 2, right)):
                level[c] = k + 1
                pos[c] = path[-1]
                ids = [pid(px, py) for px, py in path]
                label[ids[1:]] = c
                kept.append((c, ids[0], ids[1]))
    tree_label = np.arange(n_tree, dtype=np.int64)
    return _MinorLayout(depth, size, margin, label, level, tree_label, np.array(kept, dtype=np.int64).reshape(-1, 3))


def _minor_degrees(lay: _MinorLayout) -> np.ndarray:
    """Degree (with multiplicity) of each tree branch set in the contracted lattice."""
    L = lay.label.reshape(lay.size, lay.size)
    a = np.concatenate([L[:, :-1].ravel(), L[:-1, :].ravel()])
    b = np.concatenate([L[:, 1:].ravel(), L[1:, :].ravel()])
    cross = a != b
    n_tree = len(lay.level)
    deg = np.zeros(n_tree, dtype=np.int64)
    for side in (a[cross], b[cross]):
        t = side[side < n_tree]
        deg += np.bincount(t, minlength=n_tree)
    return deg


def _grid_minor_ball(n: int) -> FamilyBall:
    """Lattice box centred at the origin, with the depth-``n`` tree paths contracted.

    Deeper tree paths would cross this box, so these balls do not nest.
    """
    lay = _minor_layout(n, margin=2 ** (n + 1) + 1)
    size, off = lay.size, lay.margin
    lab = lay.label
    grid = B.grid(size, size)
    ends = grid.edge_endpoints
    res = contract(grid, np.flatnonzero(lab[ends[:, 0]] == lab[ends[:, 1]]))
    lat = res.vertex_origin  # a lattice point of every merged class
    vlab = lab[lat]
    n_tree = len(lay.level)
    keys = tuple(("m", int(v)) if v < n_tree else ("s", int(p % size) - off, int(p // size) - off)
                 for v, p in zip(vlab, lat))
    root = int(np.flatnonzero(vlab == 0)[0])
    x, y = lat % size, lat // size
    ring = frozenset(np.flatnonzero((x == 0) | (y == 0) | (x == size - 1) | (y == size - 1)).tolist())
    return FamilyBall("grid_minor", n, res.output, root, ring, keys)


@dataclass(frozen=True)
class GridMinorAudit:
    depth: int
    epsilons: tuple
    increments: dict          # eps -> per-level increments of E_eps (levels 0..depth)
    partial_sums: dict
    ratios: dict              # eps -> increment ratios over interior levels
    max_degree_ratio: float   # max over tree vertices of deg(v) / (8 * 2^level)
    degree_bound_holds: bool
    worst_vertex: int

    def to_dict(self) -> dict:
        return {"depth": self.depth,
                "increments": {str(k): list(map(float, v)) for k, v in self.increments.items()},
                "partial_sums": {str(k): list(map(float, v)) for k, v in self.partial_sums.items()},
                "ratios": {str(k): list(map(float, v)) for k, v in self.ratios.items()},
                "max_degree_ratio": self.max_degree_ratio, "degree_bound_holds": self.degree_bound_holds,
                "worst_vertex": self.worst_vertex}


def grid_minor_audit(depth: int, epsilons: Sequence[float] = (0.0, 0.25, 0.5, 1.0)) -> GridMinorAudit:
    """Damped energies of the halving tree flow on the truncated grid minor, plus the degree bound.

    The flow puts ``2^-k`` on the kept edge of every level-``k`` tree edge.
    Ratios use interior levels ``1..depth-1``: the root has no parent edge
    and the last level has no child edges in the truncation.
    """
    if depth < 2 or depth > 12:
        raise ResourceError("grid_minor_audit supports depths 2..12")
    lay = _minor_layout(depth)
    deg = _minor_degrees(lay).astype(float)
    lvl = lay.level
    n_tree = len(lvl)
    # sum of |f| at each tree vertex, read from the kept edges
    abs_sum = np.zeros(n_tree)
    child = lay.kept[:, 0]
    val = 2.0 ** (-lvl[child])
    np.add.at(abs_sum, child, val)
    np.add.at(abs_sum, (child - 1) // 2, val)
    increments, sums, ratios = {}, {}, {}
    for eps in epsilons:
        per = deg ** (1.0 - eps) * abs_sum ** 2
        inc = np.bincount(lvl, weights=per, minlength=depth + 1)
        increments[eps] = inc
        sums[eps] = np.cumsum(inc)
        interior = inc[1:depth]
        ratios[eps] = interior[1:] / interior[:-1]
    bound = 8.0 * 2.0 ** lvl
    r = deg / bound
    k = int(np.argmax(r))
    return GridMinorAudit(depth, tuple(epsilons), increments, sums, ratios, float(r[k]),
                          bool(np.all(deg <= bound)), k)


# -- resistance profiles -----------------------------------------------------

def transformed_terminals(ball: FamilyBall, transform: str):
    """Map, source and wired sink set after applying ``transform`` to a ball."""
    g = ball.map
    if transform == "none":
        return g, ball.root, sorted(ball.boundary)
    bnd = np.zeros(g.n_vertices, dtype=bool)
    bnd[list(ball.boundary)] = True
    if transform == "roundabout":
        res = roundabout(g)
        src = int(g.first[ball.root])
        sinks = np.flatnonzero(bnd[g.origin])
        return res.output, src, sinks
    if transform == "medial":
        res = medial(g)
        src = int(g.dart_edge[g.first[ball.root]])
        ends = g.edge_endpoints
        sinks = np.flatnonzero(bnd[ends[:, 0]] | bnd[ends[:, 1]])
        if src in set(sinks.tolist()):
            raise ContractError("root edge touches the boundary; ball too small for the medial transform")
        return res.output, src, sinks
    if transform == "gr":
        res = weighted_subdivision(g)
        return res.output, ball.root, sorted(ball.boundary)
    raise ContractError(f"unknown transform {transform!r}")


def ball_resistance(ball: FamilyBall, transform: str = "none") -> float:
    m, src, sinks = transformed_terminals(ball, transform)
    return unit_current_flow(m, src, sinks).resistance


@dataclass(frozen=True)
class GrowthFit:
    model: str          # bounded | logarithmic | linear
    params: tuple
    r2: float


@dataclass(frozen=True)
class ResistanceProfile:
    family: str
    transform: str
    embedding: str | None
    levels: tuple
    values: tuple
    seconds: tuple
    fit: GrowthFit
    verdict: str
    monotone: bool

    @property
    def increments(self) -> np.ndarray:
        return np.diff(np.asarray(self.values))

    def to_dict(self) -> dict:
        return {"family": self.family, "transform": self.transform, "embedding": self.embedding,
                "levels": list(self.levels), "values": list(self.values), "seconds": list(self.seconds),
                "fit": {"model": self.fit.model, "params": list(self.fit.params), "r2": self.fit.r2},
                "verdict": self.verdict, "verdict_is_heuristic": True, "monotone": self.monotone}

    @classmethod
    def from_dict(cls, d: dict) -> "ResistanceProfile":
        f = d["fit"]
        return cls(d["family"], d["transform"], d.get("embedding"), tuple(d["levels"]), tuple(d["values"]),
                   tuple(d.get("seconds", [0.0] * len(d["levels"]))),
                   GrowthFit(f["model"], tuple(f["params"]), f["r2"]), d["verdict"], d["monotone"])


def resistance_profile(family: str, levels: Iterable[int], transform: str = "none",
                       embedding: str = "A") -> ResistanceProfile:
    """Wired effective resistance from the root to the ball boundary for each level."""
    if transform not in TRANSFORMS:
        raise ContractError(f"unknown transform {transform!r}")
    levels = sorted({int(n) for n in levels})
    if not levels:
        raise ContractError("no levels requested")
    vals, secs = [], []
    for n in levels:
        t0 = time.perf_counter()
        vals.append(ball_resistance(gen(family, n, embedding), transform))
        secs.append(time.perf_counter() - t0)
    return make_profile(family, transform, embedding if family == "tree_with_leaves" else None,
                        levels, vals, secs)


def make_profile(family, transform, embedding, levels, vals, secs=None) -> ResistanceProfile:
    levels = tuple(int(n) for n in levels)
    vals = tuple(float(v) for v in vals)
    secs = tuple(float(s) for s in secs) if secs is not None else tuple(0.0 for _ in levels)
    mono = all(b >= a - 1e-9 * max(1.0, abs(a)) for a, b in zip(vals, vals[1:]))
    fit = fit_growth(levels, vals)
    return ResistanceProfile(family, transform, embedding, levels, vals, secs, fit,
                             profile_verdict(levels, vals, fit), mono)


def fit_growth(levels: Sequence[int], values: Sequence[float]) -> GrowthFit:
    """Classify growth from the per-level increments over the upper half of the levels.

    Models for the increment ``D_n``: ``c q^n`` (bounded), ``c / n``
    (logarithmic) and ``c`` (linear), fitted to ``log D_n`` and compared by BIC.
    """
    n = np.asarray(levels, dtype=float)
    R = np.asarray(values, dtype=float)
    if len(n) < 2:
        return GrowthFit("bounded", (float(R[-1]),), 1.0)
    inc = np.diff(R) / np.diff(n)
    mid = 0.5 * (n[1:] + n[:-1])
    keep = slice(max(0, len(inc) - max(3, (len(inc) + 1) // 2)), None)
    inc, mid = inc[keep], mid[keep]
    if np.any(inc <= 0):
        return GrowthFit("bounded", (float(R.max()),), 1.0)
    y = np.log(inc)
    m = len(y)
    tss = float(np.sum((y - y.mean()) ** 2))
    cands = []
    # linear: log D = a
    a = float(y.mean())
    cands.append(("linear", (math.exp(a),), float(np.sum((y - a) ** 2)), 1))
    # logarithmic: log D = a - log n
    a = float(np.mean(y + np.log(mid)))
    cands.append(("logarithmic", (math.exp(a),), float(np.sum((y - a + np.log(mid)) ** 2)), 1))
    if m >= 3:
        b, a = np.polyfit(mid, y, 1)
        if b < math.log(GEOMETRIC_MAX_RATIO):
            cands.append(("bounded", (math.exp(a), math.exp(b)), float(np.sum((y - a - b * mid) ** 2)), 2))

    def bic(c):
        return m * math.log(max(c[2] / m, 1e-30)) + c[3] * math.log(m)

    model, params, rss, _ = min(cands, key=bic)
    r2 = 1.0 - rss / tss if tss > 1e-30 else 1.0
    return GrowthFit(model, tuple(float(p) for p in params), float(r2))


def profile_verdict(levels: Sequence[int], values: Sequence[float], fit: GrowthFit) -> str:
    """Heuristic label: bounded-evidence, divergent-evidence or inconclusive."""
    levels = list(levels)
    if len(levels) < 2:
        return "inconclusive"
    half = levels[-1] / 2.0
    k = int(np.argmin([abs(l - half) for l in levels]))
    r_half, r_max = values[k], values[-1]
    if k != len(levels) - 1 and r_max - r_half < 0.05 * r_half:
        return "bounded-evidence"
    inc = np.diff(values) / np.diff(levels)
    upper = inc[len(inc) // 2:]
    if fit.model == "linear" and len(upper) and upper.min() > 0:
        return "divergent-evidence"
    return "inconclusive"


def increment_floor(profile: ResistanceProfile) -> float:
    """Fitted lower bound on per-level increments: the least-squares slope of ``R_n`` against ``n``,
    capped by the smallest observed increment."""
    n = np.asarray(profile.levels, dtype=float)
    R = np.asarray(profile.values)
    slope = float(np.polyfit(n, R, 1)[0])
    inc = np.diff(R) / np.diff(n)
    return min(slope, float(inc.min()))


# -- transfer checks ----------------------------------------------------------

@dataclass(frozen=True)
class TransferReport:
    family: str
    level: int
    r_plain: float
    r_roundabout: float
    r_medial: float
    restriction_energy: float
    roundabout_energy: float
    restriction_is_flow: bool
    completion_energy: float
    medial_energy: float
    completion_factor: float
    completion_factor_bound: float
    completion_is_flow: bool

    @property
    def ok(self) -> bool:
        return (self.restriction_energy <= self.roundabout_energy * (1 + 1e-12) and self.restriction_is_flow
                and self.r_plain <= self.r_roundabout * (1 + 1e-9)
                and self.completion_is_flow and self.completion_factor <= self.completion_factor_bound + 1e-9)

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["ok"] = self.ok
        return out


def transience_transfer_check(family: str, n: int, embedding: str = "A") -> TransferReport:
    """Finite-scale versions of the plain/roundabout/plane-line-graph comparisons.

    Restriction: the roundabout unit current restricted to the original edges
    is a flow of the ball with no more energy. Completion: a plane line graph
    flow becomes a flow of the full-cycle roundabout graph by routing each
    medial vertex's imbalance through its original edge; the energy grows by
    at most a factor 5 (each added value is a sum of two roundabout values,
    and each roundabout edge is counted at two nodes).
    """
    ball = gen(family, n, embedding)
    g = ball.map
    r_plain = ball_resistance(ball, "none")
    # restriction
    rmap, src, sinks = transformed_terminals(ball, "roundabout")
    rres = roundabout(g)
    uc = unit_current_flow(rmap, src, sinks)
    orig = np.flatnonzero(rres.edge_kind != ROUNDABOUT)
    vals = np.zeros(g.n_darts)
    first = g.edge_darts[rres.edge_source[orig], 0]
    vals[first] = uc.flow.values[2 * orig]
    vals[g.twin[first]] = -vals[first]
    restricted = EdgeFunction(g, vals, check=False)
    law = check_node_law(restricted, [ball.root, *ball.boundary])
    # completion from the plane line graph
    mmap, msrc, msinks = transformed_terminals(ball, "medial")
    muc = unit_current_flow(mmap, msrc, msinks)
    full = roundabout(g, full_cycles=True)
    comp, terminals = _complete_medial_flow(g, full, muc.flow, [msrc, *msinks])
    comp_law = check_node_law(comp, terminals)
    e_med = energy(muc.flow)
    e_comp = energy(comp)
    return TransferReport(family, n, r_plain, uc.resistance, muc.resistance, energy(restricted), energy(uc.flow),
                          law.holds, e_comp, e_med, e_comp / e_med, 5.0, comp_law.holds)


def _complete_medial_flow(g: PlanarMap, full, h: EdgeFunction, terminal_edges):
    """Lift a flow on the plane line graph to the full-cycle roundabout graph."""
    out = full.output
    vals = np.zeros(out.n_darts)
    # medial edge j (= dart d of g) and roundabout edge E + d both join edge(d) to edge(sigma d) / node d to sigma d
    E = g.n_edges
    D = g.n_darts
    rb = E + np.arange(D)
    vals[2 * rb] = h.values[2 * np.arange(D)]
    vals[2 * rb + 1] = -vals[2 * rb]
    partial = EdgeFunction(out, vals, check=False)
    net = divergence(partial)  # roundabout outflow at every node
    a, b = g.edge_darts[:, 0], g.edge_darts[:, 1]
    # original edge e: dart 2e runs node a -> node b; choose it so that node b balances
    vals[2 * np.arange(E)] = net[b]
    vals[2 * np.arange(E) + 1] = -net[b]
    terminals = [int(a[e]) for e in terminal_edges]
    return EdgeFunction(out, vals, check=False), terminals


# -- amenability probes ----------------------------------------------------------

@dataclass(frozen=True)
class CheegerResult:
    min_ratio: float
    argmin: int
    ratios: tuple
    sizes: tuple
    boundary_sizes: tuple


def vertex_boundary(pmap: PlanarMap, S: Iterable[int]) -> np.ndarray:
    """Vertices outside ``S`` adjacent to ``S``."""
    inside = np.zeros(pmap.n_vertices, dtype=bool)
    inside[list(int(v) for v in S)] = True
    heads = pmap.head[inside[pmap.origin]]
    out = np.zeros(pmap.n_vertices, dtype=bool)
    out[heads] = True
    out &= ~inside
    return np.flatnonzero(out)


def cheeger_probe(pmap: PlanarMap, sets: Sequence[Iterable[int]]) -> CheegerResult:
    """Smallest ``|boundary(S)| / |S|`` over the probed sets (an upper bound on the Cheeger constant)."""
    ratios, sizes, bsizes = [], [], []
    for S in sets:
        S = sorted({int(v) for v in S})
        if not S:
            raise ContractError("cheeger_probe needs nonempty sets")
        nb = len(vertex_boundary(pmap, S))
        ratios.append(nb / len(S))
        sizes.append(len(S))
        bsizes.append(nb)
    if not ratios:
        raise ContractError("no sets given")
    k = int(np.argmin(ratios))
    return CheegerResult(float(ratios[k]), k, tuple(ratios), tuple(sizes), tuple(bsizes))


def nested_balls(family: str, n: int, embedding: str = "A") -> tuple[PlanarMap, list]:
    """The level-``n`` ball and the vertex sets of the levels ``1..n-1`` inside it."""
    big = gen(family, n, embedding)
    sets = [nesting(gen(family, k, embedding), big) for k in range(1, n)]
    return big.map, sets


@dataclass(frozen=True)
class SublemmaVerdict:
    interior: int        # |Y|: vertices of X with every neighbour in X
    projected: int       # |X bar|
    holds: bool


def sublemma6_check(g: PlanarMap, X: Iterable[int], roundabout_map: PlanarMap | None = None) -> SublemmaVerdict:
    """Exact check that fewer than ``6 |X bar|`` vertices of ``X`` have all neighbours in ``X``.

    ``X`` is a set of roundabout vertices (darts of ``g``); ``X bar`` is the
    set of vertices of ``g`` whose roundabouts meet ``X``.
    """
    rm = roundabout(g).output if roundabout_map is None else roundabout_map
    Xs = np.array(sorted({int(x) for x in X}), dtype=np.int64)
    if len(Xs) == 0:
        raise ContractError("X must be nonempty")
    if Xs.min() < 0 or Xs.max() >= rm.n_vertices:
        raise ContractError("X contains a vertex outside the roundabout graph")
    inside = np.zeros(rm.n_vertices, dtype=bool)
    inside[Xs] = True
    leaks = np.zeros(rm.n_vertices, dtype=bool)
    leaks[rm.origin[~inside[rm.head]]] = True
    Y = int(np.sum(inside & ~leaks))
    xbar = len(np.unique(g.origin[Xs]))
    holds = Y < 6 * xbar
    if not holds:
        raise InvariantViolation(f"|Y| = {Y} >= 6 |X bar| = {6 * xbar}")
    return SublemmaVerdict(Y, xbar, holds)


@dataclass(frozen=True)
class EpsilonVerdict:
    boundary: int
    partial: int         # |X bar \ X bar bar|
    eps: float
    holds: bool


def sublemma_epsilon_check(g: PlanarMap, X: Iterable[int]) -> EpsilonVerdict:
    """``|boundary X| >= |X bar \\ X bar bar|``, the counting step behind the epsilon bound."""
    rm = roundabout(g).output
    Xs = np.array(sorted({int(x) for x in X}), dtype=np.int64)
    if len(Xs) == 0:
        raise ContractError("X must be nonempty")
    nb = len(vertex_boundary(rm, Xs))
    inside = np.zeros(g.n_darts, dtype=bool)
    inside[Xs] = True
    verts = np.unique(g.origin[Xs])
    full = np.zeros(g.n_vertices, dtype=bool)
    full[verts] = True
    np.logical_and.at(full, g.origin, inside)
    partial = int(len(verts) - full[verts].sum())
    return EpsilonVerdict(nb, partial, partial / len(verts), nb >= partial)


# -- separation probe ------------------------------------------------------------

@dataclass(frozen=True)
class SideReport:
    vertices: int
    anchor: int
    finite_side: bool
    radii: tuple
    values: tuple
    growth: str
    bounded: bool


@dataclass(frozen=True)
class SeparationReport:
    bond: tuple
    sides: tuple

    def to_dict(self) -> dict:
        return {"bond": list(self.bond), "sides": [s.__dict__ for s in self.sides]}


def fin_sep_probe(pmap: PlanarMap, bond: Iterable[int], boundary: Iterable[int] = ()) -> SeparationReport:
    """Split at a bond and profile each side by wired resistances to distance spheres.

    Spheres are taken around the bond endpoint farthest from ``boundary`` on each side, up to the last
    radius that stays clear of ``boundary``. A side containing no vertex of
    ``boundary`` cannot reach beyond the ball and is flagged as a finite side.
    """
    bond = sorted({int(e) for e in bond})
    verdict = find_bond(pmap, bond)
    if not verdict.is_bond:
        raise ContractError(f"edge set is not a bond: {verdict.reason}")
    bnd = {int(v) for v in boundary}
    sides = []
    for side in (verdict.side1, verdict.side2):
        sub, ids = induced_submap(pmap, side)
        ends = pmap.edge_endpoints[bond]
        local = {int(v): int(np.flatnonzero(ids == v)[0]) for v in ends.ravel() if int(v) in side}
        inner = [int(np.flatnonzero(ids == v)[0]) for v in bnd & set(side)]
        best = None
        for v in sorted(local):
            dist = _bfs_dist(sub, local[v])
            clear = int(dist[inner].min()) - 1 if inner else int(dist.max())
            if best is None or clear > best[0]:
                best = (clear, v, dist)
        r_max, anchor_g, dist = best
        anchor = local[anchor_g]
        radii, values = [], []
        for r in range(1, r_max + 1):
            radii.append(r)
            values.append(unit_current_flow(sub, anchor, np.flatnonzero(dist == r)).resistance)
        finite = not inner
        growth = fit_growth(radii, values).model if values else "bounded"
        sides.append(SideReport(len(side), anchor_g, finite, tuple(radii), tuple(values), growth,
                                finite or growth == "bounded"))
    return SeparationReport(tuple(bond), tuple(sides))


def _bfs_dist(pmap: PlanarMap, s: int) -> np.ndarray:
    n = pmap.n_vertices
    ends = pmap.edge_endpoints
    g = coo_matrix((np.ones(len(ends)), (ends[:, 0], ends[:, 1])), shape=(n, n)).tocsr()
    g = g + g.T
    dist = np.full(n, -1, dtype=np.int64)
    order, pred = breadth_first_order(g, s, directed=False, return_predecessors=True)
    dist[s] = 0
    for v in order[1:]:
        dist[v] = dist[pred[v]] + 1
    return dist


def induced_submap(pmap: PlanarMap, vertices: Iterable[int]) -> tuple[PlanarMap, np.ndarray]:
    """Submap on ``vertices`` with the induced rotations; returns it and the kept vertex ids."""
    keep_v = np.zeros(pmap.n_vertices, dtype=bool)
    keep_v[list(int(v) for v in vertices)] = True
    ids = np.flatnonzero(keep_v)
    new_v = np.full(pmap.n_vertices, -1, dtype=np.int64)
    new_v[ids] = np.arange(len(ids))
    keep_e = keep_v[pmap.edge_endpoints[:, 0]] & keep_v[pmap.edge_endpoints[:, 1]]
    eids = np.flatnonzero(keep_e)
    new_e = np.full(pmap.n_edges, -1, dtype=np.int64)
    new_e[eids] = np.arange(len(eids))
    rotations = []
    for v in ids:
        r = []
        for d in pmap.rotation(int(v)):
            e = int(pmap.dart_edge[d])
            if keep_e[e]:
                r.append(2 * int(new_e[e]) + (0 if d == pmap.edge_darts[e][0] else 1))
        rotations.append(r)
    sub = PlanarMap(rotations, [(2 * i, 2 * i + 1) for i in range(len(eids))])
    return sub, ids
