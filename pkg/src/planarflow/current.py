"""Kirchhoff laws, harmonic potentials, unit current flows and related checks."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import solver
from .errors import ContractError, InvariantViolation, StructuralError
from .fields import EdgeFunction, Potential
from .planarmap import DualCorrespondence, PlanarMap, dual_transfer
from .transform import ROUNDABOUT, TransformResult, _rotation_positions, weight_profile_counts

TOL = 1e-9


# -- basic calculus ----------------------------------------------------------

def divergence(f: EdgeFunction, v: int | None = None):
    """Sum of ``f`` over the darts leaving ``v`` (all vertices if ``v`` is None)."""
    div = np.bincount(f.map.origin, weights=f.values, minlength=f.map.n_vertices)
    return div if v is None else float(div[v])


def grad(u: Potential) -> EdgeFunction:
    """``(grad u)(d) = u(origin d) - u(head d)``."""
    m = u.map
    return EdgeFunction(m, u.values[m.origin] - u.values[m.head], check=False)


def energy(f: EdgeFunction) -> float:
    return float(np.sum(f.on_edges() ** 2))


def energy_potential(u: Potential) -> float:
    return energy(grad(u))


def _scale(f: EdgeFunction) -> float:
    return max(1.0, float(np.max(np.abs(f.values)))) if f.map.n_darts else 1.0


@dataclass(frozen=True)
class LawVerdict:
    """Outcome of a Kirchhoff law check.

    ``witness`` is the worst vertex (node law) or face (cycle law); ``None``
    when the map has nothing to check.
    """

    holds: bool
    defect: float
    witness: int | None

    def __bool__(self) -> bool:
        return self.holds


def check_node_law(f: EdgeFunction, exceptions: Iterable[int] = (), tol: float = TOL) -> LawVerdict:
    div = np.abs(divergence(f))
    mask = np.ones(len(div), dtype=bool)
    mask[list(int(v) for v in exceptions)] = False
    if not mask.any():
        return LawVerdict(True, 0.0, None)
    idx = np.flatnonzero(mask)
    k = int(idx[np.argmax(div[idx])])
    return LawVerdict(bool(div[k] <= tol * _scale(f)), float(div[k]), k)


def face_sums(f: EdgeFunction) -> np.ndarray:
    """Sum of ``f`` along each face boundary, in face traversal direction."""
    return np.bincount(f.map.face_of, weights=f.values, minlength=f.map.n_faces)


def check_cycle_law(f: EdgeFunction, tol: float = TOL) -> LawVerdict:
    if f.map.n_faces == 0:
        return LawVerdict(True, 0.0, None)
    s = np.abs(face_sums(f))
    k = int(np.argmax(s))
    return LawVerdict(bool(s[k] <= tol * _scale(f)), float(s[k]), k)


def harmonic_defect(u: Potential) -> np.ndarray:
    """``deg(x) u(x) - sum of u over neighbours``; zero exactly where ``u`` is harmonic."""
    return divergence(grad(u))


# -- solvers -----------------------------------------------------------------

def harmonic_solve(pmap: PlanarMap, prescribed, *, method: str = "direct") -> Potential:
    """Harmonic extension of ``prescribed`` (a mapping vertex -> value or a Potential).

    With a :class:`Potential`, the values on its ``boundary`` are used.
    """
    if isinstance(prescribed, Potential):
        items = {v: prescribed.values[v] for v in prescribed.boundary}
    else:
        items = {int(v): float(x) for v, x in dict(prescribed).items()}
    if not items:
        raise ContractError("harmonic_solve needs at least one prescribed vertex")
    for v in items:
        if not 0 <= v < pmap.n_vertices:
            raise StructuralError(f"unknown vertex {v}")
    idx = np.array(sorted(items), dtype=np.int64)
    vals = np.array([items[v] for v in idx])
    u = solver.dirichlet(pmap, idx, vals, method=method)
    return Potential(pmap, u, frozenset(items))


def _sink_set(pmap: PlanarMap, sink) -> list[int]:
    if isinstance(sink, (int, np.integer)):
        sinks = [int(sink)]
    else:
        sinks = sorted({int(s) for s in sink})
    if not sinks:
        raise ContractError("sink set is empty")
    for s in sinks:
        if not 0 <= s < pmap.n_vertices:
            raise StructuralError(f"unknown vertex {s}")
    return sinks


@dataclass(frozen=True)
class UnitCurrent:
    """Unit current flow ``i`` from ``o`` with its voltage normalisation.

    ``potential`` is 1 at ``o`` and 0 on the sink; ``flow = grad(potential) / R``.
    """

    flow: EdgeFunction
    potential: Potential
    resistance: float
    source: int
    sinks: tuple

    def __iter__(self):
        return iter((self.flow, self.potential))

    @property
    def voltage(self) -> np.ndarray:
        """Potential scaled so that ``flow = grad(voltage)``; equals ``R`` at ``o``."""
        return self.potential.values * self.resistance


def unit_current_flow(pmap: PlanarMap, o: int, sink, *, method: str = "direct") -> UnitCurrent:
    """Unit current flow from ``o`` to a vertex or to a wired vertex set.

    Components not containing ``o`` carry zero flow and zero potential.
    """
    sinks = _sink_set(pmap, sink)
    if not 0 <= o < pmap.n_vertices:
        raise StructuralError(f"unknown vertex {o}")
    if o in sinks:
        raise ContractError("source and sink coincide")
    comp = pmap.component_of
    if not np.any(comp[sinks] == comp[o]):
        raise ContractError(f"no sink vertex is connected to {o}")
    fixed = [o] + sinks
    vals = [1.0] + [0.0] * len(sinks)
    # pin every other component at zero so the system stays nonsingular
    others = np.flatnonzero(comp != comp[o])
    reps = {}
    for v in others:
        reps.setdefault(int(comp[v]), int(v))
    extra = [v for v in reps.values() if v not in sinks]
    u = solver.dirichlet(pmap, np.array(fixed + extra), np.array(vals + [0.0] * len(extra)), method=method)
    u[comp != comp[o]] = 0.0
    pot = Potential(pmap, u, frozenset(fixed))
    g = grad(pot)
    intensity = divergence(g, o)
    if not intensity > 0:
        raise InvariantViolation("nonpositive intensity from the solver")
    flow = g * (1.0 / intensity)
    return UnitCurrent(flow, pot, 1.0 / intensity, int(o), tuple(sinks))


def effective_resistance(pmap: PlanarMap, o: int, sink, *, method: str = "direct") -> float:
    return unit_current_flow(pmap, o, sink, method=method).resistance


# -- dual classification -----------------------------------------------------

@dataclass(frozen=True)
class CycleLawHolds:
    """``f*`` is a gradient: ``f* = grad(rho)`` on the dual map."""

    rho: Potential
    anchor: int


@dataclass(frozen=True)
class BondFound:
    """A dual cycle with nonzero circulation, read back as a bond of the primal map.

    ``net`` is the flow of ``f`` from ``side1`` into ``side2`` across ``bond``.
    """

    bond: frozenset
    side1: frozenset
    side2: frozenset
    net: float
    dual_cycle: frozenset


def classify_dual(pmap: PlanarMap, corr: DualCorrespondence, f: EdgeFunction, tol: float = TOL):
    """Either integrate ``f*`` to a potential on the dual or return a bond witness."""
    if corr.primal is not pmap and corr.primal != pmap:
        raise StructuralError("correspondence does not belong to this map")
    fs = dual_transfer(f, corr)
    dmap = corr.dual
    # faces of the dual are the primal rotations, so f* has zero face sums iff f has zero divergence
    div = divergence(f)
    scale = _scale(f)
    bad = np.abs(div) > tol * scale
    if not bad.any():
        # dual vertex ids are primal face ids
        anchor = int(pmap.outer_face) if pmap.outer_face is not None else 0
        rho = _integrate(dmap, fs, anchor)
        return CycleLawHolds(Potential(dmap, rho, frozenset([anchor])), anchor)
    v = int(np.argmax(np.abs(div)))
    return _bond_at(pmap, f, v)


def _integrate(pmap: PlanarMap, f: EdgeFunction, anchor: int) -> np.ndarray:
    """Potential ``rho`` with ``rho(origin) - rho(head) = f`` along a BFS tree from ``anchor``."""
    rho = np.full(pmap.n_vertices, np.nan)
    rho[anchor] = 0.0
    q = deque([anchor])
    while q:
        x = q.popleft()
        for d in pmap.rotation(x):
            y = int(pmap.head[d])
            if np.isnan(rho[y]):
                rho[y] = rho[x] - f.values[d]
                q.append(y)
    return np.nan_to_num(rho, nan=0.0)


def _bond_at(pmap: PlanarMap, f: EdgeFunction, v: int) -> BondFound:
    n = pmap.n_vertices
    ends = pmap.edge_endpoints
    keep = (ends[:, 0] != v) & (ends[:, 1] != v)
    g = coo_matrix((np.ones(int(keep.sum())), (ends[keep, 0], ends[keep, 1])), shape=(n, n))
    _, lab = connected_components(g, directed=False)
    net: dict[int, float] = {}
    edges: dict[int, list[int]] = {}
    for d in pmap.rotation(v):
        w = int(pmap.head[d])
        if w == v:
            continue
        k = int(lab[w])
        net[k] = net.get(k, 0.0) + float(f.values[d])
        edges.setdefault(k, []).append(int(pmap.dart_edge[d]))
    k = max(sorted(net), key=lambda c: abs(net[c]))
    inside = frozenset(int(x) for x in np.flatnonzero(lab == k))
    comp_v = pmap.component_of[v]
    rest = frozenset(int(x) for x in np.flatnonzero(pmap.component_of == comp_v) if x not in inside)
    bond = frozenset(edges[k])
    return BondFound(bond, rest, inside, net[k], bond)


# -- monotone voltage paths --------------------------------------------------

@dataclass(frozen=True)
class MonotonePath:
    vertices: tuple
    darts: tuple


def monotone_voltage_path(pmap: PlanarMap, u: Potential, o: int, x: int, tol: float = 1e-12) -> MonotonePath:
    """``o``-``x`` path along which ``u`` never increases.

    Breadth-first search over darts that do not climb (up to ``tol`` times the
    potential range), scanning each rotation by increasing dart id.
    """
    vals = u.values
    slack = tol * max(1.0, float(np.ptp(vals)) if len(vals) else 1.0)
    parent = np.full(pmap.n_vertices, -2, dtype=np.int64)
    parent[o] = -1
    q = deque([int(o)])
    while q and parent[x] == -2:
        a = q.popleft()
        for d in sorted(pmap.rotation(a)):
            b = int(pmap.head[d])
            if parent[b] == -2 and vals[b] <= vals[a] + slack:
                parent[b] = d
                q.append(b)
    if parent[x] == -2:
        raise InvariantViolation(f"no monotone path from {o} to {x}")
    darts = []
    y = int(x)
    while parent[y] >= 0:
        d = int(parent[y])
        darts.append(d)
        y = int(pmap.origin[d])
    darts.reverse()
    verts = [int(o)] + [int(pmap.head[d]) for d in darts]
    return MonotonePath(tuple(verts), tuple(darts))


# -- roundabout extension ----------------------------------------------------

def extend_flow_to_roundabout(pmap: PlanarMap, rres: TransformResult, f: EdgeFunction, source_node: int,
                              sink_nodes: Iterable[int] = (), tol: float = TOL) -> EdgeFunction:
    """Extend a flow from ``v`` on ``G`` to a flow from ``source_node`` on the roundabout graph.

    ``source_node`` is a roundabout vertex, i.e. a dart of ``G`` leaving ``v``.
    On a finite map a nonzero flow also needs somewhere to go: each vertex
    listed through ``sink_nodes`` (again roundabout vertices) may absorb flow,
    and its divergence is placed on that node. On each roundabout the added
    circulation is the least-energy one meeting the node law: cumulative
    demands around the cycle, shifted to mean zero.
    """
    if rres.op != "roundabout" or rres.output.n_vertices != pmap.n_darts:
        raise StructuralError("transform result is not the roundabout of this map")
    terminals = [int(source_node)] + [int(z) for z in sink_nodes]
    for z in terminals:
        if not 0 <= z < pmap.n_darts:
            raise StructuralError(f"unknown roundabout vertex {z}")
    tverts = [int(pmap.origin[z]) for z in terminals]
    if len(set(tverts)) != len(tverts):
        raise ContractError("two terminal nodes lie on the same roundabout")
    law = check_node_law(f, tverts, tol)
    if not law.holds:
        raise ContractError(f"input is not a flow from vertex {tverts[0]}: "
                            f"defect {law.defect:.3g} at vertex {law.witness}")
    div = divergence(f)
    # demand at node d: flow arriving along its original edge, plus the divergence at a terminal node
    demand = -f.values.copy()
    for z, w in zip(terminals, tverts):
        demand[z] += div[w]
    out_map = rres.output
    vals = np.zeros(out_map.n_darts)
    # original edge e sits on output darts 2e, 2e+1 in the same orientation
    orig = np.flatnonzero(rres.edge_kind != ROUNDABOUT)
    vals[2 * orig] = f.values[pmap.edge_darts[rres.edge_source[orig], 0]]
    vals[2 * orig + 1] = -vals[2 * orig]
    g = roundabout_potentials(pmap, demand)
    rb = np.flatnonzero(rres.edge_kind == ROUNDABOUT)
    tail = out_map.origin[2 * rb]  # node d; the edge goes d -> sigma(d)
    deg = pmap.degree[pmap.origin[tail]]
    full = out_map.n_edges == pmap.n_edges + pmap.n_darts
    val = g[tail].copy()
    if not full:
        two = deg == 2
        val[two] = g[tail[two]] - g[pmap.sigma[tail[two]]]
    vals[2 * rb] = val
    vals[2 * rb + 1] = -val
    return EdgeFunction(out_map, vals, check=False)


def roundabout_potentials(pmap: PlanarMap, demand: np.ndarray) -> np.ndarray:
    """Mean-zero cumulative sums of ``demand`` around every rotation.

    Entry ``d`` is the flow on the roundabout step from dart ``d`` to ``sigma(d)``.
    """
    D = pmap.n_darts
    out = np.zeros(D)
    if D == 0:
        return out
    pos = _rotation_positions(pmap)
    v = pmap.origin
    order = np.lexsort((pos, v))
    s = demand[order]
    cs = np.cumsum(s)
    vs = v[order]
    starts = np.flatnonzero(np.r_[True, vs[1:] != vs[:-1]])
    base = np.repeat(np.r_[0.0, cs[starts[1:] - 1]], np.diff(np.r_[starts, D]))
    local = cs - base
    counts = np.diff(np.r_[starts, D])
    means = np.add.reduceat(local, starts) / counts
    out[order] = local - np.repeat(means, counts)
    return out


@dataclass(frozen=True)
class ExtensionReport:
    energy: float
    energy_bound: float
    worst_ratio: float
    worst_vertex: int | None
    restriction_exact: bool
    node_law: LawVerdict

    @property
    def ok(self) -> bool:
        return (self.energy <= self.energy_bound + TOL and self.worst_ratio <= 1.0 + TOL
                and self.restriction_exact and self.node_law.holds)


def extension_report(pmap: PlanarMap, rres: TransformResult, f: EdgeFunction, ext: EdgeFunction,
                     source_node: int, sink_nodes: Iterable[int] = (), slack: float = TOL) -> ExtensionReport:
    """Check the per-roundabout and global bounds of an extension."""
    abs_sum = np.bincount(pmap.origin, weights=np.abs(f.values), minlength=pmap.n_vertices)
    bound = float(np.sum(pmap.degree * abs_sum ** 2))
    rb = np.flatnonzero(rres.edge_kind == ROUNDABOUT)
    w = rres.edge_source[rb]
    g = np.abs(ext.values[2 * rb])
    excess = g - abs_sum[w]
    worst_ratio, worst_vertex = 0.0, None
    if len(rb):
        k = int(np.argmax(excess))
        worst_vertex = int(w[k])
        worst_ratio = float(g[k] / abs_sum[w[k]]) if abs_sum[w[k]] > 0 else (0.0 if g[k] <= slack else np.inf)
        if excess[k] <= slack:
            worst_ratio = min(worst_ratio, 1.0)
    orig = np.flatnonzero(rres.edge_kind != ROUNDABOUT)
    restricted = ext.values[2 * orig]
    exact = bool(np.array_equal(restricted, f.values[pmap.edge_darts[rres.edge_source[orig], 0]]))
    law = check_node_law(ext, [int(source_node)] + [int(z) for z in sink_nodes])
    return ExtensionReport(energy(ext), bound, worst_ratio, worst_vertex, exact, law)


# -- weighted energies -------------------------------------------------------

@dataclass(frozen=True)
class WeightProfile:
    """Per-edge positive weights ``r``; ``eps`` records the damping exponent if any."""

    r: np.ndarray
    eps: float | None = None

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        if np.any(r <= 0):
            raise ContractError("weights must be positive")
        object.__setattr__(self, "r", r)

    @classmethod
    def degree_squares(cls, pmap: PlanarMap) -> "WeightProfile":
        return cls(weight_profile_counts(pmap).astype(float))


def weighted_energy(f: EdgeFunction, profile: WeightProfile | None = None) -> float:
    """``sum_e f(e)^2 r(e)``; the default profile is ``deg(v)^2 + deg(w)^2``."""
    if profile is None:
        profile = WeightProfile.degree_squares(f.map)
    if profile.r.shape != (f.map.n_edges,):
        raise StructuralError("weight profile does not match the map")
    return float(np.sum(f.on_edges() ** 2 * profile.r))


@dataclass(frozen=True)
class DampedEnergy:
    value: float
    cauchy_schwarz: float
    per_vertex: np.ndarray


def damped_energy(f: EdgeFunction, pmap: PlanarMap | None = None, eps: float = 0.0) -> DampedEnergy:
    """``sum_v deg(v)^(1-eps) (sum_{e at v} |f(e)|)^2`` and the comparison ``sum_v deg(v) sum_{e at v} f(e)^2``."""
    m = f.map if pmap is None else pmap
    if f.map is not m and f.map != m:
        raise StructuralError("edge function does not live on this map")
    abs_sum = np.bincount(m.origin, weights=np.abs(f.values), minlength=m.n_vertices)
    sq_sum = np.bincount(m.origin, weights=f.values ** 2, minlength=m.n_vertices)
    deg = m.degree.astype(float)
    per = np.where(deg > 0, deg ** (1.0 - eps), 0.0) * abs_sum ** 2
    return DampedEnergy(float(per.sum()), float(np.sum(deg * sq_sum)), per)
