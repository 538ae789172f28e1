"""Reference computations that share no code path with the package.

Each oracle works from plain edge lists or rotation lists using exact or
brute-force arithmetic, so agreement with the package is a genuine check.
"""

from __future__ import annotations

import itertools
from fractions import Fraction


def edge_list(pmap):
    return [tuple(int(x) for x in pmap.edge_endpoints[e]) for e in range(pmap.n_edges)]


def _count_spanning_trees(n, edges):
    """Enumerate ``(n-1)``-subsets of edges and count the acyclic ones."""
    if n == 1:
        return 1
    edges = [(u, w) for u, w in edges if u != w]
    count = 0
    for sub in itertools.combinations(range(len(edges)), n - 1):
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        ok = True
        for i in sub:
            a, b = find(edges[i][0]), find(edges[i][1])
            if a == b:
                ok = False
                break
            parent[a] = b
        count += ok
    return count


def _identify(n, edges, group):
    """Merge the vertices of ``group`` into one and relabel densely."""
    group = set(group)
    rep = min(group)
    lab = {}
    for v in range(n):
        key = rep if v in group else v
        lab.setdefault(key, len(lab))
    f = {v: lab[rep if v in group else v] for v in range(n)}
    return len(lab), [(f[u], f[w]) for u, w in edges]


def resistance_by_trees(n, edges, a, sinks):
    """Wired effective resistance as a ratio of spanning tree counts.

    With the sinks merged into one vertex ``s``, ``R(a, s) = T(G / {a, s}) / T(G)``.
    """
    sinks = [sinks] if isinstance(sinks, int) else list(sinks)
    n1, e1 = _identify(n, edges, sinks)
    n2, e2 = _identify(n, edges, sinks + [a])
    return Fraction(_count_spanning_trees(n2, e2), _count_spanning_trees(n1, e1))


def resistance_exact(n, edges, a, sinks):
    """Exact Schur-complement elimination over the rationals."""
    sinks = {sinks} if isinstance(sinks, int) else set(sinks)
    L = [[Fraction(0)] * n for _ in range(n)]
    for u, w in edges:
        if u == w:
            continue
        L[u][u] += 1
        L[w][w] += 1
        L[u][w] -= 1
        L[w][u] -= 1
    free = [v for v in range(n) if v != a and v not in sinks]
    # solve L_ff x_f = -L_fa * 1 for the potential with u(a) = 1, u(sinks) = 0
    m = len(free)
    A = [[L[i][j] for j in free] + [-L[i][a]] for i in free]
    for c in range(m):
        p = next(r for r in range(c, m) if A[r][c] != 0)
        A[c], A[p] = A[p], A[c]
        for r in range(m):
            if r != c and A[r][c] != 0:
                k = A[r][c] / A[c][c]
                A[r] = [x - k * y for x, y in zip(A[r], A[c])]
    u = {a: Fraction(1)}
    for s in sinks:
        u[s] = Fraction(0)
    for i, v in enumerate(free):
        u[v] = A[i][m] / A[i][i]
    current = sum(u[a] - u[w] for x, w in edges if x == a) + sum(u[a] - u[x] for x, w in edges if w == a)
    return 1 / current


def spherical_tree_resistance(children_per_level):
    """Level-merge series: all edges between consecutive levels act in parallel."""
    total = Fraction(0)
    width = 1
    for c in children_per_level:
        width *= c
        total += Fraction(1, width)
    return total


def all_bonds(n, edges):
    """Every bond of a connected graph as a frozenset of edge ids (brute force)."""
    bonds = set()
    for mask in range(2 ** (n - 1)):
        S = {0} | {v for v in range(1, n) if mask >> (v - 1) & 1}
        if len(S) == n:
            continue
        if _connected_on(S, edges) and _connected_on(set(range(n)) - S, edges):
            bonds.add(frozenset(i for i, (u, w) in enumerate(edges) if (u in S) != (w in S)))
    return bonds


def _connected_on(S, edges):
    S = set(S)
    start = next(iter(S))
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for u, w in edges:
            for x, y in ((u, w), (w, u)):
                if x == v and y in S and y not in seen:
                    seen.add(y)
                    stack.append(y)
    return seen == S


def monotone_path_exists(n, edges, volt, o, x, tol=1e-12):
    """Exhaustive search for a path from ``o`` to ``x`` along which voltage never climbs."""
    adj = {v: [] for v in range(n)}
    for u, w in edges:
        adj[u].append(w)
        adj[w].append(u)
    seen = {o}
    stack = [o]
    while stack:
        v = stack.pop()
        if v == x:
            return True
        for w in adj[v]:
            if w not in seen and volt[w] <= volt[v] + tol:
                seen.add(w)
                stack.append(w)
    return False


def rotation_lists(pmap):
    """Counterclockwise neighbour darts as plain Python lists."""
    return [list(int(d) for d in pmap.rotation(v)) for v in range(pmap.n_vertices)]


def faces_by_walking(pmap):
    """Faces traced with an explicit walk: from dart d go to twin, then the next dart in its rotation."""
    rot = rotation_lists(pmap)
    where = {d: (v, i) for v, r in enumerate(rot) for i, d in enumerate(r)}
    twin = {}
    for e in range(pmap.n_edges):
        a, b = (int(x) for x in pmap.edge_darts[e])
        twin[a], twin[b] = b, a
    seen, faces = set(), []
    for d0 in sorted(where):
        if d0 in seen:
            continue
        face, d = [], d0
        while d not in seen:
            seen.add(d)
            face.append(d)
            v, i = where[twin[d]]
            d = rot[v][(i + 1) % len(rot[v])]
        faces.append(face)
    return faces


def canonical_code(pmap):
    """Rooted-map canonical form minimised over all roots (orientation preserving)."""
    rot = rotation_lists(pmap)
    where = {d: (v, i) for v, r in enumerate(rot) for i, d in enumerate(r)}
    twin = {}
    for e in range(pmap.n_edges):
        a, b = (int(x) for x in pmap.edge_darts[e])
        twin[a], twin[b] = b, a

    def nxt(d):
        v, i = where[d]
        return rot[v][(i + 1) % len(rot[v])]

    best = None
    for root in sorted(where):
        label = {root: 0}
        order = [root]
        k = 0
        code = []
        while k < len(order):
            d = order[k]
            for img in (nxt(d), twin[d]):
                if img not in label:
                    label[img] = len(order)
                    order.append(img)
                code.append(label[img])
            k += 1
        code = tuple(code) + (len(rot),)
        if best is None or code < best:
            best = code
    return best


def least_energy_cycle_flow(demands):
    """Circulation on a cycle ``0 -> 1 -> ... -> 0`` meeting ``demands`` with least energy.

    Returns the flow on each step ``j -> j+1``; solved by brute linear algebra.
    """
    import numpy as np

    k = len(demands)
    # node law at j: g[j] - g[j-1] = demands[j]
    A = np.zeros((k, k))
    for j in range(k):
        A[j, j] += 1
        A[j, (j - 1) % k] -= 1
    # minimise |g|^2 subject to A g = b: g = A^+ b
    return np.linalg.pinv(A) @ np.asarray(demands, dtype=float)


def roundabout_neighbour_sets(pmap):
    """Neighbour sets of the roundabout graph built directly from rotations."""
    rot = rotation_lists(pmap)
    nb = {}
    twin = {}
    for e in range(pmap.n_edges):
        a, b = (int(x) for x in pmap.edge_darts[e])
        twin[a], twin[b] = b, a
    for r in rot:
        for i, d in enumerate(r):
            s = {twin[d]}
            if len(r) >= 2:
                s.add(r[(i + 1) % len(r)])
                s.add(r[(i - 1) % len(r)])
            s.discard(d)
            nb[d] = s
    return nb


def minor_level_increment(k, eps):
    """Damped-energy increment of level ``k`` (interior) of the halving tree flow on the grid minor.

    A level-``k`` branch set is a lattice path of ``2^k`` points, so its
    contracted degree is ``4 * 2^k - 2 (2^k - 1) = 2^(k+1) + 2``; the flow
    through it is ``2^-k`` in and ``2 * 2^-(k+1)`` out.
    """
    deg = 2 ** (k + 1) + 2
    through = 2.0 ** (1 - k)
    return 2 ** k * deg ** (1.0 - eps) * through ** 2
