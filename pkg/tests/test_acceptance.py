"""Acceptance suite: one test per criterion, each timed against its budget.

Every test records a PASS/FAIL line; the lines are printed in the terminal
summary (see ``conftest.py``) and also to stdout as each criterion finishes.
"""

import time
from contextlib import contextmanager

import numpy as np
import pytest

import oracles as O
from conftest import SEED, corpus, random_maps, random_triangulations
from planarflow import builders as B
from planarflow.current import (BondFound, CycleLawHolds, check_node_law, classify_dual,
                                effective_resistance, energy, extend_flow_to_roundabout, extension_report,
                                grad, monotone_voltage_path, unit_current_flow)
from planarflow.fields import EdgeFunction
from planarflow.lab import (grid_minor_audit, increment_floor, resistance_profile, sublemma6_check)
from planarflow.planarmap import dual, dual_transfer, map_isomorphic
from planarflow.tiling import flow_below, flow_in_rectangle, meridian_net_flow, square_tiling, verify_tiling
from planarflow.transform import ROUNDABOUT, medial, roundabout

RESULTS = []

# frozen from the first run (levels 2..10, roundabout transform)
FROZEN_A = (1.142857142857, 1.397058823529, 1.523648648649, 1.586850649351, 1.618431528662,
            1.634217271293, 1.642109007064, 1.646054595732, 1.648027320835)
FROZEN_B = (1.397058823529, 1.902173913043, 2.279545454545, 2.5935, 2.875789711191,
            3.142226239669, 3.400705452636, 3.655176579719, 3.907617804652)


@contextmanager
def criterion(number, title, budget):
    t0 = time.perf_counter()
    detail = {}
    ok = False
    try:
        yield detail
        ok = True
    finally:
        dt = time.perf_counter() - t0
        within = dt < budget
        status = "PASS" if ok and within else "FAIL"
        extra = " ".join(f"{k}={v}" for k, v in detail.items())
        line = f"criterion {number:>2} {status} {title} [{dt:.2f}s / {budget:g}s] {extra}".rstrip()
        RESULTS.append(line)
        print(line)
    assert within, f"criterion {number} took {dt:.1f}s (budget {budget}s)"


def circulation(g, face, weight=1.0):
    vals = np.zeros(g.n_darts)
    for d in g.faces[face].boundary:
        vals[d] += weight
        vals[g.twin[d]] -= weight
    return EdgeFunction(g, vals)


def test_criterion_01_combinatorial_identities():
    with criterion(1, "combinatorial identities", 10) as info:
        maps = [B.k4(), B.cube()] + [B.cycle(n) for n in range(3, 11)] + random_triangulations(50, SEED)
        for g in maps:
            assert g.n_vertices - g.n_edges + g.n_faces == 2
            d, _ = dual(g)
            dd, _ = dual(d)
            assert np.array_equal(dd.sigma, g.twin[g.sigma[g.twin]])
            assert map_isomorphic(dd, g)
            E = g.n_edges
            full = roundabout(g, full_cycles=True).output
            assert (full.n_vertices, full.n_edges) == (2 * E, 3 * E)
            assert set(full.degree.tolist()) == {3}
            if g.degree.min() >= 3:
                r = roundabout(g).output
                assert (r.n_vertices, r.n_edges) == (2 * E, 3 * E)
                assert set(r.degree.tolist()) == {3}
            m = medial(g).output
            assert m.n_vertices == E and set(m.degree.tolist()) == {4}
        info["maps"] = len(maps)


def test_criterion_02_medial_of_dual():
    with criterion(2, "medial(G) = medial(G*)", 10) as info:
        maps = corpus()
        for name, g in maps:
            assert map_isomorphic(medial(g).output, medial(dual(g)[0]).output), name
        info["maps"] = len(maps)


def test_criterion_03_resistance_ground_truth():
    with criterion(3, "resistance ground truth", 30) as info:
        for n in range(1, 9):
            assert effective_resistance(B.path(n), 0, n) == pytest.approx(n, abs=1e-9)
        assert effective_resistance(B.cycle(4), 0, 2) == pytest.approx(1.0, abs=1e-9)
        k4 = B.k4()
        oracle = O.resistance_by_trees(4, O.edge_list(k4), 0, 1)
        assert oracle == 0.5
        assert effective_resistance(k4, 0, 1) == pytest.approx(float(oracle), abs=1e-9)
        checked = 0
        for name, g in corpus():
            if g.n_edges > 16:
                continue
            e = O.edge_list(g)
            for a, b in ((0, g.n_vertices - 1), (0, g.n_vertices // 2)):
                if a == b:
                    continue
                want = float(O.resistance_by_trees(g.n_vertices, e, a, b))
                assert effective_resistance(g, a, b) == pytest.approx(want, abs=1e-9), name
                assert float(O.resistance_exact(g.n_vertices, e, a, b)) == pytest.approx(want, abs=1e-12)
                checked += 1
        info["pairs"] = checked


def _tiling_cases():
    rng = np.random.default_rng(SEED + 4)
    cases = [(B.path(1), 0, 1), (B.path(2), 0, 2), (B.cycle(4), 0, 2)]
    for g in random_maps(50, SEED + 3, 4, 40):
        o, s = (int(v) for v in rng.choice(g.n_vertices, 2, replace=False))
        cases.append((g, o, s))
    return cases


def test_criterion_04_tiling_suite():
    with criterion(4, "tiling properties (1)-(6), area, meridians, sub-flows", 60) as info:
        rng = np.random.default_rng(SEED + 5)
        worst_merid = 0.0
        subflows = 0
        cases = _tiling_cases()
        for g, o, s in cases:
            t = square_tiling(g, o, s)
            rep = verify_tiling(t, tol=1e-8)
            assert rep.ok, rep.to_dict()
            assert sum(q.side ** 2 for q in t.squares) == pytest.approx(t.height, abs=1e-8)
            assert t.height == pytest.approx(float(effective_resistance(g, o, s)), abs=1e-8)
            for m in rng.random(8):
                val = abs(meridian_net_flow(t, float(m)))
                worst_merid = max(worst_merid, val)
                assert val <= 1e-8
            for seg in t.vertex_segments:
                x = seg.vertex
                if x == s or seg.width <= 1e-9:
                    continue
                fb = flow_below(t, g, x)
                assert check_node_law(fb, [x, s], 1e-8).holds
                a, b = sorted(rng.uniform(0, seg.width, size=2))
                fr = flow_in_rectangle(t, g, seg.x_start + a, x, seg.x_start + b)
                assert check_node_law(fr, [x, s], 1e-8).holds
                subflows += 2
        info.update(tilings=len(cases), worst_meridian=f"{worst_merid:.1e}", subflows=subflows)


def test_criterion_05_roundabout_extension_bounds():
    with criterion(5, "roundabout extension bounds", 20) as info:
        rng = np.random.default_rng(SEED + 6)
        worst = 0.0
        for g in random_maps(20, SEED + 9, 4, 40):
            o, s = (int(v) for v in rng.choice(g.n_vertices, 2, replace=False))
            f = unit_current_flow(g, o, s).flow * float(rng.uniform(0.2, 5))
            for fc in rng.choice(g.n_faces, size=3):
                f = f + circulation(g, int(fc), float(rng.normal()))
            r = roundabout(g)
            src, snk = int(g.first[o]), int(g.first[s])
            ext = extend_flow_to_roundabout(g, r, f, src, [snk])
            # bounds recomputed here from plain sums, independent of extension_report
            abs_sum = np.zeros(g.n_vertices)
            for d in range(g.n_darts):
                abs_sum[g.origin[d]] += abs(f.values[d])
            bound = sum(g.degree[v] * abs_sum[v] ** 2 for v in range(g.n_vertices))
            assert energy(ext) <= bound + 1e-9
            rb = np.flatnonzero(r.edge_kind == ROUNDABOUT)
            for k in rb:
                w = int(r.edge_source[k])
                assert abs(ext.values[2 * k]) <= abs_sum[w] + 1e-9
            assert check_node_law(ext, [src, snk], 1e-9).holds
            assert extension_report(g, r, f, ext, src, [snk], slack=1e-9).ok
            worst = max(worst, energy(ext) / bound if bound else 0.0)
        info["max_energy_over_bound"] = f"{worst:.3f}"


def test_criterion_06_interior_count():
    with criterion(6, "interior-count bound on 100 random pairs", 10) as info:
        rng = np.random.default_rng(SEED + 10)
        tight = 0.0
        for _ in range(100):
            g = B.random_map(int(rng.integers(4, 40)), rng)
            if rng.random() < 0.5:
                X = rng.choice(g.n_darts, size=int(rng.integers(1, g.n_darts + 1)), replace=False)
            else:
                vs = rng.choice(g.n_vertices, size=int(rng.integers(1, g.n_vertices + 1)), replace=False)
                X = [d for d in range(g.n_darts) if g.origin[d] in set(vs.tolist())]
            v = sublemma6_check(g, X)
            assert v.holds and v.interior < 6 * v.projected
            tight = max(tight, v.interior / (6 * v.projected))
        info["max_ratio"] = f"{tight:.3f}"


def test_criterion_07_transience_profiles():
    with criterion(7, "binary tree and grid profiles", 120) as info:
        bt = resistance_profile("binary_tree", range(1, 13))
        series = float(O.spherical_tree_resistance([2] * 12))
        assert abs(bt.values[-1] - series) <= 0.01
        assert abs(bt.values[-1] - (1 - 2.0 ** -12)) <= 0.01
        grid = resistance_profile("grid2d", range(1, 31))
        v = np.asarray(grid.values)
        assert np.all(np.diff(v) > 0)
        gap = v[29] - v[9]
        assert gap > 0.15
        info.update(R12=f"{bt.values[-1]:.6f}", grid_R30_minus_R10=f"{gap:.4f}", grid_fit=grid.fit.model)


def test_criterion_08_embedding_experiment():
    with criterion(8, "tree_with_leaves embeddings A/B under roundabout", 300) as info:
        levels = range(2, 11)
        A = resistance_profile("tree_with_leaves", levels, "roundabout", "A")
        Bp = resistance_profile("tree_with_leaves", levels, "roundabout", "B")
        assert np.allclose(A.values, FROZEN_A, rtol=0, atol=1e-9)
        assert np.allclose(Bp.values, FROZEN_B, rtol=0, atol=1e-9)
        assert A.increments[-1] < 0.02
        floor = increment_floor(Bp)
        assert floor > 0.05
        diff = np.asarray(Bp.values) - np.asarray(A.values)
        assert np.all(np.diff(diff) > 0)
        info.update(A_last_increment=f"{A.increments[-1]:.4f}", B_floor=f"{floor:.4f}",
                    A_verdict=A.verdict, B_verdict=Bp.verdict)


def test_criterion_09_grid_minor_audit():
    with criterion(9, "grid minor damped energies and degree bound", 60) as info:
        rep = grid_minor_audit(10)
        r = np.asarray(rep.ratios[0.5])
        assert np.all((r >= 0.6) & (r <= 0.8))
        assert np.all(np.diff(rep.partial_sums[0.5]) > 0)
        for k in range(1, 10):
            assert rep.increments[0.5][k] == pytest.approx(O.minor_level_increment(k, 0.5), rel=1e-12)
        assert rep.degree_bound_holds and rep.max_degree_ratio <= 1.0
        info.update(ratios=f"{r.min():.4f}..{r.max():.4f}", max_degree_ratio=rep.max_degree_ratio)


def test_criterion_10_classify_dual():
    with criterion(10, "classify_dual bond and cycle-law cases", 10) as info:
        g = B.cycle(4)
        _, corr = dual(g)
        v = classify_dual(g, corr, unit_current_flow(g, 0, 2).flow)
        assert isinstance(v, BondFound)
        assert v.bond in O.all_bonds(4, O.edge_list(g))
        rng = np.random.default_rng(SEED + 11)
        cases = 0
        for h in [B.k4(), B.cube(), B.cycle(5)] + random_maps(15, SEED + 12, 4, 30):
            f = EdgeFunction.zeros(h)
            for fc in rng.choice(h.n_faces, size=min(3, h.n_faces), replace=False):
                f = f + circulation(h, int(fc), float(rng.normal()))
            _, hc = dual(h)
            w = classify_dual(h, hc, f)
            assert isinstance(w, CycleLawHolds)
            assert np.allclose(grad(w.rho).values, dual_transfer(f, hc).values, atol=1e-9)
            cases += 1
        info["circulations"] = cases


def test_criterion_11_monotone_voltage_paths():
    with criterion(11, "monotone voltage paths to every vertex", 30) as info:
        rng = np.random.default_rng(SEED + 13)
        paths = 0
        for g in random_maps(50, SEED + 14, 4, 40):
            o, s = (int(v) for v in rng.choice(g.n_vertices, 2, replace=False))
            u = unit_current_flow(g, o, s).potential
            edges = {frozenset(e) for e in O.edge_list(g)}
            for x in range(g.n_vertices):
                p = monotone_voltage_path(g, u, o, x)
                vs = list(p.vertices)
                assert vs[0] == o and vs[-1] == x
                assert all(frozenset((a, b)) in edges for a, b in zip(vs, vs[1:]))
                assert np.all(np.diff(u.values[vs]) <= 1e-12)
                paths += 1
        info["paths"] = paths

