import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles as O
from conftest import corpus
from planarflow import builders as B
from planarflow.current import (BondFound, CycleLawHolds, WeightProfile, check_cycle_law, check_node_law,
                                classify_dual, damped_energy, divergence, effective_resistance, energy,
                                energy_potential, extend_flow_to_roundabout, extension_report, face_sums,
                                grad, harmonic_defect, harmonic_solve, monotone_voltage_path,
                                unit_current_flow, weighted_energy)
from planarflow.errors import ContractError, InvariantViolation
from planarflow.fields import EdgeFunction, Potential
from planarflow.planarmap import dual, dual_transfer, find_bond
from planarflow.transform import roundabout

seeds = st.integers(min_value=0, max_value=10_000)


def face_circulation(g, face):
    vals = np.zeros(g.n_darts)
    for d in g.faces[face].boundary:
        vals[d] += 1.0
        vals[g.twin[d]] -= 1.0
    return EdgeFunction(g, vals)


def test_divergence_examples():
    g = B.path(1)
    assert np.all(divergence(EdgeFunction.zeros(g)) == 0)
    f = EdgeFunction.from_darts(g, {0: 1.0})
    assert divergence(f).tolist() == [1.0, -1.0]


def test_grad_examples():
    g = B.path(2)
    u = Potential(g, [1.0, 0.5, 0.0])
    assert grad(u).on_edges().tolist() == [0.5, 0.5]
    assert np.all(grad(Potential(g, [3.0, 3.0, 3.0])).values == 0)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_grad_linear_and_telescoping(seed):
    rng = np.random.default_rng(seed)
    g = B.random_map(int(rng.integers(4, 25)), rng)
    a, b = rng.normal(size=(2, g.n_vertices))
    ga, gb = grad(Potential(g, a)), grad(Potential(g, b))
    assert np.allclose(grad(Potential(g, a + b)).values, ga.values + gb.values)
    assert abs(divergence(ga).sum()) < 1e-9
    assert check_cycle_law(ga).holds


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_ohm_harmonic_equivalence(seed):
    rng = np.random.default_rng(seed)
    g = B.random_map(int(rng.integers(4, 25)), rng)
    u = harmonic_solve(g, {0: 1.0, g.n_vertices - 1: 0.0})
    d = harmonic_defect(u)
    law = check_node_law(grad(u), [0, g.n_vertices - 1])
    assert law.holds
    free = [v for v in range(g.n_vertices) if v not in (0, g.n_vertices - 1)]
    assert np.all(np.abs(d[free]) < 1e-9)


def test_face_circulation_fails_cycle_law_only_there():
    g = B.k4()
    f = face_circulation(g, 0)
    assert check_node_law(f).holds
    v = check_cycle_law(f)
    assert not v.holds
    assert abs(face_sums(f)[0]) > 0


def test_harmonic_examples():
    u = harmonic_solve(B.path(2), {0: 1.0, 2: 0.0})
    assert u[1] == pytest.approx(0.5, abs=1e-12)
    k4 = harmonic_solve(B.k4(), {0: 1.0, 1: 0.0})
    assert k4[2] == pytest.approx(0.5, abs=1e-12) and k4[3] == pytest.approx(0.5, abs=1e-12)
    grid = B.grid(3, 3)
    pres = {j * 3: 1.0 for j in range(3)} | {j * 3 + 2: 0.0 for j in range(3)}
    g3 = harmonic_solve(grid, pres)
    assert np.allclose([g3[j * 3 + 1] for j in range(3)], 0.5, atol=1e-12)


def test_harmonic_against_exact_elimination():
    g = B.grid(4, 3)
    pres = {0: 1.0, 11: 0.0, 5: 0.3}
    ours = harmonic_solve(g, pres)
    # exact: Dirichlet problem by rational elimination via the oracle's Laplacian routine
    from fractions import Fraction
    n = g.n_vertices
    edges = O.edge_list(g)
    free = [v for v in range(n) if v not in pres]
    A = [[Fraction(0)] * (len(free) + 1) for _ in free]
    idx = {v: i for i, v in enumerate(free)}
    for u, w in edges:
        for x, y in ((u, w), (w, u)):
            if x in idx:
                A[idx[x]][idx[x]] += 1
                if y in idx:
                    A[idx[x]][idx[y]] -= 1
                else:
                    A[idx[x]][-1] += Fraction(pres[y]).limit_denominator(1000)
    m = len(free)
    for c in range(m):
        for r in range(m):
            if r != c and A[r][c] != 0:
                k = A[r][c] / A[c][c]
                A[r] = [p - k * q for p, q in zip(A[r], A[c])]
    for i, v in enumerate(free):
        assert ours[v] == pytest.approx(float(A[i][-1] / A[i][i]), abs=1e-12)


def test_harmonic_needs_boundary():
    with pytest.raises(ContractError):
        harmonic_solve(B.k4(), {})


def test_unit_current_examples():
    uc = unit_current_flow(B.path(1), 0, 1)
    assert uc.flow.on_edges().tolist() == [1.0] and uc.resistance == pytest.approx(1.0)
    c4 = unit_current_flow(B.cycle(4), 0, 2)
    assert np.allclose(np.abs(c4.flow.on_edges()), 0.5)
    k4 = unit_current_flow(B.k4(), 0, 1)
    assert energy(k4.flow) == pytest.approx(0.5, abs=1e-12)
    assert check_node_law(k4.flow, [0, 1]).holds
    assert np.allclose(grad(Potential(B.k4(), k4.voltage)).values, k4.flow.values)


def test_unit_current_same_terminal():
    with pytest.raises(ContractError):
        unit_current_flow(B.k4(), 0, 0)


def test_effective_resistance_examples():
    for n in range(1, 8):
        assert effective_resistance(B.path(n), 0, n) == pytest.approx(n, abs=1e-9)
    assert effective_resistance(B.cycle(4), 0, 2) == pytest.approx(1.0, abs=1e-9)
    assert effective_resistance(B.k4(), 0, 1) == pytest.approx(0.5, abs=1e-9)


def test_resistance_matches_tree_oracle_on_small_corpus():
    for name, g in corpus():
        if g.n_edges > 16 or g.n_vertices < 2:
            continue
        e = O.edge_list(g)
        a, s = 0, g.n_vertices - 1
        assert effective_resistance(g, a, s) == pytest.approx(float(O.resistance_by_trees(g.n_vertices, e, a, s)),
                                                              abs=1e-9), name


def test_solver_methods_agree():
    g = B.random_triangulation(60, np.random.default_rng(3))
    r = [effective_resistance(g, 0, 59, method=m) for m in ("direct", "cg", "dense")]
    assert max(r) - min(r) < 1e-9


def test_energy_equals_resistance_and_thomson():
    rng = np.random.default_rng(7)
    for _ in range(10):
        g = B.random_map(int(rng.integers(5, 20)), rng)
        o, s = 0, g.n_vertices - 1
        uc = unit_current_flow(g, o, s)
        assert energy(uc.flow) == pytest.approx(uc.resistance, rel=1e-9)
        faces = g.n_faces
        for _ in range(100):
            other = uc.flow
            for f in rng.choice(faces, size=2):
                other = other + face_circulation(g, int(f)) * float(rng.normal())
            assert energy(other) >= uc.resistance - 1e-9


def test_energy_preserved_by_dual_transfer():
    g = B.random_map(15, np.random.default_rng(4))
    f = unit_current_flow(g, 0, 3).flow
    _, corr = dual(g)
    assert energy(dual_transfer(f, corr)) == pytest.approx(energy(f))
    assert energy_potential(Potential(g, np.arange(g.n_vertices, dtype=float))) >= 0


def test_classify_zero_flow():
    g = B.k4()
    _, corr = dual(g)
    v = classify_dual(g, corr, EdgeFunction.zeros(g))
    assert isinstance(v, CycleLawHolds)
    assert np.ptp(v.rho.values) == 0


def test_classify_c4_current_is_bond():
    g = B.cycle(4)
    _, corr = dual(g)
    v = classify_dual(g, corr, unit_current_flow(g, 0, 2).flow)
    assert isinstance(v, BondFound)
    assert v.bond in O.all_bonds(4, O.edge_list(g))
    assert abs(v.net) == pytest.approx(1.0)


def test_classify_circulation_integrates():
    rng = np.random.default_rng(1)
    for _ in range(10):
        g = B.random_map(int(rng.integers(5, 25)), rng)
        f = face_circulation(g, int(rng.integers(g.n_faces))) * 2.5
        d, corr = dual(g)
        v = classify_dual(g, corr, f)
        assert isinstance(v, CycleLawHolds)
        assert np.allclose(grad(v.rho).values, dual_transfer(f, corr).values, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_classify_is_exhaustive(seed):
    rng = np.random.default_rng(seed)
    g = B.random_map(int(rng.integers(4, 18)), rng)
    o, s = rng.choice(g.n_vertices, 2, replace=False)
    f = unit_current_flow(g, int(o), int(s)).flow
    _, corr = dual(g)
    v = classify_dual(g, corr, f)
    assert isinstance(v, BondFound)
    assert find_bond(g, v.bond).is_bond


def test_monotone_path_examples():
    g = B.path(2)
    u = unit_current_flow(g, 0, 2).potential
    p = monotone_voltage_path(g, u, 0, 2)
    assert p.vertices == (0, 1, 2)
    k4 = B.k4()
    uk = unit_current_flow(k4, 0, 1).potential
    for x in range(1, 4):
        path = monotone_voltage_path(k4, uk, 0, x)
        assert path.vertices[-1] == x


def test_monotone_paths_on_grid_against_search():
    g = B.grid(5, 5)
    rng = np.random.default_rng(11)
    e = O.edge_list(g)
    for _ in range(50):
        o, s, x = (int(v) for v in rng.choice(25, 3, replace=False))
        u = unit_current_flow(g, o, s).potential
        assert O.monotone_path_exists(25, e, u.values, o, x)
        p = monotone_voltage_path(g, u, o, x)
        vals = u.values[list(p.vertices)]
        assert np.all(np.diff(vals) <= 1e-12)


def test_monotone_path_violation_raises():
    g = B.path(2)
    u = Potential(g, [0.0, 1.0, 0.5])
    with pytest.raises(InvariantViolation):
        monotone_voltage_path(g, u, 0, 2)


def test_extension_zero_and_star():
    g = B.star(3)
    r = roundabout(g)
    ext = extend_flow_to_roundabout(g, r, EdgeFunction.zeros(g), int(g.first[0]))
    assert np.all(ext.values == 0)
    # one unit in through the first leaf edge and out through the second
    leaf_in, leaf_out = (int(g.head[d]) for d in g.rotation(0)[:2])
    f = EdgeFunction.zeros(g)
    d_in = [d for d in range(g.n_darts) if g.origin[d] == leaf_in][0]
    d_out = [d for d in g.rotation(0)][1]
    vals = np.zeros(g.n_darts)
    vals[d_in], vals[g.twin[d_in]] = 1.0, -1.0
    vals[d_out], vals[g.twin[d_out]] = 1.0, -1.0
    f = EdgeFunction(g, vals)
    ext = extend_flow_to_roundabout(g, r, f, d_in, [int(g.twin[d_out])])
    centre = np.flatnonzero(r.edge_kind == 1)
    assert np.sum(ext.values[2 * centre] ** 2) == pytest.approx(2 / 3, abs=1e-12)
    assert leaf_out != leaf_in


def test_extension_matches_least_squares_circulation():
    rng = np.random.default_rng(21)
    g = B.random_triangulation(14, rng)
    uc = unit_current_flow(g, 0, 5)
    r = roundabout(g)
    ext = extend_flow_to_roundabout(g, r, uc.flow, int(g.first[0]), [int(g.first[5])])
    div = divergence(uc.flow)
    for v in range(g.n_vertices):
        rot = list(g.rotation(v))
        demand = [-uc.flow.values[d] for d in rot]
        if v in (0, 5):
            demand[0] += div[v]
        ref = O.least_energy_cycle_flow(demand)
        # roundabout edge from node d to sigma d carries the flow of the step
        ours = []
        for d in rot:
            e = [k for k in np.flatnonzero(r.edge_kind == 1) if r.output.origin[2 * k] == d][0]
            ours.append(ext.values[2 * e])
        assert np.allclose(ours, ref, atol=1e-9)


def test_extension_rejects_non_flow():
    g = B.cycle(4)
    f = EdgeFunction.from_darts(g, {0: 1.0})
    with pytest.raises(ContractError):
        extend_flow_to_roundabout(g, roundabout(g), f, 0)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_extension_bounds_random(seed):
    rng = np.random.default_rng(seed)
    g = B.random_map(int(rng.integers(4, 25)), rng)
    o, s = (int(v) for v in rng.choice(g.n_vertices, 2, replace=False))
    f = unit_current_flow(g, o, s).flow * float(rng.uniform(0.1, 3))
    for fc in rng.choice(g.n_faces, size=2):
        f = f + face_circulation(g, int(fc)) * float(rng.normal())
    r = roundabout(g)
    src, snk = int(g.first[o]), int(g.first[s])
    ext = extend_flow_to_roundabout(g, r, f, src, [snk])
    rep = extension_report(g, r, f, ext, src, [snk])
    assert rep.ok, rep


def test_weighted_and_damped_energy():
    g = B.path(1)
    f = EdgeFunction.from_darts(g, {0: 1.0})
    assert weighted_energy(f) == 2.0
    assert weighted_energy(EdgeFunction.zeros(g)) == 0.0
    assert weighted_energy(f, WeightProfile(np.array([3.0]))) == 3.0
    with pytest.raises(ContractError):
        WeightProfile(np.array([0.0]))
    rng = np.random.default_rng(3)
    h = B.random_map(20, rng)
    q = EdgeFunction(h, np.zeros(h.n_darts)) + unit_current_flow(h, 0, 7).flow
    abs_sum = np.bincount(h.origin, weights=np.abs(q.values), minlength=h.n_vertices)
    sq_sum = np.bincount(h.origin, weights=q.values ** 2, minlength=h.n_vertices)
    assert np.all(abs_sum ** 2 <= h.degree * sq_sum + 1e-12)
    # E_1 against the Cauchy-Schwarz value, and E_0 against the r-weighted energy
    de1 = damped_energy(q, h, 1.0)
    assert de1.value <= de1.cauchy_schwarz + 1e-12
    assert damped_energy(q, h, 0.0).value <= weighted_energy(q) + 1e-12
