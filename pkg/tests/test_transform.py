import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles as O
from conftest import corpus
from planarflow import builders as B
from planarflow.current import effective_resistance
from planarflow.errors import ContractError, UnsupportedInputError
from planarflow.planarmap import PlanarMap, dual, is_cut, map_isomorphic
from planarflow.transform import (ORIGINAL, contract, medial, roundabout, subdivide,
                                  weighted_subdivision)

seeds = st.integers(min_value=0, max_value=10_000)


def test_k4_roundabout_counts():
    r = roundabout(B.k4()).output
    assert (r.n_vertices, r.n_edges) == (12, 18)
    assert set(r.degree.tolist()) == {3}
    assert r.euler_defects() == [0]


def test_c3_roundabout_degenerate_and_full():
    r = roundabout(B.cycle(3)).output
    assert (r.n_vertices, r.n_edges) == (6, 6)
    assert map_isomorphic(r, B.cycle(6))
    full = roundabout(B.cycle(3), full_cycles=True).output
    assert (full.n_vertices, full.n_edges) == (6, 9)
    assert set(full.degree.tolist()) == {3}


def test_p2_roundabout_is_itself():
    r = roundabout(B.path(1))
    assert (r.output.n_vertices, r.output.n_edges) == (2, 1)
    assert r.edge_kind.tolist() == [ORIGINAL]


def test_roundabout_rejects_loops():
    loop = PlanarMap([[0, 1]], [(0, 1)])
    with pytest.raises(UnsupportedInputError):
        roundabout(loop)


def test_roundabout_matches_direct_neighbour_sets():
    for name, g in corpus():
        res = roundabout(g)
        out = res.output
        ours = {v: set(out.neighbours(v)) - {v} for v in range(out.n_vertices)}
        assert ours == O.roundabout_neighbour_sets(g), name


def test_every_output_edge_has_one_trace():
    g = B.random_map(20, np.random.default_rng(1))
    res = roundabout(g)
    recs = [res.trace(e) for e in range(res.output.n_edges)]
    originals = [r["edge"] for r in recs if r["kind"] == "original"]
    assert sorted(originals) == list(range(g.n_edges))
    assert np.array_equal(res.original_edge_map(), np.arange(g.n_edges))


def test_medial_examples():
    m = medial(B.cycle(3)).output
    assert (m.n_vertices, m.n_edges) == (3, 6)
    assert map_isomorphic(medial(B.k4()).output, B.octahedron())
    assert map_isomorphic(medial(B.cube()).output, medial(dual(B.cube())[0]).output)


def test_medial_rejects_isolated_vertex():
    g = PlanarMap([[0], [1], []], [(0, 1)])
    with pytest.raises(UnsupportedInputError):
        medial(g)


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(min_value=4, max_value=25))
def test_medial_is_contracted_full_roundabout(seed, n):
    g = B.random_map(n, np.random.default_rng(seed))
    full = roundabout(g, full_cycles=True)
    contracted = contract(full.output, np.flatnonzero(full.edge_kind == ORIGINAL))
    assert map_isomorphic(contracted.output, medial(g).output)


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(min_value=4, max_value=25))
def test_medial_regular_and_planar(seed, n):
    g = B.random_map(n, np.random.default_rng(seed))
    m = medial(g).output
    assert m.n_vertices == g.n_edges
    assert set(m.degree.tolist()) == {4}
    assert m.euler_defects() == [0]


def test_roundabout_keeps_cuts():
    rng = np.random.default_rng(3)
    for _ in range(10):
        g = B.random_map(int(rng.integers(5, 14)), rng)
        res = roundabout(g)
        for b in O.all_bonds(g.n_vertices, O.edge_list(g)):
            assert is_cut(res.output, sorted(b))  # original edges keep their ids


def test_subdivide_examples():
    p = subdivide(B.path(1), [2]).output
    assert map_isomorphic(p, B.path(3))
    g = B.k4()
    assert map_isomorphic(subdivide(g, np.zeros(6, dtype=int)).output, g)
    c4 = B.cycle(4)
    counts = np.zeros(4, dtype=int)
    counts[0] = 1
    s = subdivide(c4, counts).output
    u, w = c4.edge_endpoints[0]
    assert effective_resistance(s, int(u), int(w)) == pytest.approx(6 / 5, abs=1e-12)
    e = O.edge_list(s)
    assert O.resistance_by_trees(s.n_vertices, e, int(u), int(w)) == pytest.approx(6 / 5, abs=1e-12)


def test_subdivide_rejects_negative_counts():
    with pytest.raises(ContractError):
        subdivide(B.path(2), [1, -1])


def test_weighted_subdivision_examples():
    assert map_isomorphic(weighted_subdivision(B.path(1)).output, B.path(3))
    t = weighted_subdivision(B.cycle(3)).output
    assert map_isomorphic(t, B.cycle(27))
    star = weighted_subdivision(B.star(3)).output
    assert star.n_edges == 33
    assert sorted(star.degree.tolist()).count(1) == 3


def test_contract_examples():
    c3 = B.cycle(3)
    two = contract(c3, [0]).output
    assert (two.n_vertices, two.n_edges, two.n_faces) == (2, 2, 2)
    k4 = B.k4()
    tree = [int(k4.dart_edge[d]) for d in k4.rotation(0)]
    one = contract(k4, tree).output
    assert (one.n_vertices, one.n_edges) == (1, 3)
    assert one.n_faces == k4.n_faces


def test_contract_rejects_loop():
    c3 = B.cycle(3)
    with pytest.raises(ContractError):
        contract(c3, [0, 1, 2])


def test_contraction_preserves_faces():
    g = B.random_triangulation(15, np.random.default_rng(9))
    e = [0, 5, 9]
    out = contract(g, e).output
    assert out.n_faces == g.n_faces
    assert out.euler_defects() == [0]
