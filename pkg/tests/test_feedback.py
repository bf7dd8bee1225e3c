import numpy as np
import pytest
from hypothesis import given, settings, strategies as st_h

from toricsim import feedback as fb
from toricsim import loop_engine as le
from toricsim import stabilizer as st
from toricsim.crosscheck import oracle_replay
from toricsim.lattice import LatticeSpec, Protocol, Region, Topology
from toricsim.rng import trajectory_rng


def cylinder(lx, ly):
    return LatticeSpec(lx, ly, Topology.CYLINDER, Region.TOP_BOUNDARY)


def test_graph_rejects_cycles():
    with pytest.raises(ValueError):
        fb.ZZGraph(3, [(0, 1, 1), (1, 2, 1), (0, 2, -1)])


def test_solve_flips_simple_cases():
    g = fb.ZZGraph(3, [(0, 1, 1), (1, 2, 1)])
    assert fb.solve_flips(g).sites == set()
    g = fb.ZZGraph(3, [(0, 1, -1), (1, 2, 1)])
    flips = fb.solve_flips(g)
    assert fb.flips_fix_all_edges(g, flips)
    assert flips.sites in ({0}, {1, 2})


@settings(max_examples=60, deadline=None)
@given(st_h.integers(2, 24), st_h.randoms(use_true_random=False))
def test_solve_flips_random_forests(n, rnd):
    # random spanning forest with random signs
    edges = []
    for j in range(1, n):
        if rnd.random() < 0.7:
            i = rnd.randrange(j)
            edges.append((i, j, rnd.choice([1, -1])))
    g = fb.ZZGraph(n, edges)
    flips = fb.solve_flips(g)
    assert fb.flips_fix_all_edges(g, flips)


def test_flipset_bitmask_roundtrip():
    f = fb.FlipSet({0, 3, 5})
    assert fb.FlipSet.from_bitmask(f.as_bitmask()).sites == {0, 3, 5}


def test_p0q0_certified_ferromagnet():
    spec = cylinder(4, 4)
    state, record, _ = le.run_bulk_sweep(spec, Protocol(0.0, 0.0), trajectory_rng(51, 0))
    tab = oracle_replay(spec, record)
    graph = fb.build_graph(state, record)
    assert [(i, j) for i, j, _ in graph.edges] == [(0, 1), (1, 2), (2, 3)]
    flips = fb.solve_flips(graph)
    value = fb.apply_and_certify(tab, flips, range(spec.lx))
    assert value == pytest.approx(float(spec.lx))
    assert value == pytest.approx(le.ea_order(state))


def test_q1_trivial_case():
    spec = cylinder(4, 4)
    state, record, _ = le.run_bulk_sweep(spec, Protocol(0.0, 1.0), trajectory_rng(53, 0))
    tab = oracle_replay(spec, record)
    graph = fb.build_graph(state, record)
    assert graph.edges == []
    value = fb.apply_and_certify(tab, fb.solve_flips(graph), range(spec.lx))
    assert value == pytest.approx(1.0)


@pytest.mark.parametrize("pq", [(0.0, 0.3), (0.3, 0.3), (0.5, 0.5), (0.0, 0.7)])
def test_feedback_certifies_and_matches_glass_order(pq):
    spec = cylinder(4, 6)
    for t in range(25):
        state, record, _ = le.run_bulk_sweep(spec, Protocol(*pq), trajectory_rng(57, t))
        tab = oracle_replay(spec, record)
        graph = fb.build_graph(state, record)
        flips = fb.solve_flips(graph)
        assert fb.flips_fix_all_edges(graph, flips)
        value = fb.apply_and_certify(tab, flips, range(spec.lx))
        assert value == pytest.approx(le.ea_order(state))
