import math

import numpy as np
import pytest

from toricsim.lattice import (
    LatticeSpec,
    Protocol,
    Region,
    Topology,
    build_initial_matching,
)
from toricsim import loop_engine as le
from toricsim.rng import trajectory_rng

from _dense import DenseMajorana


def torus(lx, ly, **kw):
    return LatticeSpec(lx, ly, Topology.TORUS, Region.NONE, **kw)


def cylinder(lx, ly, region=Region.TOP_BOUNDARY, **kw):
    return LatticeSpec(lx, ly, Topology.CYLINDER, region, **kw)


# -- the one-time sign-rule calibration fixture --------------------------------


@pytest.mark.parametrize("s1", [1, -1])
@pytest.mark.parametrize("s2", [1, -1])
@pytest.mark.parametrize("m", [1, -1])
@pytest.mark.parametrize("swap_ab", [False, True])
def test_bilinear_reconnection_rule_vs_dense(s1, s2, m, swap_ab):
    """Exhaustive 4-Majorana check of the (k,a),(l,b) -> (a,b),(k,l) sign rule."""
    rng = np.random.default_rng(7)
    k, a, l, b = 0, 1, 2, 3
    dense = DenseMajorana(4)
    dense.prepare_matching([(k, a, s1), (l, b, s2)], rng)
    if swap_ab:
        a, b, k, l, s1, s2 = b, a, l, k, s2, s1
    out, was_random = dense.measure_bilinear(a, b, rng, outcome=m)
    assert was_random and out == m
    got = dense.expect(dense.bilinear(k, l))
    assert abs(abs(got) - 1) < 1e-9
    assert int(round(got)) == -m * s1 * s2


def test_measure_bilinear_matches_rule():
    spec = torus(2, 2)
    state = le.fresh_state(spec)
    a = spec.leg_index(0, 0, 3)  # NE leg, paired up to (0,1)
    b = spec.leg_index(0, 0, 2)  # NW leg, paired up to (1,1)
    k, l = state.partner[a], state.partner[b]
    s1, s2 = state.sign[k], state.sign[l]
    m, forced = le.measure_bilinear(state, a, b, outcome=1)
    assert not forced and m == 1
    assert state.partner[a] == b and state.sign[a] == 1
    assert state.partner[k] == l and state.sign[k] == -m * s1 * s2
    # re-measurement is idempotent and returns the stored sign
    m2, forced2 = le.measure_bilinear(state, a, b)
    assert forced2 and m2 == 1
    m3, forced3 = le.measure_bilinear(state, b, a)
    assert forced3 and m3 == -1


def test_frontier_leg_rejected():
    spec = cylinder(3, 3)
    state = le.fresh_state(spec)
    with pytest.raises(ValueError):
        le.measure_bilinear(state, spec.leg_index(0, 0, 0), spec.leg_index(0, 2, 0))
    with pytest.raises(ValueError):
        le.apply_tile(state, (0, 0), "Z")


def test_tile_repeat_rejected():
    spec = torus(2, 2)
    state = le.fresh_state(spec)
    le.apply_tile(state, (0, 0), "Z", outcome=1)
    with pytest.raises(ValueError):
        le.apply_tile(state, (0, 0), "X")


# -- full-trajectory brute force -------------------------------------------------


def _initial_pairs(spec):
    partner, sign = build_initial_matching(spec)
    return [
        (leg, int(partner[leg]), int(sign[leg]))
        for leg in range(spec.n_legs)
        if leg < partner[leg]
    ]


def _free_dense_mirror(spec, record):
    """Replay a recorded sweep on the free-fermion dense state."""
    dense = DenseMajorana(spec.n_legs)
    dense.prepare_matching(_initial_pairs(spec), np.random.default_rng(0))
    for s, basis, outcome in record.entries():
        (a1, b1), (a2, b2) = le.TILE_PAIRS[basis]
        base = 4 * s
        dense.measure_bilinear(base + a1, base + b1, None, outcome=outcome)
        dense.measure_bilinear(base + a2, base + b2, None, outcome=outcome)
    return dense


def _physical_dense_mirror(spec, record):
    """Replay on the constraint-projected state, checking forcedness per tile."""
    dense = DenseMajorana(spec.n_legs)
    dense.prepare_matching(_initial_pairs(spec), np.random.default_rng(0))
    for s in range(spec.n_sites):
        d_op = dense.g[4 * s] @ dense.g[4 * s + 1] @ dense.g[4 * s + 2] @ dense.g[4 * s + 3]
        p = dense.project(d_op, 1)
        assert p > 1e-12
    for s, basis, outcome in record.entries():
        (a1, b1), (a2, b2) = le.TILE_PAIRS[basis]
        base = 4 * s
        op1 = dense.bilinear(base + a1, base + b1)
        m_exp = dense.expect(op1)
        dense_forced = abs(m_exp) > 1 - 1e-9
        assert dense_forced == bool(record.forced[s]), (
            f"forcedness mismatch at site {s}: dense <P>={m_exp}"
        )
        if dense_forced:
            assert int(round(m_exp)) == outcome
        dense.project(op1, outcome)
        dense.project(dense.bilinear(base + a2, base + b2), outcome)
    return dense


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("pq", [(0.0, 0.0), (0.3, 0.3), (0.7, 0.2), (1.0, 0.5)])
def test_sweep_agrees_with_dense_on_2x2_torus(seed, pq):
    """Final pairs/signs match brute force; forced outcomes match the physical state."""
    spec = torus(2, 2)
    rng = trajectory_rng(11, seed)
    state, record, _ = le.run_bulk_sweep(spec, Protocol(*pq), rng)
    dense = _free_dense_mirror(spec, record)
    for leg in range(spec.n_legs):
        mate = int(state.partner[leg])
        if leg < mate:
            got = dense.expect(dense.bilinear(leg, mate))
            assert abs(got - state.sign[leg]) < 1e-8
    _physical_dense_mirror(spec, record)


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("pq", [(0.4, 0.5), (0.0, 0.0)])
def test_sweep_agrees_with_dense_on_3x2_cylinder(seed, pq):
    spec = cylinder(3, 2)
    rng = trajectory_rng(23, seed)
    state, record, _ = le.run_bulk_sweep(spec, Protocol(*pq), rng)
    dense = _free_dense_mirror(spec, record)
    for leg in range(spec.n_legs):
        mate = int(state.partner[leg])
        if leg < mate:
            got = dense.expect(dense.bilinear(leg, mate))
            assert abs(got - state.sign[leg]) < 1e-8
    _physical_dense_mirror(spec, record)


def test_kernel_matches_python_path():
    spec = cylinder(4, 4)
    state, record, _ = le.run_bulk_sweep(spec, Protocol(0.5, 0.5), trajectory_rng(3, 0))
    replayed = le.replay_sweep(spec, record)
    assert (replayed.partner == state.partner).all()
    assert (replayed.sign == state.sign).all()


def test_forced_outcomes_do_not_consume_rng():
    # p=0,q=0 forces many outcomes; identical records from identical streams
    spec = cylinder(4, 4)
    _, r1, _ = le.run_bulk_sweep(spec, Protocol(0.0, 0.0), trajectory_rng(5, 1))
    _, r2, _ = le.run_bulk_sweep(spec, Protocol(0.0, 0.0), trajectory_rng(5, 1))
    assert (r1.outcome == r2.outcome).all()
    assert r1.forced.any()


# -- loop observables ---------------------------------------------------------------


def test_p0q0_boundary_structure():
    spec = cylinder(4, 4)
    state, _, _ = le.run_bulk_sweep(spec, Protocol(0.0, 0.0), trajectory_rng(9, 0))
    zz = le.zz_stabilizer_set(state)
    assert [(i, j) for i, j, _ in zz] == [(0, 1), (1, 2), (2, 3)]
    assert le.ea_order(state) == pytest.approx(4.0)
    # single-site cuts each see one strand to the left and one to the right
    for x in range(4):
        assert le.boundary_cut_entropy(state, (x, 1)) == pytest.approx(math.log(2))
    assert le.boundary_cut_entropy(state, (0, 4)) == 0.0


def test_p0q1_paramagnet():
    spec = cylinder(4, 4)
    state, _, _ = le.run_bulk_sweep(spec, Protocol(0.0, 1.0), trajectory_rng(9, 0))
    assert le.zz_stabilizer_set(state) == []
    assert le.ea_order(state) == pytest.approx(1.0)


def test_spanning_zero_in_short_loop_limit():
    spec = cylinder(4, 4, region=Region.BOTH_BOUNDARIES)
    for t in range(5):
        state, _, _ = le.run_bulk_sweep(spec, Protocol(0.0, 0.0), trajectory_rng(13, t))
        assert le.spanning_number(state) == 0
        assert le.two_boundary_mie(state) == 0.0


def test_spanning_parity_even():
    spec = cylinder(6, 6, region=Region.BOTH_BOUNDARIES)
    for t in range(20):
        state, _, _ = le.run_bulk_sweep(spec, Protocol(0.5, 0.5), trajectory_rng(17, t))
        assert le.spanning_number(state) % 2 == 0


def test_two_site_classes_partition():
    spec = LatticeSpec(4, 4, Topology.TORUS, Region.TWO_SITES, two_sites=((0, 0), (2, 2)))
    seen = set()
    for t in range(40):
        state, _, _ = le.run_bulk_sweep(spec, Protocol(0.5, 0.5), trajectory_rng(19, t))
        seen.add(le.classify_two_site(state))
    assert seen <= {"a", "b", "c"}
    assert "c" in seen  # the deep Goldstone point does produce 4-strand events


def test_connectivity_order_independent():
    spec = cylinder(4, 4)
    rng = trajectory_rng(29, 0)
    tiles = le.sample_tiles(spec, Protocol(0.5, 0.5), rng)
    state_raster, _, _ = le.run_bulk_sweep(spec, Protocol(0.5, 0.5), rng, tiles=tiles)
    state2 = le.fresh_state(spec)
    order = [s for s in range(spec.n_sites) if tiles[s] >= 0]
    np.random.default_rng(1).shuffle(order)
    for s in order:
        le.apply_tile(state2, spec.site_xy(s), le.BASIS_NAMES[tiles[s]], rng=np.random.default_rng(s))
    pairs1 = {
        tuple(sorted((a, int(state_raster.partner[a]))))
        for a in range(spec.n_legs)
        if state_raster.frontier[a]
    }
    pairs2 = {
        tuple(sorted((a, int(state2.partner[a]))))
        for a in range(spec.n_legs)
        if state2.frontier[a]
    }
    assert pairs1 == pairs2


def test_matching_expectation_against_dense():
    rng = np.random.default_rng(41)
    for _ in range(20):
        n = 8
        perm = rng.permutation(n)
        pairs = [
            (int(perm[2 * i]), int(perm[2 * i + 1]), int(rng.choice([1, -1])))
            for i in range(n // 2)
        ]
        partner = np.zeros(n, dtype=np.int64)
        sign = np.zeros(n, dtype=np.int8)
        for a, b, s in pairs:
            partner[a], partner[b] = b, a
            sign[a], sign[b] = s, -s
        dense = DenseMajorana(n)
        dense.prepare_matching(pairs, rng)
        k = int(rng.choice([2, 4, 6]))
        legs = [int(x) for x in rng.choice(n, size=k, replace=False)]
        op = dense.g[legs[0]]
        for leg in legs[1:]:
            op = op @ dense.g[leg]
        for p in range(4):
            val = (1j**p) * np.vdot(dense.psi, op @ dense.psi)
            if abs(val.imag) < 1e-9 and abs(abs(val.real) - 1) < 1e-9:
                assert le.matching_expectation(legs, p, partner, sign) == int(round(val.real))
                break
        else:
            assert le.matching_expectation(legs, k // 2, partner, sign) == 0


def test_watermelon_g4_basic():
    spec = torus(4, 4)
    with pytest.raises(ValueError):
        le.watermelon_g4(spec, Protocol(0.5, 0.5), ((0, 0), (0, 0)), 8, trajectory_rng(1, 0))
    mean, err = le.watermelon_g4(
        spec, Protocol(0.5, 0.5), ((0, 0), (2, 2)), 64, trajectory_rng(1, 0)
    )
    assert 0.0 <= mean <= 1.0 and err >= 0.0
