import math

import numpy as np
import pytest

from toricsim import stabilizer as st
from toricsim.lattice import LatticeSpec, Region, Topology, build_initial_matching
from toricsim.rng import trajectory_rng

from _dense import DenseMajorana


def torus(lx, ly):
    return LatticeSpec(lx, ly, Topology.TORUS, Region.NONE)


def cylinder(lx, ly, region=Region.TOP_BOUNDARY):
    return LatticeSpec(lx, ly, Topology.CYLINDER, region)


PAULI_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_matrix(p: st.Pauli, n: int):
    m = np.array([[1.0 + 0j]])
    for q in range(n):
        xb, zb = (p.x >> q) & 1, (p.z >> q) & 1
        kind = "IXZY"[xb + 2 * zb] if xb + 2 * zb != 3 else "Y"
        m = np.kron(PAULI_MATS[kind], m)
    return p.sign * m


@pytest.mark.parametrize("a", ["X", "Y", "Z"])
@pytest.mark.parametrize("b", ["X", "Y", "Z"])
def test_pauli_product_phases(a, b):
    n = 2
    pa = st.Pauli.from_ops(n, {0: a, 1: b})
    pb = st.Pauli.from_ops(n, {0: b, 1: a})
    if pa.commutes(pb):
        got = pauli_matrix(pa.mul(pb), n)
        want = pauli_matrix(pa, n) @ pauli_matrix(pb, n)
        assert np.allclose(got, want)
    else:
        with pytest.raises(ValueError):
            pa.mul(pb)


def test_pauli_mul_regressions():
    n = 1
    x = st.Pauli.from_ops(n, {0: "X"})
    z = st.Pauli.from_ops(n, {0: "Z"})
    y = st.Pauli.from_ops(n, {0: "Y"})
    assert np.allclose(pauli_matrix(y, 1), pauli_matrix(x, 1) @ pauli_matrix(z, 1) * 1j)
    with pytest.raises(ValueError):
        x.mul(y)  # anticommuting product has no Hermitian sign
    p1 = st.Pauli.from_ops(2, {0: "X", 1: "X"})
    p2 = st.Pauli.from_ops(2, {0: "Z", 1: "Z"})
    got = pauli_matrix(p1.mul(p2), 2)
    want = pauli_matrix(p1, 2) @ pauli_matrix(p2, 2)
    assert np.allclose(got, want)


@pytest.mark.parametrize(
    "spec",
    [torus(2, 2), torus(3, 4), torus(4, 4), cylinder(3, 2), cylinder(4, 3), cylinder(4, 4)],
    ids=lambda s: f"{s.topology.value}{s.lx}x{s.ly}",
)
def test_prepare_ground_is_valid(spec):
    tab = st.prepare_wen_ground(spec)
    tab.validate()
    # every face operator is a +1 stabilizer
    for _, w, nn, e, s in spec.faces():
        factors = [
            (spec.site_index(*site), kind)
            for site, kind in ((w, "Z"), (e, "Z"), (nn, "X"), (s, "X"))
            if site is not None
        ]
        assert tab.expectation(st.Pauli.from_factors(tab.n, factors)) == 1


def test_torus_logicals_match_dense():
    """The matching-derived logical signs equal brute force on the 2x2 torus."""
    spec = torus(2, 2)
    partner, sign = build_initial_matching(spec)
    dense = DenseMajorana(spec.n_legs)
    pairs = [
        (leg, int(partner[leg]), int(sign[leg]))
        for leg in range(spec.n_legs)
        if leg < partner[leg]
    ]
    dense.prepare_matching(pairs, np.random.default_rng(3))
    for s in range(spec.n_sites):
        op = dense.g[4 * s] @ dense.g[4 * s + 1] @ dense.g[4 * s + 2] @ dense.g[4 * s + 3]
        assert dense.project(op, 1) > 1e-12
    tab = st.prepare_wen_ground(spec)
    # O1 rep: X on rows 0 and 1 via i g4 g3 (even rows) / i g1 g2 (odd rows)
    o1_legs = []
    for x in range(spec.lx):
        o1_legs += [spec.leg_index(x, 0, 3), spec.leg_index(x, 0, 2)]
    for x in range(spec.lx):
        o1_legs += [spec.leg_index(x, 1, 0), spec.leg_index(x, 1, 1)]
    op = dense.g[o1_legs[0]]
    for leg in o1_legs[1:]:
        op = op @ dense.g[leg]
    val = (1j ** (2 * spec.lx)) * np.vdot(dense.psi, op @ dense.psi)
    o1_pauli = st.Pauli.from_ops(
        tab.n, {spec.site_index(x, y): "X" for x in range(spec.lx) for y in (0, 1)}
    )
    assert abs(val.imag) < 1e-9
    assert tab.expectation(o1_pauli) == int(round(val.real))
    o2_legs = []
    for y in range(spec.ly):
        legs = (1, 3) if y % 2 == 0 else (0, 2)
        o2_legs += [spec.leg_index(0, y, legs[0]), spec.leg_index(0, y, legs[1])]
    op = dense.g[o2_legs[0]]
    for leg in o2_legs[1:]:
        op = op @ dense.g[leg]
    val = (1j ** spec.ly) * np.vdot(dense.psi, op @ dense.psi)
    o2_pauli = st.Pauli.from_ops(tab.n, {spec.site_index(0, y): "Z" for y in range(spec.ly)})
    assert abs(val.imag) < 1e-9
    assert tab.expectation(o2_pauli) == int(round(val.real))


def test_measure_stabilizer_forced_and_unchanged():
    spec = cylinder(3, 3)
    tab = st.prepare_wen_ground(spec)
    face = tab.stabs[0]
    before = [(p.x, p.z, p.sign) for p in tab.stabs]
    out, was_random = tab.measure(st.Pauli(face.x, face.z, face.sign))
    assert out == 1 and not was_random
    assert [(p.x, p.z, p.sign) for p in tab.stabs] == before


def test_measure_born_rule_fair():
    # X on a Z-stabilized qubit: roughly fair coin over many runs
    rng = trajectory_rng(77, 0)
    n = 1
    hits = 0
    runs = 4000
    for _ in range(runs):
        tab = st.StabilizerTableau.from_paulis(1, [st.Pauli.from_ops(1, {0: "Z"})])
        out, was_random = tab.measure(st.Pauli.from_ops(1, {0: "X"}), rng=rng)
        assert was_random
        hits += out == 1
    # chi-squared sanity bound, ~5 sigma
    assert abs(hits - runs / 2) < 5 * math.sqrt(runs / 4)


def test_measure_twice_identical():
    rng = trajectory_rng(78, 0)
    spec = cylinder(3, 3)
    tab = st.prepare_wen_ground(spec)
    op = st.Pauli.from_ops(tab.n, {4: "Y"})
    out1, r1 = tab.measure(op, rng=rng)
    out2, r2 = tab.measure(op, rng=rng)
    assert r1 and not r2 and out1 == out2


def test_entropy_basics():
    # |00> product state
    tab = st.StabilizerTableau.from_paulis(
        2, [st.Pauli.from_ops(2, {0: "Z"}), st.Pauli.from_ops(2, {1: "Z"})]
    )
    assert st.entropy(tab, [0]) == 0.0
    # GHZ pair
    ghz = st.StabilizerTableau.from_paulis(
        2, [st.Pauli.from_ops(2, {0: "X", 1: "X"}), st.Pauli.from_ops(2, {0: "Z", 1: "Z"})]
    )
    assert st.entropy(ghz, [0]) == pytest.approx(math.log(2))
    assert st.entropy(ghz, [1]) == pytest.approx(math.log(2))


def test_entropy_complement_symmetry():
    spec = cylinder(4, 3)
    tab = st.prepare_wen_ground(spec)
    rng = trajectory_rng(79, 0)
    for s in range(spec.lx, spec.n_sites):
        tab.measure(st.Pauli.from_ops(tab.n, {s: "Z" if s % 2 else "X"}), rng=rng)
    region = [0, 1]
    comp = [q for q in range(tab.n) if q not in region]
    assert st.entropy(tab, region) == pytest.approx(st.entropy(tab, comp))


def test_majorana_entropy_matches_qubit_entropy_on_aligned_cuts():
    spec = cylinder(4, 4)
    tab = st.prepare_wen_ground(spec)
    rng = trajectory_rng(80, 0)
    for s in range(spec.lx, spec.n_sites):
        tab.measure(st.Pauli.from_ops(tab.n, {s: "XYZ"[s % 3]}), rng=rng)
    for a, b in [(0, 1), (0, 2), (1, 3)]:
        qubits = list(range(a, b + 1))
        slots = [c for q in qubits for c in (2 * q, 2 * q + 1)]
        assert st.majorana_entropy(tab, slots) == pytest.approx(st.entropy(tab, qubits))


def test_hadamard_layer_gives_toric_frame():
    spec = torus(4, 4)
    tab = st.prepare_wen_ground(spec)
    st.apply_hadamard_layer(tab, spec)
    tab.validate()
    # after the layer, faces read as all-X (stars) / all-Z (plaquettes)
    for y, w, nn, e, s in spec.faces():
        kind = "Z" if y % 2 == 0 else "X"
        ops = {spec.site_index(*site): kind for site in (w, nn, e, s)}
        assert tab.expectation(st.Pauli.from_ops(tab.n, ops)) == 1
