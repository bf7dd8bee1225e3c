"""Compilation of a bulk measurement round into a 1+1d hybrid chain circuit.

Each measured row maps to one layer on a chain of lx qubits (2*lx virtual
Majorana modes; qubit k holds modes 2k, 2k+1).  Rows of the B sublattice act
on bonds, rows of the A sublattice act on sites,

    B row:  Y -> U1 (bond rotation),  Z -> identity,  X -> M1 (bond parity = ZZ)
    A row:  Y -> U2 (site rotation),  Z -> identity,  X -> M2 (site parity = X)

in plaquette-model basis labels (toric-code labels swap X and Z on B rows).
The chain state is tracked natively in Majorana-monomial form, which keeps
every operation strictly local in mode space (the wrap bond in particular
is an ordinary pair operation there, while its qubit form is a long string).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .lattice import LatticeSpec, Region, Topology, build_initial_matching

LN2 = math.log(2.0)

OP_KINDS = ("U1", "U2", "M1", "M2", "ID1", "ID2")


@dataclass(frozen=True)
class CircuitOp:
    """One chain operation; bond ops (from B rows) act on modes (2k+1, 2k+2),
    site ops (from A rows) on (2k, 2k+1)."""

    kind: str
    k: int
    site: int = -1  # originating bulk site index, -1 when parsed from text
    sb0: int = 1  # orientation of the site's two bonds toward the boundary,
    sb1: int = 1  # read off the initial matching; they dress the chain action

    def __post_init__(self):
        if self.kind not in OP_KINDS:
            raise ValueError(f"unknown op kind {self.kind!r}")

    @property
    def is_bond(self) -> bool:
        return self.kind in ("U1", "M1", "ID1")

    @property
    def is_measurement(self) -> bool:
        return self.kind in ("M1", "M2")


@dataclass
class CircuitSchedule:
    lx: int
    depth: int
    layers: list

    def serialize(self) -> str:
        lines = []
        for layer_idx, layer in enumerate(self.layers):
            for op in layer:
                lines.append(f"{layer_idx} {op.kind} {op.k}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, lx: int, text: str) -> "CircuitSchedule":
        layers: dict[int, list] = {}
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            layer_s, kind, k_s = line.split()
            layers.setdefault(int(layer_s), []).append(CircuitOp(kind, int(k_s)))
        depth = max(layers) + 1 if layers else 0
        return cls(lx, depth, [layers.get(i, []) for i in range(depth)])


_B_ROW_OPS = {"Y": "U1", "Z": "ID1", "X": "M1"}
_A_ROW_OPS = {"Y": "U2", "X": "M2", "Z": "ID2"}
_BASIS = "XYZ"


def compile_schedule(spec: LatticeSpec, tiles) -> CircuitSchedule:
    """Map a basis assignment on the cylinder bulk to a layered chain circuit.

    Rows are consumed from the far boundary toward the unmeasured chain; the
    compilation reads only bases, never outcomes.
    """
    if spec.topology is not Topology.CYLINDER or spec.region is not Region.TOP_BOUNDARY:
        raise ValueError("circuit compilation needs a cylinder with the chain unmeasured")
    for x in range(spec.lx):
        if tiles[spec.site_index(x, 0)] >= 0:
            raise ValueError("unmeasured boundary sites cannot carry a basis")
    partner, sign = build_initial_matching(spec)
    layers = []
    for y in range(spec.ly - 1, 0, -1):
        table = _A_ROW_OPS if y % 2 == 0 else _B_ROW_OPS
        layer = []
        for x in range(spec.lx):
            s = spec.site_index(x, y)
            code = tiles[s]
            if code < 0:
                raise ValueError(f"bulk site {(x, y)} has no basis assigned")
            sb0 = int(sign[partner[4 * s + 0]])
            sb1 = int(sign[partner[4 * s + 1]])
            layer.append(CircuitOp(table[_BASIS[code]], x, s, sb0, sb1))
        layers.append(layer)
    return CircuitSchedule(spec.lx, len(layers), layers)


# -- Majorana-monomial chain state ---------------------------------------------------


def _canonical_phase(w: int) -> int:
    # Hermitian normalization i^(w(w-1)/2) for an ascending product of w modes
    return (w * (w - 1) // 2) % 4


class Monomial:
    """Hermitian Majorana monomial sign * i^(w(w-1)/2) c_{m1} ... c_{mw}."""

    __slots__ = ("mask", "sign")

    def __init__(self, mask: int, sign: int = 1):
        self.mask = mask
        self.sign = sign

    @classmethod
    def pair(cls, a: int, b: int, value: int = 1) -> "Monomial":
        """The operator i c_a c_b with the given value (order matters)."""
        if a == b:
            raise ValueError("pair needs two distinct modes")
        return cls((1 << a) | (1 << b), value if a < b else -value)

    def weight(self) -> int:
        return self.mask.bit_count()

    def commutes(self, other: "Monomial") -> bool:
        w1, w2 = self.weight(), other.weight()
        overlap = (self.mask & other.mask).bit_count()
        return (w1 * w2 - overlap) % 2 == 0

    def mul(self, other: "Monomial", track_sign: bool = True) -> "Monomial":
        inv = 0
        if track_sign:
            m2 = other.mask
            while m2:
                b = (m2 & -m2).bit_length() - 1
                inv += (self.mask >> (b + 1)).bit_count()
                m2 &= m2 - 1
        mask3 = self.mask ^ other.mask
        if not track_sign:
            return Monomial(mask3, 1)
        e = (
            _canonical_phase(self.weight())
            + _canonical_phase(other.weight())
            - _canonical_phase(mask3.bit_count())
        ) % 4
        if e % 2:
            raise ValueError("product of anticommuting monomials is not Hermitian")
        sign = self.sign * other.sign * (1 if e == 0 else -1)
        if inv % 2:
            sign = -sign
        return Monomial(mask3, sign)


class MajoranaChain:
    """Stabilizer state of 2*n_qubits Majorana modes, tracked as monomials."""

    def __init__(self, n_qubits: int, pairs):
        """pairs: iterable of (a, b, value) meaning i c_a c_b = value."""
        self.nq = n_qubits
        self.nm = 2 * n_qubits
        self.gens = []
        self.destabs = []
        used = 0
        for a, b, v in pairs:
            self.gens.append(Monomial.pair(a, b, v))
            self.destabs.append(Monomial(1 << a, 1))
            used ^= (1 << a) | (1 << b)
        if used != (1 << self.nm) - 1 or len(self.gens) != n_qubits:
            raise ValueError("pairs must perfectly match all modes")

    def copy(self) -> "MajoranaChain":
        out = MajoranaChain.__new__(MajoranaChain)
        out.nq, out.nm = self.nq, self.nm
        out.gens = [Monomial(g.mask, g.sign) for g in self.gens]
        out.destabs = [Monomial(d.mask, d.sign) for d in self.destabs]
        return out

    def validate(self):
        for i, g in enumerate(self.gens):
            assert g.weight() % 2 == 0
            for j, h in enumerate(self.gens):
                assert g.commutes(h)
            for j, d in enumerate(self.destabs):
                assert d.commutes(g) == (i != j)

    def rotate(self, a: int, b: int, direction: int):
        """Mode rotation c_a -> dir*c_b, c_b -> -dir*c_a (a quarter turn)."""
        between = 0
        lo, hi = (a, b) if a < b else (b, a)
        for m in range(lo + 1, hi):
            between |= 1 << m
        bit_a, bit_b = 1 << a, 1 << b
        for rows, signed in ((self.gens, True), (self.destabs, False)):
            for g in rows:
                has_a = bool(g.mask & bit_a)
                has_b = bool(g.mask & bit_b)
                if has_a == has_b:
                    continue  # both present or absent: invariant
                g.mask ^= bit_a | bit_b
                if signed:
                    s = direction if has_a else -direction
                    if (g.mask & between).bit_count() % 2:
                        # moving the substituted mode to its ordered slot
                        s = -s
                    if s < 0:
                        g.sign = -g.sign

    def flip_mode(self, m: int):
        """Rewrite c_m -> -c_m in every generator (bond reorientation bookkeeping)."""
        bit = 1 << m
        for g in self.gens:
            if g.mask & bit:
                g.sign = -g.sign

    def expectation(self, op: Monomial) -> int:
        for g in self.gens:
            if not op.commutes(g):
                return 0
        acc = Monomial(0, 1)
        for i in range(self.nq):
            if not self.destabs[i].commutes(op):
                acc = acc.mul(self.gens[i])
        assert acc.mask == op.mask, "operator outside the group span"
        return acc.sign * op.sign

    def measure(self, op: Monomial, rng=None, force: int | None = None):
        pivot = -1
        for i, g in enumerate(self.gens):
            if not op.commutes(g):
                pivot = i
                break
        if pivot < 0:
            out = self.expectation(op)
            if force is not None and force != out:
                raise ValueError(f"deterministic outcome {out}, cannot force {force}")
            return out, False
        if force is not None:
            out = int(force)
        elif rng is not None:
            out = 1 if rng.random() < 0.5 else -1
        else:
            raise ValueError("random outcome needs an rng or a forced value")
        g0 = self.gens[pivot]
        for i, g in enumerate(self.gens):
            if i != pivot and not op.commutes(g):
                self.gens[i] = g.mul(g0)
        for i, d in enumerate(self.destabs):
            if i != pivot and not d.commutes(op):
                self.destabs[i] = d.mul(g0, track_sign=False)
        self.destabs[pivot] = Monomial(g0.mask, 1)
        self.gens[pivot] = Monomial(op.mask, op.sign * out)
        return out, True

    def mode_entropy(self, modes) -> float:
        """Entanglement entropy (nats) of a Majorana mode subset."""
        mode_list = sorted(set(int(m) for m in modes))
        if len(mode_list) % 2:
            raise ValueError("mode subset must have even size")
        rows = []
        for g in self.gens:
            v = 0
            for pos, m in enumerate(mode_list):
                v |= ((g.mask >> m) & 1) << pos
            rows.append(v)
        rank = 0
        basis = []
        for row in rows:
            for bvec in basis:
                row = min(row, row ^ bvec)
            if row:
                basis.append(row)
                basis.sort(reverse=True)
                rank += 1
        return (rank - len(mode_list) // 2) * LN2

    def qubit_entropy(self, qubits) -> float:
        modes = [m for q in qubits for m in (2 * q, 2 * q + 1)]
        return self.mode_entropy(modes)

    def global_parity(self) -> int:
        """Value of the total fermion parity (the Ising symmetry string)."""
        return self.expectation(Monomial((1 << self.nm) - 1, 1))


def initial_chain(spec: LatticeSpec) -> MajoranaChain:
    """Chain state induced by the far-boundary dimers (before any layer)."""
    partner, sign = build_initial_matching(spec)
    far = spec.ly - 1
    pairs = []
    for x in range(spec.lx):
        a = spec.leg_index(x, far, 3)
        b = int(partner[a])
        if b // (4 * spec.lx) != far:
            raise AssertionError("far boundary dimer expected")
        pairs.append(
            (_slot(spec, x, far, 3), _slot(spec, (b // 4) % spec.lx, far, b % 4), int(sign[a]))
        )
    return MajoranaChain(spec.lx, pairs)


def _slot(spec: LatticeSpec, x: int, y: int, leg: int) -> int:
    """Chain slot of a site leg at its interface (A sites own slots 2x, 2x+1)."""
    base = 2 * x if y % 2 == 0 else 2 * x + 1
    offset = leg - 2 if leg in (2, 3) else leg
    return (base + offset) % (2 * spec.lx)


def op_modes(op: CircuitOp, n_qubits: int) -> tuple[int, int]:
    nm = 2 * n_qubits
    if op.is_bond:
        return (2 * op.k + 1) % nm, (2 * op.k + 2) % nm
    return 2 * op.k, (2 * op.k + 1) % nm


def apply_op(chain: MajoranaChain, op: CircuitOp, outcome: int):
    """Apply one compiled operation dressed with its bulk outcome.

    The action is fully determined by the reconnection algebra: an identity
    line multiplies its strand by outcome*bond-sign, a crossing rotates with
    direction outcome*sb1 (plus a reflection when its two bond orientations
    disagree), and a measurement projects the incoming pair onto the outcome
    with the analogous fresh-dimer correction.  Returns (outcome, was_random)
    for measurements, (None, False) otherwise.
    """
    a, b = op_modes(op, chain.nq)
    if op.kind in ("ID1", "ID2"):
        if outcome * op.sb0 < 0:
            chain.flip_mode(a)
        if outcome * op.sb1 < 0:
            chain.flip_mode(b)
        return None, False
    if op.kind in ("U1", "U2"):
        chain.rotate(a, b, outcome * op.sb1)
        if op.sb0 * op.sb1 < 0:
            chain.flip_mode(a)
        return None, False
    got, was_random = chain.measure(Monomial.pair(b, a, 1), force=outcome)
    if op.sb0 * op.sb1 < 0:
        chain.flip_mode(a)
    return got, was_random


def run_schedule(
    schedule: CircuitSchedule,
    chain: MajoranaChain,
    rng=None,
    record=None,
):
    """Run all layers on the chain.

    With ``record`` (a loop-engine MeasurementRecord) every operation is
    dressed with its recorded bulk outcome and the chain's determinism must
    match the recorded forcedness; otherwise outcomes are drawn from rng
    (measurement determinism then overrides the drawn value).
    """
    for layer in schedule.layers:
        for op in layer:
            if record is not None:
                out = int(record.outcome[op.site])
            else:
                out = 1 if rng.random() < 0.5 else -1
                if op.is_measurement:
                    a, b = op_modes(op, chain.nq)
                    det = chain.expectation(Monomial.pair(b, a, 1))
                    if det != 0:
                        out = det  # forced outcomes keep their determined value
            _, was_random = apply_op(chain, op, out)
            if record is not None and op.is_measurement:
                if was_random == bool(record.forced[op.site]):
                    raise AssertionError(
                        f"chain forcedness mismatch at site {op.site} ({op.kind})"
                    )
    return chain
