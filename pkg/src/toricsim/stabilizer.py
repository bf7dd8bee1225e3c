"""Exact signed stabilizer tableau: the ground-truth engine.

Generators are bit-packed Pauli rows (python ints for the x/z bit vectors)
with the Hermitian phase convention

    P = sign * prod_j  i^(x_j z_j) X_j^(x_j) Z_j^(z_j),

so every stored operator squares to +1 and products of commuting rows stay
real.  Rows live in parallel lists (not objects) to keep the measurement
scan cheap; destabilizer rows make updates O(N^2).
"""

from __future__ import annotations

import math

from .lattice import LatticeSpec, Region, Topology, build_initial_matching
from .wick import matching_expectation

LN2 = math.log(2.0)


class Pauli:
    """Signed Hermitian Pauli string over N qubits (operator construction API)."""

    __slots__ = ("x", "z", "sign")

    def __init__(self, x: int = 0, z: int = 0, sign: int = 1):
        self.x = x
        self.z = z
        self.sign = sign

    @classmethod
    def from_ops(cls, n: int, ops: dict[int, str], sign: int = 1) -> "Pauli":
        x = z = 0
        for q, kind in ops.items():
            if not 0 <= q < n:
                raise ValueError(f"qubit {q} out of range")
            if kind in ("X", "Y"):
                x |= 1 << q
            if kind in ("Z", "Y"):
                z |= 1 << q
        return cls(x, z, sign)

    @classmethod
    def from_factors(cls, n: int, factors, sign: int = 1) -> "Pauli":
        """Product of single-site factors with XOR semantics.

        Repeats of the same kind on a site cancel cleanly (X*X = I); on the
        smallest wrapped geometries a face visits one site twice and the
        on-site constraint absorbs the pair.
        """
        x = z = 0
        for q, kind in factors:
            if not 0 <= q < n:
                raise ValueError(f"qubit {q} out of range")
            if kind in ("X", "Y"):
                x ^= 1 << q
            if kind in ("Z", "Y"):
                z ^= 1 << q
        return cls(x, z, sign)

    def commutes(self, other: "Pauli") -> bool:
        return (((self.x & other.z).bit_count() + (self.z & other.x).bit_count()) & 1) == 0

    def mul(self, other: "Pauli") -> "Pauli":
        x3, z3, s3 = _mul(self.x, self.z, self.sign, other.x, other.z, other.sign)
        return Pauli(x3, z3, s3)

    def key(self) -> tuple[int, int]:
        return (self.x, self.z)

    def label(self, n: int) -> str:
        out = []
        for q in range(n):
            xb = (self.x >> q) & 1
            zb = (self.z >> q) & 1
            out.append("IXZY"[xb + 2 * zb])
        return ("+" if self.sign > 0 else "-") + "".join(out)


def _mul(x1, z1, s1, x2, z2, s2):
    """Product of two commuting Hermitian Pauli rows."""
    x3 = x1 ^ x2
    z3 = z1 ^ z2
    t = (
        (x1 & z1).bit_count()
        + (x2 & z2).bit_count()
        - (x3 & z3).bit_count()
        + 2 * (z1 & x2).bit_count()
    ) % 4
    if t & 1:
        raise ValueError("product of anticommuting Paulis is not Hermitian")
    return x3, z3, (s1 * s2 if t == 0 else -s1 * s2)


def _y_image(img_x: Pauli, img_z: Pauli) -> Pauli:
    """Image of Y under a Clifford with the given X and Z images (Y = i X Z)."""
    x3 = img_x.x ^ img_z.x
    z3 = img_x.z ^ img_z.z
    t = (
        (img_x.x & img_x.z).bit_count()
        + (img_z.x & img_z.z).bit_count()
        - (x3 & z3).bit_count()
        + 2 * (img_x.z & img_z.x).bit_count()
    ) % 4
    assert t % 2 == 1, "X and Z images must anticommute"
    t = (t + 1) % 4  # the explicit i
    sign = img_x.sign * img_z.sign * (1 if t == 0 else -1)
    return Pauli(x3, z3, sign)


def _gf2_rank(rows) -> int:
    rank = 0
    basis = []
    for row in rows:
        for b in basis:
            if row ^ b < row:
                row ^= b
        if row:
            basis.append(row)
            basis.sort(reverse=True)
            rank += 1
    return rank


class StabilizerTableau:
    """N stabilizer + N destabilizer rows; <d_i, g_j> anticommute iff i == j."""

    __slots__ = ("n", "xs", "zs", "ss", "dxs", "dzs")

    def __init__(self, n, xs, zs, ss, dxs, dzs):
        self.n = n
        self.xs, self.zs, self.ss = xs, zs, ss
        self.dxs, self.dzs = dxs, dzs

    @classmethod
    def from_paulis(cls, n: int, stabs: list) -> "StabilizerTableau":
        xs = [p.x for p in stabs]
        zs = [p.z for p in stabs]
        ss = [p.sign for p in stabs]
        dxs, dzs = _destabilizers(n, xs, zs)
        return cls(n, xs, zs, ss, dxs, dzs)

    def copy(self) -> "StabilizerTableau":
        return StabilizerTableau(
            self.n, self.xs.copy(), self.zs.copy(), self.ss.copy(), self.dxs.copy(), self.dzs.copy()
        )

    @property
    def stabs(self) -> list:
        return [Pauli(x, z, s) for x, z, s in zip(self.xs, self.zs, self.ss)]

    def validate(self):
        n = self.n
        assert len(self.xs) == n and len(self.dxs) == n
        for i in range(n):
            for j in range(n):
                anti = ((self.xs[i] & self.zs[j]).bit_count() + (self.zs[i] & self.xs[j]).bit_count()) & 1
                assert not anti, (i, j)
                danti = ((self.dxs[i] & self.zs[j]).bit_count() + (self.dzs[i] & self.xs[j]).bit_count()) & 1
                assert danti == (i == j), (i, j)
        assert _gf2_rank([x | (z << n) for x, z in zip(self.xs, self.zs)]) == n

    # -- measurement ---------------------------------------------------------

    def expectation(self, op: Pauli) -> int:
        """<P> for a Pauli, in {-1, 0, +1} (0 when P anticommutes with the group)."""
        ox, oz = op.x, op.z
        xs, zs = self.xs, self.zs
        for i in range(self.n):
            if ((ox & zs[i]).bit_count() + (oz & xs[i]).bit_count()) & 1:
                return 0
        ax = az = 0
        asgn = 1
        dxs, dzs = self.dxs, self.dzs
        for i in range(self.n):
            if ((ox & dzs[i]).bit_count() + (oz & dxs[i]).bit_count()) & 1:
                ax, az, asgn = _mul(ax, az, asgn, xs[i], zs[i], self.ss[i])
        assert ax == ox and az == oz, "operator outside the stabilizer group span"
        return asgn * op.sign

    def measure(self, op: Pauli, rng=None, force: int | None = None):
        """Projective measurement; returns (outcome, was_random).

        ``force`` substitutes the coin flip of a genuinely random outcome and
        must match a deterministic one.
        """
        ox, oz = op.x, op.z
        xs, zs, ss = self.xs, self.zs, self.ss
        dxs, dzs = self.dxs, self.dzs
        pivot = -1
        for i in range(self.n):
            if ((ox & zs[i]).bit_count() + (oz & xs[i]).bit_count()) & 1:
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
        gx, gz, gs = xs[pivot], zs[pivot], ss[pivot]
        for i in range(pivot + 1, self.n):
            if ((ox & zs[i]).bit_count() + (oz & xs[i]).bit_count()) & 1:
                xs[i], zs[i], ss[i] = _mul(xs[i], zs[i], ss[i], gx, gz, gs)
        for i in range(self.n):
            if i != pivot and ((ox & dzs[i]).bit_count() + (oz & dxs[i]).bit_count()) & 1:
                dxs[i] ^= gx
                dzs[i] ^= gz
        dxs[pivot], dzs[pivot] = gx, gz
        xs[pivot], zs[pivot], ss[pivot] = ox, oz, op.sign * out
        return out, True

    def apply_x(self, q: int):
        """Conjugate by X_q (sign feedback layer)."""
        bit = 1 << q
        for i in range(self.n):
            if self.zs[i] & bit:
                self.ss[i] = -self.ss[i]

    def conjugate_rows(self, images: dict[int, tuple[Pauli, Pauli]]):
        """Conjugate every row by the Clifford with the given X/Z images per qubit."""
        mask = 0
        for q in images:
            mask |= 1 << q
        for i in range(self.n):
            self.xs[i], self.zs[i], self.ss[i] = _conjugate_one(
                self.xs[i], self.zs[i], self.ss[i], mask, images
            )
            self.dxs[i], self.dzs[i], _ = _conjugate_one(
                self.dxs[i], self.dzs[i], 1, mask, images
            )


def _conjugate_one(x, z, s, mask, images):
    if (x | z) & mask == 0:
        return x, z, s
    ax, az, asgn = x & ~mask, z & ~mask, s
    for q, (img_x, img_z) in images.items():
        xb = (x >> q) & 1
        zb = (z >> q) & 1
        if xb and zb:
            local = _y_image(img_x, img_z)
        elif xb:
            local = img_x
        elif zb:
            local = img_z
        else:
            continue
        ax, az, asgn = _mul(ax, az, asgn, local.x, local.z, local.sign)
    return ax, az, asgn


def _destabilizers(n: int, xs, zs):
    """Symplectic partners with <d_i, g_j> = delta_ij (anticommutation pattern)."""
    pool_x = []
    pool_z = []
    for q in range(n):
        pool_x += [1 << q, 0]
        pool_z += [0, 1 << q]
    dxs, dzs = [], []
    for gi in range(n):
        gx, gz = xs[gi], zs[gi]
        pick = -1
        for k in range(len(pool_x)):
            if ((pool_x[k] & gz).bit_count() + (pool_z[k] & gx).bit_count()) & 1:
                pick = k
                break
        if pick < 0:
            raise ValueError("generators are dependent: no symplectic partner found")
        dx, dz = pool_x.pop(pick), pool_z.pop(pick)
        for k in range(len(pool_x)):
            if ((pool_x[k] & gz).bit_count() + (pool_z[k] & gx).bit_count()) & 1:
                pool_x[k] ^= dx
                pool_z[k] ^= dz
        dxs.append(dx)
        dzs.append(dz)
    # clean up products with later generators, descending so the mixed-in
    # partner is already clean
    for i in range(n - 2, -1, -1):
        for j in range(i + 1, n):
            if ((dxs[i] & zs[j]).bit_count() + (dzs[i] & xs[j]).bit_count()) & 1:
                dxs[i] ^= dxs[j]
                dzs[i] ^= dzs[j]
    return dxs, dzs


def compute_destabilizers(n: int, stabs: list) -> list:
    dxs, dzs = _destabilizers(n, [p.x for p in stabs], [p.z for p in stabs])
    return [Pauli(x, z, 1) for x, z in zip(dxs, dzs)]


_PREP_CACHE: dict = {}


def prepare_wen_ground(spec: LatticeSpec) -> StabilizerTableau:
    """Tableau of the plaquette-model ground state for this geometry.

    Every face operator (Z on the W/E corners, X on N/S) is +1.  A cylinder
    adds the boundary dimer strings (the +-prod X rows); on the torus the two
    noncontractible string generators take the signs induced by the dimer
    orientation convention, evaluated on the initial matching.
    """
    cached = _PREP_CACHE.get(spec)
    if cached is not None:
        return cached.copy()
    tab = _prepare_wen_ground(spec)
    if len(_PREP_CACHE) > 64:
        _PREP_CACHE.clear()
    _PREP_CACHE[spec] = tab
    return tab.copy()


def _prepare_wen_ground(spec: LatticeSpec) -> StabilizerTableau:
    n = spec.n_sites
    stabs = []
    seen = set()
    for _, w, nn, e, s in spec.faces():
        factors = [
            (spec.site_index(*site), kind)
            for site, kind in ((w, "Z"), (e, "Z"), (nn, "X"), (s, "X"))
            if site is not None
        ]
        p = Pauli.from_factors(n, factors, 1)
        if p.key() in seen:
            continue
        seen.add(p.key())
        stabs.append(p)
    partner, sgn = build_initial_matching(spec)
    if spec.topology is Topology.CYLINDER:
        # boundary dimer products: +-(prod X) along each boundary row; on
        # odd-height cylinders one of them is independent of the faces
        strings = []
        top = spec.ly - 1
        for row, legs in ((0, (0, 1)), (top, (3, 2))):
            string_legs = []
            for x in range(spec.lx):
                string_legs += [spec.leg_index(x, row, legs[0]), spec.leg_index(x, row, legs[1])]
            val = matching_expectation(string_legs, spec.lx, partner, sgn)
            assert val != 0
            strings.append(
                Pauli.from_factors(n, [(spec.site_index(x, row), "X") for x in range(spec.lx)], val)
            )
        stabs = _independent_subset(stabs + strings, n)
        if len(stabs) != n:
            raise ValueError(f"generator count {len(stabs)} != {n}")
        tab = StabilizerTableau.from_paulis(n, stabs)
        for p in strings:
            if tab.expectation(Pauli(p.x, p.z, 1)) != p.sign:
                raise AssertionError("boundary string sign clashes with face set")
        return tab
    # torus: two noncontractible strings pin the ground-state sector
    o1_legs = []
    for x in range(spec.lx):
        o1_legs += [spec.leg_index(x, 0, 3), spec.leg_index(x, 0, 2)]
    for x in range(spec.lx):
        o1_legs += [spec.leg_index(x, 1, 0), spec.leg_index(x, 1, 1)]
    o1_sign = matching_expectation(o1_legs, 2 * spec.lx, partner, sgn)
    o2_legs = []
    for y in range(spec.ly):
        legs = (1, 3) if y % 2 == 0 else (0, 2)
        o2_legs += [spec.leg_index(0, y, legs[0]), spec.leg_index(0, y, legs[1])]
    o2_sign = matching_expectation(o2_legs, spec.ly, partner, sgn)
    assert o1_sign != 0 and o2_sign != 0
    o1 = Pauli.from_ops(
        n, {spec.site_index(x, y): "X" for x in range(spec.lx) for y in (0, 1)}, o1_sign
    )
    o2 = Pauli.from_ops(n, {spec.site_index(0, y): "Z" for y in range(spec.ly)}, o2_sign)
    stabs = _independent_subset(stabs, n) + [o1, o2]
    if len(stabs) != n:
        stabs = _independent_subset(stabs, n)
    if len(stabs) != n:
        raise ValueError(f"generator count {len(stabs)} != {n}")
    return StabilizerTableau.from_paulis(n, stabs)


def _independent_subset(rows: list, n: int) -> list:
    out = []
    basis = []
    for p in rows:
        v = p.x | (p.z << n)
        for b in basis:
            if v ^ b < v:
                v ^= b
        if v:
            basis.append(v)
            basis.sort(reverse=True)
            out.append(p)
    return out


def apply_hadamard_layer(tab: StabilizerTableau, spec: LatticeSpec):
    """Conjugate by H on sublattice B: X<->Z there, Y -> -Y (frame switch)."""
    mask = 0
    for s in range(spec.n_sites):
        if spec.site_xy(s)[1] % 2 == 1:
            mask |= 1 << s
    for i in range(tab.n):
        for xs, zs, track in ((tab.xs, tab.zs, True), (tab.dxs, tab.dzs, False)):
            xb = xs[i] & mask
            zb = zs[i] & mask
            if track and (xb & zb).bit_count() & 1:
                tab.ss[i] = -tab.ss[i]
            xs[i] = (xs[i] & ~mask) | zb
            zs[i] = (zs[i] & ~mask) | xb


# -- derived quantities ------------------------------------------------------------


def entropy(tab: StabilizerTableau, region) -> float:
    """Entanglement entropy (nats) of a qubit subset of a pure stabilizer state."""
    qubits = sorted(set(int(q) for q in region))
    if any(q < 0 or q >= tab.n for q in qubits):
        raise ValueError("region outside qubit range")
    if not qubits:
        return 0.0
    rows = []
    for x, z in zip(tab.xs, tab.zs):
        v = 0
        for pos, q in enumerate(qubits):
            v |= ((x >> q) & 1) << (2 * pos)
            v |= ((z >> q) & 1) << (2 * pos + 1)
        rows.append(v)
    return (_gf2_rank(rows) - len(qubits)) * LN2


def majorana_entropy(tab: StabilizerTableau, slots) -> float:
    """Entropy of a Jordan-Wigner Majorana mode subset (modes 2k, 2k+1 per qubit)."""
    slot_list = sorted(set(int(s) for s in slots))
    if len(slot_list) % 2:
        raise ValueError("Majorana subset must have even size")
    rows = []
    for x, z, in zip(tab.xs, tab.zs):
        sup = _majorana_support(x, z, tab.n)
        v = 0
        for pos, c in enumerate(slot_list):
            v |= ((sup >> c) & 1) << pos
        rows.append(v)
    return (_gf2_rank(rows) - len(slot_list) // 2) * LN2


def _majorana_support(x: int, z: int, n: int) -> int:
    """Mod-2 support of a Pauli string over 2n Majorana modes (JW convention)."""
    sup = 0
    for q in range(n):
        xb = (x >> q) & 1
        zb = (z >> q) & 1
        if xb and zb:  # Y_q = string * c_{2q+1}
            sup ^= ((1 << (2 * q)) - 1) | (1 << (2 * q + 1))
        elif xb:  # X_q = i c_{2q} c_{2q+1}
            sup ^= 3 << (2 * q)
        elif zb:  # Z_q = string * c_{2q}
            sup ^= (1 << (2 * q + 1)) - 1
    return sup


def zz_expectation(tab: StabilizerTableau, i: int, j: int) -> int:
    """<Z_i Z_j> on boundary qubits, in {-1, 0, +1}."""
    if i == j:
        return 1
    return tab.expectation(Pauli.from_ops(tab.n, {i: "Z", j: "Z"}, 1))


def oracle_ea_order(tab: StabilizerTableau, sites) -> float:
    """Edwards-Anderson order over the given qubit chain (ordered pairs, diag included)."""
    sites = list(sites)
    total = len(sites)
    for a in range(len(sites)):
        for b in range(a + 1, len(sites)):
            total += 2 * zz_expectation(tab, sites[a], sites[b]) ** 2
    return total / len(sites)


def measure_pauli(tab: StabilizerTableau, spec: LatticeSpec, site, basis: str, rng=None, force=None):
    """Measure a single-site Pauli (plaquette-model frame) at the given site."""
    q = spec.site_index(*site) if isinstance(site, tuple) else int(site)
    return tab.measure(Pauli.from_ops(tab.n, {q: basis}, 1), rng=rng, force=force)
