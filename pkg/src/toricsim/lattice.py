"""Lattice geometry, parton leg indexing, and the measurement-protocol translation.

The vertex model lives on a square lattice drawn in diamond orientation:
row ``y`` holds ``lx`` sites (x periodic), odd rows are offset by half a
lattice spacing, and every bond connects sites in adjacent rows.  Each site
carries four Majorana legs on its four diagonal bonds:

    leg 0 = SW (down-left)   leg 1 = SE (down-right)
    leg 2 = NW (up-left)     leg 3 = NE (up-right)

With this layout the single-site bilinear dictionary holds literally,

    X = i g1 g2 = i g4 g3,   Y = i g2 g3 = i g4 g1,   Z = i g1 g3 = i g2 g4

(1-based leg labels), rows alternate sublattice (even rows A, odd rows B),
and the three measurement tiles are the two avoided-crossing patterns (X, Z)
plus the crossing pattern (Y) of the packed loop model.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .wick import global_constraint_parity

LEG_SW, LEG_SE, LEG_NW, LEG_NE = 0, 1, 2, 3

# Tile leg pairs, 0-based: first pair carries the Pauli outcome, second is
# forced by the on-site parity constraint.
TILE_PAIRS = {
    "X": ((LEG_SW, LEG_SE), (LEG_NE, LEG_NW)),
    "Y": ((LEG_SE, LEG_NW), (LEG_NE, LEG_SW)),
    "Z": ((LEG_SW, LEG_NW), (LEG_SE, LEG_NE)),
}

BASIS_CODES = {"X": 0, "Y": 1, "Z": 2}
BASIS_NAMES = ("X", "Y", "Z")

# Initial dimer orientations: +1 means i*g(lower leg)*g(upper leg) = +1 for
# bulk bonds, i*g(left leg)*g(right leg) = sign for boundary dimers.  These
# values make every face stabilizer +1 (checked in tests against the dense
# fermion oracle).
BULK_BOND_SIGN = 1
TOP_DIMER_SIGN = -1
BOTTOM_DIMER_SIGN = 1


class Topology(enum.Enum):
    TORUS = "torus"
    CYLINDER = "cylinder"


class Sublattice(enum.Enum):
    A = "A"
    B = "B"


class Region(enum.Enum):
    NONE = "none"
    TWO_SITES = "two_sites"
    TOP_BOUNDARY = "top_boundary"
    BOTH_BOUNDARIES = "both_boundaries"


@dataclass(frozen=True)
class LatticeSpec:
    """Geometry of one experiment: lx sites per row, ly rows.

    On a cylinder x is periodic and y is open; the torus additionally
    requires ly even so the sublattice structure closes around the wrap.
    ``sector`` picks the dimer-orientation (logical) sector by flipping all
    bond orientations across the x / y wrap seams.
    """

    lx: int
    ly: int
    topology: Topology = Topology.CYLINDER
    region: Region = Region.TOP_BOUNDARY
    two_sites: tuple[tuple[int, int], tuple[int, int]] | None = None
    sector: tuple[int, int] = (1, 1)

    def __post_init__(self):
        if self.lx < 2 or self.ly < 2:
            raise ValueError("lattice needs lx >= 2 and ly >= 2")
        if self.topology is Topology.TORUS and self.ly % 2:
            raise ValueError("torus needs even ly (rows alternate sublattice)")
        if self.topology is Topology.TORUS and self.region in (
            Region.TOP_BOUNDARY,
            Region.BOTH_BOUNDARIES,
        ):
            raise ValueError("boundary regions need a cylinder")
        if self.region is Region.TWO_SITES:
            if self.two_sites is None:
                raise ValueError("two_sites region needs the two site coordinates")
            i, j = self.two_sites
            if i == j:
                raise ValueError("two_sites must be distinct")
            for s in (i, j):
                if not self.contains(s):
                    raise ValueError(f"site {s} outside lattice")
        if self.sector[0] not in (1, -1) or self.sector[1] not in (1, -1):
            raise ValueError("sector entries must be +-1")

    # -- indexing ---------------------------------------------------------

    @property
    def n_sites(self) -> int:
        return self.lx * self.ly

    @property
    def n_legs(self) -> int:
        return 4 * self.n_sites

    def contains(self, site: tuple[int, int]) -> bool:
        x, y = site
        return 0 <= x < self.lx and 0 <= y < self.ly

    def site_index(self, x: int, y: int) -> int:
        return (y % self.ly) * self.lx + (x % self.lx)

    def site_xy(self, idx: int) -> tuple[int, int]:
        return idx % self.lx, idx // self.lx

    def leg_index(self, x: int, y: int, leg: int) -> int:
        return 4 * self.site_index(x, y) + leg

    def up_neighbor(self, x: int, y: int, side: int) -> tuple[int, int]:
        """Site reached from (x, y) going up-left (side=0) or up-right (side=1)."""
        if y % 2 == 0:
            nx = x - 1 + side
        else:
            nx = x + side
        return nx % self.lx, y + 1

    def measured_sites(self) -> np.ndarray:
        """Boolean mask over site indices: True where the bulk sweep measures.

        The distinguished unmeasured chain is row 0 (sublattice A for every
        height, so its qubit frame is the toric-code frame); the sweep runs
        through the bulk toward it.
        """
        mask = np.ones(self.n_sites, dtype=bool)
        if self.region is Region.TWO_SITES:
            for s in self.two_sites:
                mask[self.site_index(*s)] = False
        elif self.region is Region.TOP_BOUNDARY:
            mask[: self.lx] = False
        elif self.region is Region.BOTH_BOUNDARIES:
            mask[: self.lx] = False
            mask[(self.ly - 1) * self.lx :] = False
        return mask

    def sweep_order(self) -> np.ndarray:
        """Site visit order: far row first, advancing toward the row-0 boundary."""
        order = np.empty(self.n_sites, dtype=np.int64)
        k = 0
        for y in range(self.ly - 1, -1, -1):
            for x in range(self.lx):
                order[k] = y * self.lx + x
                k += 1
        return order

    # -- faces (used by the stabilizer oracle) ----------------------------

    def faces(self):
        """Yield (center_row, W, N, E, S) site tuples; N or S is None when truncated.

        Face with center row y has its W/E corners in row y, N in row y+1 and
        S in row y-1; the boundary rows of a cylinder lose N or S and are
        closed by the truncated boundary dimers instead.
        """
        for y in range(self.ly):
            for x in range(self.lx):
                w = (x, y)
                if y % 2 == 0:
                    n = (x, y + 1)
                    e = ((x + 1) % self.lx, y)
                    s = (x, y - 1)
                else:
                    n = ((x + 1) % self.lx, y + 1)
                    e = ((x + 1) % self.lx, y)
                    s = ((x + 1) % self.lx, y - 1)
                if self.topology is Topology.TORUS:
                    yield y, w, (n[0], n[1] % self.ly), e, (s[0], s[1] % self.ly)
                else:
                    yield y, w, (n if y < self.ly - 1 else None), e, (s if y > 0 else None)


@dataclass(frozen=True)
class Protocol:
    """Per-site Pauli-basis distribution of the toric-code measurement scheme.

    In ``pauli_pq`` mode a site is measured along Z, Y, X with probabilities
    (1-q)(1-p), p, q(1-p).  ``general`` mode carries an axis distribution
    (axes, antipodally identified) handled by the gaussian engine.
    """

    p: float
    q: float
    mode: str = "pauli_pq"
    axis_sampler: object = field(default=None, compare=False)

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0 and 0.0 <= self.q <= 1.0):
            raise ValueError("p and q must be probabilities")
        if self.mode not in ("pauli_pq", "general"):
            raise ValueError(f"unknown protocol mode {self.mode!r}")


def sublattice_of(spec: LatticeSpec, site: tuple[int, int]) -> Sublattice:
    """Sublattice label of a site; rows alternate A (even y) and B (odd y)."""
    if not spec.contains(site):
        raise ValueError(f"site {site} outside lattice")
    return Sublattice.A if site[1] % 2 == 0 else Sublattice.B


def translate_protocol(protocol: Protocol, model: str) -> dict[Sublattice, dict[str, float]]:
    """Per-sublattice (X, Y, Z) probabilities for the requested model.

    The toric-code (p, q) scheme is uniform; going to the plaquette model the
    Hadamard layer on sublattice B swaps X and Z there, i.e. B follows the
    (p, 1-q) scheme.
    """
    if protocol.mode != "pauli_pq":
        raise ValueError("translate_protocol needs pauli_pq mode")
    p, q = protocol.p, protocol.q
    toric = {"X": q * (1 - p), "Y": p, "Z": (1 - q) * (1 - p)}
    if model == "toric_code":
        return {Sublattice.A: dict(toric), Sublattice.B: dict(toric)}
    if model == "wen_plaquette":
        swapped = {"X": toric["Z"], "Y": toric["Y"], "Z": toric["X"]}
        return {Sublattice.A: dict(toric), Sublattice.B: swapped}
    raise ValueError(f"unknown model {model!r}")


_MATCHING_CACHE: dict = {}


def build_initial_matching(spec: LatticeSpec):
    """Initial Majorana perfect matching of the pre-measurement ground state.

    Returns fresh (partner, sign) int arrays over leg indices.  ``sign[a]``
    stores the value of i*g_a*g_partner(a); flipping the endpoint order flips
    it.  Bulk bonds carry the uniform diagonal-line orientation; a cylinder
    closes its boundary rows with nearest-neighbor dimers.
    """
    cached = _MATCHING_CACHE.get(spec)
    if cached is not None:
        return cached[0].copy(), cached[1].copy()
    partner, sign = _build_initial_matching(spec)
    if len(_MATCHING_CACHE) > 64:
        _MATCHING_CACHE.clear()
    _MATCHING_CACHE[spec] = (partner, sign)
    return partner.copy(), sign.copy()


def _build_initial_matching(spec: LatticeSpec):
    n = spec.n_legs
    partner = np.full(n, -1, dtype=np.int64)
    sign = np.zeros(n, dtype=np.int8)
    sx, sy = spec.sector

    def pair(a: int, b: int, s: int):
        partner[a], partner[b] = b, a
        sign[a], sign[b] = s, -s

    top_row = spec.ly - 1
    for y in range(spec.ly):
        for x in range(spec.lx):
            if y == top_row and spec.topology is Topology.CYLINDER:
                continue
            for side, leg in ((0, LEG_NW), (1, LEG_NE)):
                nx, ny = spec.up_neighbor(x, y, side)
                s = BULK_BOND_SIGN
                # orientation flips across wrap seams select the sector
                if y % 2 == 0 and side == 0 and x == 0 and sx == -1:
                    s = -s
                if y % 2 == 1 and side == 1 and x == spec.lx - 1 and sx == -1:
                    s = -s
                if y == spec.ly - 1 and sy == -1:  # torus y-wrap
                    s = -s
                upper_leg = LEG_SE if side == 0 else LEG_SW
                pair(
                    spec.leg_index(x, y, leg),
                    spec.leg_index(nx, ny % spec.ly, upper_leg),
                    s,
                )
    if spec.topology is Topology.CYLINDER:
        for x in range(spec.lx):
            pair(
                spec.leg_index(x, top_row, LEG_NE),
                spec.leg_index((x + 1) % spec.lx, top_row, LEG_NW),
                TOP_DIMER_SIGN,
            )
            pair(
                spec.leg_index(x, 0, LEG_SE),
                spec.leg_index((x + 1) % spec.lx, 0, LEG_SW),
                BOTTOM_DIMER_SIGN,
            )
        if spec.ly % 2 == 0:
            # antiperiodic twist across the x-seam: without it the product of
            # all on-site constraints evaluates to -1 and the projected state
            # vanishes; the twist flips ly+1 bonds, all faces stay +1
            last = spec.lx - 1
            seam = [
                (spec.leg_index(last, top_row, LEG_NE), spec.leg_index(0, top_row, LEG_NW)),
                (spec.leg_index(last, 0, LEG_SE), spec.leg_index(0, 0, LEG_SW)),
            ]
            for y in range(spec.ly - 1):
                if y % 2 == 0:
                    seam.append(
                        (spec.leg_index(0, y, LEG_NW), spec.leg_index(spec.lx - 1, y + 1, LEG_SE))
                    )
                else:
                    seam.append(
                        (spec.leg_index(spec.lx - 1, y, LEG_NE), spec.leg_index(0, y + 1, LEG_SW))
                    )
            for a, b in seam:
                assert partner[a] == b
                sign[a] = -sign[a]
                sign[b] = -sign[b]
    assert (partner >= 0).all() and (np.abs(sign) == 1).all()
    assert global_constraint_parity(partner, sign) == 1
    return partner, sign
