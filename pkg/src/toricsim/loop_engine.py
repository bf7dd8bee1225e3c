"""Majorana pairing dynamics under single-site Pauli measurement tiles.

The state is a signed perfect matching on all parton legs.  Measuring the
bilinear i*g_a*g_b of a fresh pair reconnects (k,a),(l,b) into (a,b),(k,l);
the algebra fixes i*g_k*g_l = -m*s1*s2 from the prior signs s1 = i*g_k*g_a,
s2 = i*g_l*g_b and the outcome m (rule calibrated against the dense fermion
oracle in the tests).

A tile outcome is not always a fair coin: the on-site parity constraints of
sites that are still unmeasured can close a loop through the current site
and determine the result.  ``_forced_value`` detects this by growing the
bilinear's support through pending-site constraint quadruples until it
either closes under the matching (determined, value evaluated by Wick
pairing) or revisits a site (free).  Forced outcomes never consume
randomness, which keeps trajectories aligned with the stabilizer oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import (
    BASIS_NAMES,
    LEG_NE,
    LEG_NW,
    LEG_SE,
    LEG_SW,
    LatticeSpec,
    Protocol,
    Region,
    Sublattice,
    TILE_PAIRS,
    build_initial_matching,
    translate_protocol,
)
from .rng import sign_buffer
from .wick import _matching_value, matching_expectation

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a normal dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


LN2 = math.log(2.0)

# tile tables indexed by basis code 0=X,1=Y,2=Z; first pair carries the outcome
_TILES = (TILE_PAIRS["X"], TILE_PAIRS["Y"], TILE_PAIRS["Z"])
_P1A = np.array([t[0][0] for t in _TILES], dtype=np.int64)
_P1B = np.array([t[0][1] for t in _TILES], dtype=np.int64)
_P2A = np.array([t[1][0] for t in _TILES], dtype=np.int64)
_P2B = np.array([t[1][1] for t in _TILES], dtype=np.int64)

N_LOOP_BUCKETS = 64


class CalibrationError(RuntimeError):
    """A forced outcome disagreed with the propagated sign."""


# -- njit core helpers ---------------------------------------------------------


@njit(cache=True)
def _forced_value(partner, sign, measured, site, a, b, in_string, legs_buf):
    """Value of i*g_a*g_b when the pending-site constraints determine it, else 0.

    Grows the support {a, b} by whole constraint quadruples of unmeasured
    sites until every Majorana's partner lies inside (then the operator times
    those constraints is a product of matched pairs, hence determined) or the
    growth revisits a site / hits the current one (free).
    """
    legs_buf[0] = a
    legs_buf[1] = b
    n_str = 2
    in_string[a] = 1
    in_string[b] = 1
    value = 0
    idx = 0
    closed = True
    while idx < n_str:
        u = legs_buf[idx]
        v = partner[u]
        if in_string[v] == 0:
            k = v // 4
            if k == site or measured[k] == 1 or in_string[4 * k] == 1:
                closed = False
                break
            for leg in range(4 * k, 4 * k + 4):
                legs_buf[n_str] = leg
                in_string[leg] = 1
                n_str += 1
        idx += 1
    if closed:
        value = _matching_value(legs_buf, n_str, 1, partner, sign)
    for i in range(n_str):
        in_string[legs_buf[i]] = 0
    return value


@njit(cache=True)
def _reconnect(partner, sign, lengths, a, b, m):
    """Fresh-pair measurement update; caller guarantees partner[a] != b."""
    k = partner[a]
    l = partner[b]
    s1 = sign[k]
    s2 = sign[l]
    partner[a] = b
    partner[b] = a
    sign[a] = m
    sign[b] = -m
    skl = -m * s1 * s2
    partner[k] = l
    partner[l] = k
    sign[k] = skl
    sign[l] = -skl
    new_len = lengths[k] + lengths[l] + 1
    lengths[k] = new_len
    lengths[l] = new_len
    lengths[a] = 1
    lengths[b] = 1


@njit(cache=True)
def _sweep_kernel(partner, sign, lengths, measured, tiles, order, coin, outcome_out, forced_out, hist, in_string, legs_buf, exact):
    used = 0
    for idx in range(order.size):
        s = order[idx]
        t = tiles[s]
        if t < 0:
            continue
        base = 4 * s
        a1 = base + _P1A[t]
        b1 = base + _P1B[t]
        a2 = base + _P2A[t]
        b2 = base + _P2B[t]
        m = 0
        if exact:
            # constraint-string detection of predetermined outcomes; costly
            # on large lattices, and only sign observables need it
            m = _forced_value(partner, sign, measured, s, a1, b1, in_string, legs_buf)
            if m == 0:
                m = _forced_value(partner, sign, measured, s, a2, b2, in_string, legs_buf)
        elif partner[a1] == b1:
            m = sign[a1]
        elif partner[a2] == b2:
            m = sign[a2]
        if m == 0:
            m = coin[used]
            used += 1
            forced_out[s] = False
        else:
            forced_out[s] = True
        for half in range(2):
            a = a1 if half == 0 else a2
            b = b1 if half == 0 else b2
            if partner[a] == b:
                if exact and sign[a] != m:
                    return used, s
                ln = lengths[a] + 1
                bucket = 0
                while ln > 1 and bucket < N_LOOP_BUCKETS - 1:
                    ln >>= 1
                    bucket += 1
                hist[bucket] += 1
            else:
                _reconnect(partner, sign, lengths, a, b, m)
        measured[s] = 1
        outcome_out[s] = m
    return used, -1


# -- state ----------------------------------------------------------------------


@dataclass
class PairingState:
    """Signed perfect matching; sign[a] stores i*g_a*g_partner(a)."""

    spec: LatticeSpec
    partner: np.ndarray
    sign: np.ndarray
    lengths: np.ndarray
    measured: np.ndarray  # uint8 per site, 1 after its tile was applied
    frontier: np.ndarray  # bool per leg, True on unmeasured-region sites

    def copy(self) -> "PairingState":
        return PairingState(
            self.spec,
            self.partner.copy(),
            self.sign.copy(),
            self.lengths.copy(),
            self.measured.copy(),
            self.frontier.copy(),
        )

    def check_matching(self):
        p = self.partner
        assert (p[p] == np.arange(p.size)).all(), "partner not an involution"
        assert (p != np.arange(p.size)).all(), "fixed point in matching"
        assert (self.sign[p] == -self.sign).all(), "orientation signs inconsistent"


@dataclass
class MeasurementRecord:
    """Per-site basis (code into BASIS_NAMES) and outcome, in application order."""

    order: np.ndarray
    basis: np.ndarray
    outcome: np.ndarray
    forced: np.ndarray

    def entries(self):
        for s in self.order:
            if self.basis[s] >= 0:
                yield int(s), BASIS_NAMES[self.basis[s]], int(self.outcome[s])


@dataclass
class LoopStats:
    """Order-insensitive accumulator; merging is associative."""

    samples: int = 0
    g4_hits: int = 0
    spanning_total: int = 0
    cut_strands: dict = field(default_factory=dict)
    loop_length_hist: np.ndarray = field(
        default_factory=lambda: np.zeros(N_LOOP_BUCKETS, dtype=np.int64)
    )

    def merge(self, other: "LoopStats") -> "LoopStats":
        out = LoopStats(
            samples=self.samples + other.samples,
            g4_hits=self.g4_hits + other.g4_hits,
            spanning_total=self.spanning_total + other.spanning_total,
            cut_strands=dict(self.cut_strands),
            loop_length_hist=self.loop_length_hist + other.loop_length_hist,
        )
        for k, v in other.cut_strands.items():
            out.cut_strands[k] = out.cut_strands.get(k, 0) + v
        return out


def fresh_state(spec: LatticeSpec) -> PairingState:
    partner, sign = build_initial_matching(spec)
    lengths = np.ones(spec.n_legs, dtype=np.int64)
    measured = np.zeros(spec.n_sites, dtype=np.uint8)
    frontier = np.repeat(~spec.measured_sites(), 4)
    return PairingState(spec, partner, sign, lengths, measured, frontier)


# -- single-shot operations -------------------------------------------------------


def measure_bilinear(state: PairingState, a: int, b: int, rng=None, outcome=None):
    """Measure i*g_a*g_b as a raw pair update; returns (outcome, forced).

    A pre-existing pair (a,b) is a determined bilinear: its stored sign is
    returned and nothing changes.  Otherwise the outcome is the given one or
    a fair coin and the two prior pairs are reconnected.  Constraint-string
    forcing is the tile level's job (apply_tile); this is the primitive.
    """
    if a == b:
        raise ValueError("bilinear needs two distinct Majoranas")
    if state.frontier[a] or state.frontier[b]:
        raise ValueError("cannot measure a bilinear on an unmeasured site's leg")
    partner, sign = state.partner, state.sign
    if partner[a] == b:
        m = int(sign[a])
        if outcome is not None and outcome != m:
            raise CalibrationError(f"determined bilinear is {m}, outcome {outcome} impossible")
        return m, True
    if outcome is None:
        outcome = 1 if rng.random() < 0.5 else -1
    m = int(outcome)
    _reconnect(partner, sign, state.lengths, int(a), int(b), m)
    return m, False


def tile_forced_value(state: PairingState, site_idx: int, basis: str) -> int:
    """Predetermined outcome of measuring ``basis`` at the site, or 0 if free."""
    (a1, b1), (a2, b2) = TILE_PAIRS[basis]
    base = 4 * site_idx
    scratch = np.zeros(state.spec.n_legs, dtype=np.uint8)
    buf = np.empty(state.spec.n_legs + 2, dtype=np.int64)
    v = _forced_value(state.partner, state.sign, state.measured, site_idx, base + a1, base + b1, scratch, buf)
    if v == 0:
        v = _forced_value(state.partner, state.sign, state.measured, site_idx, base + a2, base + b2, scratch, buf)
    return int(v)


def apply_tile(state: PairingState, site: tuple[int, int], basis: str, rng=None, outcome=None):
    """Measure one Pauli on a site: two bilinears, the second forced to the first.

    The outcome is the stored/constraint-determined value when one exists
    (asserted against ``outcome`` if also given), else the supplied outcome,
    else a fair coin.  Returns (outcome, forced).
    """
    spec = state.spec
    s = spec.site_index(*site)
    if state.measured[s]:
        raise ValueError(f"site {site} already measured")
    if state.frontier[4 * s]:
        raise ValueError(f"site {site} is in the unmeasured region")
    v = tile_forced_value(state, s, basis)
    forced = v != 0
    if forced:
        if outcome is not None and outcome != v:
            raise CalibrationError(f"outcome {outcome} impossible: tile determined to {v}")
        m = v
    elif outcome is not None:
        m = int(outcome)
    else:
        m = 1 if rng.random() < 0.5 else -1
    (a1, b1), (a2, b2) = TILE_PAIRS[basis]
    base = 4 * s
    for a, b in ((base + a1, base + b1), (base + a2, base + b2)):
        got, _ = measure_bilinear(state, a, b, outcome=m)
        if got != m:
            raise CalibrationError("tile bilinears disagree")
    state.measured[s] = 1
    return m, forced


# -- batched sweep (hot path) ------------------------------------------------------


def sample_tiles(spec: LatticeSpec, protocol: Protocol, rng) -> np.ndarray:
    """Basis code per site (-1 at unmeasured sites), staggered per sublattice."""
    probs = translate_protocol(protocol, "wen_plaquette")
    u = rng.random(spec.n_sites)
    tiles = np.empty(spec.n_sites, dtype=np.int8)
    for y in range(spec.ly):
        pr = probs[Sublattice.A if y % 2 == 0 else Sublattice.B]
        px, py = pr["X"], pr["Y"]
        row = slice(y * spec.lx, (y + 1) * spec.lx)
        uy = u[row]
        tiles[row] = np.where(uy < px, 0, np.where(uy < px + py, 1, 2))
    tiles[~spec.measured_sites()] = -1
    return tiles


def run_bulk_sweep(spec: LatticeSpec, protocol: Protocol, rng, tiles=None, exact: bool = True):
    """Sweep over all measured sites (far row first); returns (state, record, stats).

    ``exact`` enables constraint-string detection of predetermined outcomes,
    which sign observables and oracle comparisons require; strand
    connectivity (and every entropy/order estimator built on it) is
    outcome-independent, so large-scale runs use exact=False.
    """
    state = fresh_state(spec)
    if tiles is None:
        tiles = sample_tiles(spec, protocol, rng)
    n_meas = int((tiles >= 0).sum())
    coin = sign_buffer(rng, n_meas)
    outcome_out = np.zeros(spec.n_sites, dtype=np.int8)
    forced_out = np.zeros(spec.n_sites, dtype=np.bool_)
    hist = np.zeros(N_LOOP_BUCKETS, dtype=np.int64)
    in_string = np.zeros(spec.n_legs, dtype=np.uint8)
    legs_buf = np.empty(spec.n_legs + 2, dtype=np.int64)
    order = spec.sweep_order()
    used, err = _sweep_kernel(
        state.partner,
        state.sign,
        state.lengths,
        state.measured,
        tiles,
        order,
        coin,
        outcome_out,
        forced_out,
        hist,
        in_string,
        legs_buf,
        exact,
    )
    if err >= 0:
        raise CalibrationError(f"forced-bilinear mismatch at site index {err}")
    record = MeasurementRecord(
        order=order,
        basis=tiles.copy(),
        outcome=outcome_out,
        forced=forced_out,
    )
    stats = LoopStats(samples=1, loop_length_hist=hist)
    return state, record, stats


def replay_sweep(spec: LatticeSpec, record: MeasurementRecord):
    """Re-run a sweep forcing the recorded outcomes (for cross-engine checks)."""
    state = fresh_state(spec)
    for s in record.order:
        if record.basis[s] < 0:
            continue
        m, _ = apply_tile(
            state, spec.site_xy(int(s)), BASIS_NAMES[record.basis[s]], outcome=int(record.outcome[s])
        )
        if m != record.outcome[s]:
            raise CalibrationError("replayed outcome mismatch")
    return state


# -- loop-model observables -----------------------------------------------------------


def _boundary_slots(spec: LatticeSpec, row: int = 0, legs=(LEG_NW, LEG_NE)) -> np.ndarray:
    out = np.empty(2 * spec.lx, dtype=np.int64)
    for x in range(spec.lx):
        out[2 * x] = spec.leg_index(x, row, legs[0])
        out[2 * x + 1] = spec.leg_index(x, row, legs[1])
    return out


def _require(state: PairingState, region: Region, what: str):
    if state.spec.region is not region:
        raise ValueError(f"{what} needs unmeasured region {region.value}")
    if not state.measured[state.spec.measured_sites()].all():
        raise ValueError(f"{what} needs a completed bulk sweep")


def classify_two_site(state: PairingState) -> str:
    """Strand class between the two unmeasured sites: 'a' (0), 'b' (2) or 'c' (4)."""
    _require(state, Region.TWO_SITES, "classify_two_site")
    spec = state.spec
    si, sj = (spec.site_index(*s) for s in spec.two_sites)
    cross = sum(1 for a in range(4 * si, 4 * si + 4) if state.partner[a] // 4 == sj)
    if cross not in (0, 2, 4):
        raise AssertionError(f"odd inter-site strand count {cross}")
    return {0: "a", 2: "b", 4: "c"}[cross]


def two_site_mie(state: PairingState) -> float:
    return LN2 if classify_two_site(state) == "c" else 0.0


def spanning_number(state: PairingState) -> int:
    """Strands connecting the two unmeasured boundaries of the cylinder."""
    _require(state, Region.BOTH_BOUNDARIES, "spanning_number")
    spec = state.spec
    near = _boundary_slots(spec, 0, (LEG_NW, LEG_NE))
    far_start = (spec.ly - 1) * spec.lx
    n = sum(1 for a in near if state.partner[a] // 4 >= far_start)
    if n % 2:
        raise AssertionError("spanning count must be even")
    return n


def two_boundary_mie(state: PairingState) -> float:
    n = spanning_number(state)
    return max(n - 2, 0) * LN2 / 2.0


def boundary_cut_entropy(state: PairingState, cut: tuple[int, int]) -> float:
    """Entropy (nats) of the contiguous boundary interval cut=(start, length)."""
    _require(state, Region.TOP_BOUNDARY, "boundary_cut_entropy")
    spec = state.spec
    start, length = cut
    if not (0 <= length <= spec.lx):
        raise ValueError("cut length out of range")
    inside = np.zeros(spec.lx, dtype=bool)
    for d in range(length):
        inside[(start + d) % spec.lx] = True
    n = 0
    for x in range(spec.lx):
        for leg in (LEG_NW, LEG_NE):
            b = state.partner[spec.leg_index(x, 0, leg)]
            bx, by = spec.site_xy(b // 4)
            if by != 0 or (b % 4) not in (LEG_NW, LEG_NE):
                raise AssertionError("boundary strand leaked into the bulk")
            if inside[x] != inside[bx]:
                n += 1
    # each crossing strand is seen from both of its endpoints
    assert n % 2 == 0
    return (n // 2) * LN2 / 2.0


def _slot_positions(state: PairingState) -> np.ndarray:
    """Partner positions within the boundary slot ordering (top boundary)."""
    spec = state.spec
    slots = _boundary_slots(spec)
    pos_of = {int(l): i for i, l in enumerate(slots)}
    q = np.empty(slots.size, dtype=np.int64)
    for i, l in enumerate(slots):
        q[i] = pos_of[int(state.partner[l])]
    return q


def _zz_connected_next(q: np.ndarray, i: int, lx: int) -> int:
    """Smallest j > i with slots (2i+1 .. 2j) internally matched, or -1."""
    lo = 2 * i + 1
    open_cnt = 0
    for pos in range(lo, 2 * lx):
        mate = q[pos]
        if lo <= mate < pos:
            open_cnt -= 1
        else:
            open_cnt += 1
        if pos % 2 == 0 and open_cnt == 0:
            return pos // 2
    return -1


def zz_classes(state: PairingState) -> list[list[int]]:
    """Site classes with pairwise nonzero ZZ correlations (interval criterion)."""
    _require(state, Region.TOP_BOUNDARY, "zz_classes")
    lx = state.spec.lx
    q = _slot_positions(state)
    seen = np.zeros(lx, dtype=bool)
    classes = []
    for i in range(lx):
        if seen[i]:
            continue
        c = [i]
        seen[i] = True
        j = i
        while True:
            j = _zz_connected_next(q, j, lx)
            if j < 0:
                break
            c.append(j)
            seen[j] = True
        classes.append(c)
    return classes


def projected_expectation(state: PairingState, legs, i_power: int, blocked=()) -> int:
    """Value of a Hermitian Majorana monomial on the constraint-projected state.

    The monomial is dressed with whole constraint quadruples of unmeasured
    sites until it closes under the matching (then Wick-evaluated) or the
    growth hits a blocked/revisited site (undetermined, returns 0).
    """
    in_string = set(int(l) for l in legs)
    buf = [int(l) for l in legs]
    absorbed = set()
    idx = 0
    while idx < len(buf):
        v = int(state.partner[buf[idx]])
        if v not in in_string:
            k = v // 4
            if k in blocked or k in absorbed or state.measured[k]:
                return 0
            absorbed.add(k)
            for leg in range(4 * k, 4 * k + 4):
                buf.append(leg)
                in_string.add(leg)
        idx += 1
    return matching_expectation(buf, i_power, state.partner, state.sign)


_Z_REPS = ((LEG_SW, LEG_NW), (LEG_SE, LEG_NE))  # Z = i g1 g3 = i g2 g4


def zz_sign(state: PairingState, i: int, j: int) -> int:
    """Value of Z_i Z_j on the boundary chain, 0 when not a stabilizer.

    Each Z has two bilinear representatives; the physical value is the one
    whose dressed monomial closes (representative choice absorbs the sites'
    own constraints, so all four combinations cover the group).
    """
    spec = state.spec
    si, sj = spec.site_index(i, 0), spec.site_index(j, 0)
    for ra, rb in _Z_REPS:
        for rc, rd in _Z_REPS:
            legs = [4 * si + ra, 4 * si + rb, 4 * sj + rc, 4 * sj + rd]
            v = projected_expectation(state, legs, 2, blocked=(si, sj))
            if v != 0:
                return v
    return 0


def zz_stabilizer_set(state: PairingState) -> list[tuple[int, int, int]]:
    """Independent Z_i Z_j stabilizer generators (i < j) with their signs.

    Edges join consecutive members of each connected class; for crossing-free
    sweeps this reduces to the directly partnered boundary strands.
    """
    out = []
    for c in zz_classes(state):
        for i, j in zip(c, c[1:]):
            s = zz_sign(state, i, j)
            assert s != 0
            out.append((i, j, s))
    return out


def ea_order(state: PairingState) -> float:
    """Edwards-Anderson order: (1/L) sum over ordered pairs (incl. i=j) of <ZiZj>^2."""
    lx = state.spec.lx
    total = lx  # diagonal terms
    for c in zz_classes(state):
        total += len(c) * (len(c) - 1)
    return total / lx


def watermelon_g4(
    spec: LatticeSpec,
    protocol: Protocol,
    sites: tuple[tuple[int, int], tuple[int, int]],
    samples: int,
    rng,
    batches: int = 32,
):
    """Monte Carlo estimate of the 4-strand connection probability between two sites."""
    if sites[0] == sites[1]:
        raise ValueError("watermelon correlator needs distinct sites")
    if samples < 1:
        raise ValueError("samples must be positive")
    two_spec = LatticeSpec(
        spec.lx, spec.ly, spec.topology, Region.TWO_SITES, two_sites=sites, sector=spec.sector
    )
    hits = np.zeros(samples, dtype=np.float64)
    for t in range(samples):
        state, _, _ = run_bulk_sweep(two_spec, protocol, rng)
        hits[t] = 1.0 if classify_two_site(state) == "c" else 0.0
    mean = float(hits.mean())
    nb = min(batches, samples)
    bm = np.array([b.mean() for b in np.array_split(hits, nb)])
    stderr = float(bm.std(ddof=1) / math.sqrt(nb)) if nb > 1 else 0.0
    return mean, stderr
