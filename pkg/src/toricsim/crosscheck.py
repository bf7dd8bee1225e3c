"""Trajectory-exact comparisons between the loop engine and the stabilizer oracle.

One trajectory is drawn with the loop engine; the oracle replays the recorded
(basis, outcome) sequence.  Whenever the oracle finds an outcome determined,
the loop engine must have flagged the same site as forced with the same value
(and vice versa), which pins every sign convention.  On top of that the
region-specific observables must agree exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import loop_engine as le
from . import stabilizer as st
from .lattice import LatticeSpec, Protocol, Region

LN2 = math.log(2.0)


class CrosscheckError(AssertionError):
    pass


@dataclass
class CrosscheckResult:
    trajectories: int = 0
    checks: dict = field(default_factory=dict)  # name -> [passed, total]

    def add(self, name: str, ok: bool):
        got = self.checks.setdefault(name, [0, 0])
        got[0] += int(ok)
        got[1] += 1

    def all_passed(self) -> bool:
        return all(p == t for p, t in self.checks.values())


def oracle_replay(spec: LatticeSpec, record: le.MeasurementRecord) -> st.StabilizerTableau:
    """Replay a loop-engine record on a fresh oracle tableau, asserting alignment."""
    tab = st.prepare_wen_ground(spec)
    for s in record.order:
        s = int(s)
        if record.basis[s] < 0:
            continue
        basis = le.BASIS_NAMES[record.basis[s]]
        outcome = int(record.outcome[s])
        try:
            got, was_random = tab.measure(
                st.Pauli.from_ops(tab.n, {s: basis}, 1), force=outcome
            )
        except ValueError as exc:
            raise CrosscheckError(f"site {s} basis {basis}: {exc}") from exc
        if was_random == bool(record.forced[s]):
            raise CrosscheckError(
                f"forcedness mismatch at site {s}: oracle random={was_random}, "
                f"loop forced={bool(record.forced[s])}"
            )
        if got != outcome:
            raise CrosscheckError(f"outcome mismatch at site {s}")
    return tab


def contiguous_cuts(lx: int):
    for start in range(lx):
        for length in range(1, lx):
            yield start, length


def check_trajectory(spec: LatticeSpec, protocol: Protocol, rng, result: CrosscheckResult):
    state, record, _ = le.run_bulk_sweep(spec, protocol, rng)
    tab = oracle_replay(spec, record)
    result.add("outcome_alignment", True)

    if spec.region is Region.TOP_BOUNDARY:
        boundary = list(range(spec.lx))
        ok = True
        for start, length in contiguous_cuts(spec.lx):
            qubits = [(start + d) % spec.lx for d in range(length)]
            s_loop = le.boundary_cut_entropy(state, (start, length))
            s_oracle = st.entropy(tab, qubits)
            if abs(s_loop - s_oracle) > 1e-9:
                ok = False
        result.add("cut_entropy", ok)

        edges = le.zz_stabilizer_set(state)
        ok = all(st.zz_expectation(tab, i, j) == s for i, j, s in edges)
        result.add("zz_signs", ok)

        ea_loop = le.ea_order(state)
        ea_oracle = st.oracle_ea_order(tab, boundary)
        result.add("ea_order", abs(ea_loop - ea_oracle) < 1e-9)

    elif spec.region is Region.BOTH_BOUNDARIES:
        n_s = le.spanning_number(state)
        mie_loop = le.two_boundary_mie(state)
        s_oracle = st.entropy(tab, list(range(spec.lx)))
        result.add("spanning_relation", abs(s_oracle - max(n_s - 2, 0) * LN2 / 2) < 1e-9)
        result.add("two_boundary_mie", abs(mie_loop - s_oracle) < 1e-9)

    elif spec.region is Region.TWO_SITES:
        cls = le.classify_two_site(state)
        mie = le.two_site_mie(state)
        qi = spec.site_index(*spec.two_sites[0])
        qj = spec.site_index(*spec.two_sites[1])
        si = st.entropy(tab, [qi])
        sj = st.entropy(tab, [qj])
        result.add("two_site_mie", abs(si - mie) < 1e-9 and abs(sj - mie) < 1e-9)
        result.add("two_site_class_parity", (cls == "c") == (si > LN2 / 2))

    result.trajectories += 1
    return state, tab


def run_crosscheck(spec: LatticeSpec, protocol: Protocol, rng_factory, trajectories: int):
    """rng_factory(t) must yield the per-trajectory stream."""
    result = CrosscheckResult()
    for t in range(trajectories):
        check_trajectory(spec, protocol, rng_factory(t), result)
    return result
