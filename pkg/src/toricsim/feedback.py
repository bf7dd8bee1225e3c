"""Outcome-conditioned single-qubit X layer turning glass order ferromagnetic.

The ZZ stabilizer generators of the boundary chain form a forest; rooting
each tree and flipping every node whose root path carries an odd number of
negative edges makes all edge signs positive.  Certification applies the
flips to the oracle state of the same trajectory and checks that no negative
pair correlation survives, so the linear order equals the glass order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import loop_engine as le
from . import stabilizer as st


@dataclass
class ZZGraph:
    n_nodes: int
    edges: list  # (i, j, sign) with i < j

    def __post_init__(self):
        parent = list(range(self.n_nodes))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for i, j, s in self.edges:
            if s not in (1, -1):
                raise ValueError("edge signs must be +-1")
            ri, rj = find(i), find(j)
            if ri == rj:
                raise ValueError("cycle in the generator graph: edges are dependent")
            parent[ri] = rj

    def components(self) -> list[list[int]]:
        adj = {i: [] for i in range(self.n_nodes)}
        for i, j, _ in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        seen = [False] * self.n_nodes
        out = []
        for start in range(self.n_nodes):
            if seen[start]:
                continue
            comp = [start]
            seen[start] = True
            stack = [start]
            while stack:
                a = stack.pop()
                for b in adj[a]:
                    if not seen[b]:
                        seen[b] = True
                        comp.append(b)
                        stack.append(b)
            out.append(sorted(comp))
        return out


@dataclass
class FlipSet:
    sites: set = field(default_factory=set)

    def as_bitmask(self) -> int:
        mask = 0
        for s in self.sites:
            mask |= 1 << s
        return mask

    @classmethod
    def from_bitmask(cls, mask: int) -> "FlipSet":
        sites = set()
        b = 0
        while mask:
            if mask & 1:
                sites.add(b)
            mask >>= 1
            b += 1
        return cls(sites)


def build_graph(state: le.PairingState, record=None) -> ZZGraph:
    """ZZ generator graph of the boundary chain after a completed sweep.

    The pairing state already carries the localized sign data, so the raw
    measurement record is not consulted again.
    """
    edges = le.zz_stabilizer_set(state)
    return ZZGraph(state.spec.lx, edges)


def solve_flips(graph: ZZGraph) -> FlipSet:
    """A site set whose X layer makes every edge sign +1 (root-path parity)."""
    adj = {i: [] for i in range(graph.n_nodes)}
    for i, j, s in graph.edges:
        adj[i].append((j, s))
        adj[j].append((i, s))
    flips = set()
    seen = [False] * graph.n_nodes
    for root in range(graph.n_nodes):
        if seen[root]:
            continue
        seen[root] = True
        stack = [(root, 1)]
        while stack:
            a, par = stack.pop()
            if par < 0:
                flips.add(a)
            for b, s in adj[a]:
                if not seen[b]:
                    seen[b] = True
                    stack.append((b, par * s))
    return FlipSet(flips)


def flips_fix_all_edges(graph: ZZGraph, flips: FlipSet) -> bool:
    for i, j, s in graph.edges:
        parity = (i in flips.sites) + (j in flips.sites)
        if s * (-1) ** parity != 1:
            return False
    return True


def apply_and_certify(tab: st.StabilizerTableau, flips: FlipSet, chain_sites) -> float:
    """Apply the X layer to the oracle state and certify ferromagnetic order.

    Asserts every pair correlation on the chain lands in {0, +1}; the
    returned linear order parameter then equals the glass order of the
    trajectory.
    """
    sites = list(chain_sites)
    for s in flips.sites:
        tab.apply_x(sites[s])
    total = len(sites)
    for a in range(len(sites)):
        for b in range(a + 1, len(sites)):
            zz = st.zz_expectation(tab, sites[a], sites[b])
            if zz < 0:
                raise AssertionError(
                    f"negative correlation survived feedback at pair {(a, b)}"
                )
            total += 2 * zz
    return total / len(sites)
