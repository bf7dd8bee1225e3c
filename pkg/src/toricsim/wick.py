"""Expectation values of Majorana monomials on signed perfect matchings."""

from __future__ import annotations

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


@njit(cache=True)
def _matching_value(legs, n, i_power, partner, sign):
    """Wick value of i^i_power * g(legs[0])...g(legs[n-1]) on the matching.

    Returns 0 when some listed Majorana pairs outside the list, +-1 otherwise
    (crossing parity of the induced pair permutation times oriented signs).
    A non-real phase also returns 0; callers distinguish via the leg set.
    """
    r = 0
    sgn = 1
    first = np.empty(n, dtype=np.int64)
    second = np.empty(n, dtype=np.int64)
    for i in range(n):
        u = legs[i]
        v = partner[u]
        j = -1
        for t in range(n):
            if legs[t] == v:
                j = t
                break
        if j < 0:
            return 0
        if j > i:
            first[r] = i
            second[r] = j
            sgn *= sign[u]
            r += 1
    crossings = 0
    for a in range(r):
        for b in range(a + 1, r):
            i1, j1 = first[a], second[a]
            i2, j2 = first[b], second[b]
            if (i1 < i2 and i2 < j1 and j1 < j2) or (i2 < i1 and i1 < j2 and j2 < j1):
                crossings += 1
    phase = (i_power - r) % 4
    if phase == 2:
        sgn = -sgn
    elif phase != 0:
        return 0
    if crossings % 2:
        sgn = -sgn
    return sgn


def matching_expectation(legs, i_power: int, partner, sign) -> int:
    """Value of i^i_power * g(legs[0]) * g(legs[1]) * ... on a matched state.

    Zero unless the listed Majoranas pair among themselves; the phase must
    come out real (Hermitian operator), else ValueError.
    """
    arr = np.asarray(legs, dtype=np.int64)
    leg_set = set(int(x) for x in arr)
    if len(leg_set) != arr.size:
        raise ValueError("repeated Majorana in operator string")
    partner = np.asarray(partner, dtype=np.int64)
    sgn = np.asarray(sign, dtype=np.int8)
    val = _matching_value(arr, arr.size, i_power % 4, partner, sgn)
    if val == 0:
        r = sum(1 for u in arr if int(partner[u]) in leg_set) // 2
        if 2 * r == arr.size and (i_power - r) % 2 != 0:
            raise ValueError("operator is not Hermitian-real on this matching")
    return int(val)


def global_constraint_parity(partner, sign) -> int:
    """Value of the product of all on-site constraint operators, in O(n).

    This is the full Majorana monomial g_0 g_1 ... g_{n-1}; the projected
    state exists only if it evaluates to +1.
    """
    n = partner.size
    order = np.empty(n, dtype=np.int64)
    visited = np.zeros(n, dtype=bool)
    sgn = 1
    k = 0
    for i in range(n):
        if visited[i]:
            continue
        j = int(partner[i])
        order[k] = i
        order[k + 1] = j
        visited[i] = visited[j] = True
        sgn *= int(sign[i])
        k += 2
    # parity of the permutation taking 0..n-1 to pair-grouped order
    inv = np.empty(n, dtype=np.int64)
    inv[order] = np.arange(n)
    seen = np.zeros(n, dtype=bool)
    cycles = 0
    for i in range(n):
        if seen[i]:
            continue
        cycles += 1
        j = i
        while not seen[j]:
            seen[j] = True
            j = int(inv[j])
    if (n - cycles) % 2:
        sgn = -sgn
    r = n // 2
    phase = (-r) % 4
    if phase == 2:
        sgn = -sgn
    else:
        assert phase == 0
    return sgn
