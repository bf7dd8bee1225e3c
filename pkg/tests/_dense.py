"""Brute-force Majorana simulator on explicit matrices; the independent oracle
used to pin sign conventions.  Only viable up to ~24 Majoranas."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

_X = sp.csr_matrix(np.array([[0, 1], [1, 0]], dtype=complex))
_Y = sp.csr_matrix(np.array([[0, -1j], [1j, 0]], dtype=complex))
_Z = sp.csr_matrix(np.array([[1, 0], [0, -1]], dtype=complex))
_I = sp.identity(2, dtype=complex, format="csr")


def majorana_ops(n_majorana: int):
    """Jordan-Wigner matrices for n_majorana operators (n must be even)."""
    assert n_majorana % 2 == 0
    n_qubits = n_majorana // 2
    ops = []
    for j in range(n_majorana):
        k, odd = divmod(j, 2)
        factors = [_Z] * k + [_Y if odd else _X] + [_I] * (n_qubits - k - 1)
        m = factors[0]
        for f in factors[1:]:
            m = sp.kron(m, f, format="csr")
        ops.append(m)
    return ops


class DenseMajorana:
    """Pure-state simulator over Majorana modes."""

    def __init__(self, n_majorana: int):
        self.n = n_majorana
        self.g = majorana_ops(n_majorana)
        dim = 2 ** (n_majorana // 2)
        self.psi = np.zeros(dim, dtype=complex)
        self.psi[0] = 1.0

    def bilinear(self, a: int, b: int) -> sp.csr_matrix:
        return 1j * (self.g[a] @ self.g[b])

    def expect(self, op) -> float:
        v = op @ self.psi
        val = np.vdot(self.psi, v)
        assert abs(val.imag) < 1e-9
        return float(val.real)

    def project(self, op, eigenvalue: int) -> float:
        """Apply (1 + eig*op)/2; returns the outcome probability."""
        v = 0.5 * (self.psi + eigenvalue * (op @ self.psi))
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            return 0.0
        self.psi = v / norm
        return norm**2

    def randomize(self, rng):
        dim = self.psi.size
        self.psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        self.psi /= np.linalg.norm(self.psi)

    def prepare_matching(self, pairs, rng):
        """Project onto i*g_a*g_b = s for each (a, b, s); state must survive."""
        self.randomize(rng)
        for a, b, s in pairs:
            p = self.project(self.bilinear(a, b), s)
            assert p > 1e-12, "matching projection annihilated the state"

    def measure_bilinear(self, a: int, b: int, rng, outcome=None):
        """Born-rule measurement of i*g_a*g_b; returns (outcome, was_random)."""
        op = self.bilinear(a, b)
        m = self.expect(op)
        if abs(m) > 1 - 1e-9:
            out = 1 if m > 0 else -1
            if outcome is not None and outcome != out:
                raise AssertionError("forced dense outcome mismatch")
            return out, False
        if outcome is None:
            p_plus = (1 + m) / 2
            outcome = 1 if rng.random() < p_plus else -1
        self.project(op, outcome)
        return outcome, True
