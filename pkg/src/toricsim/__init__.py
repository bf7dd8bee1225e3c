"""Simulators for single-site measurements on the toric code ground state.

Engines:
  - loop_engine: Majorana pairing (loop-model) dynamics with sign tracking
  - stabilizer: exact signed stabilizer tableau (the oracle)
  - circuit: 1+1d hybrid-circuit compilation of bulk measurement rounds
  - gaussian: covariance-matrix evolution for general measurement axes
  - feedback: outcome-conditioned X layer turning glass order ferromagnetic
  - runner: trajectory ensembles, sweeps, CSV output, scaling fits
"""

from .lattice import LatticeSpec, Protocol, Sublattice, sublattice_of, translate_protocol

__all__ = [
    "LatticeSpec",
    "Protocol",
    "Sublattice",
    "sublattice_of",
    "translate_protocol",
]
