"""Counter-based RNG streams: one independent, reproducible stream per trajectory."""

from __future__ import annotations

import numpy as np

GENERATOR_FAMILY = "philox4x64"


def trajectory_rng(seed: int, trajectory: int) -> np.random.Generator:
    """Stream for one trajectory, derived from (seed, trajectory) alone.

    Philox is counter-based, so streams keyed by trajectory index are
    statistically independent and identical regardless of worker layout.
    """
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, trajectory & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sign_buffer(rng: np.random.Generator, n: int) -> np.ndarray:
    """Pre-drawn fair coin outcomes as +-1 int8; consumed only by free measurements."""
    return np.where(rng.random(n) < 0.5, 1, -1).astype(np.int8)
