"""Seeded random streams for simulation.

All simulators draw from a PCG64 stream, a named, seedable, portable
64-bit generator. Exponential holding times use the inverse CDF,
-ln(1 - U) / rate, so a seed fully determines every path. Replications
get independent streams by XOR-ing the base seed with the replication
index.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["make_stream", "replication_seed", "exponential"]


def make_stream(seed: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    return np.random.Generator(np.random.PCG64(int(seed)))


def replication_seed(base: int, index: int) -> int:
    return int(base) ^ int(index)


def exponential(rng: np.random.Generator, rate: float) -> float:
    """Exp(rate) variate via the inverse CDF."""
    u = rng.random()
    while u == 0.0:  # keep holding times strictly positive
        u = rng.random()
    return -math.log1p(-u) / rate
