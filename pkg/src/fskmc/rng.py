"""Reproducible per-task random streams.

Every kernel invocation receives its own 64-bit seed derived from
``(master seed, cell, window, sub-step)`` by chained splitmix64 mixing.
The derived seed drives a splitmix64 stream, so results do not depend on
which thread ran which cell.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_SALT = 0xD1B54A32D192ED03


def mix64(z: int) -> int:
    z &= MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def derive_seed(master: int, *keys: int) -> int:
    z = mix64(master ^ _SALT)
    for k in keys:
        z = mix64((z + GOLDEN) ^ (k & MASK))
    return z


def derive_seeds(master, *keys) -> np.ndarray:
    """Vectorised :func:`derive_seed`; ``master`` and ``keys`` broadcast together."""
    arrays = np.broadcast_arrays(*[np.asarray(k, dtype=np.uint64) for k in (master, *keys)])
    with np.errstate(over="ignore"):
        z = _mix64_array(arrays[0] ^ np.uint64(_SALT))
        for k in arrays[1:]:
            z = _mix64_array((z + np.uint64(GOLDEN)) ^ k)
    return z


class SplitMix64:
    """Pure-Python twin of the compiled stream in ``_native``."""

    def __init__(self, seed: int):
        self.state = seed & MASK

    def uniform(self) -> float:
        """Uniform on (0, 1]."""
        self.state = (self.state + GOLDEN) & MASK
        return ((mix64(self.state) >> 11) + 1.0) / 9007199254740992.0

    def exponential(self, rate: float) -> float:
        return -math.log(self.uniform()) / rate

    def integers(self, n: int) -> int:
        return min(int((1.0 - self.uniform()) * n), n - 1)


@dataclass(frozen=True)
class SeedPolicy:
    master_seed: int = 0

    def seed(self, cell: int, window: int, substep: int, level: int = 0) -> int:
        return derive_seed(self.master_seed, cell, window, substep, level)

    def seeds(self, cells, window: int, substep, level: int = 0) -> np.ndarray:
        return derive_seeds(self.master_seed, cells, window, substep, level)

    def stream(self, cell: int, window: int, substep: int, level: int = 0) -> SplitMix64:
        return SplitMix64(self.seed(cell, window, substep, level))

    def numpy(self, *keys: int) -> np.random.Generator:
        """A numpy generator for auxiliary draws (schedules, initial states)."""
        return np.random.default_rng([self.master_seed & MASK, *keys])
