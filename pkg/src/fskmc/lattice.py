"""Periodic lattice geometry, spin configurations and site updates."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

# Metric used for neighborhoods, closures and interaction ranges.
# "l1" (Manhattan) or "linf" (Chebyshev); nearest neighbors agree for both.
METRIC = "l1"

SPIN_DTYPE = np.uint8


class InvalidUpdateError(ValueError):
    pass


@dataclass(frozen=True)
class SpinSpace:
    num_states: int

    def __post_init__(self):
        if self.num_states < 2:
            raise ValueError(f"num_states must be >= 2, got {self.num_states}")


@dataclass(frozen=True)
class Lattice:
    """Periodic d-dimensional box with row-major site numbering."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        if not dims or any(n < 1 for n in dims):
            raise ValueError(f"dims must be positive integers, got {self.dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    def site_index(self, coords: Sequence[int]) -> int:
        if len(coords) != self.d:
            raise ValueError(f"expected {self.d} coordinates, got {len(coords)}")
        idx = 0
        for c, n in zip(coords, self.dims):
            idx = idx * n + (int(c) % n)
        return idx

    def site_coords(self, x: int) -> tuple[int, ...]:
        out = []
        for n in reversed(self.dims):
            out.append(x % n)
            x //= n
        return tuple(reversed(out))

    @cached_property
    def coords(self) -> np.ndarray:
        """(N, d) array of site coordinates in index order."""
        grids = np.indices(self.dims).reshape(self.d, -1)
        return grids.T.copy()

    def distance(self, x: int, y: int) -> int:
        cx, cy = self.site_coords(x), self.site_coords(y)
        parts = []
        for a, b, n in zip(cx, cy, self.dims):
            delta = abs(a - b) % n
            parts.append(min(delta, n - delta))
        return sum(parts) if METRIC == "l1" else max(parts)

    def offsets(self, r: int) -> list[tuple[int, ...]]:
        """Nonzero displacement vectors within radius r, before wrapping."""
        rng = range(-r, r + 1)
        out = []
        for disp in np.ndindex(*([2 * r + 1] * self.d)):
            v = tuple(rng[i] for i in disp)
            norm = sum(abs(c) for c in v) if METRIC == "l1" else max(abs(c) for c in v)
            if 0 < norm <= r:
                out.append(v)
        return out

    def neighbors(self, x: int, r: int) -> list[int]:
        """All sites z != x with dist(z, x) <= r, ascending."""
        if r < 0:
            raise ValueError("radius must be nonnegative")
        base = self.site_coords(x)
        found = set()
        for v in self.offsets(r):
            found.add(self.site_index([b + o for b, o in zip(base, v)]))
        found.discard(x)
        return sorted(found)

    def ball(self, sites, r: int) -> np.ndarray:
        """Sorted union of the radius-r balls around ``sites``."""
        sites = np.atleast_1d(np.asarray(sites, dtype=np.int64))
        if r == 0 or sites.size == 0:
            return np.unique(sites)
        coords = self.coords[sites]
        dims = np.array(self.dims)
        parts = [sites]
        for v in self.offsets(r):
            shifted = (coords + np.array(v)) % dims
            parts.append(np.ravel_multi_index(shifted.T, self.dims))
        return np.unique(np.concatenate(parts))

    @cached_property
    def nearest(self) -> np.ndarray:
        """(N, 2d) table of nearest neighbors; column 2k is -e_k, 2k+1 is +e_k."""
        dims = np.array(self.dims)
        cols = []
        for k in range(self.d):
            for step in (-1, 1):
                shifted = self.coords.copy()
                shifted[:, k] = (shifted[:, k] + step) % dims[k]
                cols.append(np.ravel_multi_index(shifted.T, self.dims))
        return np.stack(cols, axis=1).astype(np.int64)


@dataclass(frozen=True)
class SiteUpdate:
    targets: tuple[tuple[int, int], ...]

    def __post_init__(self):
        targets = tuple((int(s), int(v)) for s, v in self.targets)
        sites = [s for s, _ in targets]
        if len(set(sites)) != len(sites):
            raise InvalidUpdateError(f"update targets repeat a site: {sites}")
        object.__setattr__(self, "targets", targets)

    @property
    def sites(self) -> tuple[int, ...]:
        return tuple(s for s, _ in self.targets)

    def inverse(self, spins: np.ndarray) -> "SiteUpdate":
        """The update that undoes this one when applied after it to ``spins``."""
        return SiteUpdate(tuple((s, int(spins[s])) for s, _ in self.targets))


class Configuration:
    """Spin values on a lattice. Thin wrapper over a flat uint8 array."""

    def __init__(self, lattice: Lattice, spin_space: SpinSpace, spins=None):
        self.lattice = lattice
        self.spin_space = spin_space
        if spins is None:
            spins = np.zeros(lattice.size, dtype=SPIN_DTYPE)
        spins = np.ascontiguousarray(spins, dtype=SPIN_DTYPE).reshape(-1)
        if spins.size != lattice.size:
            raise ValueError(f"expected {lattice.size} spins, got {spins.size}")
        if spins.size and int(spins.max()) >= spin_space.num_states:
            raise ValueError("spin value out of range")
        self.spins = spins

    @classmethod
    def filled(cls, lattice: Lattice, spin_space: SpinSpace, value: int) -> "Configuration":
        return cls(lattice, spin_space, np.full(lattice.size, value, dtype=SPIN_DTYPE))

    @classmethod
    def random(cls, lattice, spin_space, rng: np.random.Generator, p=None) -> "Configuration":
        vals = rng.choice(spin_space.num_states, size=lattice.size, p=p)
        return cls(lattice, spin_space, vals)

    def copy(self) -> "Configuration":
        return Configuration(self.lattice, self.spin_space, self.spins.copy())

    def __eq__(self, other):
        return isinstance(other, Configuration) and np.array_equal(self.spins, other.spins)

    def __repr__(self):
        return f"Configuration(dims={self.lattice.dims}, spins={self.spins.tolist()!r})"


def apply_update(config: Configuration, update: SiteUpdate) -> Configuration:
    """Write the update's target values into ``config`` in place."""
    n = config.lattice.size
    for site, value in update.targets:
        if not 0 <= value < config.spin_space.num_states:
            raise InvalidUpdateError(f"spin value {value} outside [0, {config.spin_space.num_states})")
        if not 0 <= site < n:
            raise InvalidUpdateError(f"site {site} outside lattice of {n} sites")
    for site, value in update.targets:
        config.spins[site] = value
    return config
