"""Geometric partition of the lattice into two-colored cells."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from typing import Sequence

import numpy as np

from .lattice import Lattice


class PartitionError(ValueError):
    pass


class Group(IntEnum):
    O = 0
    E = 1

    @classmethod
    def parse(cls, value) -> "Group":
        if isinstance(value, Group):
            return value
        if isinstance(value, str):
            return cls[value.strip().upper()]
        return cls(int(value))


@dataclass(frozen=True)
class Cell:
    index: int
    origin: tuple[int, ...]
    extent: tuple[int, ...]
    color: Group
    sites: np.ndarray = field(repr=False, compare=False)


def _box_sites(lattice: Lattice, origin, extent) -> np.ndarray:
    ranges = [np.arange(o, o + e) % n for o, e, n in zip(origin, extent, lattice.dims)]
    mesh = np.meshgrid(*ranges, indexing="ij")
    return np.sort(np.ravel_multi_index([m.ravel() for m in mesh], lattice.dims))


@dataclass
class Partition:
    """Disjoint tiles covering the lattice, each colored O or E.

    ``radius`` is the interaction (read) range L and ``write_radius`` the
    distance from an anchor that updates may write to.  Construction checks
    that no two same-color cells can touch each other's data: sites written
    from one cell are never read or written from another cell of that color.
    """

    lattice: Lattice
    cells: list[Cell]
    radius: int = 1
    write_radius: int = 0

    def __post_init__(self):
        owner = np.full(self.lattice.size, -1, dtype=np.int64)
        for c in self.cells:
            if np.any(owner[c.sites] >= 0):
                raise PartitionError(f"cell {c.index} overlaps another cell")
            owner[c.sites] = c.index
        if np.any(owner < 0):
            raise PartitionError("cells do not cover the lattice")
        self.owner = owner
        colors = {c.color for c in self.cells}
        if colors != {Group.O, Group.E}:
            raise PartitionError("partition needs cells of both colors")
        self._check_write_safety()

    @property
    def num_cells(self) -> int:
        return len(self.cells)

    @cached_property
    def colors(self) -> np.ndarray:
        return np.array([int(c.color) for c in self.cells], dtype=np.int64)

    def cells_of(self, group) -> list[int]:
        g = Group.parse(group)
        return [c.index for c in self.cells if c.color == g]

    def sublattice(self, group) -> np.ndarray:
        return np.sort(np.concatenate([self.cells[m].sites for m in self.cells_of(group)]))

    def closure(self, m: int) -> np.ndarray:
        """Cell plus every site within the interaction range of it."""
        return self.lattice.ball(self.cells[m].sites, self.radius)

    def boundary(self, m: int, width: int | None = None) -> np.ndarray:
        """Sites of the cell within ``width`` (default the interaction range) of a site outside it."""
        width = self.radius if width is None else width
        sites = self.cells[m].sites
        outside = np.setdiff1d(self.lattice.ball(sites, width), sites)
        if outside.size == 0:
            return np.zeros(0, dtype=np.int64)
        return np.intersect1d(sites, self.lattice.ball(outside, width))

    def interior(self, m: int, width: int | None = None) -> np.ndarray:
        return np.setdiff1d(self.cells[m].sites, self.boundary(m, width))

    def footprint(self, m: int) -> np.ndarray:
        return self.lattice.ball(self.cells[m].sites, max(self.radius, self.write_radius))

    def written(self, m: int) -> np.ndarray:
        return self.lattice.ball(self.cells[m].sites, self.write_radius)

    def same_color_closures_disjoint(self) -> bool:
        for g in Group:
            seen = np.concatenate([self.closure(m) for m in self.cells_of(g)])
            if np.unique(seen).size != seen.size:
                return False
        return True

    def _check_write_safety(self) -> None:
        for g in Group:
            cover = np.zeros(self.lattice.size, dtype=np.int64)
            members = self.cells_of(g)
            for m in members:
                cover[self.footprint(m)] += 1
            for m in members:
                w = self.written(m)
                if np.any(cover[w] > 1):
                    raise PartitionError(
                        f"same-color cells interfere near cell {m}: enlarge cells or use strips "
                        f"(radius={self.radius}, write_radius={self.write_radius})"
                    )


def build_partition(lattice: Lattice, cell_extent: Sequence[int], L: int = 1, write_radius: int = 0) -> Partition:
    """Checkerboard tiling of ``lattice`` by boxes of ``cell_extent``.

    An axis whose extent equals the full lattice dimension is left untiled
    (strips); every tiled axis needs an even number of cells so the coloring
    closes periodically.  ``write_radius`` must be at least the model's
    (0 for single-site flips, 1 for pair updates such as hops and reactions).
    """
    cell_extent = tuple(int(e) for e in cell_extent)
    if len(cell_extent) != lattice.d:
        raise PartitionError(f"cell_extent has {len(cell_extent)} entries for a {lattice.d}-d lattice")
    counts = []
    for axis, (n, e) in enumerate(zip(lattice.dims, cell_extent)):
        if e < 1 or n % e:
            raise PartitionError(f"lattice dimension {n} on axis {axis} is not divisible by cell extent {e}")
        k = n // e
        if k > 1:
            if e <= L:
                raise PartitionError(f"cell extent {e} on axis {axis} must exceed the interaction range {L}")
            if k % 2:
                raise PartitionError(f"axis {axis} has an odd number of cells ({k}); the checkerboard cannot close")
        counts.append(k)
    if all(k == 1 for k in counts):
        raise PartitionError("a single cell has no opposite color")
    cells = []
    for tile in np.ndindex(*counts):
        origin = tuple(t * e for t, e in zip(tile, cell_extent))
        parity = sum(t for t, k in zip(tile, counts) if k > 1) % 2
        color = Group.O if parity == 0 else Group.E
        cells.append(Cell(len(cells), origin, cell_extent, color, _box_sites(lattice, origin, cell_extent)))
    return Partition(lattice, cells, L, write_radius)


def strip_partition(lattice: Lattice, edges: Sequence[int], L: int = 1, write_radius: int = 0) -> Partition:
    """Variable-width strips along axis 0 with boundaries ``edges`` (0 = e_0 < ... < e_M = dims[0])."""
    edges = [int(e) for e in edges]
    n0 = lattice.dims[0]
    if edges[0] != 0 or edges[-1] != n0 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise PartitionError(f"strip edges must increase from 0 to {n0}: {edges}")
    M = len(edges) - 1
    if M % 2:
        raise PartitionError(f"odd number of strips ({M})")
    cells = []
    for k, (a, b) in enumerate(zip(edges, edges[1:])):
        if b - a <= L:
            raise PartitionError(f"strip {k} has width {b - a} <= interaction range {L}")
        origin = (a,) + (0,) * (lattice.d - 1)
        extent = (b - a,) + tuple(lattice.dims[1:])
        color = Group.O if k % 2 == 0 else Group.E
        cells.append(Cell(k, origin, extent, color, _box_sites(lattice, origin, extent)))
    return Partition(lattice, cells, L, write_radius)


@dataclass
class NestedPartition:
    """Outer partition whose cells each carry an inner checkerboard of tiles."""

    outer: Partition
    inner_extent: tuple[int, ...]
    tiles: list[list[Cell]]  # tiles[m] are the inner tiles of outer cell m

    def tile_ids(self, m: int) -> list[int]:
        base = sum(len(t) for t in self.tiles[:m])
        return list(range(base, base + len(self.tiles[m])))

    @property
    def all_tiles(self) -> list[Cell]:
        return [t for ts in self.tiles for t in ts]


def nested_partition(partition: Partition, inner_extent: Sequence[int]) -> NestedPartition:
    inner_extent = tuple(int(e) for e in inner_extent)
    L = partition.radius
    tiles = []
    next_id = 0
    for cell in partition.cells:
        counts = []
        for axis, (n, e) in enumerate(zip(cell.extent, inner_extent)):
            if e < 1 or n % e:
                raise PartitionError(f"cell extent {n} on axis {axis} is not divisible by inner extent {e}")
            k = n // e
            if k > 1:
                if e <= L:
                    raise PartitionError(f"inner extent {e} on axis {axis} must exceed the interaction range {L}")
                if k % 2:
                    raise PartitionError(f"axis {axis} has an odd number of inner tiles ({k})")
            counts.append(k)
        if all(k == 1 for k in counts):
            raise PartitionError("inner tile equals the whole cell")
        mine = []
        for tile in np.ndindex(*counts):
            origin = tuple(o + t * e for o, t, e in zip(cell.origin, tile, inner_extent))
            parity = sum(t for t, k in zip(tile, counts) if k > 1) % 2
            color = Group.O if parity == 0 else Group.E
            mine.append(Cell(next_id, origin, inner_extent, color, _box_sites(partition.lattice, origin, inner_extent)))
            next_id += 1
        tiles.append(mine)
    nested = NestedPartition(partition, inner_extent, tiles)
    _check_inner_safety(nested)
    return nested


def _check_inner_safety(nested: NestedPartition) -> None:
    """Inner tiles of one inner color, across all outer cells of one outer color, must not interfere."""
    outer = nested.outer
    lat = outer.lattice
    reach = max(outer.radius, outer.write_radius)
    for g in Group:
        for h in Group:
            members = [t for m in outer.cells_of(g) for t in nested.tiles[m] if t.color == h]
            cover = np.zeros(lat.size, dtype=np.int64)
            for t in members:
                cover[lat.ball(t.sites, reach)] += 1
            for t in members:
                if np.any(cover[lat.ball(t.sites, outer.write_radius)] > 1):
                    raise PartitionError(f"inner tiles interfere near tile {t.index}")
