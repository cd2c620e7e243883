"""Parallel fractional-step execution over a colored partition.

Within a sub-step every cell of the active color runs the serial kernel for
the sub-step duration, cells spread over a thread pool.  The pool join is
the barrier: neighbor cells see the new boundary values only afterwards.
Each cell draws from its own seed ``(cell, window, sub-step)``, so results
do not depend on the worker count or on how cells are chunked.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import _native
from .kernel import DomainLayout, WindowResult, run_window_python
from .lattice import Configuration
from .partition import Group, NestedPartition, Partition, PartitionError
from .rng import SeedPolicy, SplitMix64, derive_seed, derive_seeds
from .schedule import Schedule

# sink(window, substep, cells, jumps) receives per-cell jump counts
WorkloadSink = Callable[[int, int, list, np.ndarray], None]
Observer = Callable[[Configuration], Mapping[str, float] | float]


def check_compatible(partition: Partition, model) -> None:
    if partition.radius < model.radius:
        raise PartitionError(f"partition radius {partition.radius} is below the model range {model.radius}")
    need = getattr(model, "write_radius", 1)
    if partition.write_radius < need:
        raise PartitionError(
            f"partition was built for write_radius={partition.write_radius} but the model writes up to {need}"
        )


def _split(items: list, parts: int) -> list[list]:
    parts = max(1, min(parts, len(items)))
    bounds = np.linspace(0, len(items), parts + 1).round().astype(int)
    return [items[a:b] for a, b in zip(bounds, bounds[1:]) if b > a]


class FractionalStepExecutor:
    """Runs sub-steps of a schedule on one partition and model.

    With a :class:`NestedPartition` each outer sub-step is itself a Lie
    schedule over the inner tiles of the active outer cells, with inner
    window ``inner_dt`` (default: the outer sub-step duration).
    """

    def __init__(self, partition: Partition | NestedPartition, model, workers: int = 1,
                 inner_dt: float | None = None):
        self.nested = partition if isinstance(partition, NestedPartition) else None
        self.partition = self.nested.outer if self.nested else partition
        check_compatible(self.partition, model)
        self.model = model
        self.workers = max(1, int(workers))
        self.inner_dt = inner_dt
        self.native = bool(getattr(model, "kind", 0))
        self.params = model.kernel_params() if self.native else None
        lattice = self.partition.lattice
        if self.nested:
            self.domains = self.nested.all_tiles
            self.owner = np.array([m for m, ts in enumerate(self.nested.tiles) for _ in ts], dtype=np.int64)
        else:
            self.domains = list(self.partition.cells)
            self.owner = np.arange(len(self.domains), dtype=np.int64)
        self.layout = DomainLayout.build(lattice, [d.sites for d in self.domains], model.radius)
        self.assignment: np.ndarray | None = None  # outer cell -> worker, used only for chunking
        self._pool = ThreadPoolExecutor(self.workers) if self.workers > 1 else None

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _chunks(self, doms: list[int]) -> list[list[int]]:
        if self.assignment is None:
            return _split(doms, self.workers)
        groups: dict[int, list[int]] = {}
        for d in doms:
            groups.setdefault(int(self.assignment[self.owner[d]]), []).append(d)
        return [groups[k] for k in sorted(groups)]

    def run_domains(self, config: Configuration, doms: list[int], duration: float,
                    seeds: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Advance the listed domains concurrently; returns (jumps, last event times)."""
        n = len(doms)
        jumps = np.zeros(n, dtype=np.int64)
        last = np.zeros(n, dtype=np.float64)
        if n == 0 or duration <= 0:
            return jumps, last
        position = {d: i for i, d in enumerate(doms)}
        if not self.native:
            for i, d in enumerate(doms):
                res = run_window_python(config, self.domains[d].sites, duration, self.model,
                                        SplitMix64(int(seeds[i])))
                jumps[i], last[i] = res.jumps, res.last_event_time
            return jumps, last
        lay = self.layout
        nbr = config.lattice.nearest

        def work(chunk):
            idx = np.array([position[d] for d in chunk], dtype=np.int64)
            j = np.zeros(len(chunk), dtype=np.int64)
            t = np.zeros(len(chunk), dtype=np.float64)
            _native.run_domains(self.model.kind, self.params, config.spins, nbr, lay.dom_ptr, lay.sites,
                                lay.aff_ptr, lay.aff_idx, np.asarray(chunk, dtype=np.int64), float(duration),
                                seeds[idx], j, t)
            return idx, j, t

        chunks = self._chunks(list(doms))
        outs = list(self._pool.map(work, chunks)) if self._pool and len(chunks) > 1 else [work(c) for c in chunks]
        for idx, j, t in outs:
            jumps[idx] = j
            last[idx] = t
        return jumps, last

    def _inner_windows(self, duration: float) -> list[float]:
        dt = self.inner_dt or duration
        n = max(1, round(duration / dt))
        return [duration / n] * n

    def execute_substep(self, config: Configuration, group, duration: float, seeds: SeedPolicy,
                        window: int = 0, substep: int = 0, workload: WorkloadSink | None = None) -> list[WindowResult]:
        """Advance every cell of ``group`` by ``duration``; one result per cell in ``cells_of(group)`` order."""
        totals, lasts = self.advance(config, group, duration, seeds, window, substep, workload)
        return [WindowResult(int(j), max(float(duration), 0.0), float(t)) for j, t in zip(totals, lasts)]

    def advance(self, config: Configuration, group, duration: float, seeds: SeedPolicy,
                window: int = 0, substep: int = 0, workload: WorkloadSink | None = None):
        """:meth:`execute_substep` returning (jumps, last event time) arrays instead of result objects."""
        g = Group.parse(group)
        cells = self.partition.cells_of(g)
        totals = np.zeros(len(cells), dtype=np.int64)
        lasts = np.zeros(len(cells), dtype=np.float64)
        if duration > 0:
            if self.nested is None:
                seed_arr = seeds.seeds(np.array(cells), window, substep)
                totals, lasts = self.run_domains(config, cells, duration, seed_arr)
            else:
                pos = {m: i for i, m in enumerate(cells)}
                level = 0
                for width in self._inner_windows(duration):
                    for h in (Group.O, Group.E):
                        level += 1
                        tiles = [t.index for m in cells for t in self.nested.tiles[m] if t.color == h]
                        seed_arr = seeds.seeds(np.array(tiles), window, substep, level)
                        j, _ = self.run_domains(config, tiles, width, seed_arr)
                        for tile, jj in zip(tiles, j):
                            totals[pos[int(self.owner[tile])]] += jj
        if workload is not None:
            workload(window, substep, cells, totals)
        return totals, lasts


def execute_substep(config: Configuration, partition, group, duration: float, model, seeds: SeedPolicy,
                    workload: WorkloadSink | None = None, window: int = 0, substep: int = 0,
                    workers: int = 1) -> list[WindowResult]:
    with FractionalStepExecutor(partition, model, workers) as ex:
        return ex.execute_substep(config, group, duration, seeds, window, substep, workload)


@dataclass
class Trajectory:
    """Observable samples taken at macro-window boundaries (time 0 included)."""

    times: list[float] = field(default_factory=list)
    samples: list[dict[str, float]] = field(default_factory=list)
    jumps: int = 0

    def series(self, name: str) -> np.ndarray:
        return np.array([s[name] for s in self.samples], dtype=np.float64)

    def record(self, t: float, config: Configuration, observers: Mapping[str, Observer]) -> None:
        row: dict[str, float] = {}
        for name, f in observers.items():
            value = f(config)
            if isinstance(value, Mapping):
                row.update({f"{name}.{k}": float(v) for k, v in value.items()})
            else:
                row[name] = float(value)
        self.times.append(float(t))
        self.samples.append(row)


def run_simulation(config: Configuration, partition, schedule: Schedule, model, seeds: SeedPolicy,
                   observers: Mapping[str, Observer] | None = None, stride: int = 1, workers: int = 1,
                   workload: WorkloadSink | None = None, inner_dt: float | None = None,
                   on_window: Callable[[int, FractionalStepExecutor], None] | None = None,
                   executor: FractionalStepExecutor | None = None) -> Trajectory:
    """Apply ``schedule`` to ``config`` in place and sample observers every ``stride`` macro-windows.

    ``on_window(k, executor)`` runs at the barrier after macro-window k and
    may adjust the executor (for instance its worker assignment).
    """
    observers = dict(observers or {})
    traj = Trajectory()
    own = executor is None
    ex = executor or FractionalStepExecutor(partition, model, workers, inner_dt)
    try:
        if observers:
            traj.record(0.0, config, observers)
        start = 0
        for k, end in enumerate(schedule.macro_ends):
            for s in range(start, end):
                group, duration = schedule.substeps[s]
                jumps, _ = ex.advance(config, group, duration, seeds, k, s, workload)
                traj.jumps += int(jumps.sum())
            start = end
            if on_window is not None:
                on_window(k, ex)
            if observers and ((k + 1) % stride == 0 or k == len(schedule.macro_ends) - 1):
                if traj.times and math.isclose(traj.times[-1], schedule.physical_times[k]):
                    continue
                traj.record(schedule.physical_times[k], config, observers)
    finally:
        if own:
            ex.close()
    return traj


def _replica_masters(master_seed: int, replicas: int) -> np.ndarray:
    return derive_seeds(master_seed, np.arange(replicas, dtype=np.uint64))


def replica_policy(master_seed: int, r: int) -> SeedPolicy:
    """Seed policy of replica ``r`` in :func:`run_replicas`."""
    return SeedPolicy(derive_seed(master_seed, r))


def run_replicas(initial: Configuration, partition: Partition, schedule: Schedule, model,
                 master_seed: int, replicas: int, workers: int = 1) -> np.ndarray:
    """Final spins of independent replicas of a flat fractional-step run, shape (replicas, N).

    Replica r reproduces ``run_simulation`` with ``replica_policy(master_seed, r)``.
    Requires a model with a compiled kernel.
    """
    if not getattr(model, "kind", 0):
        raise TypeError("run_replicas needs a model with a compiled kernel")
    check_compatible(partition, model)
    lay = DomainLayout.build(partition.lattice, [c.sites for c in partition.cells], model.radius)
    by_color = [partition.cells_of(g) for g in Group]
    color_doms = np.array(by_color[0] + by_color[1], dtype=np.int64)
    color_ptr = np.array([0, len(by_color[0]), len(color_doms)], dtype=np.int64)
    groups = schedule.groups
    window_of = np.zeros(len(schedule), dtype=np.int64)
    start = 0
    for k, end in enumerate(schedule.macro_ends):
        window_of[start:end] = k
        start = end
    width = max(len(c) for c in by_color)
    cell_ids = np.zeros((len(schedule), width), dtype=np.int64)
    for s, g in enumerate(groups):
        cell_ids[s, : len(by_color[g])] = by_color[g]
    masters = _replica_masters(master_seed, replicas)
    return _replica_batch(model, initial, lay, color_ptr, color_doms, groups, schedule.durations,
                          masters, cell_ids, window_of, workers)


def run_serial_replicas(initial: Configuration, model, T: float, master_seed: int, replicas: int,
                        workers: int = 1) -> np.ndarray:
    """Final spins of the unsplit serial kernel over the whole lattice for time ``T``."""
    lattice = initial.lattice
    lay = DomainLayout.build(lattice, [np.arange(lattice.size)], model.radius)
    masters = _replica_masters(master_seed, replicas)
    return _replica_batch(model, initial, lay, np.array([0, 1, 1], dtype=np.int64), np.zeros(1, dtype=np.int64),
                          np.zeros(1, dtype=np.int64), np.array([float(T)]), masters,
                          np.zeros((1, 1), dtype=np.int64), np.zeros(1, dtype=np.int64), workers)


def _replica_batch(model, initial, lay, color_ptr, color_doms, groups, durations, masters, cell_ids,
                   window_of, workers) -> np.ndarray:
    R = len(masters)
    S = len(groups)
    substep = np.arange(S, dtype=np.uint64)
    out = np.empty((R, initial.lattice.size), dtype=initial.spins.dtype)
    jumps = np.zeros(R, dtype=np.int64)
    params = model.kernel_params()
    nbr = initial.lattice.nearest

    def work(rows):
        a, b = rows
        seeds = derive_seeds(masters[a:b, None, None], cell_ids[None], window_of[None, :, None],
                             substep[None, :, None], 0)
        _native.run_replicas(model.kind, params, initial.spins, nbr, lay.dom_ptr, lay.sites, lay.aff_ptr,
                             lay.aff_idx, color_ptr, color_doms, groups, durations, seeds, out[a:b], jumps[a:b])

    # bound the seed table to about 8 MB per block
    block = max(1, min(R, 1_000_000 // max(1, S * cell_ids.shape[1])))
    rows = [(a, min(R, a + block)) for a in range(0, R, block)]
    if workers > 1 and len(rows) > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(work, rows))
    else:
        for r in rows:
            work(r)
    return out
