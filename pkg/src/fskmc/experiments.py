"""End-to-end runs shared by the command line, the scripts and the acceptance suite."""
from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .balance import (Assignment, WorkloadLog, equal_count_assignment,
                      rebalance_assignment, rebalance_cells_1d, rebalance_trigger)
from .config import ModelConfig, RunConfig
from .executor import FractionalStepExecutor, replica_policy, run_simulation
from .kernel import DomainLayout
from .lattice import Configuration
from . import _native
from .models import ArrheniusModel, ArrheniusParams, ZGBModel
from .observables import coverage, time_average, two_point_correlation
from .partition import NestedPartition, strip_partition
from .rng import SeedPolicy
from .schedule import make_schedule

ZGB_SPECIES = ("vacant", "CO", "O")
RESULT_HEADER = ("run_id", "time", "observable", "value", "stderr")
BENCH_HEADER = ("size", "workers", "schedule", "dt", "wall_seconds", "jumps_per_second")


def initial_configuration(cfg: RunConfig, lattice, model, rng: np.random.Generator) -> Configuration:
    config = Configuration(lattice, model.spin_space)
    if cfg.initial == "full":
        config.spins[:] = 1
    elif cfg.initial == "random":
        config.spins[:] = rng.random(lattice.size) < cfg.density
    elif cfg.initial == "ramp":
        # occupation probability rises along axis 0 from 0 to 1
        x = lattice.coords[:, 0] / max(1, lattice.dims[0] - 1)
        config.spins[:] = rng.random(lattice.size) < x
    return config


def observers_for(cfg: RunConfig, model) -> dict:
    obs = {}
    if "coverage" in cfg.observables:
        if isinstance(model, ZGBModel):
            obs["coverage"] = lambda c: dict(zip(ZGB_SPECIES, coverage(c, "all")))
        else:
            obs["coverage"] = coverage
    if "correlation" in cfg.observables:
        obs["correlation"] = lambda c: {str(k): v for k, v in enumerate(two_point_correlation(c, cfg.k_max))}
    return obs


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


@dataclass
class RunOutput:
    rows: list[tuple]
    workload: WorkloadLog | None = None
    trajectories: list = field(default_factory=list)
    wall_seconds: float = 0.0
    jumps: int = 0

    def results_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(RESULT_HEADER)
        w.writerows(self.rows)
        return buf.getvalue()

    def summary(self, name: str) -> tuple[float, float]:
        """(mean, stderr) of the time-average row of ``name`` (first replica)."""
        for r in self.rows:
            if r[2] == f"{name}:time_average":
                return float(r[3]), float(r[4])
        raise KeyError(name)

    def pooled_summary(self, name: str) -> tuple[float, float]:
        """Mean over replicas of the time averages of ``name`` and its combined standard error."""
        rows = [r for r in self.rows if r[2] == f"{name}:time_average"]
        if not rows:
            raise KeyError(name)
        means = np.array([float(r[3]) for r in rows])
        ses = np.array([float(r[4]) if r[4] else 0.0 for r in rows])
        return float(means.mean()), float(np.sqrt(np.sum(ses**2)) / len(rows))


def run_config(cfg: RunConfig, workers: int | None = None) -> RunOutput:
    """Run every replica of ``cfg``; output depends only on the config and seed."""
    workers = workers or cfg.workers
    lattice = cfg.build_lattice()
    model = cfg.build_model()
    part = cfg.build_partition(lattice, model)
    outer = part.outer if isinstance(part, NestedPartition) else part
    observers = observers_for(cfg, model)
    rows: list[tuple] = []
    trajectories = []
    log = WorkloadLog(outer.num_cells)
    total_jumps = 0
    start = time.perf_counter()
    with FractionalStepExecutor(part, model, workers, cfg.inner_dt) as ex:
        for r in range(cfg.replicas):
            policy = replica_policy(cfg.seed, r)
            config = initial_configuration(cfg, lattice, model, policy.numpy(1))
            sched = make_schedule(cfg.schedule, cfg.dt, cfg.T, cfg.mu, policy.numpy(2), cfg.group_order,
                                  cfg.rescale_random_time)
            sink = log if r == 0 else None
            ex.assignment = None
            hook = _balance_hook(cfg, log, workers) if (r == 0 and cfg.balance.enabled) else _close_hook(log, r)
            traj = run_simulation(config, part, sched, model, policy, observers, cfg.stride,
                                  workload=sink, on_window=hook, executor=ex)
            total_jumps += traj.jumps
            trajectories.append(traj)
            names = list(traj.samples[0]) if traj.samples else []
            for t, sample in zip(traj.times, traj.samples):
                for name in names:
                    rows.append((r, _fmt(t), name, _fmt(sample[name]), ""))
            for name in names:
                series = traj.series(name)
                try:
                    mean, se = time_average(series, cfg.burn_in)
                except ValueError:
                    mean, se = float(series.mean()), None
                rows.append((r, _fmt(traj.times[-1]), f"{name}:time_average", _fmt(mean), _fmt(se)))
    return RunOutput(rows, log, trajectories, time.perf_counter() - start, total_jumps)


def lattice_gas_config(base: RunConfig, beta: float, K: float, h: float, **overrides) -> RunConfig:
    """``base`` retargeted to the Arrhenius lattice gas at (beta, K, h), with validated overrides."""
    model = ModelConfig("arrhenius", {"beta": beta, "K": K, "h": h}, lattice_gas=True)
    return replace(base, model=model).with_overrides(**overrides)


def _close_hook(log: WorkloadLog, replica: int):
    def hook(k, ex):
        if replica == 0:
            log.close_window(k)
    return hook


def _balance_hook(cfg: RunConfig, log: WorkloadLog, workers: int):
    P = cfg.balance.workers or workers

    def hook(k, ex):
        hist = log.close_window(k)
        if P > 1 and P <= len(hist.counts) and rebalance_trigger(log.history, cfg.balance.cadence, cfg.balance.theta):
            # assignment only changes how cells are chunked over threads, never the result
            ex.assignment = rebalance_assignment(hist, P).worker_of
    return hook


def write_run_outputs(out: RunOutput, path: str, workload_path: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(out.results_csv())
    if out.workload is not None and out.workload.history:
        wp = workload_path or (path[:-4] if path.endswith(".csv") else path) + ".workload.csv"
        out.workload.write_csv(wp)


# ---------------------------------------------------------------------------
# load-balancing demonstration


@dataclass
class BalanceDemoReport:
    counts: np.ndarray
    weights: np.ndarray
    imbalance: float
    before: Assignment
    after: Assignment
    exhaustive_best: float
    old_edges: list[int]
    new_edges: list[int]
    strip_counts_after: np.ndarray

    @property
    def max_before(self) -> float:
        return self.before.max_load(self.weights)

    @property
    def max_after(self) -> float:
        return self.after.max_load(self.weights)

    @property
    def reduction(self) -> float:
        return self.max_after / self.max_before


def exhaustive_best_max_load(w, P: int) -> float:
    """Minimum over every contiguous split of ``w`` into P nonempty groups of the heaviest group."""
    from itertools import combinations

    w = np.asarray(w, dtype=np.float64)
    M = len(w)
    pre = np.concatenate([[0.0], np.cumsum(w)])
    best = np.inf
    for cuts in combinations(range(1, M), P - 1):
        edges = (0, *cuts, M)
        best = min(best, max(pre[b] - pre[a] for a, b in zip(edges, edges[1:])))
    return float(best)


def balance_demo(N: int = 1536, cells: int = 12, workers: int = 4, dt: float = 0.5, windows: int = 1,
                 seed: int = 0, granularity: int = 1) -> BalanceDemoReport:
    """1D strongly attractive lattice gas with a coverage gradient over the left half.

    Empty and sparsely covered regions flicker (adsorption then quick
    desorption) while the filled right half is almost frozen, so the jump
    workload piles up on the left cells.
    """
    from .lattice import Lattice

    lattice = Lattice((N,))
    model = ArrheniusModel(ArrheniusParams(c_a=1.0, c_d=1.0, beta=2.0, K=2.0, h=0.0))
    edges = list(range(0, N + 1, N // cells))
    part = strip_partition(lattice, edges, model.radius, model.write_radius)
    rng = SeedPolicy(seed).numpy(1)
    x = lattice.coords[:, 0] / N
    config = Configuration(lattice, model.spin_space)
    config.spins[:] = rng.random(N) < np.minimum(1.0, 2.0 * x)
    log = WorkloadLog(part.num_cells)
    sched = make_schedule("lie", dt, dt * windows)
    run_simulation(config, part, sched, model, SeedPolicy(seed), workload=log,
                   on_window=lambda k, ex: log.close_window(k))
    counts = sum(h.counts for h in log.history)
    w = counts / counts.sum()
    before = equal_count_assignment(cells, workers)
    after = rebalance_assignment(w, workers)
    best = exhaustive_best_max_load(w, workers)
    new_edges = rebalance_cells_1d(w, edges, granularity, model.radius, lattice=lattice)
    # workload on the resized strips over one more window
    part2 = strip_partition(lattice, new_edges, model.radius, model.write_radius)
    log2 = WorkloadLog(part2.num_cells)
    run_simulation(config, part2, make_schedule("lie", dt, dt), model, SeedPolicy(seed + 1), workload=log2,
                   on_window=lambda k, ex: log2.close_window(k))
    return BalanceDemoReport(counts, w, float(w.max() * cells), before, after, best, edges, new_edges,
                             log2.history[-1].counts)


# ---------------------------------------------------------------------------
# benchmarks


@dataclass
class BenchmarkRow:
    size: int
    workers: int
    schedule: str
    dt: float
    wall_seconds: float
    jumps_per_second: float

    def as_tuple(self):
        return (self.size, self.workers, self.schedule, _fmt(self.dt), f"{self.wall_seconds:.6f}",
                f"{self.jumps_per_second:.1f}")


def _bench_model(name: str):
    if name == "zgb":
        from .models import ZGBParams
        return ZGBModel(ZGBParams(k1=0.4, k2=1.0))
    return ArrheniusModel(ArrheniusParams(c_a=1.0, c_d=1.0, beta=1.0, K=1.0, h=0.0))


def benchmark_partitioned(dims, cell, workers: int, dt: float, T: float, model_name: str = "arrhenius",
                          seed: int = 0, schedule: str = "lie", repeats: int = 1) -> BenchmarkRow:
    """Best-of-``repeats`` wall time of a fractional-step run; strips of width ``cell`` along axis 0."""
    from .lattice import Lattice

    lattice = Lattice(tuple(dims))
    model = _bench_model(model_name)
    part = strip_partition(lattice, list(range(0, dims[0] + 1, cell)), model.radius, model.write_radius)
    sched = make_schedule(schedule, dt, T, rng=np.random.default_rng(seed), rescale_random_time=True)
    best, jumps = np.inf, 0
    with FractionalStepExecutor(part, model, workers) as ex:
        ex.execute_substep(Configuration(lattice, model.spin_space), 0, 1e-3, SeedPolicy(seed + 99))  # warm up
        for _ in range(repeats):
            config = Configuration(lattice, model.spin_space)
            t0 = time.perf_counter()
            traj = run_simulation(config, part, sched, model, SeedPolicy(seed), executor=ex)
            wall = time.perf_counter() - t0
            if wall < best:
                best, jumps = wall, traj.jumps
    return BenchmarkRow(lattice.size, workers, schedule, dt, best, jumps / best if best > 0 else 0.0)


def benchmark_serial(dims, T: float, model_name: str = "arrhenius", seed: int = 0, repeats: int = 1) -> BenchmarkRow:
    """Best-of-``repeats`` wall time of the unsplit serial kernel over the whole lattice."""
    from .lattice import Lattice

    lattice = Lattice(tuple(dims))
    model = _bench_model(model_name)
    lay = DomainLayout.build(lattice, [np.arange(lattice.size)], model.radius)
    params = model.kernel_params()
    spins = Configuration(lattice, model.spin_space).spins
    _native.run_window(model.kind, params, spins.copy(), lattice.nearest, lay.sites, lay.aff_ptr,
                       lay.aff_idx, 1e-6, np.uint64(seed))
    best, jumps = np.inf, 0
    for _ in range(repeats):
        work = spins.copy()
        t0 = time.perf_counter()
        j, _ = _native.run_window(model.kind, params, work, lattice.nearest, lay.sites, lay.aff_ptr,
                                  lay.aff_idx, float(T), np.uint64(seed))
        wall = time.perf_counter() - t0
        if wall < best:
            best, jumps = wall, j
    return BenchmarkRow(lattice.size, 0, "serial", T, best, jumps / best if best > 0 else 0.0)


def loglog_slope(sizes, times) -> float:
    return float(np.polyfit(np.log(np.asarray(sizes, float)), np.log(np.asarray(times, float)), 1)[0])
