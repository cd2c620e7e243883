"""Workload histograms and CDF-based load re-balancing.

The workload of a cell over a window is its executed jump count.  Two
re-balancing policies are offered, both one-dimensional (cells in strip
order): contiguous reassignment of cells to a fixed number of workers, and
resizing of variable-width strips.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .lattice import Lattice
from .partition import PartitionError, strip_partition


class AssignmentError(ValueError):
    pass


@dataclass
class WorkloadHistogram:
    counts: np.ndarray
    window: int = 0

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if np.any(self.counts < 0):
            raise ValueError("jump counts must be nonnegative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def quiescent(self) -> bool:
        return self.total == 0

    @property
    def normalized(self) -> np.ndarray | None:
        """Probability vector over cells; ``None`` when no jumps happened."""
        if self.quiescent:
            return None
        return self.counts / self.total

    @property
    def imbalance(self) -> float:
        """max share times cell count; 1 for a perfectly even load."""
        w = self.normalized
        return 0.0 if w is None else float(w.max() * len(w))


@dataclass
class WorkloadLog:
    """Rolling log of per-window histograms, fed as an executor workload sink."""

    num_cells: int
    history: list[WorkloadHistogram] = field(default_factory=list)
    _pending: dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    def __call__(self, window: int, substep: int, cells, jumps) -> None:
        acc = self._pending.setdefault(window, np.zeros(self.num_cells, dtype=np.int64))
        acc[np.asarray(cells, dtype=np.int64)] += np.asarray(jumps, dtype=np.int64)

    def close_window(self, window: int) -> WorkloadHistogram:
        hist = record_workload(self._pending.pop(window, np.zeros(self.num_cells, dtype=np.int64)), window)
        self.history.append(hist)
        return hist

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["window", "cell", "jumps"])
            for h in self.history:
                for m, j in enumerate(h.counts):
                    w.writerow([h.window, m, int(j)])


def record_workload(results, window: int) -> WorkloadHistogram:
    """Histogram from per-cell window results (or raw jump counts)."""
    counts = [getattr(r, "jumps", r) for r in results]
    return WorkloadHistogram(np.asarray(counts, dtype=np.int64), window)


@dataclass
class Assignment:
    """Contiguous groups of cells, one per worker."""

    groups: list[list[int]]

    @property
    def worker_of(self) -> np.ndarray:
        out = np.empty(sum(len(g) for g in self.groups), dtype=np.int64)
        for k, g in enumerate(self.groups):
            out[g] = k
        return out

    def loads(self, weights) -> np.ndarray:
        w = np.asarray(weights, dtype=np.float64)
        return np.array([w[g].sum() for g in self.groups])

    def max_load(self, weights) -> float:
        return float(self.loads(weights).max())


def _weights(W) -> np.ndarray:
    if isinstance(W, WorkloadHistogram):
        w = W.normalized
        return np.full(len(W.counts), 1.0 / len(W.counts)) if w is None else w
    w = np.asarray(W, dtype=np.float64)
    return w / w.sum() if w.sum() > 0 else np.full(len(w), 1.0 / len(w))


def _from_cuts(cuts: Sequence[int], M: int) -> Assignment:
    edges = [0, *cuts, M]
    return Assignment([list(range(a, b)) for a, b in zip(edges, edges[1:])])


def greedy_cdf_cuts(w: np.ndarray, P: int) -> list[int]:
    """Cut after the cell whose cumulative mass is nearest to k/P (ties to the smaller index).

    Cuts are kept strictly increasing so every worker gets at least one cell.
    """
    M = len(w)
    cdf = np.cumsum(w)
    cuts = []
    prev = 0
    for k in range(1, P):
        lo, hi = prev + 1, M - (P - k)  # cut position c means cells [.., c) end here
        cand = np.arange(lo, hi + 1)
        dist = np.abs(cdf[cand - 1] - k / P)
        c = int(cand[np.argmin(dist)])
        cuts.append(c)
        prev = c
    return cuts


def optimal_contiguous_cuts(w: np.ndarray, P: int) -> list[int]:
    """Contiguous split into P nonempty groups minimising the maximum load (exact DP)."""
    M = len(w)
    pre = np.concatenate([[0.0], np.cumsum(w)])
    best = np.full((P + 1, M + 1), np.inf)
    arg = np.zeros((P + 1, M + 1), dtype=np.int64)
    best[0, 0] = 0.0
    for p in range(1, P + 1):
        for j in range(p, M + 1):
            for i in range(p - 1, j):
                v = max(best[p - 1, i], pre[j] - pre[i])
                # strict improvement keeps the earliest cut on ties
                if v < best[p, j] - 1e-15:
                    best[p, j] = v
                    arg[p, j] = i
    cuts = []
    j = M
    for p in range(P, 0, -1):
        i = int(arg[p, j])
        if p > 1:
            cuts.append(i)
        j = i
    return sorted(cuts)


def rebalance_assignment(W, P: int, refine: bool = True) -> Assignment:
    """Map the workload CDF onto P equal shares with contiguous cell groups.

    The greedy CDF placement is followed, when ``refine`` is set, by an exact
    min-max search, which only replaces the greedy cuts if it strictly lowers
    the heaviest worker load.
    """
    w = _weights(W)
    M = len(w)
    if P < 1:
        raise AssignmentError("need at least one worker")
    if P > M:
        raise AssignmentError(f"{P} workers but only {M} cells")
    greedy = _from_cuts(greedy_cdf_cuts(w, P), M)
    if not refine:
        return greedy
    best = _from_cuts(optimal_contiguous_cuts(w, P), M)
    return best if best.max_load(w) < greedy.max_load(w) - 1e-12 else greedy


def equal_count_assignment(M: int, P: int) -> Assignment:
    """The trivial split into P contiguous groups of (almost) equal cell count."""
    if P > M:
        raise AssignmentError(f"{P} workers but only {M} cells")
    bounds = np.linspace(0, M, P + 1).round().astype(int)
    return _from_cuts(list(bounds[1:-1]), M)


def rebalance_cells_1d(W, edges: Sequence[int], g: int = 1, L: int = 1, num_strips: int | None = None,
                       lattice: Lattice | None = None, write_radius: int = 0) -> list[int]:
    """New strip edges placing equal workload mass in each strip.

    The workload of each old strip is spread uniformly over its sites; new
    edges sit at the inverse-CDF points k/M' rounded to multiples of ``g``
    and are then pushed apart so every strip is wider than ``L``.  If no
    legal layout exists the old edges are returned with a warning.
    """
    edges = [int(e) for e in edges]
    n = edges[-1]
    M_old = len(edges) - 1
    M = num_strips or M_old
    w = _weights(W)
    if len(w) != M_old:
        raise ValueError(f"{len(w)} workloads for {M_old} strips")
    if g < 1:
        raise ValueError("granularity must be >= 1")
    min_w = L + 1
    if M % 2 or M * min_w > n:
        warnings.warn(f"cannot fit {M} strips of width >= {min_w} in {n} sites; keeping old strips", stacklevel=2)
        return edges
    # piecewise-linear CDF over site positions
    cdf_x = np.array(edges, dtype=np.float64)
    cdf_y = np.concatenate([[0.0], np.cumsum(w)])
    targets = np.arange(1, M) / M
    raw = np.interp(targets, cdf_y, cdf_x) if cdf_y[-1] > 0 else targets * n
    inner = [int(round(x / g)) * g for x in raw]
    # clamp left to right, then right to left, to the minimum legal width
    new = [0, *inner, n]
    for k in range(1, M):
        new[k] = max(new[k], new[k - 1] + min_w)
    for k in range(M - 1, 0, -1):
        new[k] = min(new[k], new[k + 1] - min_w)
    if new[1] - new[0] < min_w:
        warnings.warn("strip re-balancing could not meet minimum widths; keeping old strips", stacklevel=2)
        return edges
    if lattice is not None:
        try:
            strip_partition(lattice, new, L, write_radius)
        except PartitionError as exc:
            warnings.warn(f"re-balanced strips rejected ({exc}); keeping old strips", stacklevel=2)
            return edges
    return new


def rebalance_trigger(history: Sequence[WorkloadHistogram], cadence: int = 10, theta: float = 2.0) -> bool:
    """True at cadence boundaries when the latest histogram is imbalanced by at least ``theta``."""
    if theta < 1:
        raise ValueError("theta must be >= 1")
    if not history:
        return False
    h = history[-1]
    if h.window % cadence:
        return False
    return h.imbalance >= theta
