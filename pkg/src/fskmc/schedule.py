"""Processor communication schedules: which sub-lattice runs, and for how long."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .partition import Group

KINDS = ("lie", "strang", "random", "custom")


@dataclass
class Schedule:
    """A realized sequence of (group, duration) sub-steps.

    ``macro_ends[k]`` is the number of sub-steps completed at the end of
    macro-window k and ``physical_times[k]`` the simulated time reached
    there.  Random schedules advance physical time by half the scheduled
    duration, since their averaged generator is half the full one.
    """

    kind: str
    dt: float
    T: float
    substeps: list[tuple[Group, float]]
    macro_ends: list[int]
    physical_times: list[float]
    mu: tuple[float, float] | None = None
    group_order: str = "OE"
    meta: dict = field(default_factory=dict)

    @property
    def groups(self) -> np.ndarray:
        return np.array([int(g) for g, _ in self.substeps], dtype=np.int64)

    @property
    def durations(self) -> np.ndarray:
        return np.array([d for _, d in self.substeps], dtype=np.float64)

    def group_time(self, group) -> float:
        g = Group.parse(group)
        return float(sum(d for h, d in self.substeps if h == g))

    def __len__(self):
        return len(self.substeps)


def _windows(dt: float, T: float) -> list[float]:
    if not (0 < dt <= T):
        raise ValueError(f"need 0 < dt <= T, got dt={dt}, T={T}")
    n = max(1, round(T / dt))
    widths = [dt] * n
    if not math.isclose(n * dt, T, rel_tol=1e-9, abs_tol=1e-12):
        widths[-1] = T - (n - 1) * dt
        warnings.warn(f"T={T} is not a multiple of dt={dt}; last window set to {widths[-1]:g}", stacklevel=3)
    return widths


def make_schedule(kind: str, dt: float, T: float, mu: Sequence[float] | None = None, rng=None,
                  group_order: str = "OE", rescale_random_time: bool = False,
                  substeps: Sequence[tuple] | None = None) -> Schedule:
    """Build the sub-step list for a Lie, Strang, random or custom schedule.

    ``group_order`` names the sub-lattice that opens each macro-window.  With
    ``rescale_random_time`` a random schedule covers scheduled time ``2T`` so
    that it reaches physical time ``T``.
    """
    kind = kind.lower()
    if kind not in KINDS:
        raise ValueError(f"unknown schedule kind {kind!r}; expected one of {KINDS}")
    order = group_order.upper()
    if order not in ("OE", "EO"):
        raise ValueError(f"group_order must be OE or EO, got {group_order!r}")
    first, second = (Group.O, Group.E) if order == "OE" else (Group.E, Group.O)
    steps: list[tuple[Group, float]] = []
    ends: list[int] = []
    times: list[float] = []

    if kind == "custom":
        if not substeps:
            raise ValueError("custom schedules need an explicit substep list")
        clock = 0.0
        for g, d in substeps:
            if d < 0:
                raise ValueError("durations must be nonnegative")
            steps.append((Group.parse(g), float(d)))
            ends.append(len(steps))
            clock += float(d)
            times.append(clock)
        return Schedule(kind, dt, T, steps, ends, times, None, order)

    if kind == "random":
        mu = (0.5, 0.5) if mu is None else tuple(float(m) for m in mu)
        if len(mu) != 2 or min(mu) < 0 or not math.isclose(sum(mu), 1.0):
            raise ValueError(f"mu must be two probabilities (mu_O, mu_E) summing to 1, got {mu}")
        horizon = 2 * T if rescale_random_time else T
        widths = _windows(dt, horizon)
        if rng is None:
            rng = np.random.default_rng()
        draws = rng.random(len(widths))
        clock = 0.0
        for u, w in zip(draws, widths):
            steps.append((Group.O if u < mu[0] else Group.E, w))
            ends.append(len(steps))
            clock += w
            times.append(clock / 2)
        return Schedule(kind, dt, T, steps, ends, times, mu, order, {"rescaled": rescale_random_time})

    clock = 0.0
    for w in _windows(dt, T):
        if kind == "lie":
            steps += [(first, w), (second, w)]
        else:
            steps += [(first, w / 2), (second, w), (first, w / 2)]
        ends.append(len(steps))
        clock += w
        times.append(clock)
    return Schedule(kind, dt, T, steps, ends, times, None, order)
