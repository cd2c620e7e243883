"""Serial continuous-time KMC kernel restricted to a site domain.

The kernel is the stochastic simulation algorithm: exponential waiting
times from the total rate of the domain, events chosen proportionally to
their rates.  Rates may read sites outside the domain; only events anchored
inside the domain fire.

Two implementations share one contract.  Models with a compiled
counterpart (``model.kind != 0``) run through :mod:`fskmc._native`; any
other object satisfying :class:`~fskmc.models.RateModel` runs through the
pure-Python catalog below.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _native
from .lattice import Configuration, Lattice, apply_update
from .models import Event, RateModel
from .rng import SplitMix64

REBUILD_EVERY = _native.REBUILD_EVERY


@dataclass
class WindowResult:
    jumps: int
    advanced_time: float
    last_event_time: float = 0.0


@dataclass
class EventCatalog:
    """Events anchored in a domain, grouped per site, with the running total rate."""

    domain: np.ndarray
    site_events: list[list[Event]]
    site_rates: np.ndarray
    total_rate: float = 0.0
    _position: dict[int, int] = field(default_factory=dict, repr=False)

    @property
    def events(self) -> list[Event]:
        return [e for evs in self.site_events for e in evs]

    def __len__(self):
        return sum(len(evs) for evs in self.site_events)

    def refresh(self, sites, spins, lattice, model) -> None:
        """Re-enumerate the events of ``sites`` (those outside the domain are ignored)."""
        for x in sites:
            i = self._position.get(int(x))
            if i is None:
                continue
            evs = model.transitions(int(x), spins, lattice)
            self.total_rate -= self.site_rates[i]
            self.site_events[i] = evs
            self.site_rates[i] = sum(e.rate for e in evs)
            self.total_rate += self.site_rates[i]

    def rebuild_total(self) -> None:
        self.total_rate = float(self.site_rates.sum())


def build_catalog(config: Configuration, domain, model: RateModel) -> EventCatalog:
    domain = np.asarray(domain, dtype=np.int64).reshape(-1)
    site_events = [model.transitions(int(x), config.spins, config.lattice) for x in domain]
    rates = np.array([sum(e.rate for e in evs) for evs in site_events], dtype=np.float64)
    cat = EventCatalog(domain, site_events, rates, _position={int(x): i for i, x in enumerate(domain)})
    cat.rebuild_total()
    return cat


def sample_next(catalog: EventCatalog, rng) -> tuple[float, Event] | None:
    """Draw (waiting time, event); ``None`` when the catalog is quiescent.

    ``rng`` must provide ``uniform()`` on (0, 1] (see :class:`SplitMix64`).
    Selection is two-stage, site then event, each proportional to rate.
    """
    total = catalog.total_rate
    if total <= 0:
        return None
    tau = -np.log(rng.uniform()) / total
    target = (1.0 - rng.uniform()) * total
    rates = catalog.site_rates
    i = int(np.searchsorted(np.cumsum(rates), target, side="right"))
    i = min(i, len(rates) - 1)
    while i >= 0 and rates[i] <= 0:
        i -= 1
    if i < 0:
        i = int(np.argmax(rates > 0))
        if rates[i] <= 0:
            # only roundoff was left in the running total
            catalog.rebuild_total()
            return None
    evs = catalog.site_events[i]
    target = (1.0 - rng.uniform()) * catalog.site_rates[i]
    acc = 0.0
    for e in evs:
        acc += e.rate
        if target < acc:
            return tau, e
    return tau, evs[-1]


def run_window_python(config: Configuration, domain, dt: float, model: RateModel, rng) -> WindowResult:
    if dt <= 0:
        return WindowResult(0, max(dt, 0.0))
    lattice = config.lattice
    cat = build_catalog(config, domain, model)
    reach = 2 * model.radius
    t = last = 0.0
    jumps = 0
    while True:
        draw = sample_next(cat, rng)
        if draw is None:
            break
        tau, event = draw
        t += tau
        if t > dt:
            # the pending clock is discarded; memorylessness makes this unbiased
            break
        apply_update(config, event.update)
        cat.refresh(lattice.ball(event.anchor, reach), config.spins, lattice, model)
        jumps += 1
        last = t
        if jumps % REBUILD_EVERY == 0:
            cat.rebuild_total()
    return WindowResult(jumps, dt, last)


@dataclass
class DomainLayout:
    """Flattened description of a list of disjoint domains for the compiled kernel.

    ``aff_ptr/aff_idx`` list, for every site position, the positions within
    the same domain at distance <= 2L (the sites whose rates an event
    anchored there can change).
    """

    dom_ptr: np.ndarray
    sites: np.ndarray
    aff_ptr: np.ndarray
    aff_idx: np.ndarray

    @property
    def count(self) -> int:
        return len(self.dom_ptr) - 1

    def domain(self, k: int) -> np.ndarray:
        return self.sites[self.dom_ptr[k] : self.dom_ptr[k + 1]]

    @classmethod
    def build(cls, lattice: Lattice, domains, radius: int) -> "DomainLayout":
        reach = 2 * radius
        offsets = np.array(lattice.offsets(reach) or np.zeros((0, lattice.d), dtype=int)).reshape(-1, lattice.d)
        dims = np.array(lattice.dims)
        dom_ptr = [0]
        all_sites = []
        aff_ptr = [0]
        aff_idx = []
        for dom in domains:
            dom = np.asarray(dom, dtype=np.int64).reshape(-1)
            local = {int(x): i for i, x in enumerate(dom)}
            coords = lattice.coords[dom]
            for i, c in enumerate(coords):
                near = {i}
                if len(offsets):
                    shifted = (c + offsets) % dims
                    for y in np.ravel_multi_index(shifted.T, lattice.dims):
                        j = local.get(int(y))
                        if j is not None:
                            near.add(j)
                aff_idx.extend(sorted(near))
                aff_ptr.append(len(aff_idx))
            all_sites.append(dom)
            dom_ptr.append(dom_ptr[-1] + len(dom))
        sites = np.concatenate(all_sites) if all_sites else np.zeros(0, dtype=np.int64)
        return cls(np.array(dom_ptr, dtype=np.int64), sites.astype(np.int64),
                   np.array(aff_ptr, dtype=np.int64), np.array(aff_idx, dtype=np.int64))


def run_window(config: Configuration, domain, dt: float, model: RateModel, rng, layout=None) -> WindowResult:
    """Advance the events anchored in ``domain`` by local time ``dt``.

    ``rng`` is either an integer seed or a :class:`SplitMix64`.  Models with
    a compiled kernel take the fast path; a precomputed single-domain
    ``layout`` avoids rebuilding neighborhood lists.
    """
    if getattr(model, "kind", 0):
        seed = rng.state if isinstance(rng, SplitMix64) else int(rng)
        if layout is None:
            layout = DomainLayout.build(config.lattice, [domain], model.radius)
        jumps, last = _native.run_window(
            model.kind, model.kernel_params(), config.spins, config.lattice.nearest,
            layout.sites, layout.aff_ptr, layout.aff_idx, float(dt), np.uint64(seed),
        )
        return WindowResult(int(jumps), max(float(dt), 0.0), float(last))
    if not isinstance(rng, SplitMix64):
        rng = SplitMix64(int(rng))
    return run_window_python(config, domain, dt, model, rng)
