"""Rate models: the local micro-mechanisms that drive the KMC kernels.

Every model enumerates, for an anchor site ``x`` and a configuration, the
possible events ``(x, update, rate)``.  Two enumerations are provided:

* ``transitions`` expands every random choice into its own event (one event
  per partner site).  This is what the generator matrix and the kernels use.
* ``events`` reproduces the grouped form, in which the partner of a
  two-site event is drawn uniformly from the eligible neighbors at
  enumeration time.  Both describe the same Markov jump process.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .lattice import Configuration, Lattice, SiteUpdate, SpinSpace

ARRHENIUS, KAWASAKI, ZGB = 1, 2, 3

VACANT, CO, OXYGEN = 0, 1, 2
# internal ZGB spin -> the {-1, 0, 1} value used in the rate formulas
ZGB_SIGNED = (0, 1, -1)


class ModelDomainError(ValueError):
    pass


@dataclass(frozen=True)
class Event:
    anchor: int
    update: SiteUpdate
    rate: float

    def __post_init__(self):
        if not (self.rate >= 0 and math.isfinite(self.rate)):
            raise ModelDomainError(f"event rate must be finite and >= 0, got {self.rate}")


@dataclass(frozen=True)
class ArrheniusParams:
    c_a: float = 1.0
    c_d: float = 1.0
    beta: float = 1.0
    K: float = 1.0
    h: float = 0.0

    def __post_init__(self):
        if self.c_a < 0 or self.c_d < 0:
            raise ValueError("c_a and c_d must be nonnegative")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")

    @classmethod
    def lattice_gas(cls, beta: float, K: float, h: float, coordination: int) -> "ArrheniusParams":
        """Constants whose stationary law is the lattice-gas Ising measure used by
        :mod:`fskmc.exact` (coverage 1/2 at ``h = coordination * K / 2``).

        Detailed balance fixes ``c_a / c_d = exp(-beta * coordination * K)``;
        the adsorption constant is pinned to 1.
        """
        return cls(c_a=1.0, c_d=math.exp(beta * coordination * K), beta=beta, K=K, h=h)

    def as_array(self) -> np.ndarray:
        return np.array([self.c_a, self.c_d, self.beta, self.K, self.h], dtype=np.float64)


@dataclass(frozen=True)
class ZGBParams:
    k1: float = 0.5
    k2: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.k1 <= 1.0:
            raise ValueError(f"k1 must lie in [0, 1], got {self.k1}")
        if self.k2 < 0:
            raise ValueError(f"k2 must be nonnegative, got {self.k2}")

    def as_array(self) -> np.ndarray:
        return np.array([self.k1, self.k2], dtype=np.float64)


class RateModel(Protocol):
    spin_space: SpinSpace
    radius: int
    kind: int  # native kernel id, 0 if the model has no compiled counterpart

    def transitions(self, x: int, spins: np.ndarray, lattice: Lattice) -> list[Event]: ...

    def site_rates(self, spins: np.ndarray, sites: np.ndarray, lattice: Lattice) -> np.ndarray: ...

    def kernel_params(self) -> np.ndarray: ...


def _check_binary(spins, sites):
    if np.any(spins[sites] > 1):
        raise ModelDomainError("spin values must be 0 or 1 for this model")


def _desorption_rate(x, spins, lattice, p: ArrheniusParams) -> float:
    nbrs = lattice.nearest[x]
    occupied = int(spins[nbrs].sum())
    return p.c_d * math.exp(-p.beta * (p.K * occupied + p.h))


def arrhenius_events(x: int, config: Configuration, p: ArrheniusParams) -> list[Event]:
    """Single spin flip at ``x`` with rate ``c_a (1-s) + c_d s exp(-beta U)``."""
    spins, lattice = config.spins, config.lattice
    s = int(spins[x])
    if s > 1:
        raise ModelDomainError(f"spin {s} at site {x} is not 0/1")
    _check_binary(spins, lattice.nearest[x])
    rate = p.c_a if s == 0 else _desorption_rate(x, spins, lattice, p)
    return [Event(x, SiteUpdate(((x, 1 - s),)), rate)]


def kawasaki_events(x: int, config: Configuration, p: ArrheniusParams) -> list[Event]:
    """Particle hops from ``x`` to each vacant nearest neighbor.

    The hop rate reuses the desorption barrier of the source site.
    """
    spins, lattice = config.spins, config.lattice
    nbrs = lattice.nearest[x]
    _check_binary(spins, np.append(nbrs, x))
    if spins[x] == 0:
        return []
    rate = _desorption_rate(x, spins, lattice, p)
    out = []
    # one channel per neighbor slot; slots that wrap onto x itself are skipped
    for y in nbrs:
        if y != x and spins[y] == 0:
            out.append(Event(x, SiteUpdate(((x, 0), (int(y), 1))), rate))
    return out


def _zgb_counts(x, spins, lattice):
    nbrs = [int(y) for y in lattice.nearest[x] if y != x]
    counts = [0, 0, 0]
    for y in nbrs:
        counts[spins[y]] += 1
    return nbrs, counts


def _zgb_rates(s: int, counts, p: ZGBParams, z: int):
    """Per-event-type rates from the table formulas, evaluated on signed spins.

    ``z`` is the coordination number; the table's 1/4 and 1/8 factors are
    the square-lattice case z = 4, generalised here as 1/z and 1/(2z).
    """
    sig = ZGB_SIGNED[s]
    nu_vac, nu_co, nu_o = counts[VACANT], counts[CO], counts[OXYGEN]
    co_ads = p.k1 * (1 - sig * sig)
    r2 = (1 - sig * sig) * nu_vac / z
    r3 = sig * (1 + sig) * nu_o / (2 * z)
    r4 = sig * (sig - 1) * nu_co / (2 * z)
    return co_ads, (1 - p.k1) * r2, p.k2 * r3, p.k2 * r4


def zgb_events(x: int, config: Configuration, p: ZGBParams, rng=None) -> list[Event]:
    """ZGB CO-oxidation events anchored at ``x``.

    With a random stream, two-site events carry one uniformly drawn partner
    and the summed rate.  Without one, every partner gets its own event.
    """
    spins, lattice = config.spins, config.lattice
    if np.any(spins[np.append(lattice.nearest[x], x)] > 2):
        raise ModelDomainError("ZGB spins must be 0 (vacant), 1 (CO) or 2 (O)")
    s = int(spins[x])
    nbrs, counts = _zgb_counts(x, spins, lattice)
    z = 2 * lattice.d
    co_ads, o2_ads, react_co, react_o = _zgb_rates(s, counts, p, z)

    def pair_events(total, partner_state, new_x, new_y):
        if total <= 0:
            return []
        partners = [y for y in nbrs if spins[y] == partner_state]
        if rng is not None:
            y = partners[int(rng.integers(len(partners)))]
            return [Event(x, SiteUpdate(((x, new_x), (y, new_y))), total)]
        # a partner reachable through several periodic images counts once per image
        return [Event(x, SiteUpdate(((x, new_x), (y, new_y))), total / len(partners)) for y in partners]

    out: list[Event] = []
    if s == VACANT:
        if co_ads > 0:
            out.append(Event(x, SiteUpdate(((x, CO),)), co_ads))
        out += pair_events(o2_ads, VACANT, OXYGEN, OXYGEN)
    elif s == CO:
        out += pair_events(react_co, OXYGEN, VACANT, VACANT)
    else:
        out += pair_events(react_o, CO, VACANT, VACANT)
    return out


def _merge(events: list[Event]) -> list[Event]:
    """Sum rates of events with identical updates (periodic images on tiny lattices)."""
    merged: dict[tuple, float] = {}
    anchors = {}
    for e in events:
        key = tuple(sorted(e.update.targets))
        merged[key] = merged.get(key, 0.0) + e.rate
        anchors[key] = e
    return [Event(anchors[k].anchor, anchors[k].update, r) for k, r in merged.items()]


class _ModelBase:
    radius = 1
    # how far from the anchor an update may write (0 for single-site flips)
    write_radius = 1

    def events(self, x, spins, lattice, rng=None) -> list[Event]:
        raise NotImplementedError

    def transitions(self, x, spins, lattice) -> list[Event]:
        return [e for e in _merge(self.events(x, spins, lattice)) if e.rate > 0]

    def site_rates(self, spins, sites, lattice) -> np.ndarray:
        return np.array([sum(e.rate for e in self.transitions(int(x), spins, lattice)) for x in sites])


@dataclass(frozen=True)
class ArrheniusModel(_ModelBase):
    """Adsorption/desorption spin flips with Arrhenius desorption."""

    params: ArrheniusParams = ArrheniusParams()
    spin_space: SpinSpace = SpinSpace(2)
    kind: int = ARRHENIUS
    write_radius = 0

    def events(self, x, spins, lattice, rng=None):
        return arrhenius_events(x, Configuration(lattice, self.spin_space, spins), self.params)

    def site_rates(self, spins, sites, lattice):
        sites = np.asarray(sites, dtype=np.int64)
        p = self.params
        s = spins[sites].astype(np.float64)
        occ = spins[lattice.nearest[sites]].sum(axis=1)
        return p.c_a * (1 - s) + p.c_d * s * np.exp(-p.beta * (p.K * occ + p.h))

    def kernel_params(self):
        return self.params.as_array()


@dataclass(frozen=True)
class KawasakiModel(_ModelBase):
    """Conservative particle hopping (spin exchange) with Arrhenius barriers."""

    params: ArrheniusParams = ArrheniusParams()
    spin_space: SpinSpace = SpinSpace(2)
    kind: int = KAWASAKI

    def events(self, x, spins, lattice, rng=None):
        return kawasaki_events(x, Configuration(lattice, self.spin_space, spins), self.params)

    def kernel_params(self):
        return self.params.as_array()


@dataclass(frozen=True)
class ZGBModel(_ModelBase):
    """Ziff-Gulari-Barshad CO oxidation: 0 vacant, 1 CO, 2 O."""

    params: ZGBParams = ZGBParams()
    spin_space: SpinSpace = SpinSpace(3)
    kind: int = ZGB

    def events(self, x, spins, lattice, rng=None):
        return zgb_events(x, Configuration(lattice, self.spin_space, spins), self.params, rng)

    def kernel_params(self):
        return self.params.as_array()


def make_model(name: str, **params) -> RateModel:
    name = name.lower()
    if name in ("arrhenius", "ising"):
        return ArrheniusModel(ArrheniusParams(**params))
    if name == "kawasaki":
        return KawasakiModel(ArrheniusParams(**params))
    if name == "zgb":
        return ZGBModel(ZGBParams(**params))
    raise ValueError(f"unknown model {name!r}")
