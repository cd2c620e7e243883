"""INI run configuration: parsing, defaults and validation.

Grammar: standard INI sections with ``key = value`` lines and ``#`` or
``;`` comments.  Lists are comma separated.  Recognised sections and keys
are listed in ``SCHEMA``; anything else is rejected.

    [model]        name, c_a, c_d, beta, K, h, lattice_gas, k1, k2
    [lattice]      dims, initial (empty|full|random|ramp), density
    [partition]    cell_extent | strips, inner_extent
    [schedule]     kind, dt, T, mu, group_order, rescale_random_time, inner_dt
    [run]          seed, workers, replicas, burn_in, output, workload_output
    [observables]  names (coverage, correlation), stride, k_max
    [balance]      enabled, cadence, theta, granularity, workers
"""
from __future__ import annotations

import configparser
import math
import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .lattice import Lattice
from .models import ArrheniusParams, make_model
from .partition import PartitionError, build_partition, nested_partition, strip_partition


class ConfigError(ValueError):
    pass


SCHEMA = {
    "model": {"name", "c_a", "c_d", "beta", "K", "h", "lattice_gas", "k1", "k2"},
    "lattice": {"dims", "initial", "density"},
    "partition": {"cell_extent", "strips", "inner_extent"},
    "schedule": {"kind", "dt", "T", "mu", "group_order", "rescale_random_time", "inner_dt"},
    "run": {"seed", "workers", "replicas", "burn_in", "output", "workload_output"},
    "observables": {"names", "stride", "k_max"},
    "balance": {"enabled", "cadence", "theta", "granularity", "workers"},
}
REQUIRED = {"model": {"name"}, "lattice": {"dims"}, "schedule": {"kind", "dt", "T"}}
OBSERVABLES = ("coverage", "correlation")


@dataclass
class ModelConfig:
    name: str = "arrhenius"
    params: dict = field(default_factory=dict)
    lattice_gas: bool = False


@dataclass
class BalanceConfig:
    enabled: bool = False
    cadence: int = 10
    theta: float = 2.0
    granularity: int = 1
    workers: int = 0  # 0: use run.workers


@dataclass
class RunConfig:
    model: ModelConfig
    dims: tuple[int, ...]
    cell_extent: tuple[int, ...] | None = None
    strips: tuple[int, ...] | None = None
    inner_extent: tuple[int, ...] | None = None
    initial: str = "empty"
    density: float = 0.5
    schedule: str = "lie"
    dt: float = 1.0
    T: float = 1.0
    mu: tuple[float, float] = (0.5, 0.5)
    group_order: str = "OE"
    rescale_random_time: bool = True
    inner_dt: float | None = None
    seed: int = 0
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)
    replicas: int = 1
    burn_in: float = 0.2
    output: str = "results.csv"
    workload_output: str | None = None
    observables: tuple[str, ...] = ("coverage",)
    stride: int = 1
    k_max: int = 10
    balance: BalanceConfig = field(default_factory=BalanceConfig)

    def build_lattice(self) -> Lattice:
        return Lattice(self.dims)

    def build_model(self):
        p = dict(self.model.params)
        if self.model.lattice_gas:
            lat_d = len(self.dims)
            ap = ArrheniusParams.lattice_gas(p.get("beta", 1.0), p.get("K", 1.0), p.get("h", 0.0), 2 * lat_d)
            return make_model(self.model.name, c_a=ap.c_a, c_d=ap.c_d, beta=ap.beta, K=ap.K, h=ap.h)
        return make_model(self.model.name, **p)

    def build_partition(self, lattice: Lattice | None = None, model=None):
        lattice = lattice or self.build_lattice()
        model = model or self.build_model()
        wr = getattr(model, "write_radius", 1)
        if self.strips is not None:
            part = strip_partition(lattice, self.strips, model.radius, wr)
        else:
            part = build_partition(lattice, self.cell_extent, model.radius, wr)
        if self.inner_extent is not None:
            return nested_partition(part, self.inner_extent)
        return part

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        if not kw:
            return self
        cfg = replace(self, **kw)
        validate(cfg)
        return cfg


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.replace("x", ",").split(",") if t.strip())


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    cp.optionxform = str  # keys are case sensitive (K vs k1)
    return cp


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    cp = _parser()
    try:
        cp.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"parse error in {source}, line {exc.lineno}: key outside any [section]") from exc
    except configparser.ParsingError as exc:
        lineno, _ = exc.errors[0]
        raise ConfigError(f"parse error in {source}, line {lineno}: expected 'key = value'") from exc
    except configparser.Error as exc:
        lineno = getattr(exc, "lineno", None)
        where = f", line {lineno}" if lineno is not None else ""
        message = re.sub(r"^While reading from .*?\[line\s+\d+\]: ", "", exc.message)
        raise ConfigError(f"parse error in {source}{where}: {message}") from exc
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in cp[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")
    for section, keys in REQUIRED.items():
        for key in keys:
            if not cp.has_option(section, key):
                raise ConfigError(f"missing required key {section}.{key}")

    def get(section, key, conv, default=None):
        if not cp.has_option(section, key):
            return default
        raw = cp.get(section, key)
        try:
            return conv(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {section}.{key}: {raw!r} ({exc})") from exc

    params = {}
    for key in ("c_a", "c_d", "beta", "K", "h", "k1", "k2"):
        v = get("model", key, float)
        if v is not None:
            params[key] = v
    model = ModelConfig(cp.get("model", "name").strip().lower(), params, get("model", "lattice_gas", _bool, False))
    bal = BalanceConfig(
        enabled=get("balance", "enabled", _bool, False),
        cadence=get("balance", "cadence", int, 10),
        theta=get("balance", "theta", float, 2.0),
        granularity=get("balance", "granularity", int, 1),
        workers=get("balance", "workers", int, 0),
    )
    names = get("observables", "names", lambda s: tuple(t.strip() for t in s.split(",") if t.strip()), ("coverage",))
    cfg = RunConfig(
        model=model,
        dims=get("lattice", "dims", _ints),
        cell_extent=get("partition", "cell_extent", _ints),
        strips=get("partition", "strips", _ints),
        inner_extent=get("partition", "inner_extent", _ints),
        initial=get("lattice", "initial", lambda s: s.strip().lower(), "empty"),
        density=get("lattice", "density", float, 0.5),
        schedule=get("schedule", "kind", lambda s: s.strip().lower()),
        dt=get("schedule", "dt", float),
        T=get("schedule", "T", float),
        mu=get("schedule", "mu", _floats, (0.5, 0.5)),
        group_order=get("schedule", "group_order", lambda s: s.strip().upper(), "OE"),
        rescale_random_time=get("schedule", "rescale_random_time", _bool, True),
        inner_dt=get("schedule", "inner_dt", float),
        seed=get("run", "seed", int, 0),
        workers=get("run", "workers", int, os.cpu_count() or 1),
        replicas=get("run", "replicas", int, 1),
        burn_in=get("run", "burn_in", float, 0.2),
        output=get("run", "output", str, "results.csv"),
        workload_output=get("run", "workload_output", str),
        observables=names,
        stride=get("observables", "stride", int, 1),
        k_max=get("observables", "k_max", int, 10),
        balance=bal,
    )
    validate(cfg)
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"), str(path))


def validate(cfg: RunConfig) -> None:
    """Check every cross-module precondition, naming the offending keys."""
    if cfg.model.name not in ("arrhenius", "ising", "kawasaki", "zgb"):
        raise ConfigError(f"model.name: unknown model {cfg.model.name!r}")
    try:
        model = cfg.build_model()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"model: {exc}") from exc
    if not cfg.dims or any(n < 1 for n in cfg.dims):
        raise ConfigError(f"lattice.dims: must be positive integers, got {cfg.dims}")
    if (cfg.cell_extent is None) == (cfg.strips is None):
        raise ConfigError("partition: give exactly one of partition.cell_extent or partition.strips")
    if cfg.cell_extent is not None:
        if len(cfg.cell_extent) != len(cfg.dims):
            raise ConfigError("partition.cell_extent: needs one entry per entry of lattice.dims")
        for n, e in zip(cfg.dims, cfg.cell_extent):
            if e < 1 or n % e:
                raise ConfigError(f"lattice.dims {cfg.dims} is not divisible by partition.cell_extent {cfg.cell_extent}")
    try:
        cfg.build_partition(model=model)
    except PartitionError as exc:
        key = "partition.strips" if cfg.strips is not None else "partition.cell_extent"
        raise ConfigError(f"{key}: {exc}") from exc
    if cfg.initial not in ("empty", "full", "random", "ramp"):
        raise ConfigError(f"lattice.initial: unknown initial state {cfg.initial!r}")
    if not 0 <= cfg.density <= 1:
        raise ConfigError("lattice.density: must lie in [0, 1]")
    if cfg.schedule not in ("lie", "strang", "random"):
        raise ConfigError(f"schedule.kind: expected lie, strang or random, got {cfg.schedule!r}")
    if not (cfg.dt and cfg.T and 0 < cfg.dt <= cfg.T):
        raise ConfigError(f"schedule.dt / schedule.T: need 0 < dt <= T, got dt={cfg.dt}, T={cfg.T}")
    if len(cfg.mu) != 2 or min(cfg.mu) < 0 or not math.isclose(sum(cfg.mu), 1.0):
        raise ConfigError(f"schedule.mu: two probabilities summing to 1 expected, got {cfg.mu}")
    if cfg.group_order not in ("OE", "EO"):
        raise ConfigError(f"schedule.group_order: expected OE or EO, got {cfg.group_order!r}")
    if cfg.inner_dt is not None and cfg.inner_dt <= 0:
        raise ConfigError("schedule.inner_dt: must be positive")
    if cfg.workers < 1:
        raise ConfigError("run.workers: must be >= 1")
    if cfg.replicas < 1:
        raise ConfigError("run.replicas: must be >= 1")
    if not 0 <= cfg.burn_in < 1:
        raise ConfigError("run.burn_in: must lie in [0, 1)")
    for name in cfg.observables:
        if name not in OBSERVABLES:
            raise ConfigError(f"observables.names: unknown observable {name!r}")
    if cfg.stride < 1:
        raise ConfigError("observables.stride: must be >= 1")
    if "correlation" in cfg.observables and cfg.k_max >= cfg.dims[0]:
        raise ConfigError("observables.k_max: must be below lattice.dims[0]")
    b = cfg.balance
    if b.cadence < 1 or b.theta < 1 or b.granularity < 1 or b.workers < 0:
        raise ConfigError("balance: cadence >= 1, theta >= 1, granularity >= 1 and workers >= 0 required")
    if b.enabled and cfg.strips is None and len(cfg.dims) > 1 and cfg.cell_extent[1:] != cfg.dims[1:]:
        raise ConfigError("balance.enabled: re-balancing needs a strip partition (partition.strips)")
