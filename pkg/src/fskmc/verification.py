"""Exact-matrix and statistical checks of the fractional-step approximation.

Everything here except :func:`weak_error_order`'s simulation path is a
deterministic computation on generators of tiny lattices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .executor import run_replicas, run_serial_replicas
from .generator import GeneratorMatrix, OracleScaleError, expm, generator_matrix
from .lattice import Configuration
from .partition import Group, Partition
from .schedule import make_schedule

ORACLE_LIMIT = 2**12


def _norm(A) -> float:
    """Induced infinity norm (max absolute row sum)."""
    A = A.toarray() if sp.issparse(A) else np.asarray(A)
    return float(np.abs(A).sum(axis=1).max()) if A.ndim == 2 else float(np.abs(A).max())


@dataclass
class SplitGenerators:
    full: np.ndarray
    O: np.ndarray
    E: np.ndarray
    cells: list[np.ndarray]

    def group(self, g) -> np.ndarray:
        return self.O if Group.parse(g) == Group.O else self.E


def split_generators(model, partition: Partition) -> SplitGenerators:
    lat = partition.lattice
    full = generator_matrix(model, lat).dense()
    cells = [generator_matrix(model, lat, c.sites).dense() for c in partition.cells]
    O = generator_matrix(model, lat, partition.sublattice(Group.O)).dense()
    E = generator_matrix(model, lat, partition.sublattice(Group.E)).dense()
    return SplitGenerators(full, O, E, cells)


def generator_additivity(model, partition: Partition) -> float:
    """max |Q - sum_m Q_m|."""
    G = split_generators(model, partition)
    return float(np.abs(G.full - sum(G.cells)).max())


def same_color_factorization(model, partition: Partition, dt: float, group="E") -> float:
    """max |exp(dt Q^g) - prod_m exp(dt Q^g_m)| over cells of color g."""
    G = split_generators(model, partition)
    lhs = expm(G.group(group), dt)
    rhs = np.eye(lhs.shape[0])
    for m in partition.cells_of(group):
        rhs = rhs @ expm(G.cells[m], dt)
    return float(np.abs(lhs - rhs).max())


@dataclass
class CommutatorReport:
    full_vs_boundary: float
    interior_terms: dict[str, float]
    full_norm: float
    coverage_norm: float
    ok: bool
    tol: float


def commutator_support_check(model, partition: Partition, tol: float = 1e-10) -> CommutatorReport:
    """Check that [Q^E, Q^O] only involves events anchored on cell boundaries.

    The boundary width is the interaction range plus the model's write range,
    the distance over which an event can change another anchor's rates.
    """
    lat = partition.lattice
    width = partition.radius + getattr(model, "write_radius", 0)

    def part(g, where):
        sites = [partition.boundary(m, width) if where == "b" else partition.interior(m, width)
                 for m in partition.cells_of(g)]
        return generator_matrix(model, lat, np.concatenate(sites)).dense()

    Eb, Ei, Ob, Oi = part(Group.E, "b"), part(Group.E, "i"), part(Group.O, "b"), part(Group.O, "i")
    E, O = Eb + Ei, Ob + Oi
    comm = lambda A, B: A @ B - B @ A  # noqa: E731
    full = comm(E, O)
    interior = {"[E_o,O_o]": comm(Ei, Oi), "[E_b,O_o]": comm(Eb, Oi), "[E_o,O_b]": comm(Ei, Ob)}
    dev = float(np.abs(full - comm(Eb, Ob)).max())
    inner = {k: float(np.abs(v).max()) for k, v in interior.items()}
    f = GeneratorMatrix(sp.csr_matrix(full), model.spin_space.num_states, lat.size).observable(lambda s: s.mean())
    cov = float(np.sqrt(np.mean((full @ f) ** 2)))
    ok = dev <= tol and all(v <= tol for v in inner.values())
    return CommutatorReport(dev, inner, float(np.abs(full).max()), cov, ok, tol)


def lie_step(G: SplitGenerators, dt: float, order: str = "OE") -> np.ndarray:
    first, second = (G.O, G.E) if order.upper() == "OE" else (G.E, G.O)
    return expm(first, dt) @ expm(second, dt)


def strang_step(G: SplitGenerators, dt: float, order: str = "OE") -> np.ndarray:
    first, second = (G.O, G.E) if order.upper() == "OE" else (G.E, G.O)
    half = expm(first, dt / 2)
    return half @ expm(second, dt) @ half


def random_step(G: SplitGenerators, dt: float) -> np.ndarray:
    """Averaged one-window transition matrix of the random schedule (uniform group choice)."""
    return 0.5 * (expm(G.O, dt) + expm(G.E, dt))


def splitting_defect(G: SplitGenerators, dt: float, scheme: str) -> float:
    """Local one-window defect in the induced infinity norm.

    Random schedules are compared with the half-rate exact evolution, the
    averaged generator being half the full one.
    """
    if scheme == "lie":
        return _norm(expm(G.full, dt) - lie_step(G, dt))
    if scheme == "strang":
        return _norm(expm(G.full, dt) - strang_step(G, dt))
    if scheme == "random":
        return _norm(expm(G.full, dt / 2) - random_step(G, dt))
    raise ValueError(f"unknown scheme {scheme!r}")


def defect_ratio(G: SplitGenerators, dt: float, scheme: str) -> float:
    """defect(dt) / defect(dt / 2): about 4 for a local error of order dt^2, 8 for dt^3."""
    return splitting_defect(G, dt, scheme) / splitting_defect(G, dt / 2, scheme)


def averaged_generator_gap(G: SplitGenerators) -> float:
    """max |(Q^E + Q^O)/2 - Q/2|, zero by linearity."""
    return float(np.abs(0.5 * (G.E + G.O) - 0.5 * G.full).max())


def random_leading_term_ratio(G: SplitGenerators, dt: float) -> float:
    """Residual of the random defect after removing (dt^2 / 8) (Q^E - Q^O)^2, halving dt.

    The residual is third order, so the ratio approaches 8.
    """
    D = G.E - G.O
    lead = lambda t: random_step(G, t) - expm(G.full, t / 2) - t * t / 8 * (D @ D)  # noqa: E731
    return _norm(lead(dt)) / _norm(lead(dt / 2))


@dataclass
class DefectConstants:
    q: int
    lie: float
    random: float

    @property
    def ratio(self) -> float:
        """random / Lie constant; grows with the cell size q."""
        return self.random / self.lie


def defect_constants(model, lattice, q: int, dt: float = 0.05,
                     observable: Callable | None = None) -> DefectConstants:
    """One-window defect constants (defect / dt^2) of Lie and random schedules on an observable.

    Uses sparse ``expm_multiply`` so lattices up to 2^12 states stay cheap.
    The defect vector is measured in the root-mean-square norm over all
    configurations.
    """
    from .partition import strip_partition

    f_obs = observable or (lambda s: s.mean())
    part = strip_partition(lattice, list(range(0, lattice.dims[0] + 1, q)), model.radius,
                           getattr(model, "write_radius", 0))
    Q = generator_matrix(model, lattice)
    QO = generator_matrix(model, lattice, part.sublattice(Group.O)).matrix
    QE = generator_matrix(model, lattice, part.sublattice(Group.E)).matrix
    f = Q.observable(f_obs)
    rms = lambda v: float(np.sqrt(np.mean(v**2)))  # noqa: E731
    exact = expm_multiply(Q.matrix * dt, f)
    lie = expm_multiply(QO * dt, expm_multiply(QE * dt, f))
    exact_half = expm_multiply(Q.matrix * (dt / 2), f)
    rnd = 0.5 * (expm_multiply(QE * dt, f) + expm_multiply(QO * dt, f))
    return DefectConstants(q, rms(lie - exact) / dt**2, rms(rnd - exact_half) / dt**2)


@dataclass
class WeakErrorResult:
    dts: list[float]
    errors: list[float]
    stderrs: list[float]
    slope: float
    status: str  # "ok" or "inconclusive"
    monotone: bool
    reference: float
    values: list[float] = field(default_factory=list)
    method: str = "oracle"


def _fit_slope(dts, errs) -> float:
    x, y = np.log(np.asarray(dts)), np.log(np.maximum(np.asarray(errs), 1e-300))
    return float(np.polyfit(x, y, 1)[0])


def weak_error_order(model, partition: Partition, kind: str, dts, T: float, initial: Configuration,
                     observable: Callable | None = None, replicas: int = 10_000, seed: int = 0,
                     oracle_limit: int = ORACLE_LIMIT, min_snr: float = 2.0, workers: int = 1) -> WeakErrorResult:
    """Global weak error |E f(X_T^dt) - E f(X_T)| over a grid of windows and its log-log slope.

    Small state spaces use exact transition matrices (random schedules
    averaged over the group draws).  Larger ones compare replica means of the
    split and serial kernels; if the error at either of the two smallest
    windows is below ``min_snr`` standard errors the result is marked
    ``inconclusive``.
    """
    f_obs = observable or (lambda s: s.mean())
    dts = sorted((float(d) for d in dts), reverse=True)
    S = model.spin_space.num_states
    if S ** partition.lattice.size <= oracle_limit:
        G = split_generators(model, partition)
        gm = GeneratorMatrix(sp.csr_matrix(G.full), S, partition.lattice.size)
        f = gm.observable(f_obs)
        p0 = gm.point_mass(initial.spins)
        ref = float(p0 @ expm(G.full, T) @ f)
        vals = []
        for dt in dts:
            n = max(1, round(T / dt))
            if kind == "lie":
                step = lie_step(G, T / n)
            elif kind == "strang":
                step = strang_step(G, T / n)
            elif kind == "random":
                n = max(1, round(2 * T / dt))
                step = random_step(G, 2 * T / n)
            else:
                raise ValueError(f"unknown schedule kind {kind!r}")
            vals.append(float(p0 @ np.linalg.matrix_power(step, n) @ f))
        errs = [abs(v - ref) for v in vals]
        floor = 1e-13
        status = "ok" if min(errs) > floor else "inconclusive"
        slope = _fit_slope(dts, errs) if status == "ok" else float("nan")
        mono = all(a >= b for a, b in zip(errs, errs[1:]))
        return WeakErrorResult(dts, errs, [0.0] * len(dts), slope, status, mono, ref, vals, "oracle")
    if kind == "random":
        raise OracleScaleError("random-schedule weak errors need the oracle (a single realization per run)")
    ref_spins = run_serial_replicas(initial, model, T, seed, replicas, workers)
    ref_f = np.array([f_obs(s) for s in ref_spins])
    ref, ref_var = float(ref_f.mean()), float(ref_f.var(ddof=1) / replicas)
    vals, errs, ses = [], [], []
    for i, dt in enumerate(dts):
        sched = make_schedule(kind, dt, T)
        out = run_replicas(initial, partition, sched, model, seed + 1 + i, replicas, workers)
        v = np.array([f_obs(s) for s in out])
        vals.append(float(v.mean()))
        errs.append(abs(vals[-1] - ref))
        ses.append(float(np.sqrt(v.var(ddof=1) / replicas + ref_var)))
    snr_ok = all(e >= min_snr * s for e, s in zip(errs[-2:], ses[-2:]))
    status = "ok" if snr_ok else "inconclusive"
    slope = _fit_slope(dts, errs)
    mono = all(a >= b for a, b in zip(errs, errs[1:]))
    return WeakErrorResult(dts, errs, ses, slope, status, mono, ref, vals, "simulation")
