"""Acceptance suite: one PASS/FAIL line per criterion, at the stated tolerances.

Run ``pytest tests/test_acceptance.py -v``; the lines are repeated in the
"acceptance criteria" section of the terminal summary.
"""
import time
from pathlib import Path

import numpy as np
import pytest

from fskmc import verification as V
from fskmc.config import load_config
from fskmc.exact import (IsingExactParams, critical_beta, exact_1d_correlation, exact_1d_coverage,
                         exact_2d_coverage, transfer_matrix_correlation)
from fskmc.experiments import (balance_demo, benchmark_partitioned, lattice_gas_config, loglog_slope,
                               run_config)
from fskmc.lattice import Configuration, Lattice, SpinSpace
from fskmc.models import ArrheniusModel, ArrheniusParams
from fskmc.partition import strip_partition

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
UNIT = ArrheniusModel(ArrheniusParams(c_a=1.0, c_d=1.0, beta=1.0, K=1.0, h=0.0))
# slower rates put dt = 0.2 inside the asymptotic regime of the order checks
SLOW = ArrheniusModel(ArrheniusParams(c_a=0.1, c_d=0.1, beta=1.0, K=1.0, h=0.0))


def _ring(N, q):
    lat = Lattice((N,))
    return lat, strip_partition(lat, list(range(0, N + 1, q)))


def test_c01_generator_decomposition(acceptance):
    t0 = time.perf_counter()
    dev = V.generator_additivity(UNIT, _ring(6, 3)[1])
    wall = time.perf_counter() - t0
    ok = dev <= 1e-12 and wall < 1.0
    assert acceptance(1, "generator decomposition", ok, f"max|Q - sum Q_m| = {dev:.1e} (<= 1e-12), {wall:.2f} s (< 1 s)")


def test_c02_same_color_factorization(acceptance):
    part = _ring(6, 3)[1]
    devs = {dt: V.same_color_factorization(UNIT, part, dt, "E") for dt in (0.1, 1.0)}
    ok = max(devs.values()) <= 1e-10
    detail = ", ".join(f"dt={dt}: {d:.1e}" for dt, d in devs.items())
    assert acceptance(2, "same-color factorization", ok, f"{detail} (<= 1e-10)")


def test_c03_boundary_commutator(acceptance):
    model = ArrheniusModel(ArrheniusParams(1.0, 1.0, beta=1.0, K=1.0, h=0.0))
    rep = V.commutator_support_check(model, _ring(8, 4)[1])
    ok = rep.full_vs_boundary <= 1e-10 and max(rep.interior_terms.values()) <= 1e-10 and rep.full_norm > 0
    detail = (f"|[E,O] - [E_b,O_b]| = {rep.full_vs_boundary:.1e}, interior terms "
              f"<= {max(rep.interior_terms.values()):.1e} (<= 1e-10), |[E,O]| = {rep.full_norm:.2f}")
    assert acceptance(3, "boundary-only commutator", ok, detail)


def test_c04_lie_and_strang_local_order(acceptance):
    t0 = time.perf_counter()
    G = V.split_generators(SLOW, _ring(6, 3)[1])
    lie, strang = V.defect_ratio(G, 0.2, "lie"), V.defect_ratio(G, 0.2, "strang")
    wall = time.perf_counter() - t0
    ok = 3.3 <= lie <= 4.7 and 6.0 <= strang <= 10.0 and wall < 30
    detail = f"Lie ratio {lie:.3f} in [3.3, 4.7], Strang ratio {strang:.3f} in [6, 10], {wall:.2f} s (< 30 s)"
    assert acceptance(4, "Lie/Strang local order", ok, detail)


def test_c05_random_schedule_consistency(acceptance):
    G = V.split_generators(SLOW, _ring(6, 3)[1])
    ratio = V.defect_ratio(G, 0.2, "random")
    gap = V.averaged_generator_gap(G)
    ok = 3.3 <= ratio <= 4.7 and gap <= 1e-12
    detail = f"|avg(e^dtQE, e^dtQO) - e^(dt Q/2)| ratio {ratio:.3f} in [3.3, 4.7]; (QE+QO)/2 - Q/2 = {gap:.1e}"
    assert acceptance(5, "random-schedule consistency", ok, detail)


def _lattice_gas_run(base, beta, h, **kw):
    return run_config(lattice_gas_config(base, beta, 1.0, h, **kw), workers=1)


def test_c06_isotherm_1d(acceptance):
    base = load_config(CONFIGS / "isotherm_1d.ini")
    t0 = time.perf_counter()
    worst, failures, parts = 0.0, 0, []
    for beta in (1.0, 2.0):
        for h in (0.0, 0.5, 1.0, 1.5, 2.0):
            out = _lattice_gas_run(base, beta, h, T=400.0, replicas=4, observables=("coverage",))
            m, se = out.pooled_summary("coverage")
            exact = exact_1d_coverage(IsingExactParams(beta, 1.0, h))
            tol = max(0.01, 3 * se)
            failures += abs(m - exact) > tol
            worst = max(worst, abs(m - exact) / tol)
            parts.append(f"b={beta:g},h={h:g}: {m:.4f}+-{se:.4f} vs {exact:.4f}")
    wall = time.perf_counter() - t0
    ok = failures == 0 and wall < 600
    print("\n".join(parts))
    detail = f"{10 - failures}/10 points within max(0.01, 3 SE), worst |err|/tol = {worst:.2f}, {wall:.0f} s (< 600 s)"
    assert acceptance(6, "1D equilibrium isotherm (N=4096)", ok, detail)


def test_c07_correlation_1d(acceptance):
    base = load_config(CONFIGS / "isotherm_1d.ini")
    failures, worst, parts = 0, 0.0, []
    for beta in (2.0, 4.0):
        p = IsingExactParams(beta, 1.0, 1.0)
        out = _lattice_gas_run(base, beta, 1.0, T=400.0, replicas=4, k_max=10)
        for k in range(11):
            m, se = out.pooled_summary(f"correlation.{k}")
            exact = exact_1d_correlation(p, 0, k)
            # the closed form is itself checked against the transfer matrix
            assert exact == pytest.approx(transfer_matrix_correlation(p, k)[1], abs=1e-12)
            z = abs(m - exact) / se
            failures += z > 3
            worst = max(worst, z)
            parts.append(f"b={beta:g},k={k}: {m:.4f}+-{se:.4f} vs {exact:.4f}")
    print("\n".join(parts))
    detail = f"{22 - failures}/22 (beta, k) pairs within 3 SE, worst {worst:.2f} SE"
    assert acceptance(7, "1D two-point correlation (h=1)", failures == 0, detail)


def test_c08_coverage_2d(acceptance):
    base = load_config(CONFIGS / "ising_2d.ini")
    failures, parts = 0, []
    for beta, initial in ((1.2, "random"), (2.2, "full")):
        out = _lattice_gas_run(base, beta, 2.0, initial=initial, replicas=2)
        m, se = out.pooled_summary("coverage")
        exact = exact_2d_coverage(IsingExactParams(beta, 1.0, 2.0))
        failures += abs(m - exact) > max(0.02, 3 * se)
        parts.append(f"beta={beta} ({'below' if beta < critical_beta(1.0) else 'above'} critical): "
                     f"{m:.4f}+-{se:.4f} vs {exact:.4f}")
    detail = "; ".join(parts) + " (tol max(0.02, 3 SE))"
    assert acceptance(8, "2D coverage (64x64, h=2K)", failures == 0, detail)


def test_c09_dt_convergence(acceptance):
    lat = Lattice((64,))
    # strongly attractive, fast-desorbing gas started empty: a long nonequilibrium transient
    model = ArrheniusModel(ArrheniusParams(c_a=3.0, c_d=10.0, beta=2.0, K=2.0, h=-1.0))
    part = strip_partition(lat, list(range(0, 65, 2)))
    res = V.weak_error_order(model, part, "lie", [1.0, 0.5, 0.25, 0.1], 5.0, Configuration(lat, SpinSpace(2)),
                             replicas=30_000, seed=7)
    ok = res.status == "ok" and res.monotone and res.slope >= 0.7
    errs = ", ".join(f"dt={d:g}: {e:.4f}+-{s:.4f}" for d, e, s in zip(res.dts, res.errors, res.stderrs))
    detail = (f"{errs}; slope {res.slope:.2f} (>= 0.7), monotone={res.monotone}, status={res.status}, "
              f"reference {res.reference:.4f} ({res.method})")
    assert acceptance(9, "dt-convergence of the coverage at T=5", ok, detail)


def test_c10_lie_vs_random_defect_constants(acceptance):
    lat = Lattice((12,))
    small, large = V.defect_constants(UNIT, lat, 3), V.defect_constants(UNIT, lat, 6)
    ok = large.ratio > small.ratio
    detail = (f"admissible step ratio dt_Lie/dt_random = C_random/C_Lie: q=3 {small.ratio:.3f} -> q=6 {large.ratio:.3f} "
              f"(C_Lie {small.lie:.4f} -> {large.lie:.4f}, C_random {small.random:.4f} -> {large.random:.4f})")
    assert acceptance(10, "Lie vs random defect constants grow apart with q", ok, detail)


def test_c11_load_balancing(acceptance):
    rep = balance_demo()
    ok = rep.imbalance >= 2 and rep.reduction <= 0.6 and rep.max_after == pytest.approx(rep.exhaustive_best, abs=1e-12)
    detail = (f"imbalance {rep.imbalance:.2f} (>= 2), max load {rep.max_before:.3f} -> {rep.max_after:.3f}, "
              f"ratio {rep.reduction:.3f} (<= 0.6), exhaustive optimum {rep.exhaustive_best:.3f}")
    assert acceptance(11, "load balancing demo", ok, detail)


@pytest.fixture(scope="module")
def shipped_runs():
    runs = {}
    for path in sorted(CONFIGS.glob("*.ini")):
        cfg = load_config(path)
        runs[path.stem] = {w: run_config(cfg, workers=w) for w in (1, 2)}
    return runs


def test_c12_determinism_across_workers(acceptance, shipped_runs):
    same = {name: r[1].results_csv().encode() == r[2].results_csv().encode() for name, r in shipped_runs.items()}
    ok = len(same) == 3 and all(same.values())
    detail = ", ".join(f"{n}: {'identical' if s else 'DIFFERENT'}" for n, s in same.items()) + " (workers 1 vs 2)"
    assert acceptance(12, "byte-identical results across worker counts", ok, detail)


def test_c13_zgb_smoke(acceptance, shipped_runs):
    cfg = load_config(CONFIGS / "zgb_strips.ini")
    traj = shipped_runs["zgb_strips"][1].trajectories[0]
    co, ox, vac = (traj.series(f"coverage.{s}") for s in ("CO", "O", "vacant"))
    dev = float(np.abs(co + ox + vac - 1).max())
    ok = (cfg.dims == (128, 128) and cfg.T == 50 and traj.times[-1] == pytest.approx(50.0)
          and dev <= 1e-12 and len(co) == len(traj.times))
    detail = (f"{len(traj.times)} samples to t={traj.times[-1]:g}, max|sum - 1| = {dev:.1e}, "
              f"final CO {co[-1]:.3f}, O {ox[-1]:.3f}")
    assert acceptance(13, "ZGB 128x128 smoke test", ok, detail)


def test_benchmark_scaling(acceptance):
    sizes = [2**13, 2**14, 2**15, 2**16, 2**17]
    walls = [benchmark_partitioned((n,), 16, 1, 1.0, 10.0, repeats=3).wall_seconds for n in sizes]
    slope = loglog_slope(sizes, walls)
    ok = 0.7 <= slope <= 1.3
    detail = f"log-log slope of partitioned wall time vs N = {slope:.3f} (1 +- 0.3), walls " + \
        ", ".join(f"{w:.3f}" for w in walls)
    assert acceptance("B", "benchmark time-vs-N scaling", ok, detail)
