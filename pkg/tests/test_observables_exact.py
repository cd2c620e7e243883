import itertools
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fskmc.exact import (IsingExactParams, critical_beta, exact_1d_correlation, exact_1d_coverage,
                         exact_2d_coverage, printed_1d_correlation, transfer_matrix_correlation)
from fskmc.lattice import Configuration, Lattice, SpinSpace
from fskmc.observables import (EstimationError, ObservableSeries, autocorrelation, correlation_decay_fit,
                               coverage, time_average, two_point_correlation)


def _config(values, dims=None, states=2):
    values = np.asarray(values)
    return Configuration(Lattice(dims or (values.size,)), SpinSpace(states), values)


def test_coverage_examples():
    assert coverage(_config(np.ones(8))) == 1.0
    assert coverage(_config(np.zeros(8))) == 0.0
    assert coverage(_config([0, 1, 0, 1])) == 0.5
    zgb = _config(np.random.default_rng(0).integers(0, 3, 64), (8, 8), 3)
    fr = coverage(zgb, "all")
    assert fr.sum() == pytest.approx(1.0) and fr[2] == coverage(zgb, 2)


def test_two_point_correlation_examples():
    assert np.allclose(two_point_correlation(_config(np.ones(10)), 5), 1.0)
    c = _config(np.random.default_rng(1).integers(0, 2, 40))
    assert two_point_correlation(c, 3)[0] == pytest.approx(coverage(c))
    p, n = 0.3, 200_000
    lam = two_point_correlation(_config((np.random.default_rng(2).random(n) < p).astype(np.uint8)), 4)
    # the k > 0 estimator has variance about p^2 (1 - p^2) / n, slightly more with overlaps
    assert np.all(np.abs(lam[1:] - p * p) < 4 * math.sqrt(3 * p * p / n))
    with pytest.raises(ValueError):
        two_point_correlation(_config(np.ones(6)), 6)


def test_two_point_correlation_2d_uses_first_axis():
    grid = np.zeros((4, 4), dtype=np.uint8)
    grid[0, :] = 1
    lam = two_point_correlation(_config(grid.ravel(), (4, 4)), 2)
    assert np.allclose(lam, [0.25, 0.0, 0.0])


def test_autocorrelation_examples():
    ac = autocorrelation(np.full(50, 0.3), 5)
    assert ac.degenerate and np.all(ac.acf == 1.0)
    n = 20_000
    ac = autocorrelation(np.random.default_rng(3).normal(size=n), 100)
    assert ac.acf[0] == pytest.approx(1.0) and not ac.degenerate
    assert np.mean(np.abs(ac.acf[1:]) <= 3 / math.sqrt(n)) >= 0.97
    with pytest.raises(ValueError):
        autocorrelation(np.arange(5.0), 5)


def test_series_requires_increasing_times():
    with pytest.raises(ValueError):
        ObservableSeries([0, 1, 1], [1, 2, 3])
    s = ObservableSeries([0, 1, 2], [1.0, 2.0, 3.0])
    assert autocorrelation(s, 1).acf[0] == 1.0


def test_time_average_examples():
    m, se = time_average(np.full(100, 0.7))
    assert m == pytest.approx(0.7, abs=1e-15) and se < 1e-12
    m, _ = time_average(np.tile([0.0, 1.0], 80), burn_in=0.0)
    assert m == 0.5
    rng = np.random.default_rng(4)
    hits = []
    for _ in range(200):
        m, se = time_average(rng.integers(0, 2, 4_000).astype(float))
        hits.append(abs(m - 0.5) <= 3 * se and se > 0)
    # 16 batch means: the 3 SE interval covers about 99% (Student t, 15 degrees of freedom)
    assert np.mean(hits) >= 0.97
    with pytest.raises(EstimationError):
        time_average(np.ones(10))
    with pytest.raises(ValueError):
        time_average(np.ones(100), burn_in=1.0)


def test_decay_fit_examples():
    k = np.arange(1, 21, dtype=float)
    f = correlation_decay_fit(np.exp(-k / 5), k)
    assert abs(f.alpha) < 1e-8 and f.xi == pytest.approx(5.0) and f.classification == "exponential"
    f = correlation_decay_fit(1 / k, k)
    assert f.alpha == pytest.approx(1.0) and f.xi > 1e3 * k.max() and f.classification == "power-law"
    with pytest.raises(EstimationError):
        correlation_decay_fit([0.5, 0.0, 0.1])


def test_exact_params_derived_quantities():
    p = IsingExactParams(2.0, 1.0, 2.0)
    assert (p.K_prime, p.h_prime) == (0.5, 1.0)
    assert p.kappa == pytest.approx(math.sinh(1.0) ** -2)
    with pytest.raises(ValueError):
        IsingExactParams(-1.0, 1.0, 0.0)


def test_exact_1d_coverage_examples():
    assert exact_1d_coverage(IsingExactParams(1.7, 1.3, 1.3)) == pytest.approx(0.5)
    assert exact_1d_coverage(IsingExactParams(2.0, 1.0, 2.0)) == pytest.approx(0.97717, abs=5e-6)
    assert exact_1d_coverage(IsingExactParams(1e-9, 1.0, 3.0)) == pytest.approx(0.5, abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 4.0), st.floats(-2.0, 2.0))
def test_exact_1d_coverage_monotone_in_h(beta, K):
    hs = np.linspace(-3, 3, 31)
    vals = [exact_1d_coverage(IsingExactParams(beta, K, h)) for h in hs]
    assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))
    assert all(0 < v < 1 for v in vals)


def _gibbs_ring(p: IsingExactParams, N: int, k: int) -> tuple[float, float]:
    """Exhaustive Gibbs sums of (n_0, n_0 n_k) on a ring."""
    Z = c = lam = 0.0
    for s in itertools.product((0, 1), repeat=N):
        n = np.array(s, dtype=float)
        e = p.K * np.sum(n * np.roll(n, -1)) + (p.h - 2 * p.K) * n.sum()
        w = math.exp(p.beta * e)
        Z += w
        c += w * n[0]
        lam += w * n[0] * n[k]
    return c / Z, lam / Z


@pytest.mark.parametrize("beta,K,h", [(1.0, 1.0, 0.5), (2.0, 1.0, 1.5), (2.0, 1.0, 1.0), (0.5, -1.0, 0.2)])
def test_transfer_matrix_matches_exhaustive_gibbs(beta, K, h):
    p = IsingExactParams(beta, K, h)
    for k in (1, 3):
        assert transfer_matrix_correlation(p, k, N=10) == pytest.approx(_gibbs_ring(p, 10, k), abs=1e-12)


@pytest.mark.parametrize("beta,K,h", [(0.5, 1.0, 0.0), (1.0, 1.0, 0.5), (2.0, 1.0, 1.5), (2.0, 1.0, 2.5),
                                      (2.0, 0.5, 1.0), (1.5, -1.0, 0.3)])
def test_exact_1d_matches_transfer_matrix(beta, K, h):
    p = IsingExactParams(beta, K, h)
    cov, _ = transfer_matrix_correlation(p, 0)
    assert exact_1d_coverage(p) == pytest.approx(cov, abs=1e-13)
    for k in range(0, 8):
        _, inf = transfer_matrix_correlation(p, k)
        assert exact_1d_correlation(p, 3, 3 + k) == pytest.approx(inf, abs=1e-13)
        if k <= 5:  # beyond half the ring the periodic image dominates
            _, ring = transfer_matrix_correlation(p, k, N=10)
            assert exact_1d_correlation(p, 0, k) == pytest.approx(ring, rel=0.02)


def test_exact_1d_correlation_properties():
    p = IsingExactParams(1.5, 1.0, 1.0)  # h' = 0
    vals = [exact_1d_correlation(p, 0, k) for k in range(12)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert vals[0] == pytest.approx(exact_1d_coverage(p))
    assert vals[-1] == pytest.approx(exact_1d_coverage(p) ** 2, abs=1e-3)
    with pytest.raises(ValueError):
        exact_1d_correlation(p, 2, 1)


def test_printed_closed_form_disagrees_with_transfer_matrix():
    p = IsingExactParams(2.0, 1.0, 1.5)
    assert printed_1d_correlation(p, 0, 0) == pytest.approx(
        0.25 * (1 + math.exp(4 * p.K_prime) * math.sinh(p.h_prime) ** 2))
    _, truth = transfer_matrix_correlation(p, 2)
    assert abs(printed_1d_correlation(p, 0, 2) - truth) > 0.1
    assert exact_1d_correlation(p, 0, 2) == pytest.approx(truth, abs=1e-13)


def test_critical_beta_examples():
    assert critical_beta(1.0) == pytest.approx(1.76275, abs=5e-6)
    assert critical_beta(2.0) == pytest.approx(critical_beta(1.0) / 2)
    for K in (0.3, 1.0, 2.5):
        assert math.sinh(0.5 * critical_beta(K) * K) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        critical_beta(0.0)


def test_exact_2d_coverage_examples():
    assert exact_2d_coverage(IsingExactParams(1.0, 1.0, 2.0)) == 0.5
    assert exact_2d_coverage(IsingExactParams(2.0, 1.0, 2.0)) == pytest.approx(0.9556, abs=1e-4)
    bc = critical_beta(1.0)
    assert exact_2d_coverage(IsingExactParams(bc + 1e-7, 1.0, 2.0)) < 0.7
    with pytest.warns(UserWarning, match="critical"):
        assert exact_2d_coverage(IsingExactParams(bc, 1.0, 2.0)) == 0.5
    with pytest.warns(UserWarning, match="h = 2K"):
        exact_2d_coverage(IsingExactParams(2.0, 1.0, 1.0))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        betas = np.linspace(bc + 1e-6, 5, 50)
        vals = [exact_2d_coverage(IsingExactParams(b, 1.0, 2.0)) for b in betas]
    assert all(0.5 <= v < 1 for v in vals) and all(b >= a for a, b in zip(vals, vals[1:]))
