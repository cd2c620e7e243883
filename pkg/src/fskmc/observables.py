"""Snapshot observables and time-series estimators."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import Configuration


class EstimationError(ValueError):
    pass


def coverage(config: Configuration, species: int | None = None):
    """Fraction of sites holding ``species`` (default 1).

    With ``species="all"`` returns the fraction for every state of the spin space.
    """
    spins = config.spins
    if species == "all":
        return np.bincount(spins, minlength=config.spin_space.num_states) / spins.size
    return float(np.mean(spins == (1 if species is None else species)))


def two_point_correlation(config: Configuration, k_max: int, axis: int = 0) -> np.ndarray:
    """lambda(k) = mean over x of s(x) s(x + k e_axis), k = 0..k_max, for 0/1 spins."""
    lat = config.lattice
    if k_max >= lat.dims[axis]:
        raise ValueError(f"k_max={k_max} must be below the lattice extent {lat.dims[axis]}")
    grid = (config.spins == 1).astype(np.float64).reshape(lat.dims)
    return np.array([np.mean(grid * np.roll(grid, -k, axis=axis)) for k in range(k_max + 1)])


@dataclass
class ObservableSeries:
    times: np.ndarray
    values: np.ndarray
    replica: int = 0
    name: str = ""

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("sample times must be strictly increasing")


@dataclass
class Autocorrelation:
    acf: np.ndarray
    degenerate: bool = False


def autocorrelation(series: ObservableSeries | np.ndarray, max_lag: int) -> Autocorrelation:
    """Biased autocorrelation estimator normalised to 1 at lag 0.

    A series with zero variance is flagged ``degenerate`` and reported as 1 at
    every lag.
    """
    x = series.values if isinstance(series, ObservableSeries) else np.asarray(series, dtype=np.float64)
    n = x.size
    if max_lag >= n:
        raise ValueError(f"series of length {n} is too short for lag {max_lag}")
    d = x - x.mean()
    var = float(d @ d) / n
    if var <= (1e-12 * max(1.0, float(np.abs(x).max()))) ** 2:
        return Autocorrelation(np.ones(max_lag + 1), degenerate=True)
    acf = np.array([float(d[: n - k] @ d[k:]) / n for k in range(max_lag + 1)]) / var
    return Autocorrelation(acf)


def time_average(series: ObservableSeries | np.ndarray, burn_in: float = 0.2, batches: int = 16):
    """Mean of the post-burn-in samples and its batch-means standard error."""
    if not 0 <= burn_in < 1:
        raise ValueError("burn_in must lie in [0, 1)")
    x = series.values if isinstance(series, ObservableSeries) else np.asarray(series, dtype=np.float64)
    x = x[int(np.floor(burn_in * x.size)) :]
    if x.size < batches:
        raise EstimationError(f"{x.size} samples after burn-in; need at least {batches}")
    size = x.size // batches
    means = x[: size * batches].reshape(batches, size).mean(axis=1)
    return float(x.mean()), float(means.std(ddof=1) / np.sqrt(batches))


@dataclass
class DecayFit:
    alpha: float
    xi: float
    amplitude: float
    residual: float
    classification: str = field(default="")


def correlation_decay_fit(lam, k=None, xi_cap: float = 1e6) -> DecayFit:
    """Least-squares fit of log lambda(k) = log A - alpha log k - k / xi.

    ``xi`` is reported as ``inf`` when the fitted decay rate is not positive.
    The classification reads ``exponential`` when the correlation length is
    shorter than the fit range and ``power-law`` otherwise.
    """
    lam = np.asarray(lam, dtype=np.float64)
    k = np.arange(1, lam.size + 1, dtype=np.float64) if k is None else np.asarray(k, dtype=np.float64)
    if np.any(lam <= 0) or np.any(k <= 0):
        raise EstimationError("decay fit needs positive lambda(k) at positive k")
    A = np.column_stack([np.ones_like(k), -np.log(k), -k])
    coef, *_ = np.linalg.lstsq(A, np.log(lam), rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - np.log(lam)) ** 2)))
    rate = coef[2]
    xi = 1.0 / rate if rate > 1.0 / xi_cap else float("inf")
    kind = "exponential" if xi < k.max() else "power-law"
    return DecayFit(float(coef[1]), float(xi), float(np.exp(coef[0])), resid, kind)
