"""Closed-form equilibrium results for the Ising lattice gas, plus a transfer-matrix oracle.

The lattice gas with occupation n in {0, 1}, pair energy K and field h has
Gibbs weight ``exp(beta * (K * sum n_x n_y + (h - z K) * sum n_x))``.  It is
the stationary law of :class:`~fskmc.models.ArrheniusModel` with
:meth:`~fskmc.models.ArrheniusParams.lattice_gas` constants.  In spin
variables the 1D chain has coupling ``K' = beta K / 4`` and field
``h' = beta (h - K) / 2``; the square lattice is field-free at ``h = 2K``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class IsingExactParams:
    beta: float
    K: float
    h: float

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")

    @property
    def K_prime(self) -> float:
        return 0.25 * self.beta * self.K

    @property
    def h_prime(self) -> float:
        return 0.5 * self.beta * (self.h - self.K)

    @property
    def kappa(self) -> float:
        return math.sinh(0.5 * self.beta * self.K) ** -2


def exact_1d_coverage(p: IsingExactParams) -> float:
    Kp, hp = p.K_prime, p.h_prime
    return 0.5 * (1.0 + math.sinh(hp) / math.sqrt(math.sinh(hp) ** 2 + math.exp(-4 * Kp)))


def _ratio_1d(p: IsingExactParams) -> float:
    """Ratio of the two transfer-matrix eigenvalues (the per-site correlation decay)."""
    Kp, hp = p.K_prime, p.h_prime
    a = math.exp(Kp) * math.cosh(hp)
    b = math.exp(-Kp) * math.sqrt(1.0 + math.exp(4 * Kp) * math.sinh(hp) ** 2)
    return (a - b) / (a + b)


def exact_1d_correlation(p: IsingExactParams, x: int, y: int) -> float:
    """E[n_x n_y] on the infinite chain: c^2 + c (1 - c) r^|x - y|.

    ``c (1 - c)`` equals ``1 / (4 (1 + exp(4K') sinh^2 h'))``.
    """
    if y < x:
        raise ValueError("expects y >= x")
    c = exact_1d_coverage(p)
    Kp, hp = p.K_prime, p.h_prime
    var = 0.25 / (1.0 + math.exp(4 * Kp) * math.sinh(hp) ** 2)
    return c * c + var * _ratio_1d(p) ** (y - x)


def printed_1d_correlation(p: IsingExactParams, x: int, y: int) -> float:
    """The commonly printed closed form, prefactor (1 + e^{4K'} sinh^2 h') / 4 times r^|x - y|.

    Kept for comparison only: it disagrees with the transfer-matrix result
    (the prefactor is inverted and the squared mean is missing).
    """
    Kp, hp = p.K_prime, p.h_prime
    return 0.25 * (1.0 + math.exp(4 * Kp) * math.sinh(hp) ** 2) * _ratio_1d(p) ** abs(y - x)


def transfer_matrix(p: IsingExactParams) -> np.ndarray:
    """Symmetric 1D transfer matrix over n in {0, 1}."""
    n = np.array([0.0, 1.0])
    return np.exp(p.beta * (p.K * np.outer(n, n) + 0.5 * (p.h - 2 * p.K) * (n[:, None] + n[None, :])))


def transfer_matrix_correlation(p: IsingExactParams, k: int, N: int | None = None) -> tuple[float, float]:
    """(coverage, E[n_0 n_k]) from the transfer matrix, on a ring of N sites or the infinite chain."""
    lam, vec = np.linalg.eigh(transfer_matrix(p))
    lam, vec = lam[::-1], vec[:, ::-1]
    D = vec.T @ np.diag([0.0, 1.0]) @ vec
    r = lam / lam[0]
    if N is None:
        return float(D[0, 0]), float(sum(D[0, j] ** 2 * r[j] ** k for j in range(2)))
    Z = float(np.sum(r**N))
    cov = float(sum(D[j, j] * r[j] ** N for j in range(2)) / Z)
    corr = sum(D[i, j] ** 2 * r[i] ** (N - k) * r[j] ** k for i in range(2) for j in range(2))
    return cov, float(corr / Z)


def critical_beta(K: float) -> float:
    if K <= 0:
        raise ValueError("K must be positive")
    return 2.0 * math.asinh(1.0) / K


def exact_2d_coverage(p: IsingExactParams) -> float:
    """Spontaneous coverage of the square-lattice gas at the field-free point h = 2K."""
    if not math.isclose(p.h, 2 * p.K, rel_tol=1e-12, abs_tol=1e-12):
        warnings.warn(f"the 2D solution holds at h = 2K; got h={p.h}, K={p.K}", stacklevel=2)
    bc = critical_beta(p.K)
    if abs(p.beta - bc) < 1e-9:
        warnings.warn("beta is at the critical point; returning 1/2", stacklevel=2)
        return 0.5
    if p.beta < bc:
        return 0.5
    return 0.5 * (1.0 + (1.0 - math.sinh(0.5 * p.beta * p.K) ** -4) ** 0.125)
