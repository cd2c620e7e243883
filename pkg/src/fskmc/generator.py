"""Dense master-equation generators on tiny lattices (the verification oracle)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .lattice import Lattice
from .models import RateModel

MAX_STATES = 2**14


class OracleScaleError(ValueError):
    pass


def _check_scale(num_states: int, n_sites: int, limit: int = MAX_STATES) -> int:
    size = num_states**n_sites
    if size > limit:
        raise OracleScaleError(f"{num_states}^{n_sites} = {size} states exceeds the oracle limit {limit}")
    return size


def all_states(num_states: int, n_sites: int) -> np.ndarray:
    """Every configuration, row k being the state with index k (site 0 most significant)."""
    idx = np.arange(num_states**n_sites)
    out = np.empty((idx.size, n_sites), dtype=np.uint8)
    for i in range(n_sites - 1, -1, -1):
        out[:, i] = idx % num_states
        idx = idx // num_states
    return out


def state_index(spins, num_states: int) -> int:
    k = 0
    for s in np.asarray(spins).reshape(-1):
        k = k * num_states + int(s)
    return k


@dataclass
class GeneratorMatrix:
    matrix: sp.csr_matrix
    num_states: int
    n_sites: int

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def __add__(self, other: "GeneratorMatrix") -> "GeneratorMatrix":
        return GeneratorMatrix((self.matrix + other.matrix).tocsr(), self.num_states, self.n_sites)

    def scaled(self, c: float) -> "GeneratorMatrix":
        return GeneratorMatrix((self.matrix * c).tocsr(), self.num_states, self.n_sites)

    def point_mass(self, spins) -> np.ndarray:
        p = np.zeros(self.dim)
        p[state_index(spins, self.num_states)] = 1.0
        return p

    def observable(self, f) -> np.ndarray:
        """Vector of f evaluated on every configuration."""
        return np.array([f(s) for s in all_states(self.num_states, self.n_sites)], dtype=np.float64)


def generator_matrix(model: RateModel, lattice: Lattice, domain=None, limit: int = MAX_STATES) -> GeneratorMatrix:
    """Q[s, s'] = total rate of events anchored in ``domain`` taking s to s'."""
    S = model.spin_space.num_states
    N = lattice.size
    dim = _check_scale(S, N, limit)
    domain = np.arange(N) if domain is None else np.asarray(domain, dtype=np.int64).reshape(-1)
    weights = S ** np.arange(N - 1, -1, -1)
    rows, cols, vals = [], [], []
    states = all_states(S, N)
    for k, spins in enumerate(states):
        base = k
        for x in domain:
            for e in model.transitions(int(x), spins, lattice):
                j = base
                for site, v in e.update.targets:
                    j += (v - int(spins[site])) * int(weights[site])
                if j != base and e.rate > 0:
                    rows.append(base)
                    cols.append(j)
                    vals.append(e.rate)
    off = sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))
    off.sum_duplicates()
    diag = -np.asarray(off.sum(axis=1)).ravel()
    return GeneratorMatrix((off + sp.diags(diag)).tocsr(), S, N)


def expm(Q, t: float = 1.0) -> np.ndarray:
    """exp(tQ) by scaling and squaring with Pade approximants."""
    A = Q.dense() if isinstance(Q, GeneratorMatrix) else (Q.toarray() if sp.issparse(Q) else np.asarray(Q))
    return scipy.linalg.expm(t * A)


def expm_uniformization(Q, t: float, tol: float = 1e-14) -> np.ndarray:
    """exp(tQ) as the Poisson mixture of powers of the uniformized chain.

    Independent of the Pade route; used to cross-check it.
    """
    A = Q.dense() if isinstance(Q, GeneratorMatrix) else (Q.toarray() if sp.issparse(Q) else np.asarray(Q, dtype=float))
    lam = float(np.max(-np.diag(A))) if A.size else 0.0
    n = A.shape[0]
    if lam == 0.0 or t == 0.0:
        return np.eye(n)
    P = np.eye(n) + A / lam
    # split long horizons so the Poisson weights stay representable
    pieces = max(1, int(math.ceil(lam * t / 50.0)))
    tau = t / pieces
    mu = lam * tau
    term = np.eye(n)
    weight = math.exp(-mu)
    out = weight * term
    k = 0
    acc = weight
    while 1.0 - acc > tol and k < 10_000:
        k += 1
        term = term @ P
        weight *= mu / k
        acc += weight
        out = out + weight * term
    return np.linalg.matrix_power(out, pieces)
