"""Compiled SSA kernels for the shipped rate models.

All functions release the GIL so that same-color cells can run on
separate threads.  Randomness comes from a splitmix64 stream whose 64-bit
state is supplied by the caller; the stream is a pure function of that seed.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from .models import ARRHENIUS, KAWASAKI, ZGB

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0
REBUILD_EVERY = 10_000
TREE_MIN = 64


@njit(cache=True, nogil=True)
def mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def next_uniform(state):
    """Return (u, new_state) with u uniform on (0, 1]."""
    state = state + _GOLDEN
    bits = mix64(state) >> np.uint64(11)
    return (float(bits) + 1.0) * _INV53, state


@njit(cache=True, nogil=True)
def _arrhenius_desorb(params, spins, nbr, x):
    occ = 0
    for k in range(nbr.shape[1]):
        occ += spins[nbr[x, k]]
    return params[1] * math.exp(-params[2] * (params[3] * occ + params[4]))


@njit(cache=True, nogil=True)
def site_total_rate(kind, params, spins, nbr, x):
    s = spins[x]
    z = nbr.shape[1]
    if kind == ARRHENIUS:
        if s == 0:
            return params[0]
        return _arrhenius_desorb(params, spins, nbr, x)
    if kind == KAWASAKI:
        if s == 0:
            return 0.0
        free = 0
        for k in range(z):
            y = nbr[x, k]
            if y != x and spins[y] == 0:
                free += 1
        if free == 0:
            return 0.0
        return free * _arrhenius_desorb(params, spins, nbr, x)
    if kind == ZGB:
        nv = 0
        nco = 0
        no = 0
        for k in range(z):
            y = nbr[x, k]
            if y == x:
                continue
            t = spins[y]
            if t == 0:
                nv += 1
            elif t == 1:
                nco += 1
            else:
                no += 1
        if s == 0:
            return params[0] + (1.0 - params[0]) * nv / z
        if s == 1:
            return params[1] * no / z
        return params[1] * nco / z
    return 0.0


@njit(cache=True, nogil=True)
def site_transitions(kind, params, spins, nbr, x, tsites, tvals, ntgt, trates):
    """Fill the buffers with every transition anchored at x; return the count."""
    s = spins[x]
    z = nbr.shape[1]
    n = 0
    if kind == ARRHENIUS:
        tsites[0, 0] = x
        tvals[0, 0] = 1 - s
        ntgt[0] = 1
        trates[0] = params[0] if s == 0 else _arrhenius_desorb(params, spins, nbr, x)
        return 1
    if kind == KAWASAKI:
        if s == 0:
            return 0
        r = _arrhenius_desorb(params, spins, nbr, x)
        for k in range(z):
            y = nbr[x, k]
            if y != x and spins[y] == 0:
                tsites[n, 0] = x
                tvals[n, 0] = 0
                tsites[n, 1] = y
                tvals[n, 1] = 1
                ntgt[n] = 2
                trates[n] = r
                n += 1
        return n
    if kind == ZGB:
        if s == 0:
            if params[0] > 0:
                tsites[n, 0] = x
                tvals[n, 0] = 1
                ntgt[n] = 1
                trates[n] = params[0]
                n += 1
            partner, new_x, rate = 0, 2, (1.0 - params[0]) / z
        elif s == 1:
            partner, new_x, rate = 2, 0, params[1] / z
        else:
            partner, new_x, rate = 1, 0, params[1] / z
        if rate > 0:
            for k in range(z):
                y = nbr[x, k]
                if y != x and spins[y] == partner:
                    tsites[n, 0] = x
                    tvals[n, 0] = new_x
                    tsites[n, 1] = y
                    tvals[n, 1] = new_x
                    ntgt[n] = 2
                    trates[n] = rate
                    n += 1
        return n
    return 0


@njit(cache=True, nogil=True)
def _tree_set(tree, size, i, v):
    p = size + i
    tree[p] = v
    p //= 2
    while p >= 1:
        tree[p] = tree[2 * p] + tree[2 * p + 1]
        p //= 2


@njit(cache=True, nogil=True)
def _tree_find(tree, size, target):
    p = 1
    while p < size:
        left = tree[2 * p]
        if target < left:
            p = 2 * p
        else:
            target -= left
            p = 2 * p + 1
    return p - size


@njit(cache=True, nogil=True)
def _buffers(z, n):
    """Scratch space for one window: transition buffers, per-site rates and the sum tree."""
    maxt = 2 * z + 1
    size = 1
    while size < n:
        size *= 2
    return (np.empty((maxt, 2), dtype=np.int64), np.empty((maxt, 2), dtype=np.int64),
            np.empty(maxt, dtype=np.int64), np.empty(maxt, dtype=np.float64),
            np.empty(n, dtype=np.float64), np.zeros(2 * size, dtype=np.float64))


@njit(cache=True, nogil=True)
def run_window(kind, params, spins, nbr, sites, aff_ptr, aff_idx, dt, seed):
    """SSA on the domain ``sites`` for local time dt.

    ``aff_ptr/aff_idx`` is a CSR list giving, for each local position, the
    local positions whose rates may change when an event anchored there
    fires.  Site selection is a linear scan for small domains and a binary
    sum tree above ``TREE_MIN`` sites.  Returns (jumps, time of the last
    executed event).
    """
    tsites, tvals, ntgt, trates, rates, tree = _buffers(nbr.shape[1], sites.shape[0])
    return _window(kind, params, spins, nbr, sites, aff_ptr, aff_idx, dt, seed,
                   tsites, tvals, ntgt, trates, rates, tree)


@njit(cache=True, nogil=True)
def _window(kind, params, spins, nbr, sites, aff_ptr, aff_idx, dt, seed, tsites, tvals, ntgt, trates, rates, tree):
    """``run_window`` on caller-supplied scratch buffers (``rates`` and ``tree`` may be oversized)."""
    n = sites.shape[0]
    if dt <= 0.0 or n == 0:
        return 0, 0.0
    use_tree = n > TREE_MIN
    size = 1
    while size < n:
        size *= 2
    total = 0.0
    for i in range(n):
        rates[i] = site_total_rate(kind, params, spins, nbr, sites[i])
        total += rates[i]
    if use_tree:
        for i in range(n):
            tree[size + i] = rates[i]
        for i in range(size + n, 2 * size):
            tree[i] = 0.0
        for p in range(size - 1, 0, -1):
            tree[p] = tree[2 * p] + tree[2 * p + 1]
        total = tree[1]
    state = np.uint64(seed)
    t = 0.0
    last = 0.0
    jumps = 0
    while total > 0.0:
        u, state = next_uniform(state)
        t += -math.log(u) / total
        if t > dt:
            break
        u, state = next_uniform(state)
        target = (1.0 - u) * total
        if use_tree:
            i = _tree_find(tree, size, target)
            if i >= n:
                i = n - 1
        else:
            acc = 0.0
            i = n - 1
            for j in range(n):
                acc += rates[j]
                if target < acc:
                    i = j
                    break
        while i > 0 and rates[i] <= 0.0:
            i -= 1
        while i < n and rates[i] <= 0.0:
            i += 1
        if i == n:
            # only roundoff was left in the running total
            break
        x = sites[i]
        m = site_transitions(kind, params, spins, nbr, x, tsites, tvals, ntgt, trates)
        u, state = next_uniform(state)
        site_sum = 0.0
        for k in range(m):
            site_sum += trates[k]
        target = (1.0 - u) * site_sum
        acc = 0.0
        pick = m - 1
        for k in range(m):
            acc += trates[k]
            if target < acc:
                pick = k
                break
        for q in range(ntgt[pick]):
            spins[tsites[pick, q]] = tvals[pick, q]
        for p in range(aff_ptr[i], aff_ptr[i + 1]):
            j = aff_idx[p]
            r = site_total_rate(kind, params, spins, nbr, sites[j])
            if use_tree:
                rates[j] = r
                _tree_set(tree, size, j, r)
            else:
                total -= rates[j]
                rates[j] = r
                total += r
        jumps += 1
        last = t
        if use_tree:
            total = tree[1]
        elif jumps % REBUILD_EVERY == 0 or total < 1e-12 * n:
            # exact rebuild bounds drift; also clears a spurious residue near zero
            total = 0.0
            for j in range(n):
                total += rates[j]
    return jumps, last


@njit(cache=True, nogil=True)
def run_domains(kind, params, spins, nbr, dom_ptr, sites, aff_ptr, aff_idx, which, dt, seeds, jumps_out, last_out):
    """Run ``run_window`` on the domains listed in ``which`` one after another."""
    largest = 0
    for w in range(which.shape[0]):
        largest = max(largest, dom_ptr[which[w] + 1] - dom_ptr[which[w]])
    tsites, tvals, ntgt, trates, rates, tree = _buffers(nbr.shape[1], largest)
    for w in range(which.shape[0]):
        d = which[w]
        a, b = dom_ptr[d], dom_ptr[d + 1]
        # aff_ptr holds global offsets into aff_idx, whose entries are domain-local positions
        j, last = _window(kind, params, spins, nbr, sites[a:b], aff_ptr[a : b + 1], aff_idx, dt, seeds[w],
                          tsites, tvals, ntgt, trates, rates, tree)
        jumps_out[w] = j
        last_out[w] = last


@njit(cache=True, nogil=True)
def run_substeps(kind, params, spins, nbr, dom_ptr, sites, aff_ptr, aff_idx,
                 color_ptr, color_doms, groups, durations, seeds, jumps_out):
    """Apply a sequence of sub-steps; seeds[s, k] feeds the k-th domain of sub-step s's group."""
    last = np.empty(seeds.shape[1], dtype=np.float64)
    for s in range(groups.shape[0]):
        g = groups[s]
        doms = color_doms[color_ptr[g] : color_ptr[g + 1]]
        run_domains(kind, params, spins, nbr, dom_ptr, sites, aff_ptr, aff_idx, doms,
                    durations[s], seeds[s], jumps_out[s], last)


@njit(cache=True, nogil=True)
def run_replicas(kind, params, init, nbr, dom_ptr, sites, aff_ptr, aff_idx,
                 color_ptr, color_doms, groups, durations, seeds, out, jumps):
    """Independent replicas from ``init``; replica r uses seeds[r] and ends in out[r].

    ``jumps`` accumulates the total executed events per replica.
    """
    S = groups.shape[0]
    buf = np.zeros((S, seeds.shape[2]), dtype=np.int64)
    for r in range(out.shape[0]):
        out[r, :] = init
        buf[:, :] = 0
        run_substeps(kind, params, out[r], nbr, dom_ptr, sites, aff_ptr, aff_idx,
                     color_ptr, color_doms, groups, durations, seeds[r], buf)
        jumps[r] = buf.sum()
