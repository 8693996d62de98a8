"""numba kernels for annealing and descent over integer-scaled polynomials.

Terms are stored in CSR form (``t_ptr``/``t_var``) with integer coefficients
``t_coef``; ``v_ptr``/``v_term`` list the terms touching each variable.  The
samplers keep, per term, the number of its variables currently at 0 and,
for descent, the energy change of flipping each variable: a flip walks the
flipped variable's terms and only revisits the other members of terms whose
zero count passes through 0, 1 or 2.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _contrib(xj, z, c):
    # share of a term in the flip delta of one of its variables
    if xj == 1:
        return -c if z == 0 else 0
    return c if z == 1 else 0


@njit(cache=True)
def _init(x, const, t_ptr, t_var, t_coef, zeros, delta):
    e = const
    delta[:] = 0
    for t in range(len(t_coef)):
        z = 0
        for p in range(t_ptr[t], t_ptr[t + 1]):
            if x[t_var[p]] == 0:
                z += 1
        zeros[t] = z
        if z == 0:
            e += t_coef[t]
        if z <= 1:
            for p in range(t_ptr[t], t_ptr[t + 1]):
                j = t_var[p]
                delta[j] += _contrib(x[j], z, t_coef[t])
    return e


@njit(cache=True)
def _flip(i, x, t_ptr, t_var, t_coef, v_ptr, v_term, zeros, delta):
    step = 1 if x[i] == 1 else -1
    x[i] = 1 - x[i]
    for p in range(v_ptr[i], v_ptr[i + 1]):
        t = v_term[p]
        z = zeros[t]
        nz = z + step
        zeros[t] = nz
        if z <= 2 or nz <= 2:
            c = t_coef[t]
            for q in range(t_ptr[t], t_ptr[t + 1]):
                j = t_var[q]
                if j != i:
                    delta[j] += _contrib(x[j], nz, c) - _contrib(x[j], z, c)
    delta[i] = -delta[i]


@njit(cache=True)
def _zeros(x, const, t_ptr, t_var, t_coef, zeros):
    e = const
    for t in range(len(t_coef)):
        z = 0
        for p in range(t_ptr[t], t_ptr[t + 1]):
            if x[t_var[p]] == 0:
                z += 1
        zeros[t] = z
        if z == 0:
            e += t_coef[t]
    return e


@njit(cache=True)
def anneal(n, free, clamp, const, t_ptr, t_var, t_coef, v_ptr, v_term, betas, num_samples, seed):
    """Metropolis single-flip annealing; one sweep per entry of ``betas``.

    Deltas are computed on the fly here: at the high temperatures the
    default ladder spends most sweeps at, nearly every move is accepted and
    caching them costs more than it saves.  Sample ``s`` is drawn with the
    generator reseeded to ``seed + s``, so runs are reproducible and any
    sample can be regenerated on its own.
    """
    out = np.empty((num_samples, n), dtype=np.uint8)
    energies = np.empty(num_samples, dtype=np.int64)
    zeros = np.empty(len(t_coef), dtype=np.int64)
    x = np.empty(n, dtype=np.uint8)
    for s in range(num_samples):
        np.random.seed(seed + s)
        for i in range(n):
            x[i] = clamp[i]
        for k in range(len(free)):
            x[free[k]] = 1 if np.random.random() < 0.5 else 0
        e = _zeros(x, const, t_ptr, t_var, t_coef, zeros)
        for b in range(len(betas)):
            beta = betas[b]
            for k in range(len(free)):
                i = free[k]
                d = 0
                if x[i] == 1:
                    for p in range(v_ptr[i], v_ptr[i + 1]):
                        t = v_term[p]
                        if zeros[t] == 0:
                            d -= t_coef[t]
                else:
                    for p in range(v_ptr[i], v_ptr[i + 1]):
                        t = v_term[p]
                        if zeros[t] == 1:
                            d += t_coef[t]
                if d <= 0 or np.random.random() < np.exp(-beta * d):
                    e += d
                    step = 1 if x[i] == 1 else -1
                    x[i] = 1 - x[i]
                    for p in range(v_ptr[i], v_ptr[i + 1]):
                        zeros[v_term[p]] += step
        out[s, :] = x
        energies[s] = e
    return out, energies


@njit(cache=True)
def descend(x, free, const, t_ptr, t_var, t_coef, v_ptr, v_term, trace):
    """Greedy single-flip descent in place; returns the number of flips made.

    Each step flips the free variable with the most negative delta (lowest
    index on ties).  ``trace[k]`` receives the energy after ``k`` flips as
    long as it has room.  ``free`` must be sorted.
    """
    zeros = np.empty(len(t_coef), dtype=np.int64)
    delta = np.empty(len(x), dtype=np.int64)
    e = _init(x, const, t_ptr, t_var, t_coef, zeros, delta)
    if len(trace) > 0:
        trace[0] = e
    steps = 0
    while True:
        best = 0
        arg = -1
        for k in range(len(free)):
            i = free[k]
            if delta[i] < best:
                best = delta[i]
                arg = i
        if arg < 0:
            break
        e += best
        _flip(arg, x, t_ptr, t_var, t_coef, v_ptr, v_term, zeros, delta)
        steps += 1
        if steps < len(trace):
            trace[steps] = e
    return steps


@njit(cache=True)
def descend_many(states, free, const, t_ptr, t_var, t_coef, v_ptr, v_term):
    energies = np.empty(states.shape[0], dtype=np.int64)
    trace = np.empty(1, dtype=np.int64)
    zeros = np.empty(len(t_coef), dtype=np.int64)
    delta = np.empty(states.shape[1], dtype=np.int64)
    for s in range(states.shape[0]):
        x = states[s]
        descend(x, free, const, t_ptr, t_var, t_coef, v_ptr, v_term, trace)
        energies[s] = _init(x, const, t_ptr, t_var, t_coef, zeros, delta)
    return energies


@njit(cache=True)
def _component_min(k, c_off, c_size, pool, work):
    size = c_size[k]
    m = 1 << size
    base = c_off[k]
    for a in range(m):
        work[a] = pool[base + a]
    for b in range(size):
        step = 1 << b
        for a in range(m):
            if a & step:
                work[a] += work[a ^ step]
    best = work[0]
    arg = 0
    for a in range(1, m):
        if work[a] < best:
            best = work[a]
            arg = a
    return best, arg


@njit(cache=True)
def _mflip(i, x, t_ptr, t_var, t_coef, t_comp, t_local, v_ptr, v_term, tz, c_off, pool, dirty, stamp, tick):
    """Flip structural variable ``i``; returns the base-energy change.

    Components whose coefficients moved are appended to ``dirty``.
    """
    step = 1 if x[i] == 1 else -1
    x[i] = 1 - x[i]
    db = 0
    nd = 0
    for p in range(v_ptr[i], v_ptr[i + 1]):
        t = v_term[p]
        was = tz[t] == 0
        tz[t] += step
        now = tz[t] == 0
        if was != now:
            c = t_coef[t] if now else -t_coef[t]
            k = t_comp[t]
            if k < 0:
                db += c
            else:
                pool[c_off[k] + t_local[t]] += c
                if stamp[k] != tick:
                    stamp[k] = tick
                    dirty[nd] = k
                    nd += 1
    return db, nd


@njit(cache=True)
def anneal_marginal(
    n, free, clamp, const, t_ptr, t_var, t_coef, t_comp, t_local, v_ptr, v_term,
    c_off, c_size, c_vars, c_vptr, n_comp, betas, num_samples, seed,
):
    """Annealing over structural variables with every ancilla component at its
    conditional minimum.

    ``t_var`` holds only the structural variables of each term; ``t_comp`` is
    the ancilla component a term touches (-1 for none) and ``t_local`` the
    term's ancilla monomial inside that component.  The sampled energy is
    ``min`` over ancillas of H at the sampled structural bits, and the
    returned assignment carries the minimizing ancillas (lowest index on ties).
    """
    out = np.empty((num_samples, n), dtype=np.uint8)
    energies = np.empty(num_samples, dtype=np.int64)
    n_terms = len(t_coef)
    tz = np.empty(n_terms, dtype=np.int64)
    total = 0
    for k in range(n_comp):
        total += 1 << c_size[k]
    pool = np.zeros(total, dtype=np.int64)
    cmin = np.zeros(n_comp, dtype=np.int64)
    saved = np.zeros(n_comp, dtype=np.int64)
    maxsize = 0
    for k in range(n_comp):
        maxsize = max(maxsize, c_size[k])
    work = np.empty(1 << maxsize, dtype=np.int64)
    dirty = np.empty(n_comp, dtype=np.int64)
    stamp = np.zeros(n_comp, dtype=np.int64)
    tick = 0
    x = np.empty(n, dtype=np.uint8)
    for s in range(num_samples):
        np.random.seed(seed + s)
        for i in range(n):
            x[i] = clamp[i]
        for k in range(len(free)):
            x[free[k]] = 1 if np.random.random() < 0.5 else 0
        pool[:] = 0
        eb = const
        for t in range(n_terms):
            z = 0
            for p in range(t_ptr[t], t_ptr[t + 1]):
                if x[t_var[p]] == 0:
                    z += 1
            tz[t] = z
            if z == 0:
                if t_comp[t] < 0:
                    eb += t_coef[t]
                else:
                    pool[c_off[t_comp[t]] + t_local[t]] += t_coef[t]
        ec = 0
        for k in range(n_comp):
            cmin[k], _ = _component_min(k, c_off, c_size, pool, work)
            ec += cmin[k]
        for b in range(len(betas)):
            beta = betas[b]
            for kk in range(len(free)):
                i = free[kk]
                tick += 1
                db, nd = _mflip(i, x, t_ptr, t_var, t_coef, t_comp, t_local, v_ptr, v_term, tz, c_off, pool, dirty, stamp, tick)
                dc = 0
                for r in range(nd):
                    k = dirty[r]
                    saved[k] = cmin[k]
                    cmin[k], _ = _component_min(k, c_off, c_size, pool, work)
                    dc += cmin[k] - saved[k]
                d = db + dc
                if d <= 0 or np.random.random() < np.exp(-beta * d):
                    eb += db
                    ec += dc
                else:
                    tick += 1
                    _mflip(i, x, t_ptr, t_var, t_coef, t_comp, t_local, v_ptr, v_term, tz, c_off, pool, dirty, stamp, tick)
                    for r in range(nd):
                        k = dirty[r]
                        cmin[k] = saved[k]
        for k in range(n_comp):
            _, arg = _component_min(k, c_off, c_size, pool, work)
            for r in range(c_vptr[k], c_vptr[k + 1]):
                x[c_vars[r]] = (arg >> (r - c_vptr[k])) & 1
        out[s, :] = x
        energies[s] = eb + ec
    return out, energies
