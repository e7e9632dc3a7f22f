"""Numba kernels for the scaled forward/backward recursions.

Every kernel works on a per-time max-shifted emission table so that the
linear-domain recursion never over/underflows for finite log densities.
Kernels never raise: they report the first bad time index (normaliser
underflow or an all ``-inf`` emission row) through a returned ``bad_t``
(-1 means success) and the caller translates that into ``ZeroLikelihood``.

Randomness is injected as pre-drawn uniforms so that all sampling stays
bit-reproducible under ``numpy.random.Generator`` seeding.
"""

import numpy as np
from numba import njit

NEG_INF = -np.inf


@njit(cache=True)
def forward_dense(log_b, q, p0):
    """Scaled forward pass for a dense K-state chain.

    Returns (filtered, lognorm, cbar, mshift, bad_t) where
    lognorm[t] = log(cbar[t]) + mshift[t] and sum(lognorm) is the
    log-likelihood.
    """
    n, k = log_b.shape
    filtered = np.zeros((n, k))
    lognorm = np.zeros(n)
    cbar = np.zeros(n)
    mshift = np.zeros(n)
    pred = p0.copy()
    for t in range(n):
        m = NEG_INF
        for r in range(k):
            if log_b[t, r] > m:
                m = log_b[t, r]
        if not np.isfinite(m):
            return filtered, lognorm, cbar, mshift, t
        mshift[t] = m
        c = 0.0
        for r in range(k):
            v = pred[r] * np.exp(log_b[t, r] - m)
            filtered[t, r] = v
            c += v
        if not (c > 0.0) or not np.isfinite(c):
            return filtered, lognorm, cbar, mshift, t
        for r in range(k):
            filtered[t, r] /= c
        cbar[t] = c
        lognorm[t] = np.log(c) + m
        if t + 1 < n:
            for j in range(k):
                s = 0.0
                for i in range(k):
                    s += filtered[t, i] * q[i, j]
                pred[j] = s
    return filtered, lognorm, cbar, mshift, -1


@njit(cache=True)
def smooth_dense(log_b, q, filtered, cbar, mshift):
    """Scaled backward pass; returns the n x K smoothing matrix."""
    n, k = log_b.shape
    sm = np.zeros((n, k))
    beta = np.ones(k)
    newbeta = np.zeros(k)
    for r in range(k):
        sm[n - 1, r] = filtered[n - 1, r]
    for t in range(n - 2, -1, -1):
        for i in range(k):
            s = 0.0
            for j in range(k):
                s += q[i, j] * np.exp(log_b[t + 1, j] - mshift[t + 1]) * beta[j]
            newbeta[i] = s / cbar[t + 1]
        tot = 0.0
        for i in range(k):
            beta[i] = newbeta[i]
            v = filtered[t, i] * beta[i]
            sm[t, i] = v
            tot += v
        for i in range(k):
            sm[t, i] /= tot
    return sm


@njit(cache=True)
def pairwise_counts_dense(log_b, q, filtered, cbar, mshift):
    """Backward pass accumulating EM sufficient statistics.

    Returns (xi_sum, gamma): summed pairwise posteriors xi_sum[i, j] =
    sum_t P(X_t=i, X_{t+1}=j | Y) and the smoothing matrix gamma.
    """
    n, k = log_b.shape
    gamma = np.zeros((n, k))
    xi_sum = np.zeros((k, k))
    beta = np.ones(k)
    newbeta = np.zeros(k)
    bnext = np.zeros(k)
    for r in range(k):
        gamma[n - 1, r] = filtered[n - 1, r]
    for t in range(n - 2, -1, -1):
        for j in range(k):
            bnext[j] = np.exp(log_b[t + 1, j] - mshift[t + 1]) * beta[j]
        for i in range(k):
            s = 0.0
            for j in range(k):
                term = filtered[t, i] * q[i, j] * bnext[j] / cbar[t + 1]
                xi_sum[i, j] += term
                s += q[i, j] * bnext[j]
            newbeta[i] = s / cbar[t + 1]
        tot = 0.0
        for i in range(k):
            beta[i] = newbeta[i]
            v = filtered[t, i] * beta[i]
            gamma[t, i] = v
            tot += v
        for i in range(k):
            gamma[t, i] /= tot
    return xi_sum, gamma


@njit(cache=True)
def _pick(weights, k, u):
    """Index of the first cumulative weight exceeding u * total."""
    tot = 0.0
    for i in range(k):
        tot += weights[i]
    thresh = u * tot
    acc = 0.0
    for i in range(k):
        acc += weights[i]
        if acc >= thresh:
            return i
    return k - 1


@njit(cache=True)
def ffbs_dense(q, filtered, us):
    """Backward sampling given the filtered matrix; us has one uniform per step."""
    n, k = filtered.shape
    path = np.zeros(n, dtype=np.int64)
    w = np.zeros(k)
    path[n - 1] = _pick(filtered[n - 1], k, us[n - 1])
    for t in range(n - 2, -1, -1):
        nxt = path[t + 1]
        for i in range(k):
            w[i] = filtered[t, i] * q[i, nxt]
        path[t] = _pick(w, k, us[t])
    return path


@njit(cache=True)
def forward_factored(bbar, mshift, q, w, p0, filtered, lognorm):
    """Scaled forward pass over composite states (chain r, component j).

    bbar[t, r, j] is the (possibly max-shifted) linear emission density at
    time t and mshift[t] the shift; the composite transition factorises as
    q[r, r'] * w[j', r'] so one step costs O(R*S*R) instead of O((R*S)^2).
    filtered and lognorm are caller-provided output buffers.
    """
    n, nr, ns = bbar.shape
    pred = np.zeros((nr, ns))
    a = np.zeros(nr)
    mchain = np.zeros(nr)
    for r in range(nr):
        for j in range(ns):
            pred[r, j] = p0[r] * w[j, r]
    for t in range(n):
        c = 0.0
        for r in range(nr):
            for j in range(ns):
                v = pred[r, j] * bbar[t, r, j]
                filtered[t, r, j] = v
                c += v
        if not (c > 0.0) or not np.isfinite(c):
            return t
        for r in range(nr):
            for j in range(ns):
                filtered[t, r, j] /= c
        lognorm[t] = np.log(c) + mshift[t]
        if t + 1 < n:
            for r in range(nr):
                s = 0.0
                for j in range(ns):
                    s += filtered[t, r, j]
                a[r] = s
            for rp in range(nr):
                s = 0.0
                for r in range(nr):
                    s += a[r] * q[r, rp]
                mchain[rp] = s
            for rp in range(nr):
                for jp in range(ns):
                    pred[rp, jp] = mchain[rp] * w[jp, rp]
    return -1


@njit(cache=True)
def ffbs_factored(q, filtered, us):
    """Backward sampling of (x, s) over composite states.

    Conditional on the next chain state r', the weight of (r, j) is
    filtered[t, r, j] * q[r, r']: the component factor w[j', r'] is constant
    and cancels.
    """
    n, nr, ns = filtered.shape
    x = np.zeros(n, dtype=np.int64)
    s = np.zeros(n, dtype=np.int64)
    flat = np.zeros(nr * ns)
    for r in range(nr):
        for j in range(ns):
            flat[r * ns + j] = filtered[n - 1, r, j]
    idx = _pick(flat, nr * ns, us[n - 1])
    x[n - 1] = idx // ns
    s[n - 1] = idx % ns
    for t in range(n - 2, -1, -1):
        nxt = x[t + 1]
        for r in range(nr):
            for j in range(ns):
                flat[r * ns + j] = filtered[t, r, j] * q[r, nxt]
        idx = _pick(flat, nr * ns, us[t])
        x[t] = idx // ns
        s[t] = idx % ns
    return x, s


@njit(cache=True)
def gaussian_shifted_emissions(y, mu, v, bbar, mshift):
    """Max-shifted linear Gaussian emission table, written into (bbar, mshift).

    bbar[t, r, j] = exp(log phi(y_t; mu[j, r], v[r]) - mshift[t]) with
    mshift[t] the per-time maximum log density. Slow path for sweeps whose
    unshifted densities underflow.
    """
    n = y.shape[0]
    ns, nr = mu.shape
    halflog = np.zeros(nr)
    for r in range(nr):
        halflog[r] = -0.5 * np.log(2.0 * np.pi * v[r])
    for t in range(n):
        m = NEG_INF
        for r in range(nr):
            inv2v = 0.5 / v[r]
            for j in range(ns):
                d = y[t] - mu[j, r]
                val = halflog[r] - d * d * inv2v
                bbar[t, r, j] = val
                if val > m:
                    m = val
        mshift[t] = m
        for r in range(nr):
            for j in range(ns):
                bbar[t, r, j] = np.exp(bbar[t, r, j] - m)
