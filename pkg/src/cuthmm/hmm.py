"""Exact finite-state HMM computations shared by every sampler.

The model: a latent chain on ``{0, ..., R-1}`` with row-stochastic
transition matrix ``Q`` (``Q[i, j] = P(X_{t+1}=j | X_t=i)``) and
observations ``Y_t`` drawn from the state's emission distribution.
Emission information always enters through an ``n x R`` table of log
densities, so the same machinery serves continuous, histogram and
mixture emissions alike.

All recursions are scaled (normalised) in the linear domain with
per-step log normalisers; see ``_kernels``.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .exceptions import NonErgodic, ZeroLikelihood

ROW_SUM_TOL = 1e-12
STATIONARY_TOL = 1e-10


def check_transition_matrix(q) -> np.ndarray:
    """Validate and return Q as a float array.

    Raises ValueError unless Q is square, entrywise nonnegative and
    row-stochastic to within 1e-12.
    """
    q = np.asarray(q, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1] or q.shape[0] < 1:
        raise ValueError(f"transition matrix must be square, got shape {q.shape}")
    if np.any(q < 0):
        raise ValueError("transition matrix has negative entries")
    if np.max(np.abs(q.sum(axis=1) - 1.0)) > ROW_SUM_TOL:
        raise ValueError("transition matrix rows must sum to 1 within 1e-12")
    return q


def check_distribution(p, size=None) -> np.ndarray:
    """Validate a probability vector (nonnegative, sums to 1 within 1e-12)."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ValueError("distribution must be a vector")
    if size is not None and p.shape[0] != size:
        raise ValueError(f"distribution has length {p.shape[0]}, expected {size}")
    if np.any(p < 0) or abs(p.sum() - 1.0) > ROW_SUM_TOL:
        raise ValueError("distribution must be nonnegative and sum to 1 within 1e-12")
    return p


def stationary_distribution(q) -> np.ndarray:
    """Invariant distribution p of Q, solving p^T Q = p^T with sum(p) = 1.

    Raises NonErgodic when the linear system does not pin down a unique
    nonnegative solution (e.g. reducible or absorbing chains).
    """
    q = check_transition_matrix(q)
    r = q.shape[0]
    if r == 1:
        return np.ones(1)
    a = q.T - np.eye(r)
    # unique stationary distribution iff rank(Q^T - I) == R - 1
    sv = np.linalg.svd(a, compute_uv=False)
    if sv[r - 2] <= STATIONARY_TOL * max(sv[0], 1.0):
        raise NonErgodic("no unique stationary distribution: rank(Q^T - I) < R - 1")
    lhs = np.vstack([a, np.ones(r)])
    rhs = np.zeros(r + 1)
    rhs[-1] = 1.0
    p, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    if np.any(p < -STATIONARY_TOL):
        raise NonErgodic("stationary solve produced negative probabilities")
    p = np.clip(p, 0.0, None)
    p /= p.sum()
    if np.max(np.abs(p @ q - p)) > STATIONARY_TOL:
        raise NonErgodic("stationary solve residual above tolerance")
    return p


@dataclass
class FilterResult:
    """Output of the scaled forward recursion.

    filtered[t, r] = P(X_t=r | Y_{1:t}); log_norm_constants[t] is the log
    of the t-th normaliser, and log_likelihood is their sum.
    """

    filtered: np.ndarray
    log_norm_constants: np.ndarray
    log_likelihood: float


def _prepare(q, p0, log_emissions):
    q = check_transition_matrix(q)
    e = np.ascontiguousarray(log_emissions, dtype=float)
    if e.ndim != 2 or e.shape[1] != q.shape[0]:
        raise ValueError("log emission table must be n x R")
    if e.shape[0] < 1:
        raise ValueError("need at least one observation")
    if np.any(np.isnan(e)) or np.any(e == np.inf):
        raise ValueError("log emission entries must be finite or -inf")
    p0 = check_distribution(p0, q.shape[0])
    return q, p0, e


def forward_filter(q, p0, log_emissions) -> FilterResult:
    """Filtered state probabilities and the exact log-likelihood.

    Parameters
    ----------
    q : (R, R) row-stochastic transition matrix.
    p0 : (R,) initial state distribution.
    log_emissions : (n, R) table of log f_r(y_t); entries finite or -inf.

    Raises
    ------
    ZeroLikelihood
        if some normalisation constant underflows to zero (all emission
        densities vanish at a time step).
    """
    q, p0, e = _prepare(q, p0, log_emissions)
    filtered, lognorm, _, _, bad_t = _kernels.forward_dense(e, q, p0)
    if bad_t >= 0:
        raise ZeroLikelihood(bad_t)
    return FilterResult(filtered, lognorm, float(lognorm.sum()))


def smoothing_probabilities(q, p0, log_emissions) -> np.ndarray:
    """Smoothing matrix with rows P(X_t = . | Y_{1:n})."""
    q, p0, e = _prepare(q, p0, log_emissions)
    filtered, _, cbar, mshift, bad_t = _kernels.forward_dense(e, q, p0)
    if bad_t >= 0:
        raise ZeroLikelihood(bad_t)
    return _kernels.smooth_dense(e, q, filtered, cbar, mshift)


def sample_latent_path(q, p0, log_emissions, rng) -> np.ndarray:
    """One exact draw of X_{1:n} | Y_{1:n} by forward-filtering backward-sampling."""
    q, p0, e = _prepare(q, p0, log_emissions)
    filtered, _, _, _, bad_t = _kernels.forward_dense(e, q, p0)
    if bad_t >= 0:
        raise ZeroLikelihood(bad_t)
    us = rng.random(e.shape[0])
    return _kernels.ffbs_dense(q, filtered, us)


def simulate_hmm(q, emission_samplers, n, rng, p0=None):
    """Simulate (X_{1:n}, Y_{1:n}) from the model.

    emission_samplers is a length-R sequence of callables; samplers are
    called as ``sampler(rng)`` and may return scalars. X_1 is drawn from
    the stationary distribution unless p0 overrides it.
    """
    q = check_transition_matrix(q)
    if n < 1:
        raise ValueError("n must be >= 1")
    r = q.shape[0]
    if len(emission_samplers) != r:
        raise ValueError("need one emission sampler per state")
    p0 = stationary_distribution(q) if p0 is None else check_distribution(p0, r)
    cum_rows = np.cumsum(q, axis=1)
    us = rng.random(n)
    path = np.zeros(n, dtype=np.int64)
    path[0] = min(int(np.searchsorted(np.cumsum(p0), us[0], side="right")), r - 1)
    for t in range(1, n):
        path[t] = min(int(np.searchsorted(cum_rows[path[t - 1]], us[t], side="right")), r - 1)
    y = np.asarray([emission_samplers[path[t]](rng) for t in range(n)], dtype=float)
    return path, y
