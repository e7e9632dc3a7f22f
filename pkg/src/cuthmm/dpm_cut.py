"""Nested-MCMC sampler for emission densities given transition-matrix draws.

Each hidden state carries an independent truncated Dirichlet-process
mixture of Gaussians: locations ``mu[j, r]`` with a shared per-state
variance ``v[r]`` and weights ``W[:, r]`` from a Dirichlet-multinomial
approximation with concentration ``M0 / S_max`` per component.

For every exterior transition draw ``Q_i`` an interior Gibbs chain of
length C runs at fixed ``Q_i``, warm-started from the final state of the
previous exterior index; the final interior state is the i-th emission
draw. Latent (state, component) pairs are refreshed jointly by exact
forward-backward over the composite space, whose transition factorises
as ``Q[r, r'] * W[j', r']``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .exceptions import ZeroLikelihood
from .histogram_gibbs import DrawStore, draw_q, transition_counts
from .hmm import check_transition_matrix, stationary_distribution


@dataclass
class DpmHyper:
    """Prior parameters of the per-state mixture model."""

    M0: float = 1.0
    mu_c: float = 0.0
    sigma_c2: float = 1.0
    alpha_sigma: float = 1.0
    beta_sigma: float = 1.0
    S_max: int = None  # None resolves to floor(sqrt(n)) at run time

    def __post_init__(self):
        if min(self.M0, self.sigma_c2, self.alpha_sigma, self.beta_sigma) <= 0:
            raise ValueError("DPM hyperparameters must be strictly positive")
        if self.S_max is not None and self.S_max < 1:
            raise ValueError("S_max must be >= 1")

    def resolve_s_max(self, n: int) -> int:
        return self.S_max if self.S_max is not None else int(math.isqrt(n))


@dataclass
class NestedConfig:
    C: int = 10
    seed: int = 0
    # interior sweeps at the first exterior draw before any draw is
    # retained; the prior-initialised mixture state needs a warm-up phase
    # or the first few hundred retained draws carry its transient
    warmup_sweeps: int = 1000

    def __post_init__(self):
        if self.C < 1:
            raise ValueError("interior chain length C must be >= 1")
        if self.warmup_sweeps < 0:
            raise ValueError("warmup_sweeps must be >= 0")


@dataclass
class DpmEmissionState:
    """Current interior-chain state: one mixture per hidden state plus latents."""

    mu: np.ndarray  # (S, R) component locations
    v: np.ndarray   # (R,) per-state variance, shared across components
    w: np.ndarray   # (S, R) component weights, columns sum to 1
    s: np.ndarray   # (n,) component allocations
    x: np.ndarray   # (n,) latent chain states
    log_likelihood: float = np.nan  # log P(Y | Q, mu, v, W) from the last latent refresh


@dataclass
class EmissionDraws:
    """Stacked emission-parameter draws aligned 1:1 with the exterior Q draws."""

    mu: np.ndarray  # (D, S, R)
    v: np.ndarray   # (D, R)
    w: np.ndarray   # (D, S, R)

    def __len__(self):
        return self.mu.shape[0]


@dataclass
class DensityGridDraws:
    grid: np.ndarray
    values: np.ndarray  # (D, R, G)
    meta: dict = field(default_factory=dict)


def default_grid(y, points: int = 512) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    sd = float(np.std(y))
    return np.linspace(y.min() - 3.0 * sd, y.max() + 3.0 * sd, points)


def init_state(y, q, hyper: DpmHyper, rng, s_max=None, x_init=None) -> DpmEmissionState:
    """Initial interior state drawn from the prior (given Q for the chain).

    x_init overrides the prior draw of the latent path; anchoring it to a
    label-aligned path keeps the chain in the mode matching the exterior
    draws' labelling.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    q = check_transition_matrix(q)
    r = q.shape[0]
    s_max = hyper.resolve_s_max(n) if s_max is None else s_max
    v = hyper.beta_sigma / rng.standard_gamma(hyper.alpha_sigma, size=r)
    g = rng.standard_gamma(np.full((s_max, r), hyper.M0 / s_max))
    w = g / g.sum(axis=0, keepdims=True)
    mu = hyper.mu_c + math.sqrt(hyper.sigma_c2) * rng.standard_normal((s_max, r))
    if x_init is not None:
        x = np.asarray(x_init, dtype=np.int64)
        if x.shape != (n,):
            raise ValueError("x_init must have one state per observation")
    else:
        p0 = stationary_distribution(q)
        cum_rows = np.cumsum(q, axis=1)
        x = np.zeros(n, dtype=np.int64)
        us = rng.random(n)
        x[0] = min(int(np.searchsorted(np.cumsum(p0), us[0], side="right")), r - 1)
        for t in range(1, n):
            x[t] = min(int(np.searchsorted(cum_rows[x[t - 1]], us[t], side="right")), r - 1)
    cum_w = np.cumsum(w, axis=0)
    s = (cum_w.T[x] < rng.random(n)[:, None]).sum(axis=1).astype(np.int64)
    return DpmEmissionState(mu=mu, v=v, w=w, s=s, x=x)


def anchored_initial_path(store: DrawStore, y, rng) -> np.ndarray:
    """Latent path consistent with the labelling of a relabeled draw store.

    A path drawn by FFBS under the store's first (Q, omega) draw on the
    coarsened series; when Q is close to exchangeable the swapped emission
    mode is locally stable under the interior chain, so starting from the
    prior would lose the label alignment about half the time.
    """
    from .hmm import sample_latent_path
    from .partition import DyadicPartition, coarsen

    part = DyadicPartition.from_json(store.meta["partition"])
    bins = coarsen(part, np.asarray(y, dtype=float))
    q1, omega1 = store.q[0], store.omega[0]
    with np.errstate(divide="ignore"):
        log_b = np.log(omega1)[bins, :]
    return sample_latent_path(q1, stationary_distribution(q1), log_b, rng)


def _cell_index(state, s_max):
    return state.x * s_max + state.s


def _update_locations(state, y, hyper, rng):
    s_max, r = state.mu.shape
    idx = _cell_index(state, s_max)
    counts = np.bincount(idx, minlength=r * s_max).reshape(r, s_max).T  # (S, R)
    sums = np.bincount(idx, weights=y, minlength=r * s_max).reshape(r, s_max).T
    prec = 1.0 / hyper.sigma_c2 + counts / state.v[None, :]
    var = 1.0 / prec
    mean = var * (hyper.mu_c / hyper.sigma_c2 + sums / state.v[None, :])
    state.mu = mean + np.sqrt(var) * rng.standard_normal((s_max, r))


def _update_variances(state, y, hyper, rng):
    r = state.v.shape[0]
    resid2 = (y - state.mu[state.s, state.x]) ** 2
    n_r = np.bincount(state.x, minlength=r)
    ssq = np.bincount(state.x, weights=resid2, minlength=r)
    shape = hyper.alpha_sigma + 0.5 * n_r
    scale = hyper.beta_sigma + 0.5 * ssq
    state.v = scale / rng.standard_gamma(shape)


def _update_weights(state, hyper, rng):
    s_max, r = state.w.shape
    idx = _cell_index(state, s_max)
    counts = np.bincount(idx, minlength=r * s_max).reshape(r, s_max).T
    g = rng.standard_gamma(hyper.M0 / s_max + counts)
    state.w = g / g.sum(axis=0, keepdims=True)


class _Workspace:
    """Reusable buffers for the latent refresh (one per chain)."""

    def __init__(self, n, r, s_max):
        self.bbar = np.empty((n, r, s_max))
        self.filtered = np.empty((n, r, s_max))
        self.lognorm = np.empty(n)
        self.mshift = np.empty(n)
        self.zero_shift = np.zeros(n)

    @classmethod
    def for_state(cls, state, n):
        ws = getattr(state, "_ws", None)
        s_max, r = state.mu.shape
        if ws is None or ws.bbar.shape != (n, r, s_max):
            ws = cls(n, r, s_max)
            state._ws = ws
        return ws


def _sample_latents(state, q, y, rng, p0_chain):
    """Joint (s, x) refresh by composite-state FFBS; returns the data log-likelihood.

    Fast path evaluates the Gaussian densities unshifted (one vectorised
    exp); if a whole time slice underflows it falls back to the max-shifted
    table before giving up with ZeroLikelihood.
    """
    n = len(y)
    ws = _Workspace.for_state(state, n)
    np.subtract(y[:, None, None], state.mu.T[None, :, :], out=ws.bbar)
    np.multiply(ws.bbar, ws.bbar, out=ws.bbar)
    ws.bbar *= (-0.5 / state.v)[None, :, None]
    np.exp(ws.bbar, out=ws.bbar)
    ws.bbar *= (1.0 / np.sqrt(2.0 * np.pi * state.v))[None, :, None]
    bad_t = _kernels.forward_factored(ws.bbar, ws.zero_shift, q, state.w, p0_chain, ws.filtered, ws.lognorm)
    if bad_t >= 0:
        _kernels.gaussian_shifted_emissions(y, state.mu, state.v, ws.bbar, ws.mshift)
        bad_t = _kernels.forward_factored(ws.bbar, ws.mshift, q, state.w, p0_chain, ws.filtered, ws.lognorm)
        if bad_t >= 0:
            raise ZeroLikelihood(bad_t)
    x, s = _kernels.ffbs_factored(q, ws.filtered, rng.random(n))
    state.x, state.s = x, s
    return float(ws.lognorm.sum())


def interior_sweep(state: DpmEmissionState, q, y, hyper: DpmHyper, rng, p0_chain=None) -> DpmEmissionState:
    """One Gibbs sweep at fixed Q: locations, variances, weights, latents.

    Every update is the exact full conditional; empty (state, component)
    cells fall back to the base measure automatically because their
    posterior equals the prior. Mutates and returns ``state``.
    """
    y = np.asarray(y, dtype=float)
    if p0_chain is None:
        p0_chain = stationary_distribution(q)
    _update_locations(state, y, hyper, rng)
    _update_variances(state, y, hyper, rng)
    _update_weights(state, hyper, rng)
    state.log_likelihood = _sample_latents(state, q, y, rng, p0_chain)
    return state


def log_density_table(mu, v, w, y) -> np.ndarray:
    """(n, R) table of per-state mixture log densities at the observations."""
    from scipy.special import logsumexp

    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    # (n, S, R): log w_{jr} + log phi(y_t; mu_{jr}, v_r)
    z = (y[:, None, None] - mu[None, :, :]) ** 2 / (2.0 * v[None, None, :])
    logphi = -z - 0.5 * np.log(2.0 * np.pi * v)[None, None, :]
    with np.errstate(divide="ignore"):
        logw = np.log(w)
    return logsumexp(logw[None, :, :] + logphi, axis=1)


def density_eval(mu, v, w, grid) -> np.ndarray:
    """Per-state mixture densities on the grid, as an (R, G) array."""
    mu = np.asarray(mu, dtype=float)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    grid = np.asarray(grid, dtype=float)
    r = v.shape[0]
    out = np.empty((r, grid.shape[0]))
    for state in range(r):
        z = (grid[:, None] - mu[None, :, state]) ** 2 / (2.0 * v[state])
        phi = np.exp(-z) / math.sqrt(2.0 * math.pi * v[state])
        out[state] = phi @ w[:, state]
    return out


def nested_run(q_draws, y, hyper: DpmHyper, config: NestedConfig, grid=None):
    """Emission draws for each exterior Q draw, plus density evaluations.

    For exterior index i, C interior sweeps run at fixed ``Q_i`` starting
    from the final state of index i-1; the final interior state is
    retained as draw i. The very first state is drawn from the prior with
    the latent path anchored to the store's labelling whenever the
    exterior draws come as a DrawStore with histogram and partition
    metadata (see anchored_initial_path); a bare array of Q draws falls
    back to a prior path.
    """
    y = np.asarray(y, dtype=float)
    is_store = isinstance(q_draws, DrawStore)
    qs = q_draws.q if is_store else np.asarray(q_draws, dtype=float)
    if qs.ndim != 3 or len(qs) < 1:
        raise ValueError("need at least one exterior transition draw")
    n, d = len(y), len(qs)
    s_max = hyper.resolve_s_max(n)
    grid = default_grid(y) if grid is None else np.asarray(grid, dtype=float)
    rng = np.random.default_rng(config.seed)
    x_init = None
    if is_store and "partition" in q_draws.meta:
        x_init = anchored_initial_path(q_draws, y, rng)
    state = init_state(y, qs[0], hyper, rng, s_max=s_max, x_init=x_init)
    q_first = check_transition_matrix(qs[0])
    p0_first = stationary_distribution(q_first)
    for _ in range(config.warmup_sweeps):
        interior_sweep(state, q_first, y, hyper, rng, p0_chain=p0_first)
    r = qs.shape[1]
    mu = np.empty((d, s_max, r))
    v = np.empty((d, r))
    w = np.empty((d, s_max, r))
    values = np.empty((d, r, grid.shape[0]))
    for i in range(d):
        q = check_transition_matrix(qs[i])
        p0 = stationary_distribution(q)
        for _ in range(config.C):
            interior_sweep(state, q, y, hyper, rng, p0_chain=p0)
        mu[i], v[i], w[i] = state.mu, state.v, state.w
        values[i] = density_eval(state.mu, state.v, state.w, grid)
    draws = EmissionDraws(mu=mu, v=v, w=w)
    dgd = DensityGridDraws(grid=grid, values=values, meta={"C": config.C, "seed": config.seed, "S_max": s_max})
    return draws, dgd


def pointwise_bands(dgd: DensityGridDraws, level: float = 0.9):
    """Pointwise mean and equal-tailed quantile band per state.

    Returns (mean, lo, hi), each of shape (R, G).
    """
    if dgd.values.shape[0] < 2:
        raise ValueError("need at least two draws for pointwise bands")
    alpha = (1.0 - level) / 2.0
    mean = dgd.values.mean(axis=0)
    lo = np.quantile(dgd.values, alpha, axis=0)
    hi = np.quantile(dgd.values, 1.0 - alpha, axis=0)
    return mean, lo, hi


@dataclass
class FullBayesConfig:
    iterations: int = 70_000
    burn_in: int = 10_000
    thin: int = 10
    seed: int = 0

    def __post_init__(self):
        if not (self.iterations > self.burn_in >= 0):
            raise ValueError("need iterations > burn_in >= 0")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")

    @property
    def n_draws(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


def full_bayes_run(y, hyper: DpmHyper, dirichlet_gamma, config: FullBayesConfig, grid=None):
    """Joint sampler over (Q, emissions): the fully-Bayes comparison model.

    Identical to the interior sweep except that Q is resampled from its
    Dirichlet conditional given the latent path at the top of every sweep;
    there is no interior loop. As in the histogram sampler, the joint
    model fixes X_1 uniform so the Q conditional stays Dirichlet.

    Returns (DrawStore of Q draws with the mixture weights in the omega
    slot, EmissionDraws, DensityGridDraws); all three are relabeled
    against the highest-likelihood retained draw.
    """
    y = np.asarray(y, dtype=float)
    gamma = np.asarray(dirichlet_gamma, dtype=float)
    r = gamma.shape[0]
    n = len(y)
    s_max = hyper.resolve_s_max(n)
    grid = default_grid(y) if grid is None else np.asarray(grid, dtype=float)
    rng = np.random.default_rng(config.seed)
    p0_chain = np.full(r, 1.0 / r)
    q0 = draw_q(np.zeros((r, r)), gamma, rng)
    state = init_state(y, q0, hyper, rng, s_max=s_max)
    d = config.n_draws
    qs = np.empty((d, r, r))
    mu = np.empty((d, s_max, r))
    v = np.empty((d, r))
    w = np.empty((d, s_max, r))
    loglik = np.empty(d)
    k = 0
    for i in range(1, config.iterations + 1):
        q = draw_q(transition_counts(state.x, r), gamma, rng)
        interior_sweep(state, q, y, hyper, rng, p0_chain=p0_chain)
        if i > config.burn_in and (i - config.burn_in) % config.thin == 0:
            qs[k], mu[k], v[k], w[k] = q, state.mu, state.v, state.w
            loglik[k] = state.log_likelihood
            k += 1
    qs, mu, v, w = _relabel_joint(qs, mu, v, w, loglik)
    values = np.empty((d, r, grid.shape[0]))
    for i in range(d):
        values[i] = density_eval(mu[i], v[i], w[i], grid)
    store = DrawStore(
        q=qs,
        omega=w,
        log_posteriors=loglik,
        relabeling=np.tile(np.arange(r), (d, 1)),
        meta={"model": "dpm-full-bayes", "seed": config.seed,
              "config": {"iterations": config.iterations, "burn_in": config.burn_in, "thin": config.thin}},
    )
    draws = EmissionDraws(mu=mu, v=v, w=w)
    dgd = DensityGridDraws(grid=grid, values=values, meta={"model": "dpm-full-bayes", "seed": config.seed})
    return store, draws, dgd


def _relabel_joint(qs, mu, v, w, loglik):
    """Align draw labels to the highest-likelihood draw by squared distance
    over Q entries plus weight entries, permuting all parameter blocks."""
    import itertools

    d, r = qs.shape[0], qs.shape[1]
    ref = int(np.argmax(loglik))
    q_ref, w_ref = qs[ref], w[ref]
    perms = [list(p) for p in itertools.permutations(range(r))]
    for i in range(d):
        best, best_tau = np.inf, None
        for tau in perms:
            dist = float(np.sum((qs[i][np.ix_(tau, tau)] - q_ref) ** 2) + np.sum((w[i][:, tau] - w_ref) ** 2))
            if dist < best:
                best, best_tau = dist, tau
        qs[i] = qs[i][np.ix_(best_tau, best_tau)]
        mu[i] = mu[i][:, best_tau]
        v[i] = v[i][best_tau]
        w[i] = w[i][:, best_tau]
    return qs, mu, v, w
