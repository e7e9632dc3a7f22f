"""Gibbs sampler for the transition matrix under the histogram emission prior.

The sampler works entirely on coarsened data: with piecewise-constant
emission densities the bin-width factors are a parameter-free constant of
the likelihood, so the target reduces to a multinomial HMM with per-state
bin weights ``omega[:, r]`` and independent Dirichlet priors on the rows
of Q and the columns of omega.

The joint model behind the sampler fixes X_1 uniform on the states: this
keeps both full conditionals exact (a stationary X_1 would break the
Dirichlet conjugacy of Q), and differs from the stationary-chain
likelihood only in an O(1) initial term.
"""

import itertools
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import gammaln, xlogy

from . import _kernels
from .exceptions import InsufficientStores, ZeroLikelihood


@dataclass
class DirichletHyper:
    """Prior parameters: gamma (R x R) for Q rows, beta (kappa x R) for omega columns."""

    gamma: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        self.gamma = np.asarray(self.gamma, dtype=float)
        self.beta = np.asarray(self.beta, dtype=float)
        if np.any(self.gamma <= 0) or np.any(self.beta <= 0):
            raise ValueError("Dirichlet hyperparameters must be strictly positive")

    @classmethod
    def uniform(cls, r: int, kappa: int) -> "DirichletHyper":
        return cls(gamma=np.ones((r, r)), beta=np.ones((kappa, r)))


@dataclass
class Pi1Config:
    iterations: int = 150_000
    burn_in: int = 10_000
    thin: int = 20
    seed: int = 0

    def __post_init__(self):
        if not (self.iterations > self.burn_in >= 0):
            raise ValueError("need iterations > burn_in >= 0")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")

    @property
    def n_draws(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


@dataclass
class DrawStore:
    """Ordered ``(Q, omega)`` draws with relabeling record and chain metadata."""

    q: np.ndarray            # (D, R, R)
    omega: np.ndarray        # (D, kappa, R)
    log_posteriors: np.ndarray
    relabeling: np.ndarray   # (D, R) permutation applied to each draw
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.q.shape[0]

    @property
    def n_states(self):
        return self.q.shape[1]


@dataclass
class Pi1State:
    q: np.ndarray
    omega: np.ndarray
    x: np.ndarray


def transition_counts(x, r: int) -> np.ndarray:
    """n[i, j] = number of i -> j steps along the path."""
    x = np.asarray(x)
    if len(x) < 2:
        return np.zeros((r, r))
    return np.bincount(x[:-1] * r + x[1:], minlength=r * r).reshape(r, r).astype(float)


def sufficient_counts(x, bins, r: int, kappa: int):
    """Transition counts n[i, j] and per-state bin counts N[m, i]."""
    x = np.asarray(x)
    bins = np.asarray(bins)
    if x.shape != bins.shape:
        raise ValueError("latent path and coarsened series must have equal length")
    trans = transition_counts(x, r)
    emit = np.bincount(bins * r + x, minlength=kappa * r).reshape(kappa, r).astype(float)
    return trans, emit


def draw_q(trans_counts, gamma, rng) -> np.ndarray:
    """Q rows from their Dirichlet conditional, via normalised gamma draws."""
    g = rng.standard_gamma(gamma + trans_counts)
    return g / g.sum(axis=1, keepdims=True)


def draw_omega(emit_counts, beta, rng) -> np.ndarray:
    """omega columns from their Dirichlet conditional."""
    g = rng.standard_gamma(beta + emit_counts)
    return g / g.sum(axis=0, keepdims=True)


def initial_path(bins, r: int, kappa: int, rng) -> np.ndarray:
    """Quantile-split start: states drawn from per-bin group frequencies."""
    bins = np.asarray(bins)
    thresholds = np.quantile(bins, np.arange(1, r) / r)
    groups = np.searchsorted(thresholds, bins, side="right")
    freq = np.zeros((kappa, r))
    np.add.at(freq, (bins, groups), 1.0)
    freq += 0.5  # keep every state reachable in every bin
    cum = np.cumsum(freq / freq.sum(axis=1, keepdims=True), axis=1)
    u = rng.random(len(bins))
    return (cum[bins] < u[:, None]).sum(axis=1).astype(np.int64)


def _sample_path(q, omega, bins, rng):
    r = q.shape[1]
    if len(bins) == 0:
        return np.zeros(0, dtype=np.int64)
    with np.errstate(divide="ignore"):
        log_b = np.log(omega)[bins, :]
    p0 = np.full(r, 1.0 / r)
    filtered, _, _, _, bad_t = _kernels.forward_dense(log_b, q, p0)
    if bad_t >= 0:
        raise ZeroLikelihood(bad_t)
    return _kernels.ffbs_dense(q, filtered, rng.random(len(bins)))


def gibbs_sweep(state: Pi1State, bins, hyper: DirichletHyper, rng) -> Pi1State:
    """One full sweep: Q | X, omega | X, Y, then X | Q, omega, Y exactly."""
    r = hyper.gamma.shape[0]
    kappa = hyper.beta.shape[0]
    trans, emit = sufficient_counts(state.x, bins, r, kappa)
    q = draw_q(trans, hyper.gamma, rng)
    omega = draw_omega(emit, hyper.beta, rng)
    x = _sample_path(q, omega, bins, rng)
    return Pi1State(q=q, omega=omega, x=x)


def _dirichlet_logpdf(w, alpha, axis):
    return float(
        np.sum(gammaln(alpha.sum(axis=axis)))
        - np.sum(gammaln(alpha))
        + np.sum(xlogy(alpha - 1.0, w))
    )


def log_posterior(q, omega, bins, hyper: DirichletHyper) -> float:
    """Unnormalised log posterior of (Q, omega) with X marginalised out."""
    r = q.shape[0]
    with np.errstate(divide="ignore"):
        log_b = np.log(omega)[np.asarray(bins), :]
    p0 = np.full(r, 1.0 / r)
    _, lognorm, _, _, bad_t = _kernels.forward_dense(log_b, q, p0)
    if bad_t >= 0:
        raise ZeroLikelihood(bad_t)
    ll = float(lognorm.sum())
    ll += _dirichlet_logpdf(q, hyper.gamma, 1)
    ll += _dirichlet_logpdf(omega, hyper.beta, 0)
    return ll


def run_chain(bins, hyper: DirichletHyper, config: Pi1Config, r: int, partition=None) -> DrawStore:
    """Run the full chain and return relabeled, thinned draws.

    Retains one state every ``thin`` sweeps after ``burn_in``, records the
    marginal log posterior of each retained draw, and relabels the store
    against its highest-posterior draw.
    """
    bins = np.asarray(bins)
    kappa = hyper.beta.shape[0]
    rng = np.random.default_rng(config.seed)
    state = Pi1State(q=None, omega=None, x=initial_path(bins, r, kappa, rng))
    n_draws = config.n_draws
    qs = np.empty((n_draws, r, r))
    omegas = np.empty((n_draws, kappa, r))
    logposts = np.empty(n_draws)
    d = 0
    for i in range(1, config.iterations + 1):
        state = gibbs_sweep(state, bins, hyper, rng)
        if i > config.burn_in and (i - config.burn_in) % config.thin == 0 and d < n_draws:
            qs[d] = state.q
            omegas[d] = state.omega
            logposts[d] = log_posterior(state.q, state.omega, bins, hyper)
            d += 1
    meta = {
        "seed": config.seed,
        "config": {"iterations": config.iterations, "burn_in": config.burn_in, "thin": config.thin},
        "R": r,
        "kappa": kappa,
        "n": int(len(bins)),
    }
    if partition is not None:
        meta["partition"] = partition.to_json()
    store = DrawStore(
        q=qs[:d],
        omega=omegas[:d],
        log_posteriors=logposts[:d],
        relabeling=np.tile(np.arange(r), (d, 1)),
        meta=meta,
    )
    return relabel_draws(store)


def _perm_distance(q, omega, tau, q_ref, omega_ref):
    qp = q[np.ix_(tau, tau)]
    wp = omega[:, tau]
    return float(np.sum((qp - q_ref) ** 2) + np.sum((wp - omega_ref) ** 2))


def relabel_draws(store: DrawStore) -> DrawStore:
    """Permute every draw to best match the highest-posterior draw.

    The distance is the summed squared difference over all Q and omega
    entries; ties break to the lexicographically smallest permutation.
    """
    if len(store) == 0:
        raise ValueError("cannot relabel an empty store")
    r = store.n_states
    ref = int(np.argmax(store.log_posteriors))
    q_ref, omega_ref = store.q[ref], store.omega[ref]
    perms = list(itertools.permutations(range(r)))
    qs = store.q.copy()
    omegas = store.omega.copy()
    relab = np.empty((len(store), r), dtype=np.int64)
    for d in range(len(store)):
        best, best_tau = np.inf, None
        for tau in perms:
            dist = _perm_distance(store.q[d], store.omega[d], list(tau), q_ref, omega_ref)
            if dist < best:
                best, best_tau = dist, list(tau)
        relab[d] = best_tau
        qs[d] = store.q[d][np.ix_(best_tau, best_tau)]
        omegas[d] = store.omega[d][:, best_tau]
    meta = dict(store.meta)
    meta["relabel_reference_index"] = ref
    return replace(store, q=qs, omega=omegas, relabeling=relab, meta=meta)


def summarize(store: DrawStore, alpha: float = 0.1):
    """Posterior mean of Q and per-entry equal-tailed (1 - alpha) intervals."""
    if len(store) == 0:
        raise ValueError("empty store")
    mean = store.q.mean(axis=0)
    lo = np.quantile(store.q, alpha / 2.0, axis=0)
    hi = np.quantile(store.q, 1.0 - alpha / 2.0, axis=0)
    return mean, (lo, hi)


def bin_tuning_heuristic(stores: dict, reference_kappa: int = 4, alphas=(0.05, 0.1)) -> int:
    """Largest bin count whose credible sets still comfortably cover the
    reference posterior mean.

    ``stores`` maps bin count to DrawStore. The posterior mean at the
    reference bin count is the low-bias anchor; a bin count passes when
    that anchor sits strictly inside the central (1 - 2 alpha) interval of
    every Q entry, for every alpha. Rejection is monotone: the first
    failing refinement stops the search.
    """
    if len(stores) < 2:
        raise InsufficientStores("bin tuning needs stores for at least two bin counts")
    if reference_kappa not in stores:
        raise ValueError(f"reference store kappa={reference_kappa} not supplied")
    q0 = stores[reference_kappa].q.mean(axis=0)
    recommended = reference_kappa
    for kappa in sorted(k for k in stores if k > reference_kappa):
        ok = True
        for alpha in alphas:
            lo = np.quantile(stores[kappa].q, alpha, axis=0)
            hi = np.quantile(stores[kappa].q, 1.0 - alpha, axis=0)
            if not (np.all(q0 > lo) and np.all(q0 < hi)):
                ok = False
                break
        if not ok:
            break
        recommended = kappa
    return recommended
