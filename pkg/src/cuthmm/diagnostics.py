"""Desk-scale numerical checks of the asymptotic theory.

Contains the EM maximum-likelihood fit of the coarsened multinomial HMM,
a central-difference observed-information estimate over the free
coordinates, the Bernstein-von Mises comparison of posterior draws
against the normal limit, Fisher-monotonicity across partition
refinements, and L1 / total-variation error measures for emission
densities and smoothing probabilities.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import _kernels
from .exceptions import SingularInformation, ZeroLikelihood
from .hmm import check_transition_matrix, smoothing_probabilities, stationary_distribution


@dataclass
class MleResult:
    q_hat: np.ndarray
    omega_hat: np.ndarray
    log_likelihood: float
    iterations: int
    converged: bool
    history: np.ndarray = None  # per-iteration log-likelihoods


@dataclass
class FisherEstimate:
    """Observed information over the free coordinates.

    The free parameters are the first R-1 entries of each Q row followed
    by kappa-1 entries of each omega column (each column's largest cell is
    the dependent one, a chart choice that leaves the Q-marginal
    invariant). j_tilde_inv is the [Q, Q] block of the inverse, the
    asymptotic covariance of sqrt(n) (Q - Q_hat) predicted for the
    posterior. Coordinates whose MLE sits on the simplex boundary are
    excluded (their marginal contribution vanishes in the limit) and
    recorded in ``dropped``.
    """

    j: np.ndarray
    j_tilde_inv: np.ndarray
    step: float
    raw_asymmetry: float = 0.0  # max-norm asymmetry of the FD Hessian before symmetrising
    dropped: list = field(default_factory=list)


def _multinomial_loglik(bins, q, omega, init="stationary"):
    r = q.shape[0]
    with np.errstate(divide="ignore"):
        log_b = np.log(omega)[bins, :]
    p0 = stationary_distribution(q) if init == "stationary" else np.full(r, 1.0 / r)
    _, lognorm, _, _, bad_t = _kernels.forward_dense(log_b, q, p0)
    if bad_t >= 0:
        raise ZeroLikelihood(bad_t)
    return float(lognorm.sum())


def em_step(bins, q, omega, kappa: int, init="stationary"):
    """One EM update from expected counts; returns (q, omega, loglik at input)."""
    r = q.shape[0]
    bins = np.asarray(bins)
    with np.errstate(divide="ignore"):
        log_b = np.log(omega)[bins, :]
    p0 = stationary_distribution(q) if init == "stationary" else np.full(r, 1.0 / r)
    filtered, lognorm, cbar, mshift, bad_t = _kernels.forward_dense(log_b, q, p0)
    if bad_t >= 0:
        raise ZeroLikelihood(bad_t)
    xi_sum, gamma = _kernels.pairwise_counts_dense(log_b, q, filtered, cbar, mshift)
    emit = np.stack(
        [np.bincount(bins, weights=gamma[:, state], minlength=kappa) for state in range(r)], axis=1
    )
    return m_step(xi_sum, emit), float(lognorm.sum())


def m_step(expected_trans, expected_emit):
    """Row/column normalisation of expected counts."""
    q = expected_trans / expected_trans.sum(axis=1, keepdims=True)
    omega = expected_emit / expected_emit.sum(axis=0, keepdims=True)
    return q, omega


def default_init(bins, r: int, kappa: int):
    """Deterministic quantile-split start for EM."""
    bins = np.asarray(bins)
    thresholds = np.quantile(bins, np.arange(1, r) / r)
    groups = np.searchsorted(thresholds, bins, side="right")
    omega = np.stack(
        [np.bincount(bins[groups == g], minlength=kappa) + 1.0 for g in range(r)], axis=1
    )
    omega /= omega.sum(axis=0, keepdims=True)
    q = np.full((r, r), 1.0 / r) + 0.2 * np.eye(r)
    q /= q.sum(axis=1, keepdims=True)
    return q, omega


def baum_welch(bins, r: int, kappa: int, init=None, tol: float = 1e-8, max_iter: int = 500,
               init_dist="stationary", restarts: int = 1, seed: int = 0) -> MleResult:
    """EM fit of (Q, omega) for the coarsened multinomial HMM.

    Stops when the log-likelihood gain drops below tol. Should an update
    ever lower the likelihood (possible only at convergence, because the
    stationary initial term is not part of the M-step) the update is
    discarded, so the recorded history is monotone by construction.
    Hitting max_iter returns the best iterate with converged=False.

    The likelihood surface has distinct local modes; restarts > 1 (only
    with init=None) adds seeded random starts and keeps the best fit.
    """
    bins = np.asarray(bins)
    if init is None and restarts > 1:
        rng = np.random.default_rng(seed)
        best = None
        for t in range(restarts):
            start = None if t == 0 else (
                rng.dirichlet(np.ones(r) * 2.0, size=r),
                rng.dirichlet(np.ones(kappa), size=r).T,
            )
            fit = baum_welch(bins, r, kappa, init=start, tol=tol, max_iter=max_iter,
                             init_dist=init_dist, restarts=1)
            if best is None or fit.log_likelihood > best.log_likelihood:
                best = fit
        return best
    if init is None:
        theta = default_init(bins, r, kappa)
    else:
        theta = (check_transition_matrix(init[0]), init[1])
    # em_step reports the log-likelihood of its *input*, so each iteration
    # costs a single forward-backward pass
    theta_next, ll = em_step(bins, theta[0], theta[1], kappa, init=init_dist)
    history = [ll]
    converged = False
    updates = 0
    for _ in range(max_iter):
        theta_next2, ll_next = em_step(bins, theta_next[0], theta_next[1], kappa, init=init_dist)
        gain = ll_next - ll
        if gain < -1e-12:
            # stationary-initial term can shave the last update; keep the
            # higher-likelihood iterate so the recorded history is monotone
            converged = True
            break
        theta, ll = theta_next, ll_next
        theta_next = theta_next2
        history.append(ll)
        updates += 1
        if gain < tol:
            converged = True
            break
    return MleResult(
        q_hat=theta[0],
        omega_hat=theta[1],
        log_likelihood=ll,
        iterations=updates,
        converged=converged,
        history=np.asarray(history),
    )


_BOUNDARY_TOL = 1e-10


def _omega_anchors(omega):
    return omega.argmax(axis=0)


def _pack_free(q, omega, anchors):
    parts = [q[:, :-1].ravel()]
    kappa = omega.shape[0]
    for col, anchor in enumerate(anchors):
        keep = [m for m in range(kappa) if m != anchor]
        parts.append(omega[keep, col])
    return np.concatenate(parts)


def _unpack_free(theta, r, kappa, anchors):
    nq = r * (r - 1)
    q_free = theta[:nq].reshape(r, r - 1)
    q = np.empty((r, r))
    q[:, :-1] = q_free
    q[:, -1] = 1.0 - q_free.sum(axis=1)
    omega = np.empty((kappa, r))
    for col, anchor in enumerate(anchors):
        block = theta[nq + col * (kappa - 1) : nq + (col + 1) * (kappa - 1)]
        keep = [m for m in range(kappa) if m != anchor]
        omega[keep, col] = block
        omega[anchor, col] = 1.0 - block.sum()
    return q, omega


def _interior_steps(theta0, step, r, kappa, anchors, q, omega):
    """Per-coordinate steps shrunk so every stencil point stays interior.

    Each free coordinate shares a simplex with its dependent (anchor)
    entry; the step must clear both. Coordinates sitting on the boundary
    itself get step 0 and are dropped by the caller.
    """
    h = np.full(theta0.shape[0], step)
    nq = r * (r - 1)
    for k in range(theta0.shape[0]):
        if k < nq:
            slack_dep = q[k // (r - 1), -1]
        else:
            col = (k - nq) // (kappa - 1)
            slack_dep = omega[anchors[col], col]
        h[k] = min(step, 0.4 * theta0[k], 0.2 * slack_dep)
    return h


def observed_information(bins, mle: MleResult, step: float = 1e-4, init_dist="stationary") -> FisherEstimate:
    """J = -(1/n) x central-difference Hessian of the log-likelihood at the MLE.

    Steps are clipped per coordinate so the stencil stays inside the
    simplex interior; emission cells estimated at the boundary (below
    1e-10) are dropped from the free set, which equals taking their
    vanishing limit in the Q-marginal. Raises SingularInformation when
    the marginal information cannot be extracted at condition 1e10.
    """
    bins = np.asarray(bins)
    n = len(bins)
    r = mle.q_hat.shape[0]
    kappa = mle.omega_hat.shape[0]
    anchors = _omega_anchors(mle.omega_hat)
    theta0 = _pack_free(mle.q_hat, mle.omega_hat, anchors)
    nq = r * (r - 1)
    if np.any(theta0[:nq] < _BOUNDARY_TOL) or np.any(mle.q_hat[:, -1] < _BOUNDARY_TOL):
        raise SingularInformation("MLE transition matrix on the simplex boundary")
    kept = [k for k in range(theta0.shape[0]) if k < nq or theta0[k] >= _BOUNDARY_TOL]
    dropped = [k for k in range(theta0.shape[0]) if k not in kept]
    d = len(kept)

    def f(theta):
        q, omega = _unpack_free(theta, r, kappa, anchors)
        # dropped cells stay at exactly zero; perturbed ones must not cross it
        if np.any(q <= 0) or np.any(omega < 0):
            raise ValueError("finite-difference step left the interior; reduce step")
        return _multinomial_loglik(bins, q, omega, init=init_dist)

    h_full = _interior_steps(theta0, step, r, kappa, anchors, mle.q_hat, mle.omega_hat)
    hess = np.empty((d, d))
    f0 = f(theta0)
    for a, i in enumerate(kept):
        ei = np.zeros(theta0.shape[0])
        ei[i] = h_full[i]
        hess[a, a] = (f(theta0 + ei) - 2.0 * f0 + f(theta0 - ei)) / h_full[i] ** 2
        for b in range(a + 1, d):
            j = kept[b]
            ej = np.zeros(theta0.shape[0])
            ej[j] = h_full[j]
            # the cross stencil is symmetric in (i, j); evaluating it once per
            # pair keeps the Hessian symmetric by construction, so the
            # asymmetry diagnostic below measures pure floating-point noise
            # of the two equivalent stencil orderings
            val = (
                f(theta0 + ei + ej) - f(theta0 + ei - ej) - f(theta0 - ei + ej) + f(theta0 - ei - ej)
            ) / (4.0 * h_full[i] * h_full[j])
            hess[a, b] = val
            hess[b, a] = val
    j_mat = -hess / n
    raw_asym = float(np.max(np.abs(j_mat - j_mat.T)) / max(np.max(np.abs(j_mat)), 1e-300))
    j_mat = 0.5 * (j_mat + j_mat.T)
    # Q-marginal block of the inverse via the Schur identity
    # (J^{-1})[Q,Q] = (J[Q,Q] - J[Q,w] J[w,w]^{-1} J[w,Q])^{-1}.
    # Near-empty bins give the omega block enormous but harmless curvature
    # (their Schur contribution vanishes), so the invertibility check lives
    # on the blocks actually inverted, not on J as a whole.
    nq = r * (r - 1)
    j_qq = j_mat[:nq, :nq]
    j_qw = j_mat[:nq, nq:]
    j_ww = j_mat[nq:, nq:]
    if not np.all(np.isfinite(j_mat)):
        raise SingularInformation("observed information contains non-finite entries")
    # PSD within FD tolerance is an invariant of a valid estimate; clearly
    # negative curvature directions mean the likelihood is flat there and
    # the stencil measured noise
    eigs = np.linalg.eigvalsh(j_mat)
    if eigs[0] < -1e-4 * max(eigs[-1], 0.0):
        raise SingularInformation("observed information is not PSD within FD tolerance")
    if j_ww.size:
        cond_ww = np.linalg.cond(j_ww)
        if not np.isfinite(cond_ww) or cond_ww > 1e14:
            raise SingularInformation(f"emission block condition number {cond_ww:.2e} is not invertible")
        schur = j_qq - j_qw @ np.linalg.solve(j_ww, j_qw.T)
    else:
        schur = j_qq
    cond_schur = np.linalg.cond(schur)
    if not np.isfinite(cond_schur) or cond_schur > 1e10:
        raise SingularInformation(f"marginal information condition number {cond_schur:.2e} exceeds 1e10")
    return FisherEstimate(j=j_mat, j_tilde_inv=np.linalg.inv(schur), step=step,
                          raw_asymmetry=raw_asym, dropped=dropped)


@dataclass
class BvmReport:
    ks_stats: dict            # shape: draws standardised by their own mean/sd
    cov_ratio: tuple
    n: int
    ks_stats_centered: dict = field(default_factory=dict)  # centred at the MLE
    entries: list = field(default_factory=list)
    standardized: dict = field(default_factory=dict)


def align_mle_to_store(mle: MleResult, store) -> MleResult:
    """Permute the MLE's state labels to match a relabeled draw store.

    EM is label-blind, so its fixed point can land on any permutation of
    the store's labelling; comparisons are only meaningful after aligning
    (squared distance of Q plus omega to the store's posterior means).
    """
    from dataclasses import replace

    r = mle.q_hat.shape[0]
    q_ref = store.q.mean(axis=0)
    omega_ref = store.omega.mean(axis=0)
    best, best_tau = np.inf, None
    for tau in itertools.permutations(range(r)):
        tau = list(tau)
        dist = float(np.sum((mle.q_hat[np.ix_(tau, tau)] - q_ref) ** 2))
        if mle.omega_hat.shape == omega_ref.shape:
            dist += float(np.sum((mle.omega_hat[:, tau] - omega_ref) ** 2))
        if dist < best:
            best, best_tau = dist, tau
    return replace(mle, q_hat=mle.q_hat[np.ix_(best_tau, best_tau)], omega_hat=mle.omega_hat[:, best_tau])


def bvm_compare(store, mle: MleResult, fisher: FisherEstimate = None) -> BvmReport:
    """Kolmogorov-Smirnov distances of standardised posterior draws to N(0, 1).

    ks_stats standardises each free Q entry by its own mean and sd, testing
    the Gaussian shape the asymptotics predict. ks_stats_centered instead
    centres at the MLE, sqrt(n)-scaled, which additionally picks up the
    finite-sample offset between the posterior centre and the MLE (driven
    by the prior on near-empty bins at desk scale). When a Fisher estimate
    is supplied, cov_ratio gives the extreme eigenvalues of
    (n Cov_posterior) J_tilde, which the asymptotic theory sends to 1.
    """
    n = store.meta.get("n")
    if n is None:
        raise ValueError("store.meta must record the sample size under 'n'")
    r = store.n_states
    ks, ks_centered, zs = {}, {}, {}
    entries = [(i, j) for i in range(r) for j in range(r - 1)]
    free = np.empty((len(store), len(entries)))
    for k, (i, j) in enumerate(entries):
        name = f"q_{i}_{j}"
        draws = np.sqrt(n) * (store.q[:, i, j] - mle.q_hat[i, j])
        free[:, k] = draws
        z_shape = (draws - draws.mean()) / draws.std(ddof=1)
        ks[name] = float(stats.kstest(z_shape, "norm").statistic)
        ks_centered[name] = float(stats.kstest(draws / draws.std(ddof=1), "norm").statistic)
        zs[name] = z_shape
    cov_ratio = (np.nan, np.nan)
    if fisher is not None:
        cov = np.cov(free.T).reshape(len(entries), len(entries))
        j_tilde = np.linalg.inv(fisher.j_tilde_inv)
        eigs = np.linalg.eigvals(cov @ j_tilde).real
        cov_ratio = (float(eigs.min()), float(eigs.max()))
    return BvmReport(ks_stats=ks, cov_ratio=cov_ratio, n=n, ks_stats_centered=ks_centered,
                     entries=[f"q_{i}_{j}" for i, j in entries], standardized=zs)


def refinement_monotonicity(stores: dict, slack: float = 0.15):
    """Posterior sds per bin count and a non-increasing flag with MC slack.

    stores maps bin count to a DrawStore on the same data; the flag is
    true when every per-entry sd at a finer partition is at most
    (1 + slack) times the sd at the coarser one.
    """
    kappas = sorted(stores)
    sds = {k: stores[k].q.std(axis=0, ddof=1) for k in kappas}
    monotone = True
    for prev, nxt in zip(kappas[:-1], kappas[1:]):
        if np.any(sds[nxt] > (1.0 + slack) * sds[prev]):
            monotone = False
            break
    return {"kappas": kappas, "sds": sds, "monotone": monotone, "slack": slack}


def l1_density_error(candidate, truth, grid):
    """Trapezoid L1 distances per state after optimal label matching.

    candidate and truth are (R, G) density evaluations on the common grid;
    the permutation minimising the total L1 distance is applied before
    reporting per-state errors.
    """
    candidate = np.asarray(candidate, dtype=float)
    truth = np.asarray(truth, dtype=float)
    grid = np.asarray(grid, dtype=float)
    r = truth.shape[0]
    best, best_errs = np.inf, None
    for tau in itertools.permutations(range(r)):
        errs = np.array([np.trapezoid(np.abs(candidate[tau[i]] - truth[i]), grid) for i in range(r)])
        tot = float(errs.sum())
        if tot < best:
            best, best_errs = tot, errs
    return best_errs


def smoothing_error(q_draws, emission_log_density_tables, y, oracle_q, oracle_log_density_table):
    """Total-variation distance between draw-wise and oracle smoothing laws.

    For each draw i, the smoothing matrix under (Q_i, f_i) is compared
    row-by-row with the oracle smoothing matrix: the TV distance at time t
    is half the absolute row difference. Returns per-draw mean/max TV and
    the error of the posterior-mean smoothing matrix.
    """
    oracle_q = check_transition_matrix(oracle_q)
    p_star = stationary_distribution(oracle_q)
    oracle = smoothing_probabilities(oracle_q, p_star, oracle_log_density_table)
    d = len(q_draws)
    mean_tv = np.empty(d)
    max_tv = np.empty(d)
    acc = np.zeros_like(oracle)
    for i in range(d):
        q = check_transition_matrix(q_draws[i])
        sm = smoothing_probabilities(q, stationary_distribution(q), emission_log_density_tables[i])
        acc += sm
        tv = 0.5 * np.abs(sm - oracle).sum(axis=1)
        mean_tv[i] = tv.mean()
        max_tv[i] = tv.max()
    post_mean = acc / d
    post_mean /= post_mean.sum(axis=1, keepdims=True)
    tv_mean_matrix = 0.5 * np.abs(post_mean - oracle).sum(axis=1)
    return {
        "per_draw_mean_tv": mean_tv,
        "per_draw_max_tv": max_tv,
        "posterior_mean_smoothing_mean_tv": float(tv_mean_matrix.mean()),
        "posterior_mean_smoothing_max_tv": float(tv_mean_matrix.max()),
    }
