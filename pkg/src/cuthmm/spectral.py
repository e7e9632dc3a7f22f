"""Spectral method-of-moments estimator for multinomial HMMs.

Pipeline: empirical pair/triple moment tensors of the one-hot coarsened
series, split-sample symmetrisation (transform matrices estimated on the
first half, symmetrised tensors accumulated on the second), whitening by
the top-R SVD of the symmetric pair moment, orthogonal tensor
decomposition by the power method with deflation, de-whitening, and a
label fix against a consistent reference estimate.

Symmetrising about the third view produces the columns of ``Omega Q^T``
(the law of Y_3 given X_2); symmetrising about the second view produces
the columns of ``Omega`` itself, and the transition matrix follows by a
linear solve. The bin count kappa may exceed R; all inversions are
rank-R through the SVD.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .exceptions import NonConvergence, RankDeficient, SingularMoment, SingularOmega, TooShort
from .hmm import check_transition_matrix, stationary_distribution


@dataclass
class MomentTensors:
    """Pair and triple moments of one-hot consecutive observations."""

    e12: np.ndarray   # (kappa, kappa), E[Y_t (x) Y_{t+1}]
    e13: np.ndarray   # (kappa, kappa), E[Y_t (x) Y_{t+2}]
    e123: np.ndarray  # (kappa, kappa, kappa), E[Y_t (x) Y_{t+1} (x) Y_{t+2}]


@dataclass
class WhitenedTensor:
    t: np.ndarray  # (R, R, R) whitened triple moment
    w: np.ndarray  # (kappa, R) whitening matrix with W^T E12 W = I
    singular_values: np.ndarray


@dataclass
class SpectralEstimate:
    q_hat: np.ndarray
    omega_hat: np.ndarray
    permutation: dict
    diagnostics: dict = field(default_factory=dict)


def empirical_tensors(bins, kappa: int) -> MomentTensors:
    """Sliding-window moment estimates from a coarsened series (0-based bins)."""
    bins = np.asarray(bins)
    n = len(bins)
    if n < 3:
        raise TooShort("moment tensors need at least three observations")
    e12 = np.bincount(bins[:-1] * kappa + bins[1:], minlength=kappa * kappa)
    e12 = e12.reshape(kappa, kappa) / (n - 1)
    e13 = np.bincount(bins[:-2] * kappa + bins[2:], minlength=kappa * kappa)
    e13 = e13.reshape(kappa, kappa) / (n - 2)
    flat = (bins[:-2] * kappa + bins[1:-1]) * kappa + bins[2:]
    e123 = np.bincount(flat, minlength=kappa**3).reshape(kappa, kappa, kappa) / (n - 2)
    return MomentTensors(e12=e12, e13=e13, e123=e123)


def population_tensors(q, omega) -> MomentTensors:
    """Exact moment tensors from (Q, Omega), summing over the hidden states."""
    q = check_transition_matrix(q)
    omega = np.asarray(omega, dtype=float)
    p = stationary_distribution(q)
    # joint laws of 2 and 3 consecutive hidden states
    p2 = p[:, None] * q
    p3 = p2[:, :, None] * q[None, :, :]
    e12 = np.einsum("ij,ai,bj->ab", p2, omega, omega)
    e13 = np.einsum("ijk,ai,bk->ab", p3, omega, omega)
    e123 = np.einsum("ijk,ai,bj,ck->abc", p3, omega, omega, omega)
    return MomentTensors(e12=e12, e13=e13, e123=e123)


def _rank_r_pinv(mat, r, what):
    u, s, vt = np.linalg.svd(mat)
    if s[r - 1] <= 1e-8 * s[0]:
        raise SingularMoment(f"{what} is numerically singular at rank {r} (condition > 1e8)")
    return vt[:r].T @ np.diag(1.0 / s[:r]) @ u[:, :r].T


def _multilinear(t, a, b, c):
    """[t(a, b, c)]_{ijk} = sum_{rst} t[r, s, t] a[r, i] b[s, j] c[t, k]."""
    return np.einsum("rst,ri,sj,tk->ijk", t, a, b, c)


def symmetrize(first: MomentTensors, second: MomentTensors, r: int, view: int = 3):
    """Symmetrised pair and triple tensors about the given view (3 or 2).

    The de-biasing transforms are estimated from ``first`` and applied to
    the tensors accumulated on ``second``; passing the same population
    tensors twice gives the exact symmetric moments. By stationarity the
    required cross moments are transposes of E12 and E13.

    Returns (e12_check, e123_check).
    """
    if view == 3:
        # A maps view-1 conditional means onto view-3 ones, B maps view-2 ones
        a = first.e12.T @ _rank_r_pinv(first.e12, r, "first-half E12")
        b = first.e13.T @ _rank_r_pinv(first.e12.T, r, "first-half E21")
        e12_check = a @ second.e12 @ b.T
        e123_check = _multilinear(second.e123, a.T, b.T, np.eye(a.shape[0]))
    elif view == 2:
        a = first.e12 @ _rank_r_pinv(first.e13, r, "first-half E13")
        b = first.e12.T @ _rank_r_pinv(first.e13.T, r, "first-half E31")
        e12_check = a @ second.e13 @ b.T
        e123_check = _multilinear(np.transpose(second.e123, (0, 2, 1)), a.T, b.T, np.eye(a.shape[0]))
    else:
        raise ValueError("view must be 2 or 3")
    return e12_check, e123_check


def whiten(e12_check, e123_check, r: int) -> WhitenedTensor:
    """Whitening matrix from the top-R spectral factors, scaled so W^T E12 W = I.

    The symmetrised pair moment is PSD in population, so its SVD is the
    eigendecomposition; using the latter keeps the whitening identity
    exact even when sampling noise pushes trailing eigenvalues negative.
    """
    sym = 0.5 * (e12_check + e12_check.T)
    evals, evecs = np.linalg.eigh(sym)
    order = np.argsort(-evals)
    s = evals[order]
    u = evecs[:, order]
    if s[r - 1] <= 1e-8 * abs(s[0]):
        raise RankDeficient(f"pair moment has sigma_{r}/sigma_1 below 1e-8")
    w = u[:, :r] / np.sqrt(s[:r])[None, :]
    t = _multilinear(e123_check, w, w, w)
    return WhitenedTensor(t=t, w=w, singular_values=s)


def _power_map(t, u):
    return np.einsum("ijk,j,k->i", t, u, u)


def tensor_power_method(wt: WhitenedTensor, r: int, restarts: int = 50, iterations: int = 100, rng=None):
    """Orthogonal eigendecomposition by power iterations with deflation.

    Per deflation round: ``restarts`` random unit starts, ``iterations``
    updates u <- t(I, u, u) / ||.||; the converged restart with the largest
    eigenvalue t(u, u, u) wins and its rank-one cube is deflated away.

    Returns (eigenvalues, eigenvectors) with eigenvectors in columns.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    t = wt.t.copy()
    dim = t.shape[0]
    lams = np.empty(r)
    vecs = np.empty((dim, r))
    for round_ in range(r):
        best_lam, best_u = -np.inf, None
        any_converged = False
        for _ in range(restarts):
            u = rng.standard_normal(dim)
            u /= np.linalg.norm(u)
            moved = np.inf
            for _ in range(iterations):
                nxt = _power_map(t, u)
                norm = np.linalg.norm(nxt)
                if norm == 0.0:
                    break
                nxt /= norm
                moved = np.linalg.norm(nxt - u)
                u = nxt
                if moved < 1e-14:
                    break
            if moved > 1e-6:
                continue
            any_converged = True
            lam = float(np.einsum("ijk,i,j,k->", t, u, u, u))
            if lam > best_lam:
                best_lam, best_u = lam, u
        if not any_converged:
            raise NonConvergence(f"no restart settled within 1e-6 in deflation round {round_}")
        lams[round_] = best_lam
        vecs[:, round_] = best_u
        t = t - best_lam * np.einsum("i,j,k->ijk", best_u, best_u, best_u)
    order = np.argsort(-lams)
    return lams[order], vecs[:, order], float(np.linalg.norm(t))


def _dewhiten(lams, vecs, w):
    """Columns mu_i = lambda_i * pinv(W^T) u_i, estimating conditional laws."""
    pinv_wt = w @ np.linalg.inv(w.T @ w)
    return pinv_wt @ vecs * lams[None, :]


def _best_permutation(candidate, reference):
    """Permutation of candidate columns minimising the max squared column
    distance to the reference; ties break lexicographically."""
    r = candidate.shape[1]
    best, best_tau = np.inf, None
    for tau in itertools.permutations(range(r)):
        d = candidate[:, list(tau)] - reference
        score = float(np.max(np.sum(d * d, axis=0)))
        if score < best:
            best, best_tau = score, list(tau)
    return best_tau


def _project_columns_to_simplex(mat):
    clipped = np.clip(mat, 0.0, None)
    sums = clipped.sum(axis=0, keepdims=True)
    sums[sums == 0.0] = 1.0
    return clipped / sums


def recover_parameters(eig3, w3, eig2, w2, reference) -> SpectralEstimate:
    """Assemble (Q_hat, Omega_hat) from the two symmetrisation runs.

    eig3/eig2 are (eigenvalues, eigenvectors) pairs from the third- and
    second-view runs; reference is a consistent (Q, Omega) estimate used
    only to fix the label permutations. Outputs are clipped to the
    simplex and renormalised.
    """
    q_ref = check_transition_matrix(reference[0])
    omega_ref = np.asarray(reference[1], dtype=float)
    xi3 = _dewhiten(eig3[0], eig3[1], w3)
    xi2 = _dewhiten(eig2[0], eig2[1], w2)
    tau3 = _best_permutation(xi3, omega_ref @ q_ref.T)
    tau2 = _best_permutation(xi2, omega_ref)
    omega_hat = xi2[:, tau2]
    sv = np.linalg.svd(omega_hat, compute_uv=False)
    if sv[omega_hat.shape[1] - 1] <= 1e-8 * sv[0]:
        raise SingularOmega("recovered emission matrix is singular at tolerance 1e-8")
    q_hat_t, *_ = np.linalg.lstsq(omega_hat, xi3[:, tau3], rcond=None)
    q_hat = _project_columns_to_simplex(q_hat_t).T
    omega_hat = _project_columns_to_simplex(omega_hat)
    return SpectralEstimate(
        q_hat=q_hat,
        omega_hat=omega_hat,
        permutation={"view2": tau2, "view3": tau3},
        diagnostics={"p_hat": (1.0 / eig3[0] ** 2).tolist()},
    )


def spectral_estimate(
    bins,
    kappa: int,
    r: int,
    reference,
    restarts: int = 50,
    iterations: int = 100,
    seed: int = 0,
) -> SpectralEstimate:
    """Full pipeline on a coarsened series, splitting the sample in half."""
    bins = np.asarray(bins)
    n = len(bins)
    half = -(-n // 2)  # ceil(n / 2)
    first = empirical_tensors(bins[:half], kappa)
    second = empirical_tensors(bins[half:], kappa)
    return _run_pipeline(first, second, kappa, r, reference, restarts, iterations, seed)


def spectral_estimate_from_tensors(first, second, kappa, r, reference, restarts=50, iterations=100, seed=0):
    """Pipeline entry for precomputed (e.g. population) moment tensors."""
    return _run_pipeline(first, second, kappa, r, reference, restarts, iterations, seed)


def _run_pipeline(first, second, kappa, r, reference, restarts, iterations, seed):
    rng = np.random.default_rng(seed)
    parts = {}
    resid = {}
    svals = {}
    for view in (3, 2):
        e12c, e123c = symmetrize(first, second, r, view=view)
        wt = whiten(e12c, e123c, r)
        lams, vecs, deflation = tensor_power_method(wt, r, restarts, iterations, rng)
        parts[view] = ((lams, vecs), wt.w)
        resid[view] = deflation
        svals[view] = wt.singular_values[:r].tolist()
    est = recover_parameters(parts[3][0], parts[3][1], parts[2][0], parts[2][1], reference)
    est.diagnostics.update(
        {
            "singular_values": svals,
            "deflation_residual": resid,
            "eigenvalues": {v: parts[v][0][0].tolist() for v in (3, 2)},
        }
    )
    return est
