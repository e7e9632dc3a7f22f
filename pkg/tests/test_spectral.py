import itertools

import numpy as np
import pytest
from scipy.stats import norm

from cuthmm import hmm, partition as pt, spectral as sp
from cuthmm.exceptions import RankDeficient, SingularMoment, SingularOmega, TooShort
from conftest import Q_STAR, P_STAR, normal_samplers


def reference_omega(m_level=3):
    """True per-state bin probabilities of the reference emissions (kappa x R)."""
    part = pt.build_partition(pt.TransformG0(), m_level)
    probs = pt.emission_probability_matrix(part, [norm(loc=-1.0).cdf, norm(loc=1.0).cdf])
    return probs.T  # columns per state


def best_alignment_error(candidate, target):
    """Min over label permutations of the max-abs entry error for a (Q, Omega) pair."""
    q_c, om_c = candidate
    q_t, om_t = target
    best = np.inf
    for tau in itertools.permutations(range(q_t.shape[0])):
        tau = list(tau)
        err = max(
            np.max(np.abs(q_c[np.ix_(tau, tau)] - q_t)),
            np.max(np.abs(om_c[:, tau] - om_t)),
        )
        best = min(best, err)
    return best


class TestEmpiricalTensors:
    def test_constant_series(self):
        t = sp.empirical_tensors(np.zeros(5, dtype=int), 3)
        e1 = np.zeros((3, 3))
        e1[0, 0] = 1.0
        assert np.array_equal(t.e12, e1)
        assert t.e123[0, 0, 0] == 1.0 and t.e123.sum() == 1.0

    def test_too_short(self):
        with pytest.raises(TooShort):
            sp.empirical_tensors(np.array([0, 1]), 2)

    def test_alternating_series(self):
        bins = np.tile([0, 1], 10)[:-1]  # n = 19, n - 1 = 18 transitions
        t = sp.empirical_tensors(bins, 2)
        assert t.e12[0, 1] == pytest.approx(0.5)
        assert t.e12[1, 0] == pytest.approx(0.5)
        assert t.e12[0, 0] == 0.0

    def test_total_mass(self, rng):
        bins = rng.integers(0, 4, size=200)
        t = sp.empirical_tensors(bins, 4)
        assert t.e12.sum() == pytest.approx(1.0, abs=1e-12)
        assert t.e13.sum() == pytest.approx(1.0, abs=1e-12)
        assert t.e123.sum() == pytest.approx(1.0, abs=1e-12)

    def test_population_limit(self):
        rng = np.random.default_rng(101)
        omega = reference_omega(2)
        part = pt.build_partition(pt.TransformG0(), 2)
        x, y = hmm.simulate_hmm(Q_STAR, normal_samplers(), 1_000_000, rng)
        bins = pt.coarsen(part, y)
        emp = sp.empirical_tensors(bins, 4)
        pop = sp.population_tensors(Q_STAR, omega)
        assert np.max(np.abs(emp.e12 - pop.e12)) < 5e-3
        assert np.max(np.abs(emp.e13 - pop.e13)) < 5e-3
        assert np.max(np.abs(emp.e123 - pop.e123)) < 5e-3


class TestPopulationTensors:
    def test_mass_and_marginals(self):
        omega = reference_omega()
        pop = sp.population_tensors(Q_STAR, omega)
        assert pop.e12.sum() == pytest.approx(1.0, abs=1e-12)
        assert pop.e123.sum() == pytest.approx(1.0, abs=1e-12)
        # marginal of the pair tensor is the stationary bin law
        bin_law = omega @ P_STAR
        assert np.allclose(pop.e12.sum(axis=1), bin_law, atol=1e-12)
        assert np.allclose(pop.e12.sum(axis=0), bin_law, atol=1e-12)

    def test_pair_stationarity(self):
        # E[Y2 (x) Y3] equals E[Y1 (x) Y2]: the symmetrisation transposes rely on it
        omega = reference_omega()
        pop = sp.population_tensors(Q_STAR, omega)
        e23 = pop.e123.sum(axis=0)
        assert np.max(np.abs(e23 - pop.e12)) < 1e-12


class TestSymmetrize:
    @pytest.mark.parametrize("view", [3, 2])
    def test_population_symmetry(self, view):
        omega = reference_omega()
        pop = sp.population_tensors(Q_STAR, omega)
        e12c, e123c = sp.symmetrize(pop, pop, 2, view=view)
        # exact symmetric decompositions sum_i p_i mu_i^{(x)k}
        mu = omega @ Q_STAR.T if view == 3 else omega
        expected2 = np.einsum("i,ai,bi->ab", P_STAR, mu, mu)
        expected3 = np.einsum("i,ai,bi,ci->abc", P_STAR, mu, mu, mu)
        assert np.max(np.abs(e12c - expected2)) < 1e-10
        assert np.max(np.abs(e123c - expected3)) < 1e-10
        assert np.max(np.abs(e12c - e12c.T)) < 1e-12

    def test_single_state_transforms_trivial(self):
        pop = sp.population_tensors(np.array([[1.0]]), np.array([[0.3], [0.7]]))
        e12c, e123c = sp.symmetrize(pop, pop, 1, view=3)
        assert e12c.shape == (2, 2)
        assert np.max(np.abs(e123c - pop.e123)) < 1e-10

    def test_singular_transition_raises(self):
        q = np.array([[0.5, 0.5], [0.5, 0.5]])  # rank-1 chain, singular pair moment
        omega = reference_omega()
        pop = sp.population_tensors(q, omega)
        with pytest.raises(SingularMoment):
            sp.symmetrize(pop, pop, 2, view=3)


class TestWhiten:
    def test_identity_pair_moment(self, rng):
        e123 = rng.normal(size=(2, 2, 2))
        wt = sp.whiten(np.eye(2), e123, 2)
        assert np.allclose(np.abs(wt.w), np.eye(2), atol=1e-12)
        assert np.max(np.abs(np.abs(wt.t) - np.abs(e123))) < 1e-12

    def test_population_whitening_identity(self):
        omega = reference_omega()
        pop = sp.population_tensors(Q_STAR, omega)
        e12c, e123c = sp.symmetrize(pop, pop, 2, view=3)
        wt = sp.whiten(e12c, e123c, 2)
        assert np.max(np.abs(wt.w.T @ e12c @ wt.w - np.eye(2))) < 1e-10

    def test_dewhitening_round_trip(self):
        omega = reference_omega()
        pop = sp.population_tensors(Q_STAR, omega)
        e12c, e123c = sp.symmetrize(pop, pop, 2, view=3)
        wt = sp.whiten(e12c, e123c, 2)
        mu = omega @ Q_STAR.T
        for i in range(2):
            mu_w = np.sqrt(P_STAR[i]) * wt.w.T @ mu[:, i]
            back = (wt.w @ np.linalg.inv(wt.w.T @ wt.w)) @ mu_w / np.sqrt(P_STAR[i])
            assert np.max(np.abs(back - mu[:, i])) < 1e-8

    def test_rank_deficient(self, rng):
        with pytest.raises(RankDeficient):
            sp.whiten(np.outer([1, 0], [1, 0]), rng.normal(size=(2, 2, 2)), 2)


class TestTensorPowerMethod:
    def test_exact_orthogonal_decomposition(self):
        t = np.zeros((2, 2, 2))
        t[0, 0, 0] = 2.0
        t[1, 1, 1] = 1.0
        wt = sp.WhitenedTensor(t=t, w=np.eye(2), singular_values=np.ones(2))
        lams, vecs, resid = sp.tensor_power_method(wt, 2, rng=np.random.default_rng(0))
        assert lams[0] == pytest.approx(2.0, abs=1e-10)
        assert lams[1] == pytest.approx(1.0, abs=1e-10)
        assert np.max(np.abs(np.abs(vecs) - np.eye(2))) < 1e-10
        assert resid < 1e-8

    def test_permutation_invariance_of_recovered_set(self):
        t = np.zeros((2, 2, 2))
        t[0, 0, 0] = 2.0
        t[1, 1, 1] = 1.0
        perm = t[::-1][:, ::-1][:, :, ::-1]  # relabeled construction
        wt = sp.WhitenedTensor(t=perm, w=np.eye(2), singular_values=np.ones(2))
        lams, vecs, _ = sp.tensor_power_method(wt, 2, rng=np.random.default_rng(0))
        assert lams[0] == pytest.approx(2.0, abs=1e-10)
        assert abs(vecs[1, 0]) == pytest.approx(1.0, abs=1e-10)

    def test_reference_eigenvalues_from_population(self):
        # eigenvalues are 1/sqrt(p_i) for the stationary law (0.4, 0.6)
        omega = reference_omega()
        pop = sp.population_tensors(Q_STAR, omega)
        e12c, e123c = sp.symmetrize(pop, pop, 2, view=3)
        wt = sp.whiten(e12c, e123c, 2)
        lams, _, _ = sp.tensor_power_method(wt, 2, rng=np.random.default_rng(1))
        assert lams[0] == pytest.approx(0.4 ** -0.5, abs=1e-6)
        assert lams[1] == pytest.approx(0.6 ** -0.5, abs=1e-6)


class TestRecovery:
    def test_population_pipeline_recovers_truth(self):
        omega = reference_omega()
        pop = sp.population_tensors(Q_STAR, omega)
        est = sp.spectral_estimate_from_tensors(pop, pop, 8, 2, (Q_STAR, omega), seed=0)
        assert best_alignment_error((est.q_hat, est.omega_hat), (Q_STAR, omega)) < 1e-6

    def test_reference_equal_truth_gives_alignment_permutation(self):
        omega = reference_omega()
        pop = sp.population_tensors(Q_STAR, omega)
        est = sp.spectral_estimate_from_tensors(pop, pop, 8, 2, (Q_STAR, omega), seed=0)
        # with the truth as reference, the fixed labels match the truth directly
        assert np.max(np.abs(est.q_hat - Q_STAR)) < 1e-6
        assert np.max(np.abs(est.omega_hat - omega)) < 1e-6

    def test_singular_omega_raises(self):
        lams = np.array([1.0, 1.0])
        vecs = np.array([[1.0, 1.0], [0.0, 0.0]])  # identical columns after dewhitening
        eig = (lams, vecs)
        ref = (Q_STAR, reference_omega(1))
        with pytest.raises(SingularOmega):
            sp.recover_parameters(eig, np.eye(2), eig, np.eye(2), ref)

    def test_simulated_estimate_reasonable(self):
        rng = np.random.default_rng(7)
        part = pt.build_partition(pt.TransformG0(), 3)
        omega = reference_omega()
        for seed in range(3):
            x, y = hmm.simulate_hmm(Q_STAR, normal_samplers(), 10_000, np.random.default_rng(seed))
            bins = pt.coarsen(part, y)
            est = sp.spectral_estimate(bins, 8, 2, (Q_STAR, omega), seed=seed)
            assert np.max(np.abs(est.q_hat - Q_STAR)) < 0.2
            assert np.max(np.abs(est.q_hat.sum(axis=1) - 1.0)) < 1e-12

    def test_deflation_residual_small_on_population(self):
        omega = reference_omega()
        pop = sp.population_tensors(Q_STAR, omega)
        est = sp.spectral_estimate_from_tensors(pop, pop, 8, 2, (Q_STAR, omega), seed=0)
        assert est.diagnostics["deflation_residual"][3] < 1e-8
        assert est.diagnostics["deflation_residual"][2] < 1e-8
