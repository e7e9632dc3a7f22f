import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from cuthmm import hmm
from cuthmm.exceptions import NonErgodic, ZeroLikelihood
from conftest import (
    Q_STAR,
    P_STAR,
    enum_loglik,
    enum_path_probabilities,
    enum_smoothing,
    normal_samplers,
    random_instance,
)


class TestStationaryDistribution:
    def test_reference_two_state(self):
        p = hmm.stationary_distribution(Q_STAR)
        assert np.allclose(p, P_STAR, atol=1e-10)
        assert abs(p.sum() - 1.0) < 1e-12

    def test_single_state(self):
        assert np.allclose(hmm.stationary_distribution([[1.0]]), [1.0])

    def test_symmetric(self):
        p = hmm.stationary_distribution([[0.5, 0.5], [0.5, 0.5]])
        assert np.allclose(p, [0.5, 0.5], atol=1e-12)

    def test_fixed_point_property(self, rng):
        for _ in range(25):
            r = int(rng.integers(2, 5))
            q = rng.dirichlet(np.ones(r), size=r)
            p = hmm.stationary_distribution(q)
            assert np.max(np.abs(p @ q - p)) < 1e-10

    def test_absorbing_raises(self):
        with pytest.raises(NonErgodic):
            hmm.stationary_distribution(np.eye(2))

    def test_transient_state_still_unique(self):
        # one absorbing and one transient state: the solution is unique, so
        # the guard only fires when the linear system is genuinely singular
        q = np.array([[1.0, 0.0], [0.5, 0.5]])
        assert np.allclose(hmm.stationary_distribution(q), [1.0, 0.0], atol=1e-10)

    def test_invalid_rows_rejected(self):
        with pytest.raises(ValueError):
            hmm.stationary_distribution([[0.6, 0.3], [0.2, 0.8]])


class TestForwardFilter:
    def test_unit_density_single_state(self):
        res = hmm.forward_filter([[1.0]], [1.0], np.zeros((1, 1)))
        assert res.log_likelihood == pytest.approx(0.0, abs=1e-14)

    def test_all_ones_table(self):
        # densities identically 1 leave only the chain, whose mass sums to 1
        res = hmm.forward_filter(Q_STAR, P_STAR, np.zeros((3, 2)))
        assert res.log_likelihood == pytest.approx(0.0, abs=1e-12)

    def test_matches_enumeration(self, rng):
        for _ in range(40):
            q, p0, log_e = random_instance(rng)
            res = hmm.forward_filter(q, p0, log_e)
            assert res.log_likelihood == pytest.approx(enum_loglik(q, p0, log_e), abs=1e-10)

    def test_filtered_rows_are_distributions(self, rng):
        q, p0, log_e = random_instance(rng, n_max=30)
        res = hmm.forward_filter(q, p0, log_e)
        assert np.all(res.filtered >= 0)
        assert np.max(np.abs(res.filtered.sum(axis=1) - 1.0)) < 1e-10

    def test_loglik_is_sum_of_normalisers(self, rng):
        q, p0, log_e = random_instance(rng)
        res = hmm.forward_filter(q, p0, log_e)
        assert res.log_likelihood == pytest.approx(res.log_norm_constants.sum(), abs=1e-12)

    def test_relabeling_invariance(self, rng):
        q, p0, log_e = random_instance(rng, n_max=6, r_max=3)
        r = q.shape[0]
        perm = rng.permutation(r)
        ll = hmm.forward_filter(q, p0, log_e).log_likelihood
        ll_perm = hmm.forward_filter(q[np.ix_(perm, perm)], p0[perm], log_e[:, perm]).log_likelihood
        assert ll_perm == pytest.approx(ll, abs=1e-10)

    @given(c=st.floats(min_value=1e-6, max_value=1e6), t=st.integers(min_value=0, max_value=4))
    @settings(max_examples=30, deadline=None)
    def test_scale_stability(self, c, t):
        rng = np.random.default_rng(5)
        q, p0, log_e = random_instance(rng, n_max=5, r_max=2)
        n = log_e.shape[0]
        t = t % n
        shifted = log_e.copy()
        shifted[t] += np.log(c)
        base = hmm.forward_filter(q, p0, log_e)
        res = hmm.forward_filter(q, p0, shifted)
        assert res.log_likelihood - base.log_likelihood == pytest.approx(np.log(c), abs=1e-10)
        sm_base = hmm.smoothing_probabilities(q, p0, log_e)
        sm = hmm.smoothing_probabilities(q, p0, shifted)
        assert np.max(np.abs(sm - sm_base)) < 1e-10

    def test_zero_likelihood_raises(self):
        log_e = np.zeros((3, 2))
        log_e[1] = -np.inf
        with pytest.raises(ZeroLikelihood) as err:
            hmm.forward_filter(Q_STAR, P_STAR, log_e)
        assert err.value.t == 1


class TestSmoothing:
    def test_single_state(self):
        sm = hmm.smoothing_probabilities([[1.0]], [1.0], np.zeros((4, 1)))
        assert np.allclose(sm, 1.0)

    def test_matches_enumeration(self, rng):
        for _ in range(40):
            q, p0, log_e = random_instance(rng)
            sm = hmm.smoothing_probabilities(q, p0, log_e)
            assert np.max(np.abs(sm - enum_smoothing(q, p0, log_e))) < 1e-10

    def test_identical_emissions_reduce_to_chain_marginals(self):
        # emissions cancel; smoothing rows equal the chain-state marginals
        n = 6
        log_e = np.tile(np.linspace(-1, 1, n)[:, None], (1, 2))
        sm = hmm.smoothing_probabilities(Q_STAR, np.array([0.3, 0.7]), log_e)
        marginal = np.array([0.3, 0.7])
        for t in range(n):
            assert np.max(np.abs(sm[t] - marginal)) < 1e-10
            marginal = marginal @ Q_STAR

    def test_rows_are_distributions(self, rng):
        q, p0, log_e = random_instance(rng, n_max=40)
        sm = hmm.smoothing_probabilities(q, p0, log_e)
        assert np.all(sm >= 0)
        assert np.max(np.abs(sm.sum(axis=1) - 1.0)) < 1e-10


class TestSampleLatentPath:
    def test_single_state_deterministic(self, rng):
        path = hmm.sample_latent_path([[1.0]], [1.0], np.zeros((5, 1)), rng)
        assert np.all(path == 0)

    def test_absorbing_chain_constant_path(self, rng):
        # identity transitions forbid any switch, whatever the emissions say
        log_e = rng.normal(size=(6, 2))
        path = hmm.sample_latent_path(np.eye(2), np.array([0.5, 0.5]), log_e, rng)
        assert np.all(path == path[0])

    def test_calibration_smoke(self, rng):
        # full chi-square calibration is acceptance criterion 3
        q, p0, log_e = Q_STAR, P_STAR, rng.normal(size=(4, 2))
        paths, probs = enum_path_probabilities(q, p0, log_e)
        probs = probs / probs.sum()
        counts = {p: 0 for p in paths}
        ndraws = 20000
        for _ in range(ndraws):
            counts[tuple(hmm.sample_latent_path(q, p0, log_e, rng))] += 1
        observed = np.array([counts[p] for p in paths])
        res = chisquare(observed, probs * ndraws)
        assert res.pvalue > 0.01


class TestSimulate:
    def test_reference_setup_state_frequency(self):
        rng = np.random.default_rng(20240901)
        x, y = hmm.simulate_hmm(Q_STAR, normal_samplers(), 10000, rng)
        # threshold 3 * sqrt(p(1-p)/n) * tau_mix with tau_mix = 1/(1-lambda_2) = 2
        tol = 3.0 * np.sqrt(0.4 * 0.6 / 10000) * 2.0
        assert abs((x == 0).mean() - 0.4) < tol
        assert len(y) == 10000

    def test_single_draw(self, rng):
        x, y = hmm.simulate_hmm(Q_STAR, normal_samplers(), 1, rng)
        assert x.shape == (1,) and y.shape == (1,)

    def test_point_mass_emissions_reveal_path(self, rng):
        samplers = [lambda _: 0.0, lambda _: 1.0]
        x, y = hmm.simulate_hmm(Q_STAR, samplers, 200, rng)
        assert np.array_equal(y.astype(int), x)

    def test_nonergodic_propagates(self, rng):
        with pytest.raises(NonErgodic):
            hmm.simulate_hmm(np.eye(2), normal_samplers(), 5, rng)
