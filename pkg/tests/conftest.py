"""Shared fixtures and independent oracles.

The enumeration oracle computes HMM quantities by explicit summation over
all R^n latent paths; it is deliberately independent of the package's
recursive implementations.
"""

import itertools

import numpy as np
import pytest

from cuthmm import hmm

Q_STAR = np.array([[0.7, 0.3], [0.2, 0.8]])
P_STAR = np.array([0.4, 0.6])
TRUE_MEANS = (-1.0, 1.0)
TRUE_SDS = (1.0, 1.0)


def normal_samplers():
    return [
        (lambda rng: rng.normal(TRUE_MEANS[0], TRUE_SDS[0])),
        (lambda rng: rng.normal(TRUE_MEANS[1], TRUE_SDS[1])),
    ]


def true_log_density_table(y):
    from scipy.stats import norm

    return np.column_stack(
        [norm(loc=m, scale=s).logpdf(y) for m, s in zip(TRUE_MEANS, TRUE_SDS)]
    )


def true_density_values(grid):
    from scipy.stats import norm

    return np.stack([norm(loc=m, scale=s).pdf(grid) for m, s in zip(TRUE_MEANS, TRUE_SDS)])


def enum_path_probabilities(q, p0, log_emissions):
    """Joint probabilities P(path, Y) for every latent path, by enumeration."""
    e = np.exp(log_emissions)
    n, r = e.shape
    paths = list(itertools.product(range(r), repeat=n))
    probs = np.empty(len(paths))
    for k, path in enumerate(paths):
        p = p0[path[0]] * e[0, path[0]]
        for t in range(1, n):
            p *= q[path[t - 1], path[t]] * e[t, path[t]]
        probs[k] = p
    return paths, probs


def enum_loglik(q, p0, log_emissions) -> float:
    _, probs = enum_path_probabilities(q, p0, log_emissions)
    return float(np.log(probs.sum()))


def enum_smoothing(q, p0, log_emissions) -> np.ndarray:
    paths, probs = enum_path_probabilities(q, p0, log_emissions)
    n, r = log_emissions.shape
    out = np.zeros((n, r))
    for path, p in zip(paths, probs):
        for t, state in enumerate(path):
            out[t, state] += p
    return out / probs.sum()


def random_instance(rng, n_max=8, r_max=3):
    """A random (Q, p0, log-emission table) triple for oracle comparisons."""
    n = int(rng.integers(1, n_max + 1))
    r = int(rng.integers(1, r_max + 1))
    q = rng.dirichlet(np.ones(r) * rng.uniform(0.5, 3.0), size=r)
    p0 = rng.dirichlet(np.ones(r))
    log_e = rng.normal(scale=rng.uniform(0.3, 2.0), size=(n, r))
    return q, p0, log_e


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)


@pytest.fixture(scope="session")
def sim_10k():
    """One simulated dataset of the reference size; prefixes give smaller n."""
    rng = np.random.default_rng(777)
    x, y = hmm.simulate_hmm(Q_STAR, normal_samplers(), 10000, rng)
    return x, y
