"""Cut-posterior Bayesian inference for finite-state HMMs with nonparametric emissions.

Submodules
----------
hmm              exact filtering, smoothing, path sampling and simulation
partition        dyadic partitions of the real line via a monotone transform
histogram_gibbs  Gibbs sampler for Q under the histogram emission prior
dpm_cut          nested-MCMC Dirichlet-process-mixture sampler for the emissions
spectral         moment-tensor estimator of (Q, Omega) on coarsened data
diagnostics      EM MLE, observed information and asymptotic-theory checks
cli              config-driven pipeline entry points
"""

from . import diagnostics, dpm_cut, histogram_gibbs, hmm, partition, spectral
from .exceptions import (
    ConfigError,
    CuthmmError,
    DomainError,
    InsufficientStores,
    MissingArtifact,
    NonConvergence,
    NonErgodic,
    NumericalError,
    RankDeficient,
    SingularInformation,
    SingularMoment,
    SingularOmega,
    TooShort,
    ZeroLikelihood,
)

__version__ = "0.1.0"

__all__ = [
    "hmm",
    "partition",
    "histogram_gibbs",
    "dpm_cut",
    "spectral",
    "diagnostics",
    "CuthmmError",
    "NumericalError",
    "NonErgodic",
    "ZeroLikelihood",
    "DomainError",
    "TooShort",
    "SingularMoment",
    "RankDeficient",
    "NonConvergence",
    "SingularOmega",
    "SingularInformation",
    "InsufficientStores",
    "ConfigError",
    "MissingArtifact",
    "__version__",
]
