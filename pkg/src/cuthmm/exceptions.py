"""Exception hierarchy shared across the package.

Numerical failures are distinct from configuration / artifact problems so the
CLI can map them onto distinct exit codes.
"""


class CuthmmError(Exception):
    """Base class for all package-specific errors."""


class NumericalError(CuthmmError):
    """A computation failed for numerical reasons (singularity, underflow...)."""


class NonErgodic(NumericalError):
    """Transition matrix has no unique stationary distribution."""


class ZeroLikelihood(NumericalError):
    """A forward-recursion normalisation constant underflowed to zero."""

    def __init__(self, t: int):
        self.t = t
        super().__init__(f"likelihood underflowed to zero at time index {t}")


class DomainError(CuthmmError, ValueError):
    """Argument outside the mathematical domain of the operation."""


class TooShort(CuthmmError, ValueError):
    """Series too short for the requested moment estimator."""


class SingularMoment(NumericalError):
    """First-half pair-moment matrix numerically singular."""


class RankDeficient(NumericalError):
    """Pair moment lacks the required number of significant singular values."""


class NonConvergence(NumericalError):
    """Tensor power iterations failed to settle on every restart."""


class SingularOmega(NumericalError):
    """Recovered emission matrix not invertible at tolerance."""


class SingularInformation(NumericalError):
    """Observed information matrix not invertible at tolerance."""


class InsufficientStores(CuthmmError, ValueError):
    """Bin-count tuning needs draw stores for at least two bin counts."""


class ConfigError(CuthmmError):
    """Invalid or unusable experiment configuration."""


class MissingArtifact(CuthmmError):
    """A subcommand's required input artifact does not exist."""

    def __init__(self, path):
        self.path = str(path)
        super().__init__(f"required artifact not found: {self.path}")
