"""Dyadic partitions of the real line via a monotone transform to (0, 1).

The transform maps observations into the unit interval where the partition
is the regular dyadic grid; pulling the grid back gives bins of the real
line whose first and last cells are unbounded. Bins are half-open,
``[edge_m, edge_{m+1})``, so coarsening is deterministic on boundaries.
Indices are 0-based throughout.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError

SIGMOID_LINEAR = "sigmoid-linear"
PURE_SIGMOID = "pure-sigmoid"
CUSTOM_MONOTONE = "custom-monotone"

# the linear middle piece spans |y| <= 3
_KNOT = 3.0


def _sigmoid(y):
    return 1.0 / (1.0 + np.exp(-np.asarray(y, dtype=float)))


def _logit(u):
    u = np.asarray(u, dtype=float)
    return np.log(u) - np.log1p(-u)


@dataclass(frozen=True)
class TransformG0:
    """Strictly increasing map from the real line onto (0, 1).

    sigmoid-linear mode follows the sigmoid outside |y| > 3 and a straight
    line inside, with (zeta, eta) fixed by continuity at the knots:
    zeta = 1/2, eta = (sigmoid(3) - sigmoid(-3)) / 6. pure-sigmoid is the
    plain logistic map; custom-monotone wraps user callables.
    """

    mode: str = SIGMOID_LINEAR
    zeta: float = field(default=None)
    eta: float = field(default=None)
    forward_fn: object = None
    inverse_fn: object = None

    def __post_init__(self):
        if self.mode == SIGMOID_LINEAR:
            s3 = float(_sigmoid(_KNOT))
            object.__setattr__(self, "zeta", 0.5)
            object.__setattr__(self, "eta", (2.0 * s3 - 1.0) / (2.0 * _KNOT))
        elif self.mode == PURE_SIGMOID:
            object.__setattr__(self, "zeta", None)
            object.__setattr__(self, "eta", None)
        elif self.mode == CUSTOM_MONOTONE:
            if self.forward_fn is None or self.inverse_fn is None:
                raise ValueError("custom-monotone mode needs forward_fn and inverse_fn")
        else:
            raise ValueError(f"unknown transform mode {self.mode!r}")

    def __call__(self, y):
        return g0_eval(self, y)


def g0_eval(t: TransformG0, y):
    """Evaluate the transform; maps into (0, 1), vectorised over y."""
    if t.mode == CUSTOM_MONOTONE:
        return t.forward_fn(y)
    y = np.asarray(y, dtype=float)
    if t.mode == PURE_SIGMOID:
        return _sigmoid(y)
    out = np.where(np.abs(y) <= _KNOT, t.zeta + t.eta * y, _sigmoid(y))
    return out if out.ndim else float(out)


def g0_inverse(t: TransformG0, u):
    """Inverse transform; u must lie strictly inside (0, 1)."""
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr <= 0.0) or np.any(u_arr >= 1.0):
        raise DomainError("g0_inverse argument must lie in the open interval (0, 1)")
    if t.mode == CUSTOM_MONOTONE:
        return t.inverse_fn(u)
    if t.mode == PURE_SIGMOID:
        out = _logit(u_arr)
    else:
        lo, hi = t.zeta - t.eta * _KNOT, t.zeta + t.eta * _KNOT
        out = np.where((u_arr >= lo) & (u_arr <= hi), (u_arr - t.zeta) / t.eta, _logit(u_arr))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class DyadicPartition:
    """2^M half-open bins of the real line pulled back through G0.

    edges has length 2^M + 1, starts at -inf and ends at +inf; interior
    edges are G0^{-1}(m 2^{-M}). All bins have width 2^{-M} in the
    transformed space.
    """

    M: int
    transform: TransformG0
    edges: np.ndarray

    @property
    def kappa(self) -> int:
        return 2**self.M

    @property
    def width_unit_interval(self) -> float:
        return 2.0**-self.M

    def to_json(self) -> str:
        edges = [("-inf" if e == -np.inf else "inf" if e == np.inf else float(e)) for e in self.edges]
        return json.dumps(
            {
                "M": self.M,
                "transform": {"mode": self.transform.mode, "zeta": self.transform.zeta, "eta": self.transform.eta},
                "edges": edges,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "DyadicPartition":
        d = json.loads(text)
        mode = d["transform"]["mode"]
        if mode == CUSTOM_MONOTONE:
            raise ValueError("custom-monotone transforms do not round-trip through JSON")
        edges = np.asarray([float(e) for e in d["edges"]], dtype=float)
        return cls(M=int(d["M"]), transform=TransformG0(mode=mode), edges=edges)


def build_partition(t: TransformG0, M: int) -> DyadicPartition:
    """Dyadic partition at level M >= 1 for the given transform."""
    if M < 1:
        raise ValueError("M must be >= 1")
    kappa = 2**M
    edges = np.empty(kappa + 1)
    edges[0] = -np.inf
    edges[-1] = np.inf
    grid = np.arange(1, kappa) * 2.0**-M
    edges[1:-1] = g0_inverse(t, grid)
    if np.any(np.diff(edges) <= 0):
        raise ValueError("transform produced non-increasing bin edges")
    return DyadicPartition(M=M, transform=t, edges=edges)


def coarsen(p: DyadicPartition, y) -> np.ndarray:
    """0-based bin index of each observation.

    Bin m collects points with G0(y) in [m 2^{-M}, (m+1) 2^{-M}); working
    directly on the real-line edges keeps the same half-open convention.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    idx = np.searchsorted(p.edges[1:-1], y, side="right")
    return idx.astype(np.int64)


def bin_counts(p: DyadicPartition, bins) -> np.ndarray:
    return np.bincount(np.asarray(bins), minlength=p.kappa)


def admissibility_check(p: DyadicPartition, emission_cdfs):
    """Rank and condition number of the per-state bin-probability matrix.

    emission_cdfs is a length-R sequence of vectorised CDF callables; the
    partition is admissible for those emissions iff the returned rank
    equals R. Intended for simulation and diagnostic use where the true
    emissions are known.
    """
    probs = emission_probability_matrix(p, emission_cdfs)
    sv = np.linalg.svd(probs, compute_uv=False)
    tol = max(probs.shape) * np.finfo(float).eps * sv[0]
    rank = int(np.sum(sv > tol))
    smallest = sv[min(len(emission_cdfs), len(sv)) - 1]
    cond = float(sv[0] / smallest) if smallest > 0 else math.inf
    return rank, cond


def emission_probability_matrix(p: DyadicPartition, emission_cdfs) -> np.ndarray:
    """R x kappa matrix with entries F_r(I_m) from CDF differences."""
    rows = []
    for cdf in emission_cdfs:
        vals = np.empty(p.kappa + 1)
        vals[0], vals[-1] = 0.0, 1.0
        vals[1:-1] = cdf(p.edges[1:-1])
        rows.append(np.diff(vals))
    return np.asarray(rows)
