"""Gaussian-limit simulation on a finite grid: PSD-tolerant Cholesky,
limit-process draws, and order-statistic quantiles of sup norms.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from . import streams
from .covariance import CovMatrix

__all__ = [
    "FactorizationError",
    "CholFactor",
    "SupNormSample",
    "cholesky_psd",
    "simulate_limit_draws",
    "simulate_sup_norms",
    "quantile",
]

_MAX_JITTER_DOUBLINGS = 8


class FactorizationError(RuntimeError):
    """Cholesky failed even after the jitter retries."""


@dataclass(frozen=True)
class CholFactor:
    """Lower-triangular factor with the diagonal jitter that was needed, if any."""

    lower: np.ndarray
    jitter_applied: float
    source_kind: str

    @property
    def size(self) -> int:
        return self.lower.shape[0]


@dataclass(frozen=True)
class SupNormSample:
    """Ascending sup norms of simulated limit-process draws."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.shape[0] < 1:
            raise ValueError("values must be a nonempty 1-d vector")
        if np.any(np.diff(v) < 0) or v[0] < 0:
            raise ValueError("values must be nonnegative and ascending")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def draws(self) -> int:
        return self.values.shape[0]


def cholesky_psd(matrix, jitter_policy: str = "scaled", eps_rel: float = 1e-10) -> CholFactor:
    """Cholesky factorization tolerant of numerically singular PSD input.

    With the ``scaled`` policy a failed factorization is retried with
    eps_rel * trace / r added to the diagonal, doubling the jitter up to
    8 times.  A matrix of exact zeros factors to zeros.  ``none`` raises
    on the first failure.
    """
    if isinstance(matrix, CovMatrix):
        m = matrix.entries
        source_kind = matrix.kind
    else:
        m = np.asarray(matrix, dtype=np.float64)
        source_kind = "raw"
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m))) if m.size else 1.0)
    if float(np.max(np.abs(m - m.T))) > 1e-12 * scale:
        raise ValueError("matrix must be symmetric")
    if jitter_policy not in ("none", "scaled"):
        raise ValueError(f"jitter_policy must be 'none' or 'scaled', got {jitter_policy!r}")

    m = 0.5 * (m + m.T)
    r = m.shape[0]
    try:
        return CholFactor(lower=np.linalg.cholesky(m), jitter_applied=0.0, source_kind=source_kind)
    except np.linalg.LinAlgError:
        pass
    if not m.any():
        # All-zero covariance (e.g. a census design): the factor is zero.
        return CholFactor(lower=np.zeros_like(m), jitter_applied=0.0, source_kind=source_kind)
    if jitter_policy == "none":
        raise FactorizationError("matrix is not positive definite and jitter is disabled")
    base = eps_rel * float(np.trace(m)) / r
    for doubling in range(_MAX_JITTER_DOUBLINGS + 1):
        jitter = base * 2**doubling
        try:
            lower = np.linalg.cholesky(m + jitter * np.eye(r))
        except np.linalg.LinAlgError:
            continue
        return CholFactor(lower=lower, jitter_applied=jitter, source_kind=source_kind)
    raise FactorizationError(
        f"Cholesky failed after {_MAX_JITTER_DOUBLINGS + 1} jitter attempts (base {base:g})"
    )


def simulate_limit_draws(factor: CholFactor, draws: int, seed: int) -> np.ndarray:
    """Draws of the limit process on the grid: columns are lower @ z, z standard normal."""
    if draws < 1:
        raise ValueError(f"draws must be >= 1, got {draws}")
    rng = streams.substream(seed, "gaussian-limit")
    z = streams.standard_normals(rng, (factor.size, draws))
    return factor.lower @ z


def simulate_sup_norms(factor: CholFactor, draws: int, seed: int) -> SupNormSample:
    """Sup norms (max absolute component) of simulated limit draws, sorted ascending."""
    g = simulate_limit_draws(factor, draws, seed)
    return SupNormSample(values=np.sort(np.max(np.abs(g), axis=0)))


def quantile(sample: SupNormSample, gamma: float) -> float:
    """Order-statistic quantile: the ceil(gamma * draws)-th smallest value.

    gamma = 1 returns the maximum.  gamma * draws is rounded to 9 decimals
    before the ceiling so that float noise in products like 0.9 * 1000
    cannot shift the order statistic.
    """
    if not 0 < gamma <= 1:
        raise ValueError(f"gamma must be in (0, 1], got {gamma!r}")
    k = math.ceil(round(gamma * sample.draws, 9))
    k = min(max(k, 1), sample.draws)
    return float(sample.values[k - 1])
