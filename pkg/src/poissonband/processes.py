"""Empirical processes over indicator classes and the CDF estimators behind them.

Everything here is a right-continuous step function of the threshold t
jumping only at population Y values, so evaluation on a grid of distinct
Y values is exact: the max over such a grid equals the sup over all real
thresholds.  All evaluators run off cumulative sums in Y-sorted order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import streams
from .design import DesignProbs, SampleDraw
from .population import PopModel, Population, generate_population, population_cdf

__all__ = [
    "EmptySampleError",
    "IndicatorGrid",
    "ProcessValues",
    "ht_process",
    "n_hat",
    "hajek_process",
    "tilde_hajek_process",
    "classical_process",
    "estimate_cdf",
    "sup_norm_stat",
    "monte_carlo_reference_cdf",
]


class EmptySampleError(ValueError):
    """Raised when a Hajek quantity is requested but the estimated size is zero."""


@dataclass(frozen=True)
class IndicatorGrid:
    """Finite, strictly ascending set of thresholds indexing indicator functions."""

    thresholds: np.ndarray
    source: str = "custom"

    def __post_init__(self):
        t = np.asarray(self.thresholds, dtype=np.float64)
        if t.ndim != 1 or t.shape[0] < 1:
            raise ValueError("thresholds must be a nonempty 1-d vector")
        if np.any(np.diff(t) <= 0):
            raise ValueError("thresholds must be strictly ascending")
        t.setflags(write=False)
        object.__setattr__(self, "thresholds", t)

    @property
    def size(self) -> int:
        return self.thresholds.shape[0]

    @classmethod
    def from_population(cls, pop: Population) -> "IndicatorGrid":
        """Grid of all distinct population Y values (exact-sup grid)."""
        return cls(thresholds=pop.distinct_y, source="population_jumps")

    @classmethod
    def from_sample(cls, pop: Population, draw: SampleDraw) -> "IndicatorGrid":
        """Grid of distinct Y values among the sampled units."""
        sampled = draw.sampled_indices
        if sampled.size == 0:
            raise EmptySampleError("no sampled units: cannot build a sampled-jumps grid")
        return cls(thresholds=np.unique(pop.y_values[sampled]), source="sampled_jumps")


@dataclass(frozen=True)
class ProcessValues:
    """A process evaluated on a grid."""

    grid: IndicatorGrid
    values: np.ndarray
    kind: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != self.grid.thresholds.shape:
            raise ValueError("values must align with the grid")
        if not np.all(np.isfinite(v)):
            raise ValueError("process values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def _check_lengths(pop: Population, draw: SampleDraw, probs: DesignProbs) -> None:
    if not (pop.n_units == draw.indicators.shape[0] == probs.n_units):
        raise ValueError(
            f"length mismatch: population {pop.n_units}, draw {draw.indicators.shape[0]}, probs {probs.n_units}"
        )


def _cumulative_on_grid(pop: Population, per_unit: np.ndarray, grid: IndicatorGrid) -> np.ndarray:
    """sum_i per_unit[i] * I(Y_i <= t) for each grid threshold t."""
    order = np.argsort(pop.y_values, kind="stable")
    cum = np.cumsum(per_unit[order])
    idx = np.searchsorted(pop.y_values[order], grid.thresholds, side="right")
    return np.where(idx > 0, cum[idx - 1], 0.0)


def ht_process(pop: Population, draw: SampleDraw, probs: DesignProbs, grid: IndicatorGrid) -> ProcessValues:
    """Horvitz-Thompson process: (1/sqrt(N)) sum_i (S_i/pi_i - 1) I(Y_i <= t)."""
    _check_lengths(pop, draw, probs)
    coeff = draw.indicators / probs.pi - 1.0
    values = _cumulative_on_grid(pop, coeff, grid) / np.sqrt(pop.n_units)
    return ProcessValues(grid=grid, values=values, kind="ht")


def n_hat(draw: SampleDraw, probs: DesignProbs) -> float:
    """Inverse-probability estimator of the population size: sum_i S_i / pi_i."""
    if draw.indicators.shape[0] != probs.n_units:
        raise ValueError("draw and probs length mismatch")
    return float(np.sum(draw.indicators / probs.pi))


def hajek_process(pop: Population, draw: SampleDraw, probs: DesignProbs, grid: IndicatorGrid) -> ProcessValues:
    """Hajek process: sqrt(N) * (ratio-estimated CDF minus the population CDF).

    Exactly zero at thresholds t >= max(Y): both terms reduce to 1 there.
    Raises EmptySampleError when the estimated size is zero.
    """
    _check_lengths(pop, draw, probs)
    n = pop.n_units
    order = np.argsort(pop.y_values, kind="stable")
    cum_ht = np.cumsum((draw.indicators / probs.pi)[order])
    hat_n = cum_ht[-1]
    if hat_n <= 0:
        raise EmptySampleError("estimated population size is zero; Hajek process undefined")
    idx = np.searchsorted(pop.y_values[order], grid.thresholds, side="right")
    ratio = np.where(idx > 0, cum_ht[idx - 1], 0.0) / hat_n
    values = np.sqrt(n) * (ratio - idx / n)
    return ProcessValues(grid=grid, values=values, kind="hajek")


def tilde_hajek_process(pop: Population, draw: SampleDraw, probs: DesignProbs, grid: IndicatorGrid) -> ProcessValues:
    """Linearized Hajek process: the HT process applied to population-centered indicators."""
    _check_lengths(pop, draw, probs)
    n = pop.n_units
    coeff = draw.indicators / probs.pi - 1.0
    raw = _cumulative_on_grid(pop, coeff, grid)
    f_pop = population_cdf(pop, grid.thresholds)
    values = (raw - f_pop * coeff.sum()) / np.sqrt(n)
    return ProcessValues(grid=grid, values=values, kind="tilde_hajek")


def classical_process(pop: Population, reference_cdf: Callable, grid: IndicatorGrid) -> ProcessValues:
    """Classical empirical process sqrt(N) * (F_N(t) - reference_cdf(t)) on the grid."""
    f_pop = population_cdf(pop, grid.thresholds)
    ref = np.asarray([reference_cdf(t) for t in grid.thresholds], dtype=np.float64)
    values = np.sqrt(pop.n_units) * (f_pop - ref)
    return ProcessValues(grid=grid, values=values, kind="classical")


def estimate_cdf(kind: str, pop: Population, draw: SampleDraw, probs: DesignProbs, t):
    """Design-based CDF estimate at t.

    ``ht``: (1/N) sum_i S_i I(Y_i <= t) / pi_i (unbiased, may exceed 1).
    ``hajek``: the same sum normalized by the estimated size (a proper CDF).
    """
    _check_lengths(pop, draw, probs)
    order = np.argsort(pop.y_values, kind="stable")
    cum_ht = np.cumsum((draw.indicators / probs.pi)[order])
    idx = np.searchsorted(pop.y_values[order], t, side="right")
    raw = np.where(idx > 0, cum_ht[np.maximum(idx - 1, 0)], 0.0)
    if kind == "ht":
        result = raw / pop.n_units
    elif kind == "hajek":
        hat_n = cum_ht[-1]
        if hat_n <= 0:
            raise EmptySampleError("estimated population size is zero; Hajek estimator undefined")
        result = raw / hat_n
    else:
        raise ValueError(f"kind must be 'ht' or 'hajek', got {kind!r}")
    if np.isscalar(t) or np.ndim(t) == 0:
        return float(result)
    return result


def sup_norm_stat(values: ProcessValues) -> float:
    """Max absolute process value over the grid.

    On a population-jumps grid this equals the sup over all real
    thresholds, because the processes jump only at population Y values.
    """
    return float(np.max(np.abs(values.values)))


def monte_carlo_reference_cdf(model: PopModel, n_draws: int, seed: int) -> Callable:
    """One-off Monte Carlo approximation of the superpopulation CDF of Y.

    Returns a callable step-function CDF built from ``n_draws`` synthetic
    Y draws; used where a reference law is needed but has no closed form.
    """
    pop = generate_population(model, n_draws, streams.derive_seed(seed, "reference-cdf"))
    sorted_y = pop.sorted_y

    def cdf(t):
        counts = np.searchsorted(sorted_y, t, side="right")
        result = counts / n_draws
        if np.isscalar(t) or np.ndim(t) == 0:
            return float(result)
        return result

    return cdf
