"""Design covariances of the indicator processes, their plug-in estimators,
asymptotic limits, semimetrics, and the Lindeberg diagnostic.

For independent Poisson indicators the design covariance of the
inverse-probability process has the closed form
(1/N) sum_i ((1 - pi_i)/pi_i) f(Y_i) g(Y_i); on an ascending indicator
grid every matrix here is a function of prefix sums in Y-sorted order, so
assembly is O(N log N + r^2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import DesignProbs, SampleDraw
from .population import Population
from .processes import EmptySampleError, IndicatorGrid

__all__ = [
    "CovMatrix",
    "SEMIMETRIC_KINDS",
    "sigma_prime_N",
    "sigma_prime_hat",
    "sigma_double_prime_hat",
    "sigma_prime_limit",
    "sigma_double_prime_limit",
    "semimetric",
    "lindeberg_stat",
]

SEMIMETRIC_KINDS = ("rho", "rho_c", "rho_w")


@dataclass(frozen=True)
class CovMatrix:
    """Symmetric covariance matrix over an indicator grid.

    Positive semidefiniteness (up to 1e-8 * trace eigenvalue noise) holds
    by the quadratic-form structure of every constructor in this module;
    it is asserted in the test suite rather than recomputed here.
    """

    entries: np.ndarray
    grid: IndicatorGrid
    kind: str

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=np.float64)
        r = self.grid.size
        if m.shape != (r, r):
            raise ValueError(f"entries must be {r}x{r} to match the grid, got {m.shape}")
        scale = max(1.0, float(np.max(np.abs(m))) if m.size else 1.0)
        if float(np.max(np.abs(m - m.T))) > 1e-12 * scale:
            raise ValueError("entries must be symmetric")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)


def _prefix_on_grid(pop: Population, per_unit: np.ndarray, grid: IndicatorGrid) -> tuple[np.ndarray, float]:
    """Prefix sums of per_unit in Y order at each threshold, plus the full sum.

    The full sum is the final cumulative entry, so quantities that should
    cancel exactly at thresholds past every contributing unit do so
    bitwise.
    """
    order = np.argsort(pop.y_values, kind="stable")
    cum = np.cumsum(per_unit[order])
    idx = np.searchsorted(pop.y_values[order], grid.thresholds, side="right")
    return np.where(idx > 0, cum[idx - 1], 0.0), float(cum[-1])


def _min_matrix(prefix: np.ndarray) -> np.ndarray:
    """entry(i, j) = prefix[min(i, j)] for an ascending threshold grid."""
    r = prefix.shape[0]
    idx = np.arange(r)
    return prefix[np.minimum(idx[:, None], idx[None, :])]


def sigma_prime_N(pop: Population, probs: DesignProbs, grid: IndicatorGrid) -> CovMatrix:
    """Exact design covariance of the inverse-probability process on the grid."""
    if pop.n_units != probs.n_units:
        raise ValueError("population and probs length mismatch")
    per_unit = (1.0 - probs.pi) / probs.pi
    prefix, _ = _prefix_on_grid(pop, per_unit, grid)
    entries = _min_matrix(prefix) / pop.n_units
    return CovMatrix(entries=entries, grid=grid, kind="sigma_prime_N")


def sigma_prime_hat(pop: Population, draw: SampleDraw, probs: DesignProbs, grid: IndicatorGrid) -> CovMatrix:
    """Plug-in estimator of the design covariance from a single draw."""
    if not (pop.n_units == draw.indicators.shape[0] == probs.n_units):
        raise ValueError("population, draw and probs length mismatch")
    per_unit = draw.indicators * (1.0 - probs.pi) / probs.pi**2
    prefix, _ = _prefix_on_grid(pop, per_unit, grid)
    entries = _min_matrix(prefix) / pop.n_units
    return CovMatrix(entries=entries, grid=grid, kind="sigma_prime_hat")


def sigma_double_prime_hat(pop: Population, draw: SampleDraw, probs: DesignProbs, grid: IndicatorGrid) -> CovMatrix:
    """Plug-in covariance of the Hajek process: centered, normalized by the estimated size.

    Rows and columns at thresholds past every sampled Y value are exactly
    zero (the centered indicator is the zero function there).
    """
    if not (pop.n_units == draw.indicators.shape[0] == probs.n_units):
        raise ValueError("population, draw and probs length mismatch")
    u = draw.indicators * (1.0 - probs.pi) / probs.pi**2
    v = draw.indicators / probs.pi
    u_prefix, u_total = _prefix_on_grid(pop, u, grid)
    v_prefix, hat_n = _prefix_on_grid(pop, v, grid)
    if hat_n <= 0:
        raise EmptySampleError("estimated population size is zero; Hajek covariance undefined")
    ibar = v_prefix / hat_n
    raw = (
        _min_matrix(u_prefix)
        - np.outer(ibar, u_prefix)
        - np.outer(u_prefix, ibar)
        + u_total * np.outer(ibar, ibar)
    ) / hat_n
    # The expression is symmetric only in exact arithmetic.  In the lower
    # triangle (row threshold >= column threshold) the evaluation order
    # cancels bitwise at thresholds past every sampled unit, so mirror it.
    lower = np.tril(raw)
    entries = lower + lower.T - np.diag(np.diag(raw))
    return CovMatrix(entries=entries, grid=grid, kind="sigma_double_prime_hat")


def _capped_weights(w_sample: np.ndarray, theta: float, mean_weight: float | None) -> tuple[np.ndarray, float]:
    w = np.asarray(w_sample, dtype=np.float64)
    if theta <= 0:
        raise ValueError(f"theta must be positive, got {theta!r}")
    mu = float(np.mean(w)) if mean_weight is None else float(mean_weight)
    if mu <= 0:
        raise ValueError("mean_weight must be positive")
    return np.minimum(w, mu / theta), mu


def sigma_prime_limit(threshold_pair, y_sample, w_sample, theta: float, mean_weight: float | None = None) -> float:
    """Limit covariance entry at (s, t): plug-in average over a joint (Y, w) sample.

    Averages w_cap * (mean_w/theta - w_cap) * I(Y <= s) I(Y <= t) / w_cap**2
    where w_cap = min(w, mean_w/theta).
    """
    s, t = threshold_pair
    y = np.asarray(y_sample, dtype=np.float64)
    w_cap, mu = _capped_weights(w_sample, theta, mean_weight)
    kernel = (mu / theta - w_cap) / w_cap
    return float(np.mean(kernel * (y <= min(s, t))))


def sigma_double_prime_limit(
    threshold_pair,
    y_sample,
    w_sample,
    theta: float,
    mean_weight: float | None = None,
    reference_cdf=None,
) -> float:
    """Limit covariance entry of the Hajek process: same kernel, centered indicators.

    ``reference_cdf`` defaults to the empirical CDF of the supplied Y sample.
    """
    s, t = threshold_pair
    y = np.asarray(y_sample, dtype=np.float64)
    w_cap, mu = _capped_weights(w_sample, theta, mean_weight)
    kernel = (mu / theta - w_cap) / w_cap
    if reference_cdf is None:
        f_s = float(np.mean(y <= s))
        f_t = float(np.mean(y <= t))
    else:
        f_s = float(reference_cdf(s))
        f_t = float(reference_cdf(t))
    return float(np.mean(kernel * ((y <= s) - f_s) * ((y <= t) - f_t)))


def semimetric(
    kind: str,
    thresholds,
    y_sample,
    w_sample=None,
    theta: float | None = None,
    mean_weight: float | None = None,
) -> float:
    """Empirical semimetric between the indicator functions at two thresholds.

    ``rho``: root mean square of the indicator difference.
    ``rho_c``: its expectation-centered version (root variance).
    ``rho_w``: root mean square of the difference divided by the capped weight.
    """
    if kind not in SEMIMETRIC_KINDS:
        raise ValueError(f"kind must be one of {SEMIMETRIC_KINDS}, got {kind!r}")
    s, t = thresholds
    y = np.asarray(y_sample, dtype=np.float64)
    diff = (y <= s).astype(np.float64) - (y <= t).astype(np.float64)
    if kind == "rho":
        return float(np.sqrt(np.mean(diff**2)))
    if kind == "rho_c":
        return float(np.sqrt(np.var(diff)))
    if w_sample is None or theta is None:
        raise ValueError("rho_w requires w_sample and theta")
    w_cap, _ = _capped_weights(w_sample, theta, mean_weight)
    return float(np.sqrt(np.mean((diff / w_cap) ** 2)))


def lindeberg_stat(pop: Population, probs: DesignProbs, grid: IndicatorGrid, epsilon: float) -> float:
    """Design Lindeberg statistic for the indicator vector on the grid.

    (1/N) sum_i ((1 - pi_i)/pi_i) ||f(Y_i)||^2 I(||f(Y_i)|| > pi_i sqrt(N) eps),
    with ||f(Y_i)||^2 the number of grid thresholds at or above Y_i.
    Vanishing values as N grows support the marginal CLT conditions.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    if pop.n_units != probs.n_units:
        raise ValueError("population and probs length mismatch")
    n = pop.n_units
    counts = grid.size - np.searchsorted(grid.thresholds, pop.y_values, side="left")
    norms = np.sqrt(counts)
    exceed = norms > probs.pi * np.sqrt(n) * epsilon
    return float(np.sum((1.0 - probs.pi) / probs.pi * counts * exceed) / n)
