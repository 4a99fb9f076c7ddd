"""Poisson PPS designs with capped inclusion probabilities.

Inclusion probabilities are pi_i = min(c * w_i / sum(w), 1) where the cap
constant c is chosen so the expected sample size hits a target.  The
solver is an exact water-fill (sort + closed-form prefix solve); the
module also provides the limit constant solver, capped weights, sample
draws, and an exhaustive small-N design oracle for exact design
expectations.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import streams
from .population import Population

__all__ = [
    "DesignProbs",
    "SampleDraw",
    "DesignOracle",
    "solve_cap_constant",
    "inclusion_probs",
    "draw_sample",
    "solve_theta",
    "solve_theta_functional",
    "w_theta",
    "enumerate_design",
    "design_expectation",
    "save_sample_csv",
    "load_sample_csv",
]

ENUMERATION_LIMIT = 20  # 2**20 atoms; the oracle is for tests, not production sizes


@dataclass(frozen=True)
class DesignProbs:
    """First-order inclusion probabilities of a Poisson design.

    ``cap_constant`` is None for probability vectors ingested from outside
    (e.g. a sample CSV), where the constant that produced them is unknown.
    """

    pi: np.ndarray
    cap_constant: float | None
    target_expected_size: float

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=np.float64)
        if pi.ndim != 1 or pi.shape[0] < 1:
            raise ValueError("pi must be a nonempty 1-d vector")
        if not np.all((pi >= 0) & (pi <= 1)):
            raise ValueError("every inclusion probability must lie in [0, 1]")
        n = pi.shape[0]
        if not -1e-9 * max(n, 1) <= self.target_expected_size <= n + 1e-9 * max(n, 1):
            raise ValueError(f"target_expected_size {self.target_expected_size!r} outside [0, {n}]")
        if abs(pi.sum() - self.target_expected_size) > 1e-9 * max(n, 1):
            raise ValueError("sum(pi) does not match target_expected_size")
        if self.cap_constant is not None and self.cap_constant < 0:
            raise ValueError("cap_constant must be nonnegative")
        pi.setflags(write=False)
        object.__setattr__(self, "pi", pi)

    @property
    def n_units(self) -> int:
        return self.pi.shape[0]


@dataclass(frozen=True)
class SampleDraw:
    """Realized inclusion indicators of one Poisson draw."""

    indicators: np.ndarray

    def __post_init__(self):
        ind = np.asarray(self.indicators)
        if ind.ndim != 1:
            raise ValueError("indicators must be a 1-d vector")
        if not np.all((ind == 0) | (ind == 1)):
            raise ValueError("indicators must be 0/1")
        ind = ind.astype(np.int8)
        ind.setflags(write=False)
        object.__setattr__(self, "indicators", ind)

    @property
    def sampled_indices(self) -> np.ndarray:
        return np.flatnonzero(self.indicators)

    @property
    def size(self) -> int:
        return int(self.indicators.sum())


def solve_cap_constant(weights, target_expected_size: float) -> float:
    """Exact cap constant c with sum_i min(c * w_i / sum(w), 1) = target.

    Water-fill: with normalized weights sorted descending, exactly the
    first k units are capped at 1 for the solution's cap count k, and the
    remaining linear equation gives c = (target - k) / tail_sum(k).  The
    map c -> sum(min(c * v, 1)) is piecewise linear and nondecreasing, so
    k is found by scanning candidate prefixes.  For target == N the
    solution set is a ray; its infimum sum(w)/min(w) is returned.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.shape[0] < 1:
        raise ValueError("weights must be a nonempty 1-d vector")
    if not (np.all(np.isfinite(w)) and np.all(w > 0)):
        raise ValueError("weights must be strictly positive and finite")
    n_units = w.shape[0]
    n = float(target_expected_size)
    if not 0 <= n <= n_units:
        raise ValueError(f"target_expected_size {n!r} outside [0, {n_units}]")
    if n == 0:
        return 0.0
    total = w.sum()
    if n == n_units:
        return float(total / w.min())

    v = np.sort(w / total)[::-1]
    # tail[k] = sum of v[k:]; computed as a reversed cumsum to avoid 1 - prefix cancellation
    tail = np.concatenate([np.cumsum(v[::-1])[::-1], [0.0]])
    for k in range(n_units):
        if n - k <= 0 or tail[k] <= 0:
            break
        c = (n - k) / tail[k]
        if (k == 0 or c * v[k - 1] >= 1.0) and c * v[k] <= 1.0:
            return float(c)
    # Roundoff at a breakpoint can make the exact scan miss; pick the best candidate.
    best_c, best_err = 0.0, np.inf
    for k in range(n_units):
        if n - k <= 0 or tail[k] <= 0:
            break
        c = (n - k) / tail[k]
        err = abs(np.minimum(c * v, 1.0).sum() - n)
        if err < best_err:
            best_c, best_err = float(c), err
    return best_c


def inclusion_probs(weights, target_expected_size: float) -> DesignProbs:
    """Capped PPS probabilities pi_i = min(c * w_i / sum(w), 1) summing to the target."""
    w = np.asarray(weights, dtype=np.float64)
    if not target_expected_size > 0:
        raise ValueError("target_expected_size must be positive so that all pi > 0")
    c = solve_cap_constant(w, target_expected_size)
    pi = np.minimum(c * w / w.sum(), 1.0)
    return DesignProbs(pi=pi, cap_constant=c, target_expected_size=float(target_expected_size))


def draw_sample(probs: DesignProbs, seed: int) -> SampleDraw:
    """One Poisson draw: unit i enters iff its uniform is <= pi_i, independently."""
    u = streams.open_uniforms(streams.substream(seed, "poisson-draw"), probs.n_units)
    return SampleDraw(indicators=(u <= probs.pi).astype(np.int8))


def w_theta(weight: float, theta: float, mean_weight: float) -> float:
    """Capped weight min(w, mean_weight / theta)."""
    if weight <= 0 or theta <= 0 or mean_weight <= 0:
        raise ValueError("weight, theta and mean_weight must all be positive")
    return min(weight, mean_weight / theta)


def solve_theta(alpha: float, weights, probabilities=None, tol: float = 1e-10) -> float:
    """Limit constant theta with E min(theta * w / E w, 1) = alpha.

    The expectation is taken under the supplied weight law: a finite
    sample (uniform probabilities) or an explicit discrete law given by
    ``(weights, probabilities)``.  Solved by bisection on the
    nondecreasing map theta -> E min(theta * w / E w, 1).
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha!r}")
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.shape[0] < 1:
        raise ValueError("weights must be a nonempty 1-d vector")
    if not (np.all(np.isfinite(w)) and np.all(w > 0)):
        raise ValueError("weights must be strictly positive and finite")
    if probabilities is None:
        p = np.full(w.shape[0], 1.0 / w.shape[0])
    else:
        p = np.asarray(probabilities, dtype=np.float64)
        if p.shape != w.shape or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must match weights and sum to 1")
    mean_w = float(p @ w)

    def expected_capped(theta: float) -> float:
        return float(p @ np.minimum(theta * w / mean_w, 1.0))

    # theta = mean_w / min(w) caps every unit, so the root lies below it.
    return solve_theta_functional(alpha, expected_capped, upper=mean_w / w.min(), tol=tol)


def solve_theta_functional(
    alpha: float, expected_capped: Callable[[float], float], upper: float, tol: float = 1e-10
) -> float:
    """Bisection for E min(theta * w / E w, 1) = alpha given the map as a callable."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha!r}")
    lo, hi = 0.0, float(upper)
    while expected_capped(hi) < alpha:
        hi *= 2.0
    # Bisect well past tol so linear segments (constant weights) resolve to ~1e-13.
    while hi - lo > max(tol * 1e-3, 4e-16 * hi):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if expected_capped(mid) < alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class DesignOracle:
    """Exhaustive Poisson design over all 2**N indicator vectors.

    Atom ``b`` encodes indicators by binary expansion: bit (i - 1) of the
    index is the indicator of unit i, so atom 0 is the empty sample and
    atom 2**N - 1 the census.
    """

    atom_probabilities: np.ndarray
    n_units: int

    def indicators(self, atom: int) -> np.ndarray:
        bits = (atom >> np.arange(self.n_units)) & 1
        return bits.astype(np.int8)

    def atoms(self):
        for atom in range(self.atom_probabilities.shape[0]):
            yield atom, SampleDraw(indicators=self.indicators(atom)), self.atom_probabilities[atom]


def enumerate_design(probs: DesignProbs) -> DesignOracle:
    """All 2**N atoms with product-Bernoulli probabilities; N <= 20 only."""
    n = probs.n_units
    if n > ENUMERATION_LIMIT:
        raise ValueError(f"enumeration limited to N <= {ENUMERATION_LIMIT}, got N = {n}")
    p = np.array([1.0])
    for pi_i in probs.pi:
        p = np.concatenate([p * (1.0 - pi_i), p * pi_i])
    p.setflags(write=False)
    return DesignOracle(atom_probabilities=p, n_units=n)


def design_expectation(oracle: DesignOracle, statistic: Callable[[SampleDraw], "float | np.ndarray"]):
    """Exact design expectation sum_s statistic(s) * P(s) over all atoms.

    The statistic may return a scalar or an ndarray; expectations are taken
    entrywise.  This is the ground truth against which the design-based
    formulas elsewhere in the package are verified, so the accumulation is
    Kahan-compensated: plain sequential summation over 2^N atoms would eat
    into the 1e-12 exactness budget.
    """
    total = None
    comp = None
    for _, draw, prob in oracle.atoms():
        value = np.asarray(statistic(draw), dtype=np.float64) * prob
        if total is None:
            total = value.copy()
            comp = np.zeros_like(value)
        else:
            y = value - comp
            t = total + y
            comp = (t - total) - y
            total = t
    if total is None:
        raise ValueError("oracle has no atoms")
    if total.ndim == 0:
        return float(total)
    return total


def save_sample_csv(pop: Population, probs: DesignProbs, draw: SampleDraw, path) -> None:
    """Write a realized draw as an index,y,x,pi,s CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "y", "x", "pi", "s"])
        for i in range(pop.n_units):
            writer.writerow(
                [i, repr(float(pop.y_values[i])), repr(float(pop.x_values[i])), repr(float(probs.pi[i])), int(draw.indicators[i])]
            )


def load_sample_csv(path) -> tuple[Population, DesignProbs, SampleDraw]:
    """Read an index,y,x,pi,s CSV back into its population, probabilities and draw.

    The cap constant behind the pi column is unknown for external files,
    so the returned DesignProbs carries ``cap_constant=None`` and a target
    equal to the realized sum of pi.
    """
    ys, xs, pis, ss = [], [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for row_num, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < 5:
                raise ValueError(f"row {row_num}: expected columns index,y,x,pi,s, got {len(row)}")
            try:
                ys.append(float(row[1]))
                xs.append(float(row[2]))
                pis.append(float(row[3]))
                ss.append(int(row[4]))
            except ValueError:
                if row_num == 1:
                    continue  # header
                raise ValueError(f"row {row_num}: could not parse {row!r}") from None
    if not ys:
        raise ValueError("empty sample file")
    pi = np.array(pis)
    pop = Population(y_values=np.array(ys), x_values=np.array(xs))
    probs = DesignProbs(pi=pi, cap_constant=None, target_expected_size=float(pi.sum()))
    return pop, probs, SampleDraw(indicators=np.array(ss))
