"""Finite populations: synthetic generation, CSV ingestion, and the population CDF.

The synthetic model is a linear relation between a positive size variable
and the study variable: X lognormal, Y = X + U with U zero-mean Gaussian
noise whose standard deviation is a power of X.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import streams

__all__ = ["PopModel", "Population", "generate_population", "population_cdf", "load_population", "save_population"]


@dataclass(frozen=True)
class PopModel:
    """Superpopulation model: lognormal sizes with size-scaled Gaussian noise.

    Parameters
    ----------
    log_mean : float
        Mean of ln(X).
    log_sd : float
        Standard deviation of ln(X); zero gives a degenerate size variable.
    noise_scale_power : float
        Exponent p in sd(U | X) = X**p.  p = 1 makes Var(U | X) = X**2.
    """

    log_mean: float = 0.0
    log_sd: float = 1.0
    noise_scale_power: float = 1.0

    def __post_init__(self):
        for name in ("log_mean", "log_sd", "noise_scale_power"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.log_sd < 0:
            raise ValueError(f"log_sd must be >= 0, got {self.log_sd!r}")


@dataclass(frozen=True)
class Population:
    """Fixed finite population of (y, x) pairs; immutable after construction."""

    y_values: np.ndarray
    x_values: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y_values, dtype=np.float64)
        x = np.asarray(self.x_values, dtype=np.float64)
        if y.ndim != 1 or x.ndim != 1:
            raise ValueError("y_values and x_values must be 1-dimensional")
        if y.shape != x.shape:
            raise ValueError(f"length mismatch: {y.shape[0]} y values vs {x.shape[0]} x values")
        if y.shape[0] < 1:
            raise ValueError("empty population")
        if not np.all(np.isfinite(y)):
            raise ValueError("y_values must be finite")
        if not (np.all(np.isfinite(x)) and np.all(x > 0)):
            raise ValueError("x_values must be strictly positive and finite")
        y.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "y_values", y)
        object.__setattr__(self, "x_values", x)

    @property
    def n_units(self) -> int:
        return self.y_values.shape[0]

    @cached_property
    def sorted_y(self) -> np.ndarray:
        s = np.sort(self.y_values)
        s.setflags(write=False)
        return s

    @cached_property
    def distinct_y(self) -> np.ndarray:
        d = np.unique(self.y_values)
        d.setflags(write=False)
        return d


def generate_population(model: PopModel, n_units: int, seed: int) -> Population:
    """Draw a synthetic population of ``n_units`` pairs; deterministic given the seed.

    X_i are i.i.d. lognormal(log_mean, log_sd**2); given X_i, the noise is
    N(0, X_i**(2 * noise_scale_power)) and Y_i = X_i + U_i.
    """
    if n_units < 1:
        raise ValueError(f"n_units must be >= 1, got {n_units}")
    zx = streams.standard_normals(streams.substream(seed, "population", "x"), n_units)
    zu = streams.standard_normals(streams.substream(seed, "population", "u"), n_units)
    x = np.exp(model.log_mean + model.log_sd * zx)
    y = x + x**model.noise_scale_power * zu
    return Population(y_values=y, x_values=x)


def population_cdf(pop: Population, t) -> float | np.ndarray:
    """Fraction of population units with Y <= t (right-continuous step function)."""
    counts = np.searchsorted(pop.sorted_y, t, side="right")
    result = counts / pop.n_units
    if np.isscalar(t) or np.ndim(t) == 0:
        return float(result)
    return result


def load_population(path, format: str = "csv", has_header: bool | None = None) -> Population:
    """Read a two-column (y, x) file into a Population.

    ``csv`` is the only supported format.  ``has_header=None`` auto-detects
    a header row; True/False force it.  Raises ValueError naming the
    offending row on parse failures and on non-positive x values.
    """
    if format != "csv":
        raise ValueError(f"unsupported population format {format!r}; only 'csv' is supported")
    ys: list[float] = []
    xs: list[float] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for row_num, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < 2:
                raise ValueError(f"row {row_num}: expected two columns (y, x), got {len(row)}")
            try:
                y = float(row[0])
                x = float(row[1])
            except ValueError:
                if row_num == 1 and has_header is not False:
                    continue  # treat an unparseable first row as the header
                raise ValueError(f"row {row_num}: could not parse {row[:2]!r} as numbers") from None
            if row_num == 1 and has_header is True:
                raise ValueError("row 1: expected a header row but found numeric data")
            if not (math.isfinite(x) and x > 0):
                raise ValueError(f"row {row_num}: x must be strictly positive and finite, got {x!r}")
            if not math.isfinite(y):
                raise ValueError(f"row {row_num}: y must be finite, got {y!r}")
            ys.append(y)
            xs.append(x)
    if not ys:
        raise ValueError("empty population")
    return Population(y_values=np.array(ys), x_values=np.array(xs))


def save_population(pop: Population, path) -> None:
    """Write a Population as a y,x CSV with a header row."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y", "x"])
        for y, x in zip(pop.y_values, pop.x_values):
            writer.writerow([repr(float(y)), repr(float(x))])
