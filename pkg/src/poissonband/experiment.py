"""Monte Carlo coverage study: replicate pipeline, aggregation, and report rendering.

Each replicate regenerates a population, draws a Poisson PPS sample,
computes both sup-norm statistics on the exact population-jumps grid,
estimates the two limit covariances on the sampled-jumps grid, simulates
sup norms of the Gaussian limit, and checks band coverage at every
requested level from one shared simulated sample per process kind.

All randomness is derived from (master_seed, cell, replicate, purpose)
labels, so replicates can be scheduled on any number of workers without
changing any result.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import streams
from .bands import build_band, covers
from .covariance import sigma_double_prime_hat, sigma_prime_hat
from .design import draw_sample, inclusion_probs
from .gaussian import FactorizationError, cholesky_psd, quantile, simulate_sup_norms
from .population import PopModel, generate_population
from .processes import (
    EmptySampleError,
    IndicatorGrid,
    estimate_cdf,
    hajek_process,
    ht_process,
    sup_norm_stat,
)

__all__ = [
    "ExperimentConfig",
    "CellSummary",
    "ExperimentReport",
    "run_replicate",
    "run_experiment",
    "render_report",
    "render_plot_data",
    "load_report_csv",
    "load_config",
]

PROCESS_KINDS = ("ht", "hajek")


@dataclass(frozen=True)
class ExperimentConfig:
    """Full factorial study over population sizes, sampling fractions and levels."""

    population_sizes: tuple
    sampling_fractions: tuple
    gammas: tuple
    replicates: int = 1000
    inner_draws: int = 1000
    master_seed: int = 0
    pop_model: PopModel = field(default_factory=PopModel)
    processes: tuple = PROCESS_KINDS

    def __post_init__(self):
        object.__setattr__(self, "population_sizes", tuple(int(n) for n in self.population_sizes))
        object.__setattr__(self, "sampling_fractions", tuple(float(a) for a in self.sampling_fractions))
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        object.__setattr__(self, "processes", tuple(self.processes))
        if not self.population_sizes or any(n < 1 for n in self.population_sizes):
            raise ValueError("population_sizes must be nonempty positive integers")
        # alpha = 1 is allowed as the degenerate census design used in tests
        if not self.sampling_fractions or any(not 0 < a <= 1 for a in self.sampling_fractions):
            raise ValueError("sampling_fractions must lie in (0, 1]")
        if not self.gammas or any(not 0 < g < 1 for g in self.gammas):
            raise ValueError("gammas must lie in (0, 1)")
        if self.replicates < 1 or self.inner_draws < 1:
            raise ValueError("replicates and inner_draws must be >= 1")
        if not self.processes or any(k not in PROCESS_KINDS for k in self.processes):
            raise ValueError(f"processes must be a nonempty subset of {PROCESS_KINDS}")

    @property
    def cells(self) -> list:
        return [(n, a) for n in self.population_sizes for a in self.sampling_fractions]


@dataclass(frozen=True)
class CellSummary:
    """Aggregated outcome for one (N, alpha, gamma, kind) cell."""

    n_units: int
    alpha: float
    gamma: float
    kind: str
    coverage_estimate: float
    mean_width: float
    max_width: float
    skipped_replicates: int
    replicates: int


@dataclass(frozen=True)
class ExperimentReport:
    """Per-cell summaries plus the per-replicate records they were computed from."""

    cells: tuple
    records: tuple
    config: ExperimentConfig


def _target_size(alpha: float, n_units: int) -> int:
    # floor(alpha * N), with float noise in the product collapsed first
    return int(math.floor(round(alpha * n_units, 9)))


def run_replicate(config: ExperimentConfig, n_units: int, alpha: float, replicate_index: int) -> dict:
    """One full pass for one cell: population, sample, statistics, bands.

    Returns a JSON-ready record with per-kind outcomes at every gamma,
    computed from one shared simulated sup-norm sample per kind.
    """
    seed_of = lambda purpose: streams.derive_seed(
        config.master_seed, "cell", n_units, alpha, "rep", replicate_index, purpose
    )
    pop = generate_population(config.pop_model, n_units, seed_of("population"))
    probs = inclusion_probs(pop.x_values, _target_size(alpha, n_units))
    draw = draw_sample(probs, seed_of("sample"))
    pop_grid = IndicatorGrid.from_population(pop)

    record = {
        "n_units": n_units,
        "alpha": alpha,
        "replicate": replicate_index,
        "sample_size": draw.size,
        "kinds": {},
    }
    if draw.size == 0:
        for kind in config.processes:
            record["kinds"][kind] = {"skipped": True, "reason": "empty sample"}
        return record
    sampled_grid = IndicatorGrid.from_sample(pop, draw)

    for kind in config.processes:
        outcome: dict = {"skipped": False, "reason": None}
        try:
            if kind == "ht":
                process = ht_process(pop, draw, probs, pop_grid)
                cov = sigma_prime_hat(pop, draw, probs, sampled_grid)
            else:
                process = hajek_process(pop, draw, probs, pop_grid)
                cov = sigma_double_prime_hat(pop, draw, probs, sampled_grid)
            factor = cholesky_psd(cov, jitter_policy="scaled", eps_rel=1e-10)
        except EmptySampleError:
            record["kinds"][kind] = {"skipped": True, "reason": "zero estimated size"}
            continue
        except FactorizationError as exc:
            record["kinds"][kind] = {"skipped": True, "reason": f"factorization failed: {exc}"}
            continue
        sup_stat = sup_norm_stat(process)
        center = estimate_cdf(kind, pop, draw, probs, pop_grid.thresholds)
        sup_sample = simulate_sup_norms(factor, config.inner_draws, seed_of(f"limit-{kind}"))
        outcome.update(
            sup_stat=sup_stat,
            grid_size=sampled_grid.size,
            jitter=factor.jitter_applied,
            gammas={},
        )
        for gamma in config.gammas:
            q_hat = quantile(sup_sample, gamma)
            band = build_band(pop_grid, center, q_hat, n_units, gamma, kind)
            outcome["gammas"][repr(gamma)] = {
                "q_hat": q_hat,
                "covered": covers(band, pop),
                "width": band.width,
            }
        record["kinds"][kind] = outcome
    return record


def _replicate_task(args) -> tuple:
    config, cell_index, replicate_index = args
    n_units, alpha = config.cells[cell_index]
    return cell_index, replicate_index, run_replicate(config, n_units, alpha, replicate_index)


def run_experiment(config: ExperimentConfig, threads: int = 1, progress=None) -> ExperimentReport:
    """Run every replicate of every cell and aggregate coverage and widths.

    ``threads`` workers split the replicates; seeds are derived per
    replicate, so the report is identical for any worker count.
    ``progress`` (optional callable) receives counts of finished replicates.
    """
    tasks = [
        (config, cell_index, replicate_index)
        for cell_index in range(len(config.cells))
        for replicate_index in range(config.replicates)
    ]
    results = []
    if threads <= 1:
        for i, task in enumerate(tasks):
            results.append(_replicate_task(task))
            if progress is not None:
                progress(i + 1, len(tasks))
    else:
        chunk = max(1, len(tasks) // (8 * threads))
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for i, result in enumerate(pool.map(_replicate_task, tasks, chunksize=chunk)):
                results.append(result)
                if progress is not None:
                    progress(i + 1, len(tasks))
    results.sort(key=lambda item: (item[0], item[1]))
    records = tuple(record for _, _, record in results)

    cells = []
    for cell_index, (n_units, alpha) in enumerate(config.cells):
        cell_records = [rec for ci, _, rec in results if ci == cell_index]
        for kind in config.processes:
            outcomes = [rec["kinds"][kind] for rec in cell_records]
            active = [o for o in outcomes if not o["skipped"]]
            skipped = len(outcomes) - len(active)
            for gamma in config.gammas:
                key = repr(gamma)
                covered = sum(1 for o in active if o["gammas"][key]["covered"])
                widths = [o["gammas"][key]["width"] for o in active]
                cells.append(
                    CellSummary(
                        n_units=n_units,
                        alpha=alpha,
                        gamma=gamma,
                        kind=kind,
                        coverage_estimate=covered / len(active) if active else float("nan"),
                        mean_width=float(np.mean(widths)) if widths else float("nan"),
                        max_width=float(np.max(widths)) if widths else float("nan"),
                        skipped_replicates=skipped,
                        replicates=config.replicates,
                    )
                )
    return ExperimentReport(cells=tuple(cells), records=records, config=config)


def render_report(report: ExperimentReport, format: str = "text-table") -> bytes:
    """Serialize a report: human-readable table, per-cell CSV, or per-replicate JSONL."""
    if format == "text-table":
        return _render_text_table(report)
    if format == "csv":
        return _render_csv(report)
    if format == "jsonl":
        lines = [json.dumps(rec, sort_keys=True, separators=(",", ":")) for rec in report.records]
        return ("\n".join(lines) + "\n" if lines else "").encode()
    raise ValueError(f"unknown report format {format!r}; expected text-table, csv or jsonl")


_KIND_TITLES = {"ht": "Horvitz-Thompson process", "hajek": "Hajek process"}


def _render_text_table(report: ExperimentReport) -> bytes:
    config = report.config
    by_key = {(c.n_units, c.alpha, c.gamma, c.kind): c for c in report.cells}
    out = io.StringIO()
    col = 22
    for kind in config.processes:
        out.write(f"{_KIND_TITLES.get(kind, kind)}\n")
        header = " " * 14 + "".join(f"gamma={g:<{col - 6}.2f}" for g in config.gammas)
        out.write(header.rstrip() + "\n")
        for n_units in config.population_sizes:
            out.write(f"N={n_units}\n")
            for alpha in config.sampling_fractions:
                coverages = []
                widths = []
                for gamma in config.gammas:
                    cell = by_key[(n_units, alpha, gamma, kind)]
                    coverages.append(f"{cell.coverage_estimate:.4f}")
                    widths.append(f"({cell.mean_width:.4f}; {cell.max_width:.4f})")
                label = f"  alpha={alpha:.2f}"
                out.write(label + " " * max(1, 14 - len(label)) + "".join(f"{c:<{col}}" for c in coverages).rstrip() + "\n")
                out.write(" " * 14 + "".join(f"{w:<{col}}" for w in widths).rstrip() + "\n")
        out.write("\n")
    return out.getvalue().encode()


_CSV_FIELDS = [
    "n_units",
    "alpha",
    "gamma",
    "kind",
    "coverage_estimate",
    "mean_width",
    "max_width",
    "skipped_replicates",
    "replicates",
]


def _render_csv(report: ExperimentReport) -> bytes:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(_CSV_FIELDS)
    for cell in report.cells:
        writer.writerow(
            [
                cell.n_units,
                f"{cell.alpha:.10g}",
                f"{cell.gamma:.10g}",
                cell.kind,
                f"{cell.coverage_estimate:.10g}",
                f"{cell.mean_width:.10g}",
                f"{cell.max_width:.10g}",
                cell.skipped_replicates,
                cell.replicates,
            ]
        )
    return out.getvalue().encode()


def load_report_csv(data: bytes) -> list:
    """Parse a CSV report back into CellSummary rows."""
    reader = csv.DictReader(io.StringIO(data.decode()))
    cells = []
    for row in reader:
        cells.append(
            CellSummary(
                n_units=int(row["n_units"]),
                alpha=float(row["alpha"]),
                gamma=float(row["gamma"]),
                kind=row["kind"],
                coverage_estimate=float(row["coverage_estimate"]),
                mean_width=float(row["mean_width"]),
                max_width=float(row["max_width"]),
                skipped_replicates=int(row["skipped_replicates"]),
                replicates=int(row["replicates"]),
            )
        )
    return cells


def render_plot_data(report: ExperimentReport) -> bytes:
    """Per-cell (gamma, coverage) CSV for external plotting."""
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["n_units", "alpha", "kind", "gamma", "coverage_estimate"])
    for cell in report.cells:
        writer.writerow(
            [cell.n_units, f"{cell.alpha:.10g}", cell.kind, f"{cell.gamma:.10g}", f"{cell.coverage_estimate:.10g}"]
        )
    return out.getvalue().encode()


def load_config(path) -> ExperimentConfig:
    """Read an ExperimentConfig from a TOML file whose keys mirror the field names."""
    if sys.version_info >= (3, 11):
        import tomllib
    else:
        import tomli as tomllib
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ValueError(f"invalid TOML in {path}: {exc}") from exc
    known = {
        "population_sizes",
        "sampling_fractions",
        "gammas",
        "replicates",
        "inner_draws",
        "master_seed",
        "pop_model",
        "processes",
    }
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if "population_sizes" not in raw or "sampling_fractions" not in raw or "gammas" not in raw:
        raise ValueError("config must set population_sizes, sampling_fractions and gammas")
    kwargs = dict(raw)
    if "pop_model" in kwargs:
        try:
            kwargs["pop_model"] = PopModel(**kwargs["pop_model"])
        except TypeError as exc:
            raise ValueError(f"invalid pop_model table: {exc}") from exc
    try:
        return ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"invalid experiment config: {exc}") from exc
