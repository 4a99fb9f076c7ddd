"""Command-line interface: population generation, sampling, estimation,
design diagnostics, confidence bands, and the full coverage experiment.
"""

from __future__ import annotations

import csv
import math
import sys

import click
import numpy as np

from . import streams
from .bands import build_band
from .covariance import lindeberg_stat, sigma_double_prime_hat, sigma_prime_hat
from .design import draw_sample, inclusion_probs, load_sample_csv, save_sample_csv
from .experiment import load_config, render_plot_data, render_report, run_experiment
from .gaussian import cholesky_psd, quantile, simulate_sup_norms
from .population import PopModel, generate_population, load_population, save_population
from .processes import EmptySampleError, IndicatorGrid, estimate_cdf


@click.group()
def main():
    """Design-based CDF inference under Poisson PPS sampling."""


@main.command("gen-pop")
@click.option("--n", "n_units", type=int, required=True, help="Population size.")
@click.option("--seed", type=int, required=True, help="Generation seed.")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Output y,x CSV.")
@click.option("--log-mean", type=float, default=0.0, show_default=True)
@click.option("--log-sd", type=float, default=1.0, show_default=True)
@click.option("--noise-power", type=float, default=1.0, show_default=True)
def gen_pop(n_units, seed, out, log_mean, log_sd, noise_power):
    """Generate a synthetic population and write it as CSV."""
    model = PopModel(log_mean=log_mean, log_sd=log_sd, noise_scale_power=noise_power)
    pop = generate_population(model, n_units, seed)
    save_population(pop, out)
    click.echo(f"wrote {pop.n_units} units to {out}")


@main.command("draw")
@click.option("--pop", "pop_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--alpha", type=float, required=True, help="Sampling fraction in (0, 1].")
@click.option("--seed", type=int, required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Output index,y,x,pi,s CSV.")
def draw(pop_path, alpha, seed, out):
    """Draw one Poisson PPS sample with expected size floor(alpha * N)."""
    if not 0 < alpha <= 1:
        raise click.UsageError(f"alpha must be in (0, 1], got {alpha}")
    pop = load_population(pop_path)
    target = int(math.floor(round(alpha * pop.n_units, 9)))
    if target < 1:
        raise click.UsageError(f"alpha {alpha} gives an expected size below 1 for N={pop.n_units}")
    probs = inclusion_probs(pop.x_values, target)
    sample = draw_sample(probs, seed)
    save_sample_csv(pop, probs, sample, out)
    click.echo(f"drew {sample.size} of {pop.n_units} units (expected {target}) -> {out}")


@main.command("estimate")
@click.option("--pop", "pop_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--sample", "sample_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--kind", type=click.Choice(["ht", "hajek"]), default="hajek", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Output t,estimate CSV.")
def estimate(pop_path, sample_path, kind, out):
    """Estimate the population CDF at every distinct population Y value."""
    pop = load_population(pop_path)
    _, probs, sample = load_sample_csv(sample_path)
    if probs.n_units != pop.n_units:
        raise click.UsageError("population and sample files have different numbers of units")
    grid = IndicatorGrid.from_population(pop)
    try:
        values = estimate_cdf(kind, pop, sample, probs, grid.thresholds)
    except EmptySampleError as exc:
        raise click.ClickException(str(exc))
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "estimate"])
        for t, v in zip(grid.thresholds, values):
            writer.writerow([repr(float(t)), repr(float(v))])
    click.echo(f"wrote {grid.size} estimates to {out}")


@main.command("diagnose")
@click.option("--pop", "pop_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--alpha", type=float, required=True)
@click.option("--lindeberg-eps", type=float, default=0.1, show_default=True)
def diagnose(pop_path, alpha, lindeberg_eps):
    """Print the Lindeberg statistic and the inclusion-probability range."""
    if not 0 < alpha <= 1:
        raise click.UsageError(f"alpha must be in (0, 1], got {alpha}")
    pop = load_population(pop_path)
    target = int(math.floor(round(alpha * pop.n_units, 9)))
    probs = inclusion_probs(pop.x_values, target)
    grid = IndicatorGrid.from_population(pop)
    stat = lindeberg_stat(pop, probs, grid, lindeberg_eps)
    click.echo(f"lindeberg_stat: {stat:.6g}")
    click.echo(f"min_pi: {probs.pi.min():.6g}")
    click.echo(f"max_pi: {probs.pi.max():.6g}")


@main.command("bands")
@click.option("--pop", "pop_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--sample", "sample_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--gamma", type=float, default=0.95, show_default=True)
@click.option("--kind", type=click.Choice(["ht", "hajek"]), default="hajek", show_default=True)
@click.option("--draws", type=int, default=1000, show_default=True, help="Simulated limit draws.")
@click.option("--seed", type=int, default=0, show_default=True, help="Simulation seed.")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Output t,lower,center,upper CSV.")
def bands_cmd(pop_path, sample_path, gamma, kind, draws, seed, out):
    """Build a simultaneous confidence band for the population CDF."""
    if not 0 < gamma < 1:
        raise click.UsageError(f"gamma must be in (0, 1), got {gamma}")
    pop = load_population(pop_path)
    _, probs, sample = load_sample_csv(sample_path)
    if probs.n_units != pop.n_units:
        raise click.UsageError("population and sample files have different numbers of units")
    try:
        sampled_grid = IndicatorGrid.from_sample(pop, sample)
        if kind == "ht":
            cov = sigma_prime_hat(pop, sample, probs, sampled_grid)
        else:
            cov = sigma_double_prime_hat(pop, sample, probs, sampled_grid)
        pop_grid = IndicatorGrid.from_population(pop)
        center = estimate_cdf(kind, pop, sample, probs, pop_grid.thresholds)
    except EmptySampleError as exc:
        raise click.ClickException(str(exc))
    factor = cholesky_psd(cov)
    q_hat = quantile(simulate_sup_norms(factor, draws, streams.derive_seed(seed, "bands-cli")), gamma)
    band = build_band(pop_grid, center, q_hat, pop.n_units, gamma, kind)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "lower", "center", "upper"])
        for t, lo, c, up in zip(pop_grid.thresholds, band.lower, band.center, band.upper):
            writer.writerow([repr(float(t)), repr(float(lo)), repr(float(c)), repr(float(up))])
    click.echo(f"q_hat: {q_hat:.6g}  width: {band.width:.6g}  -> {out}")


@main.command("experiment")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Per-cell CSV report.")
@click.option("--jsonl", type=click.Path(dir_okay=False), default=None, help="Per-replicate JSONL records.")
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--emit-plot-data", type=click.Path(dir_okay=False), default=None, help="Per-cell (gamma, coverage) CSV.")
@click.option("--quiet", is_flag=True, help="Suppress the progress line and text table.")
def experiment_cmd(config_path, out, jsonl, threads, emit_plot_data, quiet):
    """Run the full coverage experiment described by a TOML config."""
    try:
        config = load_config(config_path)
    except ValueError as exc:
        raise click.UsageError(str(exc))

    progress = None
    if not quiet and sys.stderr.isatty():
        def progress(done, total):
            sys.stderr.write(f"\r{done}/{total} replicates")
            if done == total:
                sys.stderr.write("\n")
            sys.stderr.flush()

    report = run_experiment(config, threads=threads, progress=progress)
    if out:
        with open(out, "wb") as fh:
            fh.write(render_report(report, "csv"))
    if jsonl:
        with open(jsonl, "wb") as fh:
            fh.write(render_report(report, "jsonl"))
    if emit_plot_data:
        with open(emit_plot_data, "wb") as fh:
            fh.write(render_plot_data(report))
    if not quiet:
        click.echo(render_report(report, "text-table").decode(), nl=False)


if __name__ == "__main__":
    main()
