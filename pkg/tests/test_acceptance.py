"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criteria 1-3 share a single full-grid coverage study at B = 1000
(module-scoped fixture, a few minutes of wall clock); the remaining
criteria are exact or statistical checks that run in seconds.
"""

import numpy as np
import pytest

from poissonband import (
    DesignProbs,
    ExperimentConfig,
    IndicatorGrid,
    PopModel,
    cholesky_psd,
    design_expectation,
    draw_sample,
    enumerate_design,
    generate_population,
    hajek_process,
    ht_process,
    inclusion_probs,
    lindeberg_stat,
    n_hat,
    render_report,
    run_experiment,
    sigma_prime_N,
    sigma_prime_hat,
    simulate_limit_draws,
    solve_cap_constant,
    solve_theta,
)
from helpers import cap_constant_bisection

MASTER_SEED = 20260810

# Reference study results: coverage at gamma in (0.90, 0.95, 0.99) and the
# corresponding mean band widths, per (N, alpha) cell and process kind.
REFERENCE = {
    ("ht", 1000, 0.05): ((0.849, 0.901, 0.948), (0.9123, 1.0573, 1.3429)),
    ("ht", 1000, 0.10): ((0.846, 0.912, 0.959), (0.5853, 0.6738, 0.8506)),
    ("ht", 2000, 0.05): ((0.860, 0.919, 0.957), (0.5967, 0.6883, 0.8660)),
    ("ht", 2000, 0.10): ((0.865, 0.929, 0.978), (0.4263, 0.4899, 0.6158)),
    ("ht", 4000, 0.05): ((0.854, 0.916, 0.965), (0.4296, 0.4940, 0.6201)),
    ("ht", 4000, 0.10): ((0.870, 0.928, 0.976), (0.3065, 0.3521, 0.4407)),
    ("hajek", 1000, 0.05): ((0.744, 0.833, 0.935), (0.4579, 0.5195, 0.6403)),
    ("hajek", 1000, 0.10): ((0.804, 0.878, 0.940), (0.3477, 0.3927, 0.4813)),
    ("hajek", 2000, 0.05): ((0.792, 0.866, 0.944), (0.3526, 0.3984, 0.4890)),
    ("hajek", 2000, 0.10): ((0.844, 0.913, 0.967), (0.2622, 0.2953, 0.3611)),
    ("hajek", 4000, 0.05): ((0.815, 0.888, 0.958), (0.2632, 0.2964, 0.3619)),
    ("hajek", 4000, 0.10): ((0.847, 0.914, 0.967), (0.1928, 0.2164, 0.2631)),
}
GAMMAS = (0.90, 0.95, 0.99)

COVERAGE_TOL = 0.045  # ~4x binomial standard error at B = 1000
WIDTH_REL_TOL = 0.15


def _report(criterion: str, passed: bool, detail: str) -> None:
    print(f"{'PASS' if passed else 'FAIL'} {criterion}: {detail}")
    assert passed, f"{criterion}: {detail}"


@pytest.fixture(scope="module")
def full_report():
    config = ExperimentConfig(
        population_sizes=[1000, 2000, 4000],
        sampling_fractions=[0.05, 0.10],
        gammas=list(GAMMAS),
        replicates=1000,
        inner_draws=1000,
        master_seed=MASTER_SEED,
    )
    return run_experiment(config, threads=2)


def _cell(report, kind, n, alpha, gamma):
    for cell in report.cells:
        if (
            cell.kind == kind
            and cell.n_units == n
            and abs(cell.alpha - alpha) < 1e-12
            and abs(cell.gamma - gamma) < 1e-12
        ):
            return cell
    raise KeyError((kind, n, alpha, gamma))


def test_criterion_1_coverage_reproduction(full_report):
    worst = 0.0
    for (kind, n, alpha), (coverages, _) in REFERENCE.items():
        expected = coverages[GAMMAS.index(0.95)]
        got = _cell(full_report, kind, n, alpha, 0.95).coverage_estimate
        worst = max(worst, abs(got - expected))
    _report(
        "criterion 1 (coverage at gamma=0.95 across all 12 cells)",
        worst <= COVERAGE_TOL,
        f"max |coverage - reference| = {worst:.4f} (tolerance {COVERAGE_TOL})",
    )


def test_criterion_2_mean_width_reproduction(full_report):
    worst = 0.0
    for (kind, n, alpha), (_, widths) in REFERENCE.items():
        if n < 2000:
            continue
        for gamma, expected in zip(GAMMAS, widths):
            got = _cell(full_report, kind, n, alpha, gamma).mean_width
            worst = max(worst, abs(got / expected - 1.0))
    _report(
        "criterion 2 (mean widths, N >= 2000 cells)",
        worst <= WIDTH_REL_TOL,
        f"max relative error = {worst:.4f} (tolerance {WIDTH_REL_TOL})",
    )


def test_criterion_3_qualitative_ordering(full_report):
    violations = []
    for n, alpha in ((1000, 0.05), (1000, 0.10), (2000, 0.05), (2000, 0.10), (4000, 0.05), (4000, 0.10)):
        for gamma in GAMMAS:
            ht = _cell(full_report, "ht", n, alpha, gamma)
            hajek = _cell(full_report, "hajek", n, alpha, gamma)
            if not hajek.mean_width < ht.mean_width:
                violations.append(f"width order N={n} a={alpha} g={gamma}")
            for cell in (ht, hajek):
                if not cell.coverage_estimate < gamma:
                    violations.append(f"coverage >= gamma {cell.kind} N={n} a={alpha} g={gamma}")
    _report(
        "criterion 3 (Hajek narrower than HT; coverage below nominal)",
        len(violations) <= 2,
        f"{len(violations)} violation(s) across the grid (allowed 2): {violations[:4]}",
    )


def test_criterion_4_oracle_equivalence():
    rng = np.random.default_rng(404)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(3, 11))
        pop = generate_population(PopModel(), n, seed=int(rng.integers(0, 2**40)))
        target = float(rng.uniform(0.5, n - 0.5))
        probs = inclusion_probs(pop.x_values, target)
        grid = IndicatorGrid.from_population(pop)
        oracle = enumerate_design(probs)

        mean_process = design_expectation(oracle, lambda d: ht_process(pop, d, probs, grid).values)
        worst = max(worst, float(np.max(np.abs(mean_process))))

        second = design_expectation(
            oracle,
            lambda d: (lambda v: np.outer(v, v))(ht_process(pop, d, probs, grid).values),
        )
        sigma_n = sigma_prime_N(pop, probs, grid).entries
        worst = max(worst, float(np.max(np.abs(second - sigma_n))))

        mean_hat = design_expectation(oracle, lambda d: sigma_prime_hat(pop, d, probs, grid).entries)
        worst = max(worst, float(np.max(np.abs(mean_hat - sigma_n))))

        mean_size = design_expectation(oracle, lambda d: n_hat(d, probs))
        worst = max(worst, abs(mean_size - n))
    _report(
        "criterion 4 (exhaustive-design oracle equivalence, 50 configs)",
        worst <= 1e-12,
        f"max |deviation| = {worst:.3e} (tolerance 1e-12)",
    )


def test_criterion_5_water_fill_exactness():
    rng = np.random.default_rng(505)
    n = 1000
    worst_sum, worst_c = 0.0, 0.0
    for _ in range(1000):
        w = np.exp(rng.standard_normal(n))
        target = float(rng.uniform(1.0, n - 1.0))
        c = solve_cap_constant(w, target)
        pi_sum = float(np.minimum(c * w / w.sum(), 1.0).sum())
        worst_sum = max(worst_sum, abs(pi_sum - target))
        worst_c = max(worst_c, abs(c - cap_constant_bisection(w, target)))
    _report(
        "criterion 5 (water-fill exactness, 1000 random weight vectors)",
        worst_sum <= 1e-9 * n and worst_c <= 1e-9,
        f"max |sum(pi) - n| = {worst_sum:.3e} (tol {1e-9 * n:.0e}); max |c - bisection| = {worst_c:.3e} (tol 1e-9)",
    )


def test_criterion_6_theta_solver():
    two_point_err = abs(solve_theta(0.5, np.array([1.0, 3.0])) - 0.5)
    const_err = max(abs(solve_theta(a, np.array([2.0, 2.0, 2.0])) - a) for a in (0.05, 0.37, 0.9))
    _report(
        "criterion 6 (theta solver closed-form cases)",
        two_point_err <= 1e-10 and const_err <= 1e-12,
        f"two-point error {two_point_err:.3e} (tol 1e-10); constant-weight error {const_err:.3e} (tol 1e-12)",
    )


def test_criterion_7_cholesky():
    closed = cholesky_psd(np.array([[4.0, 2.0], [2.0, 2.0]]), jitter_policy="none")
    closed_err = float(np.max(np.abs(closed.lower - np.array([[2.0, 0.0], [1.0, 1.0]]))))

    singular = np.array([[1.0, 1.0], [1.0, 1.0]])
    factor = cholesky_psd(singular, eps_rel=1e-10)
    jittered = singular + factor.jitter_applied * np.eye(2)
    rel = float(np.linalg.norm(factor.lower @ factor.lower.T - jittered) / np.linalg.norm(jittered))

    cov = np.array([[4.0, 2.0, 1.0], [2.0, 3.0, 0.5], [1.0, 0.5, 2.0]])
    f3 = cholesky_psd(cov, jitter_policy="none")
    draws = 100_000
    g = simulate_limit_draws(f3, draws, seed=17)
    emp = g @ g.T / draws
    target = f3.lower @ f3.lower.T
    se = np.sqrt((np.outer(np.diag(target), np.diag(target)) + target**2) / draws)
    fidelity_z = float(np.max(np.abs(emp - target) / se))

    _report(
        "criterion 7 (Cholesky: closed form, jitter path, simulated covariance)",
        closed_err <= 1e-12 and rel <= 1e-8 and fidelity_z <= 4.0,
        f"2x2 error {closed_err:.2e} (tol 1e-12); reconstruction {rel:.2e} (tol 1e-8); max |z| {fidelity_z:.2f} (tol 4)",
    )


def test_criterion_8_hajek_constant_nullity():
    pop = generate_population(PopModel(), 50, seed=808)
    probs = inclusion_probs(pop.x_values, 15)
    top = IndicatorGrid(thresholds=np.array([pop.y_values.max() + 1.0]))
    checked = 0
    worst = 0.0
    for seed in range(10_000):
        draw = draw_sample(probs, seed=seed)
        if draw.size == 0:
            continue
        worst = max(worst, abs(hajek_process(pop, draw, probs, top).values[0]))
        checked += 1
    _report(
        "criterion 8 (Hajek nullity above max Y over 10^4 draws)",
        worst == 0.0 and checked >= 9990,
        f"max |value| = {worst} over {checked} draws with positive estimated size",
    )


def test_criterion_9_lindeberg_diagnostic():
    eps = 0.1
    thresholds = np.array([0.5, 1.0, 2.0, 4.0])
    # equal weights: pi = 0.3, indicator norms <= 2, threshold passed once
    # 0.3 * sqrt(N) * 0.1 > 2, i.e. N > 4445
    below = generate_population(PopModel(), 4000, seed=31)
    above = generate_population(PopModel(), 5000, seed=31)
    uniform = lambda n, p: DesignProbs(pi=np.full(n, p), cap_constant=n * p, target_expected_size=n * p)
    stat_below = lindeberg_stat(below, uniform(4000, 0.3), IndicatorGrid(thresholds=thresholds), eps)
    stat_above = lindeberg_stat(above, uniform(5000, 0.3), IndicatorGrid(thresholds=thresholds), eps)

    pps_grid = IndicatorGrid(thresholds=np.array([0.5, 1.0, 2.0, 4.0, 8.0]))
    stats = []
    for n, seed in ((1_000, 41), (10_000, 42), (100_000, 43)):
        pop = generate_population(PopModel(), n, seed=seed)
        probs = inclusion_probs(pop.x_values, 0.05 * n)
        stats.append(lindeberg_stat(pop, probs, pps_grid, eps))
    decreasing = stats[1] <= stats[0] * 1.05 and stats[2] <= stats[1] * 1.05 and stats[2] < stats[0]
    _report(
        "criterion 9 (Lindeberg diagnostic)",
        stat_below > 0.0 and stat_above == 0.0 and decreasing,
        f"equal-weight N=4000 stat {stat_below:.3g} > 0, N=5000 stat {stat_above} == 0; "
        f"capped PPS trend {[f'{s:.4f}' for s in stats]}",
    )


def test_criterion_10_determinism_across_worker_counts():
    config = ExperimentConfig(
        population_sizes=[1000, 2000, 4000],
        sampling_fractions=[0.05, 0.10],
        gammas=list(GAMMAS),
        replicates=24,
        inner_draws=1000,
        master_seed=MASTER_SEED,
    )
    serial = render_report(run_experiment(config, threads=1), "jsonl")
    parallel = render_report(run_experiment(config, threads=2), "jsonl")
    _report(
        "criterion 10 (byte-identical JSONL across worker counts)",
        serial == parallel and len(serial) > 0,
        f"{len(serial)} bytes, identical = {serial == parallel}",
    )
