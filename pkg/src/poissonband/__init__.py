"""Design-based CDF inference under Poisson PPS sampling.

Inverse-probability and ratio-normalized empirical processes for the
finite-population CDF, their design covariances, Gaussian-limit
simulation via Cholesky factorization, simultaneous confidence bands,
and a reproducible Monte Carlo coverage harness.
"""

from .bands import ConfidenceBand, build_band, covers
from .covariance import (
    CovMatrix,
    SEMIMETRIC_KINDS,
    lindeberg_stat,
    semimetric,
    sigma_double_prime_hat,
    sigma_double_prime_limit,
    sigma_prime_N,
    sigma_prime_hat,
    sigma_prime_limit,
)
from .design import (
    DesignOracle,
    DesignProbs,
    SampleDraw,
    design_expectation,
    draw_sample,
    enumerate_design,
    inclusion_probs,
    load_sample_csv,
    save_sample_csv,
    solve_cap_constant,
    solve_theta,
    solve_theta_functional,
    w_theta,
)
from .experiment import (
    CellSummary,
    ExperimentConfig,
    ExperimentReport,
    load_config,
    load_report_csv,
    render_plot_data,
    render_report,
    run_experiment,
    run_replicate,
)
from .gaussian import (
    CholFactor,
    FactorizationError,
    SupNormSample,
    cholesky_psd,
    quantile,
    simulate_limit_draws,
    simulate_sup_norms,
)
from .population import (
    PopModel,
    Population,
    generate_population,
    load_population,
    population_cdf,
    save_population,
)
from .processes import (
    EmptySampleError,
    IndicatorGrid,
    ProcessValues,
    classical_process,
    estimate_cdf,
    hajek_process,
    ht_process,
    monte_carlo_reference_cdf,
    n_hat,
    sup_norm_stat,
    tilde_hajek_process,
)

__version__ = "0.1.0"
