"""Simulation-based calibration and comparison of insurance loss models.

Data observed as per-period aggregates (claim totals, reinsured layers,
bivariate totals, cyclical time series) is matched to candidate loss models
with Wasserstein-type distances inside an adaptive sequential Monte Carlo
sampler, yielding approximate posteriors over the model parameters and, for
ensembles, posterior model probabilities.
"""

from .errors import ConfigError, DataSchemaError, ParameterDomainError, StallError
from .families import (
    BivariateMixedPoisson,
    CyclicalPoisson,
    Exponential,
    FrequencyDependentExponential,
    Gamma,
    Geometric,
    LogNormal,
    NegativeBinomial,
    Poisson,
    PriorBox,
    Weibull,
    log_mass_or_density,
    sample_frequency,
    sample_severity,
)
from .models import (
    BivariatePairOfSums,
    FamilySpec,
    LossModel,
    QuotaShare,
    StopLoss,
    Sum,
    TimeIndexedSum,
    apply_summary,
    integrated_intensity,
    simulate,
)
from .distances import (
    REJECT,
    DistanceSpec,
    PreparedDistance,
    curve_distance,
    distance,
    partition,
    partition_bivariate,
    w1_hilbert,
    w1_sorted,
)
from .hilbert import hilbert_index, hilbert_point
from .smc import (
    DEFAULT_PROPOSAL_BUDGET,
    FitResult,
    KdeProposal,
    Population,
    combined_ess,
    ess,
    fit_kde,
    kde_density,
    kde_sample,
    run_smc,
    select_epsilon,
    weighted_quantile,
)
from .selection import ModelEnsemble, SelectionResult, run_ar_selection, run_smc_selection
from .oracles import grid_posterior_geom_exp, w1_exact_bruteforce, w1_sample_vs_density

__version__ = "0.1.0"

from .config import ModelConfig, RunConfig, load_config, parse_config  # noqa: E402
from .dataio import (  # noqa: E402
    ObservedData,
    build_summary,
    load_data,
    write_data,
    write_particles,
    write_traces,
)
