"""Clustering and denoising of heterogeneous populations of networks.

Each observed network is a noisy measurement of one of ``K`` latent mode
networks, with per-mode true- and false-positive rates.  The package fits
this mixture with an exact Gibbs sampler and turns the samples into mode,
parameter and cluster estimates.
"""

from .estimators import (
    KSelectionReport,
    ModeEstimate,
    align_labels,
    map_assignment,
    posterior_mean_modes,
    posterior_mean_params,
    select_k,
)
from .generate import (
    BenchmarkConfig,
    make_benchmark,
    planted_modes,
    sample_assignment,
    sample_modes_from_prior,
    sample_network,
    sample_population,
)
from .gibbs import (
    ChainConfig,
    ChainState,
    GroupedCounts,
    Trace,
    TraceSample,
    edge_inclusion_prob,
    group_counts,
    iter_chain,
    run_chain,
    sample_assignment_conditional,
    sample_modes,
    sample_params_conditional,
    sweep,
)
from .graph import Graph, Population
from .metric_model import beta_from_sigma, sample_params_metric, sigma_from_beta
from .metrics import mode_set_error, pairwise_hamming, param_l1, variation_of_information
from .model import (
    Assignment,
    Hyperparams,
    Params,
    SuffStats,
    build_suff_stats,
    log_likelihood_complete,
    log_likelihood_marginal,
    log_posterior,
    update_stats_on_reassign,
)
from .rng import make_rng

__version__ = "0.1.0"
