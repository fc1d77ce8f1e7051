"""Invertible risk models from short return histories by averaging many
clustering-based factor-model samplings."""

from mlrisk.clustering import Clustering, EmptyClusterError, kmeans_cluster, objective
from mlrisk.ensemble import (
    EnsembleConfig,
    average_samplings,
    iter_samplings,
    iterate_model,
    sample_correlation,
)
from mlrisk.heterotic import SamplingModel, build_sampling, cluster_pc
from mlrisk.ingest import (
    NormalizedReturns,
    ReturnPanel,
    load_returns,
    make_panel,
    normalize_returns,
)
from mlrisk.riskmodel import (
    NotPositiveDefiniteError,
    PipelineError,
    RiskModelOutput,
    assemble_covariance,
    build_model,
    invert_spd,
)
from mlrisk.spectrum import (
    SpectrumSummary,
    deform_rescale,
    deform_tail,
    erank,
    summarize,
    tail_size,
)

__version__ = "0.1.0"
