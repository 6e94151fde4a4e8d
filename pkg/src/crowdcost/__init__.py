"""Cost-optimal unsupervised binary labeling on multi-class crowd platforms."""

from .core import (
    ClassScore,
    ConfusionMatrix,
    Instance,
    Prior,
    WorkerClass,
    binary_entropy,
    class_score,
    kl_bernoulli,
    kl_half_threshold,
    lower_bound_no_prior,
    lower_bound_with_prior,
    optimal_class,
    p1_price,
    worst_case_expected_queries,
)
from .errors import (
    ConfigError,
    CrowdCostError,
    EstimationError,
    IngestError,
    KLDomainError,
    PipelineError,
    QueryCapExceeded,
)
from .estimate import (
    AgreementStats,
    EstimationResult,
    GroupMoments,
    asym_estimate,
    asym_estimate_from_moments,
    one_coin_estimate,
    one_coin_from_agreement,
    pairwise_agreement,
)
from .pipeline import (
    ALGORITHMS,
    RunReport,
    abi,
    asym_imcw,
    cbs_variant,
    mle_pipeline,
    run_algorithm,
    sym_imcw,
)
from .sim import (
    CostLedger,
    GroundTruth,
    Platform,
    ResponseRecord,
    bundled_asym_instance,
    bundled_sym_instance,
    explore_matrix,
    ingest_responses,
    load_instance,
    query,
    sample_truth,
    save_instance,
    symmetrized,
)
from .stop import (
    StopOutcome,
    bias_identification,
    cbs,
    direction_test,
    mle_boundary,
    mle_classify,
    mle_fixed_sample,
    mle_sample_size,
)

__version__ = "0.1.0"
