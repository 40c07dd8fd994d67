"""Entry-wise clipping operators for matrix-valued stochastic gradients,
localization diagnostics, a Bayes posterior-mean oracle, and clipped-update
rules with prescribed thresholds."""

__version__ = "0.1.0"

from .bayes import (
    ChannelSpec,
    PosteriorDecomposition,
    posterior_collapse_check,
    posterior_mean_oracle,
    retention_probability,
    surrogate_error_profile,
)
from .bench import (
    RegressionProblem,
    RunConfig,
    RunResult,
    SweepConfig,
    grid_sweep,
    make_problem,
    run_training,
    speedup_metric,
    subspace_recovery,
    true_gradient,
)
from .clipops import (
    ClipSpec,
    apply_clip,
    global_clip,
    hard_clip,
    quantile_threshold,
    smooth_shrinkage,
    spectral_clip,
)
from .localization import (
    LocalizationReport,
    TaylorPrediction,
    delocalized_signal,
    gaussian_baseline_median,
    hill_estimator,
    localization_components,
    localization_report,
    spearman_rho,
    taylor_prediction,
)
from .matrixcore import (
    SpectralGapInfo,
    SvdResult,
    entry_max_norm,
    frobenius_norm,
    full_svd,
    msign,
    nuclear_norm,
    spectral_gap,
    top_singular_triplet,
)
from .noisegen import (
    Cauchy,
    ContaminationSpec,
    SeedSpec,
    StudentT,
    SubspaceSpec,
    sample_contamination,
    sample_scalar_noise,
    sample_subspace,
)
from .optim import (
    BiasVarianceBounds,
    TheoremConstants,
    bias_variance_bounds,
    complexity_budget,
    log_device_check,
    post_clip_step,
    pre_clip_step,
    relative_bias_oracle,
    step_size,
    threshold,
    verify_lemmas,
)
