"""Conditional independence testing via the weighted partial copula.

The test statistic is a closed-form Cramér–von Mises functional of the
ranked pseudo-observations (responses pushed through estimated conditional
margins), weighted over the covariate space by a Gaussian kernel; rejection
regions come from a bootstrap that resamples from the product of the
estimated conditional margins, which mimics the null hypothesis.
"""

from ._kernels import BACKEND
from .bootstrap import (
    BootstrapConfig,
    CostLimitError,
    TestOutcome,
    bootstrap_sample,
    p_value,
    quantile,
    run_test,
)
from .data import Dataset
from .margins import (
    CvConfig,
    KnnMarginModel,
    LrMarginModel,
    cross_validate_k,
    default_k_grid,
    knn_fit,
    lr_fit,
)
from .simulate import (
    MODELS,
    ExperimentReport,
    SimSpec,
    gen_disturbed_linear,
    gen_latent_cause,
    gen_linear,
    gen_post_nonlinear,
    generate,
    roc_auc,
    run_experiment,
)
from .copula import (
    KernelSpec,
    PseudoObs,
    empirical_wpc,
    m_kernel,
    pseudo_observations,
    statistic,
    statistic_bruteforce,
    w_star,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BootstrapConfig",
    "CostLimitError",
    "CvConfig",
    "Dataset",
    "ExperimentReport",
    "KernelSpec",
    "KnnMarginModel",
    "LrMarginModel",
    "MODELS",
    "PseudoObs",
    "SimSpec",
    "TestOutcome",
    "bootstrap_sample",
    "cross_validate_k",
    "default_k_grid",
    "empirical_wpc",
    "gen_disturbed_linear",
    "gen_latent_cause",
    "gen_linear",
    "gen_post_nonlinear",
    "generate",
    "knn_fit",
    "lr_fit",
    "m_kernel",
    "p_value",
    "pseudo_observations",
    "quantile",
    "roc_auc",
    "run_experiment",
    "run_test",
    "statistic",
    "statistic_bruteforce",
    "w_star",
]
