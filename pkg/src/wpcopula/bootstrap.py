"""Bootstrap calibration of the rejection region and the full test driver.

Null-mimicking resampling: covariate rows are drawn uniformly with
replacement and the two responses are then sampled independently from
their estimated conditional margins, which destroys any conditional
dependence while preserving the margins.  The distribution of the
statistic across such replicates stands in for its null law.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .margins import CvConfig, KnnMarginModel, cross_validate_k, knn_fit, lr_fit
from .copula import KernelSpec, pseudo_observations, statistic
from .util import STREAM_BOOTSTRAP, resolve_threads, spawn_rng

# Refuse work beyond this many replicate-pair operations (B * n^2) unless
# explicitly forced; keeps accidental month-long runs from starting.
DEFAULT_COST_CEILING = 1e11

MARGIN_KINDS = ("knn", "lr")


class CostLimitError(ValueError):
    """Requested run exceeds the configured B * n^2 cost ceiling."""


@dataclass(frozen=True)
class BootstrapConfig:
    """Replicate count, test level, seed, and the margin-refit switch.

    ``refit_margins=True`` re-estimates the margins on every bootstrap
    sample (reusing any cross-validated k), so the calibrated null law
    includes margin-estimation noise; set it to False to freeze the
    original margins.
    """

    n_boot: int = 200
    alpha: float = 0.05
    seed: int = 0
    refit_margins: bool = True

    def __post_init__(self):
        if self.n_boot < 1:
            raise ValueError(f"need at least one bootstrap replicate, got {self.n_boot}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class TestOutcome:
    """Everything the test produced, sufficient to reproduce the decision."""

    statistic: float
    boot_stats: np.ndarray
    quantile: float
    p_value: float
    reject: bool
    k_selected: tuple[int, int] | None
    alpha: float
    n_boot: int
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "quantile": self.quantile,
            "reject": self.reject,
            "alpha": self.alpha,
            "B": self.n_boot,
            "k_selected": list(self.k_selected) if self.k_selected else None,
            "seed": self.seed,
        }


def quantile(values, alpha: float) -> float:
    """Upper empirical quantile: the ceil((1 - alpha) * B)-th order statistic.

    The ceiling convention is conservative; a small epsilon guards the
    ceiling against binary representation of (1 - alpha) * B landing a hair
    above an integer.
    """
    arr = np.sort(np.asarray(values, dtype=np.float64))
    if arr.size == 0:
        raise ValueError("cannot take a quantile of an empty vector")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    idx = math.ceil((1.0 - alpha) * arr.size - 1e-9)
    idx = min(max(idx, 1), arr.size)
    return float(arr[idx - 1])


def p_value(stat: float, boot_stats: np.ndarray) -> float:
    """Finite-sample corrected p-value (1 + #{T*_b >= T}) / (B + 1)."""
    boot_stats = np.asarray(boot_stats, dtype=np.float64)
    return float((1 + np.count_nonzero(boot_stats >= stat)) / (boot_stats.size + 1))


def bootstrap_sample(data: Dataset, m1, m2, rng: np.random.Generator) -> Dataset:
    """One null-mimicking resample of the dataset.

    Covariate rows are drawn uniformly with replacement; both responses
    are then drawn independently from their estimated conditional laws at
    the resampled covariates.
    """
    idx = rng.integers(0, data.n, size=data.n)
    y1 = m1.sample_rows(idx, rng)
    y2 = m2.sample_rows(idx, rng)
    return Dataset(data.x[idx], y1, y2)


def _fit_margins(data, margin, k, cv, seed):
    if margin == "lr":
        return lr_fit(data, 1), lr_fit(data, 2), None
    if margin != "knn":
        raise ValueError(f"unknown margin kind {margin!r}; choose from {MARGIN_KINDS}")
    if k is not None:
        k1, k2 = (k, k) if np.isscalar(k) else (int(k[0]), int(k[1]))
    else:
        cfg = cv if cv is not None else CvConfig(seed=seed)
        k1 = cross_validate_k(data, 1, cfg)
        k2 = cross_validate_k(data, 2, cfg)
    return knn_fit(data, 1, k1), knn_fit(data, 2, k2), (int(k1), int(k2))


def run_test(
    data: Dataset,
    margin: str = "knn",
    *,
    k=None,
    cv: CvConfig | None = None,
    kernel: KernelSpec | None = None,
    cfg: BootstrapConfig | None = None,
    threads: int | None = None,
    standardize: bool = False,
    cost_ceiling: float = DEFAULT_COST_CEILING,
    force: bool = False,
) -> TestOutcome:
    """Full conditional independence test with bootstrap calibration.

    Fits the requested margins (cross-validating k unless fixed), computes
    the statistic, then draws ``cfg.n_boot`` null-mimicking replicates and
    recomputes the full pipeline on each.  Replicates run on a thread pool
    with streams keyed by (seed, replicate), so results are independent of
    scheduling and thread count.
    """
    kernel = kernel if kernel is not None else KernelSpec()
    cfg = cfg if cfg is not None else BootstrapConfig()
    cost = cfg.n_boot * float(data.n) ** 2
    if cost > cost_ceiling and not force:
        raise CostLimitError(
            f"B * n^2 = {cost:.3g} exceeds the ceiling {cost_ceiling:.3g}; "
            "pass force=True (CLI: --force) to run anyway"
        )
    if standardize:
        data = data.standardized()

    m1, m2, k_selected = _fit_margins(data, margin, k, cv, cfg.seed)
    pobs = pseudo_observations(data, m1, m2)
    stat = statistic(data, pobs, kernel)

    if isinstance(m1, KnnMarginModel):
        m1.warm_cache()
        m2.warm_cache()

    def one_replicate(b: int) -> float:
        rng = spawn_rng(cfg.seed, STREAM_BOOTSTRAP, b)
        sample = bootstrap_sample(data, m1, m2, rng)
        if cfg.refit_margins:
            r1, r2 = m1.refit(sample), m2.refit(sample)
        else:
            r1, r2 = m1, m2
        pobs_b = pseudo_observations(sample, r1, r2)
        return statistic(sample, pobs_b, kernel)

    n_workers = resolve_threads(threads)
    boot = np.empty(cfg.n_boot, dtype=np.float64)
    if n_workers == 1:
        for b in range(cfg.n_boot):
            boot[b] = one_replicate(b)
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            for b, val in enumerate(pool.map(one_replicate, range(cfg.n_boot))):
                boot[b] = val
    boot.setflags(write=False)

    xi = quantile(boot, cfg.alpha)
    return TestOutcome(
        statistic=stat,
        boot_stats=boot,
        quantile=xi,
        p_value=p_value(stat, boot),
        reject=bool(stat > xi),
        k_selected=k_selected,
        alpha=cfg.alpha,
        n_boot=cfg.n_boot,
        seed=cfg.seed,
    )
