"""Conditional margin estimators F(y | x) that can also be sampled.

Two families ship: a k-nearest-neighbor estimator (the conditional
empirical CDF over the smallest ball around x holding at least k training
points) and a Gaussian linear-regression estimator.  Both expose the same
surface — ``cdf``, ``cdf_batch``, ``sample``, ``sample_batch``,
``sample_rows``, ``refit`` — so the test pipeline and the bootstrap treat
them interchangeably.

Fitted models are immutable and safe to share across threads; sampling
draws from a caller-supplied generator.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from . import _kernels
from .data import Dataset
from .util import STREAM_CV, spawn_rng

# Floor on the LR residual standard deviation: keeps the CDF well defined
# on degenerate (noiseless) responses.
SIGMA_MIN = 1e-12


class KnnMarginModel:
    """k-NN conditional CDF of one response column given the covariates.

    The CDF at (y, x) is the proportion of the k nearest training points
    of x whose response is <= y; distance ties at the k-th place are
    broken toward the smaller training index.  A fixed neighbor count
    keeps the pseudo-observation lattice identical between a sample and
    bootstrap resamples of it, which the bootstrap calibration needs
    (resampled covariates carry duplicates, so tie handling is live there
    even though it almost never triggers on continuous data).
    """

    def __init__(self, data: Dataset, target: int, k: int):
        n = data.n
        if not 1 <= k <= n:
            raise ValueError(f"k must be in [1, {n}], got {k}")
        self.x = data.x
        self.y = data.y(target)
        self.k = int(k)
        self.target = int(target)
        self.n = n
        self._cache_lock = threading.Lock()
        self._neighbor_cache = None

    def cdf(self, y: float, x) -> float:
        """F_hat(y | x) for a single query point."""
        xq = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return float(
            _kernels.knn_cdf_batch(self.x, self.y, self.k, xq, np.array([float(y)]))[0]
        )

    def cdf_batch(self, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
        """F_hat(ys[i] | xs[i]) for row-aligned query arrays."""
        xs = np.ascontiguousarray(xs, dtype=np.float64)
        ys = np.ascontiguousarray(ys, dtype=np.float64)
        return _kernels.knn_cdf_batch(self.x, self.y, self.k, xs, ys)

    def _training_neighbors(self):
        # Ragged neighbor lists of the training points themselves, built on
        # first use (only sampling needs them) and cached; idempotent, so
        # the lock just avoids duplicated work.
        if self._neighbor_cache is None:
            with self._cache_lock:
                if self._neighbor_cache is None:
                    self._neighbor_cache = _kernels.knn_neighbors(self.x, self.k, self.x)
        return self._neighbor_cache

    @staticmethod
    def _pick(offsets, indices, rows, y, rng):
        counts = offsets[rows + 1] - offsets[rows]
        pick = offsets[rows] + (rng.random(len(rows)) * counts).astype(np.int64)
        return y[indices[pick]]

    def sample(self, x, rng: np.random.Generator) -> float:
        """One draw from F_hat(. | x): a uniform choice over the ball."""
        return float(self.sample_batch(np.atleast_2d(np.asarray(x, dtype=np.float64)), rng)[0])

    def sample_batch(self, xs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Independent draws from F_hat(. | xs[i]), one per row."""
        xs = np.ascontiguousarray(xs, dtype=np.float64)
        offsets, indices = _kernels.knn_neighbors(self.x, self.k, xs)
        rows = np.arange(xs.shape[0])
        return self._pick(offsets, indices, rows, self.y, rng)

    def sample_rows(self, idx: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Draws conditioned on training rows ``idx`` (cached neighbor sets)."""
        offsets, indices = self._training_neighbors()
        return self._pick(offsets, indices, np.asarray(idx, dtype=np.int64), self.y, rng)

    def warm_cache(self) -> None:
        """Precompute the training-point neighbor lists (thread warm-up)."""
        self._training_neighbors()

    def refit(self, data: Dataset) -> "KnnMarginModel":
        """Same k and target, new data (bootstrap refits)."""
        return KnnMarginModel(data, self.target, self.k)


class LrMarginModel:
    """Gaussian conditional CDF Phi((y - x.beta) / sigma).

    ``beta`` is the least-squares fit of the response on the covariates
    (no intercept) and ``sigma^2`` the mean squared residual, floored at
    ``SIGMA_MIN``; together they are the Gaussian maximum-likelihood fit.
    """

    def __init__(self, beta: np.ndarray, sigma: float, target: int, x: np.ndarray | None = None):
        beta = np.ascontiguousarray(beta, dtype=np.float64)
        if beta.ndim != 1:
            raise ValueError("beta must be a vector")
        if sigma <= 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        self.beta = beta
        self.sigma = float(sigma)
        self.target = int(target)
        self.x = x  # training covariates, kept for row-conditioned sampling

    @classmethod
    def fit(cls, data: Dataset, target: int) -> "LrMarginModel":
        x, y = data.x, data.y(target)
        n, d = x.shape
        if n <= d:
            raise ValueError(f"need n > d to fit, got n={n}, d={d}")
        u, s, vt = np.linalg.svd(x, full_matrices=False)
        tol = s[0] * max(n, d) * np.finfo(np.float64).eps if s.size else 0.0
        rank = int(np.sum(s > tol))
        if rank < d:
            cols = sorted({int(np.argmax(np.abs(v))) for v in vt[rank:]})
            raise ValueError(
                f"design matrix is rank deficient (rank {rank} < {d}); "
                f"singular directions are dominated by column(s) {cols}"
            )
        beta = vt.T @ ((u.T @ y) / s)
        resid = y - x @ beta
        sigma = max(float(np.sqrt(np.mean(resid * resid))), SIGMA_MIN)
        return cls(beta, sigma, target, x=x)

    def _mean(self, xs: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(xs, dtype=np.float64) @ self.beta

    def cdf(self, y: float, x) -> float:
        xq = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return float(ndtr((y - self._mean(xq)[0]) / self.sigma))

    def cdf_batch(self, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
        xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
        return ndtr((np.asarray(ys, dtype=np.float64) - self._mean(xs)) / self.sigma)

    def sample(self, x, rng: np.random.Generator) -> float:
        return float(self.sample_batch(np.atleast_2d(np.asarray(x, dtype=np.float64)), rng)[0])

    def sample_batch(self, xs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        mean = self._mean(xs)
        return mean + self.sigma * rng.standard_normal(mean.shape[0])

    def sample_rows(self, idx: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if self.x is None:
            raise ValueError("model was built without training covariates")
        return self.sample_batch(self.x[np.asarray(idx, dtype=np.int64)], rng)

    def refit(self, data: Dataset) -> "LrMarginModel":
        return LrMarginModel.fit(data, self.target)


def knn_fit(data: Dataset, target: int, k: int) -> KnnMarginModel:
    """Fit the k-NN conditional margin of ``data.y(target)`` given x."""
    return KnnMarginModel(data, target, k)


def lr_fit(data: Dataset, target: int) -> LrMarginModel:
    """Fit the Gaussian linear-regression margin of ``data.y(target)``."""
    return LrMarginModel.fit(data, target)


@dataclass(frozen=True)
class CvConfig:
    """Cross-validation settings for choosing the neighbor count.

    ``k_grid=None`` means: use :func:`default_k_grid` for the dataset at
    hand.  Fold shuffling for margin j uses ``seed + j`` so the two margins
    get independent fold draws.
    """

    folds: int = 5
    k_grid: tuple[int, ...] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError(f"need at least 2 folds, got {self.folds}")
        if self.k_grid is not None:
            grid = tuple(int(k) for k in self.k_grid)
            if not grid:
                raise ValueError("k_grid must be nonempty")
            if any(k < 1 for k in grid) or any(a >= b for a, b in zip(grid, grid[1:])):
                raise ValueError(f"k_grid must be ascending positive integers, got {grid}")
            object.__setattr__(self, "k_grid", grid)


def default_k_grid(n: int, d: int, folds: int = 5) -> tuple[int, ...]:
    """Ten geometric candidates spanning n^(1/3) .. n^(4/5).

    The pointwise-optimal growth rate k ~ n^(2/(d+2)) is inserted as an
    anchor; everything is capped at the largest k that fits inside a
    training fold.
    """
    k_max_fold = n - int(np.ceil(n / folds))
    lo = int(np.ceil(n ** (1.0 / 3.0)))
    hi = int(np.ceil(n ** (4.0 / 5.0)))
    grid = np.unique(np.geomspace(lo, max(hi, lo), num=10).round().astype(int))
    anchor = int(np.ceil(n ** (2.0 / (d + 2.0))))
    grid = np.unique(np.append(grid, anchor))
    grid = grid[(grid >= 1) & (grid <= k_max_fold)]
    if grid.size == 0:
        grid = np.array([max(1, min(lo, k_max_fold))])
    return tuple(int(k) for k in grid)


def cross_validate_k(data: Dataset, target: int, cfg: CvConfig) -> int:
    """Pick k for one margin by L-fold cross-validated regression error.

    Indices are shuffled with the config seed (offset by the margin index)
    and split into L near-equal contiguous folds.  For each candidate k the
    score is the across-fold mean of the per-fold mean squared error of the
    k-NN regression mean fitted on the complement; the smallest minimizer
    wins.
    """
    n = data.n
    ks = cfg.k_grid if cfg.k_grid is not None else default_k_grid(n, data.d, cfg.folds)
    ks_arr = np.asarray(ks, dtype=np.int64)
    k_max_fold = n - int(np.ceil(n / cfg.folds))
    if ks_arr.max() > k_max_fold:
        raise ValueError(
            f"candidate k={ks_arr.max()} exceeds the training-fold size {k_max_fold} "
            f"(n={n}, folds={cfg.folds})"
        )
    rng = spawn_rng(cfg.seed + target, STREAM_CV)
    perm = rng.permutation(n)
    folds = np.array_split(perm, cfg.folds)
    y = data.y(target)
    score = np.zeros(len(ks_arr), dtype=np.float64)
    for test_idx in folds:
        mask = np.ones(n, dtype=bool)
        mask[test_idx] = False
        train_idx = np.flatnonzero(mask)
        sse = _kernels.knn_reg_sse(
            np.ascontiguousarray(data.x[train_idx]),
            np.ascontiguousarray(y[train_idx]),
            np.ascontiguousarray(data.x[test_idx]),
            np.ascontiguousarray(y[test_idx]),
            ks_arr,
        )
        score += sse / len(test_idx)
    score /= cfg.folds
    return int(ks_arr[int(np.argmin(score))])
