"""Sample container for conditional independence testing."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _as_locked_array(a, dtype=np.float64, ndim=None, name="array") -> np.ndarray:
    """C-contiguous float64 copy with the write flag cleared."""
    out = np.ascontiguousarray(a, dtype=dtype)
    if ndim is not None and out.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite entries")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Dataset:
    """n observations of (X in R^d, Y1 in R, Y2 in R), row-aligned.

    Arrays are copied, validated (finite entries, matching lengths) and
    frozen, so a Dataset can be shared freely across threads.
    """

    x: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    n: int = field(init=False)
    d: int = field(init=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        x = _as_locked_array(x, ndim=2, name="x")
        y1 = _as_locked_array(self.y1, ndim=1, name="y1")
        y2 = _as_locked_array(self.y2, ndim=1, name="y2")
        n, d = x.shape
        if n < 2:
            raise ValueError(f"need at least 2 samples, got {n}")
        if d < 1:
            raise ValueError("x must have at least one column")
        if y1.shape[0] != n or y2.shape[0] != n:
            raise ValueError(
                f"length mismatch: x has {n} rows, y1 has {y1.shape[0]}, y2 has {y2.shape[0]}"
            )
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y1", y1)
        object.__setattr__(self, "y2", y2)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "d", d)

    def y(self, target: int) -> np.ndarray:
        """Response column for margin ``target`` (1 or 2)."""
        if target == 1:
            return self.y1
        if target == 2:
            return self.y2
        raise ValueError(f"target must be 1 or 2, got {target}")

    def take(self, idx: np.ndarray) -> "Dataset":
        """Row subset / resample (used by folds and the bootstrap)."""
        return Dataset(self.x[idx], self.y1[idx], self.y2[idx])

    def standardized(self) -> "Dataset":
        """Copy with each covariate column z-scored (sd floored at 1e-12)."""
        mu = self.x.mean(axis=0)
        sd = self.x.std(axis=0)
        sd = np.maximum(sd, 1e-12)
        return Dataset((self.x - mu) / sd, self.y1, self.y2)
