"""NumPy implementations of the hot kernels.

Always available; the compiled Cython module in ``_core`` mirrors these
semantics exactly (same tie handling, same neighbor ordering).  Pairwise
work is chunked over query/row blocks so memory stays bounded at
O(chunk * n) regardless of sample size, and block results are reduced in
fixed index order so output is deterministic.
"""

from __future__ import annotations

import numpy as np

_CHUNK = 256


def _sq_dists(xa: np.ndarray, xb: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, summed over coordinates in axis order."""
    diff = xa[:, None, :] - xb[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def check_knn_args(xtr, ytr, k, xq, yq):
    """Shape/position guards shared by both backends (bounds safety)."""
    m, d = xtr.shape
    if ytr.shape[0] != m:
        raise ValueError(f"xtr has {m} rows but ytr has {ytr.shape[0]} entries")
    if xq.shape[1] != d:
        raise ValueError(f"query dimension {xq.shape[1]} != training dimension {d}")
    if yq is not None and yq.shape[0] != xq.shape[0]:
        raise ValueError(f"xq has {xq.shape[0]} rows but yq has {yq.shape[0]} entries")
    if not 1 <= k <= m:
        raise ValueError(f"k must be in [1, {m}], got {k}")


def pair_stat_sums(g1: np.ndarray, g2: np.ndarray, x: np.ndarray, scale: float):
    """Weighted pairwise moment sums over all ordered index pairs.

    Returns ``(total, abs_total)`` where ``total`` is

        sum_{i,j} M(G_i, G_j) * wstar(X_i - X_j)

    with ``G_i = (g1[i], g2[i])``, self-convolved Gaussian weight
    ``wstar(delta) = (pi/2)^(d/2) * s^d * exp(-|delta|^2 / (2 s^2))``,
    and ``abs_total`` the same sum over absolute values (used for the
    floating-point floor when clamping the statistic at zero).
    """
    g1 = np.ascontiguousarray(g1, dtype=np.float64)
    g2 = np.ascontiguousarray(g2, dtype=np.float64)
    x = np.ascontiguousarray(x, dtype=np.float64)
    n, d = x.shape
    s2 = 2.0 * scale * scale
    const = (np.pi / 2.0) ** (d / 2.0) * scale**d
    # quarter term 0.25*(1-u1^2)(1-u2^2) of the moment function, per point
    q = 0.25 * (1.0 - g1 * g1) * (1.0 - g2 * g2)
    total = 0.0
    abs_total = 0.0
    for i0 in range(0, n, _CHUNK):
        i1 = min(i0 + _CHUNK, n)
        a1 = 1.0 - np.maximum(g1[i0:i1, None], g1[None, :])
        a2 = 1.0 - np.maximum(g2[i0:i1, None], g2[None, :])
        m = a1 * a2 - (q[i0:i1, None] + q[None, :]) + 1.0 / 9.0
        w = np.exp(-_sq_dists(x[i0:i1], x) / s2)
        m *= w
        total += float(m.sum())
        abs_total += float(np.abs(m).sum())
    return const * total, const * abs_total


def knn_cdf_batch(xtr, ytr, k, xq, yq):
    """k-nearest-neighbor conditional CDF at each query pair (yq[i], xq[i]).

    Exactly ``k`` training points count, distance ties at the k-th place
    broken toward the smaller training index; the value is the fraction of
    those neighbors whose response is <= yq[i].  The fixed divisor keeps
    the pseudo-observation lattice identical between a fitted sample and
    bootstrap resamples of it, which the bootstrap calibration relies on.
    """
    xtr = np.ascontiguousarray(xtr, dtype=np.float64)
    ytr = np.ascontiguousarray(ytr, dtype=np.float64)
    xq = np.ascontiguousarray(xq, dtype=np.float64)
    yq = np.ascontiguousarray(yq, dtype=np.float64)
    check_knn_args(xtr, ytr, k, xq, yq)
    nq = xq.shape[0]
    out = np.empty(nq, dtype=np.float64)
    for i0 in range(0, nq, _CHUNK):
        i1 = min(i0 + _CHUNK, nq)
        d2 = _sq_dists(xq[i0:i1], xtr)
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        out[i0:i1] = (ytr[order] <= yq[i0:i1, None]).sum(axis=1) / k
    return out


def knn_reg_sse(xtr, ytr, xq, yq, ks):
    """Sum of squared errors of the k-NN regression mean, one per k in ks.

    The regression mean at a query averages the responses of its k nearest
    training points (same tie convention as ``knn_cdf_batch``).
    """
    xtr = np.ascontiguousarray(xtr, dtype=np.float64)
    ytr = np.ascontiguousarray(ytr, dtype=np.float64)
    xq = np.ascontiguousarray(xq, dtype=np.float64)
    yq = np.ascontiguousarray(yq, dtype=np.float64)
    ks = np.asarray(ks, dtype=np.int64)
    check_knn_args(xtr, ytr, int(ks.max(initial=1)), xq, yq)
    sse = np.zeros(len(ks), dtype=np.float64)
    nq = xq.shape[0]
    for i0 in range(0, nq, _CHUNK):
        i1 = min(i0 + _CHUNK, nq)
        d2 = _sq_dists(xq[i0:i1], xtr)
        order = np.argsort(d2, axis=1, kind="stable")
        csum = np.cumsum(ytr[order], axis=1)
        for j, k in enumerate(ks):
            err = yq[i0:i1] - csum[:, k - 1] / k
            sse[j] += float(err @ err)
    return sse


def knn_neighbors(xtr, k, xq):
    """Indices of the k nearest training points per query, as a flat array.

    Returns ``(offsets, indices)``: neighbors of query ``i`` are
    ``indices[offsets[i]:offsets[i+1]]`` in ascending training index order
    (exactly k of them, ties at the k-th distance broken by index).
    """
    xtr = np.ascontiguousarray(xtr, dtype=np.float64)
    xq = np.ascontiguousarray(xq, dtype=np.float64)
    check_knn_args(xtr, np.empty(xtr.shape[0]), k, xq, None)
    nq = xq.shape[0]
    parts = []
    for i0 in range(0, nq, _CHUNK):
        i1 = min(i0 + _CHUNK, nq)
        d2 = _sq_dists(xq[i0:i1], xtr)
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        parts.append(np.sort(order, axis=1).astype(np.int64).ravel())
    offsets = np.arange(nq + 1, dtype=np.int64) * k
    indices = np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
    return offsets, indices
