"""Compiled and NumPy kernel backends must agree on everything."""

import numpy as np
import pytest

from wpcopula._kernels import BACKEND, _backend_numpy as nb

cy = pytest.importorskip(
    "wpcopula._kernels._core", reason="compiled kernels not built"
)


@pytest.fixture(params=[1, 2, 5], ids=lambda d: f"d={d}")
def cloud(request, rng):
    d = request.param
    n = 257  # non-multiple of the numpy backend's chunk size
    x = rng.standard_normal((n, d))
    y = rng.standard_normal(n)
    return x, y


def test_pair_stat_sums_agree(cloud, rng):
    x, _ = cloud
    n = x.shape[0]
    g1, g2 = rng.random(n), rng.random(n)
    for scale in (0.5, 1.0, 2.0):
        a_tot, a_abs = cy.pair_stat_sums(g1, g2, x, scale)
        b_tot, b_abs = nb.pair_stat_sums(g1, g2, x, scale)
        assert a_tot == pytest.approx(b_tot, rel=1e-12)
        assert a_abs == pytest.approx(b_abs, rel=1e-12)


def test_knn_kernels_agree(cloud, rng):
    x, y = cloud
    xq = np.ascontiguousarray(x[:70])
    yq = rng.standard_normal(70)
    for k in (1, 7, x.shape[0]):
        assert np.array_equal(cy.knn_cdf_batch(x, y, k, xq, yq),
                              nb.knn_cdf_batch(x, y, k, xq, yq))
        o1, i1 = cy.knn_neighbors(x, k, xq)
        o2, i2 = nb.knn_neighbors(x, k, xq)
        assert np.array_equal(o1, o2) and np.array_equal(i1, i2)
    ks = np.array([1, 3, 20], dtype=np.int64)
    s1 = cy.knn_reg_sse(x, y, xq, yq, ks)
    s2 = nb.knn_reg_sse(x, y, xq, yq, ks)
    np.testing.assert_allclose(s1, s2, rtol=1e-12)


def test_knn_kernels_agree_on_duplicated_rows(rng):
    # bootstrap resamples: exact distance ties are the norm, not the exception
    base = rng.standard_normal((150, 2))
    x = np.ascontiguousarray(base[rng.integers(0, 150, 150)])
    y = rng.standard_normal(150)
    xq = np.ascontiguousarray(x[:60])
    yq = rng.standard_normal(60)
    for k in (3, 10):
        assert np.array_equal(cy.knn_cdf_batch(x, y, k, xq, yq),
                              nb.knn_cdf_batch(x, y, k, xq, yq))
        o1, i1 = cy.knn_neighbors(x, k, xq)
        o2, i2 = nb.knn_neighbors(x, k, xq)
        assert np.array_equal(o1, o2) and np.array_equal(i1, i2)


def test_neighbor_lists_sorted_exactly_k(rng):
    x = rng.standard_normal((40, 1))
    offsets, idx = cy.knn_neighbors(x, 5, x)
    assert np.array_equal(offsets, np.arange(41) * 5)
    for q in range(40):
        nbrs = idx[offsets[q]:offsets[q + 1]]
        assert len(nbrs) == 5
        assert np.all(np.diff(nbrs) > 0)
        assert q in nbrs  # a training point is its own neighbor


@pytest.mark.parametrize("impl", [nb, cy], ids=["numpy", "cython"])
def test_shape_guards(impl, rng):
    x = rng.standard_normal((30, 2))
    y = rng.standard_normal(30)
    with pytest.raises(ValueError, match="yq"):
        impl.knn_cdf_batch(x, y, 3, x[:10].copy(), y[:9])
    with pytest.raises(ValueError, match="k must be"):
        impl.knn_cdf_batch(x, y, 31, x[:10].copy(), y[:10])
    with pytest.raises(ValueError, match="dimension"):
        impl.knn_neighbors(x, 3, rng.standard_normal((5, 3)))


def test_active_backend_is_compiled_when_available():
    assert BACKEND == "cython"
