import numpy as np
import pytest

from wpcopula import Dataset


def test_basic_construction():
    ds = Dataset(np.array([[0.0], [1.0]]), np.array([1.0, 2.0]), np.array([3.0, 4.0]))
    assert ds.n == 2 and ds.d == 1
    assert np.array_equal(ds.y(1), ds.y1)
    assert np.array_equal(ds.y(2), ds.y2)


def test_1d_x_promoted_to_column():
    ds = Dataset(np.arange(5.0), np.arange(5.0), np.arange(5.0))
    assert ds.x.shape == (5, 1)


def test_arrays_are_locked():
    ds = Dataset(np.zeros((3, 2)), np.zeros(3), np.zeros(3))
    with pytest.raises(ValueError):
        ds.x[0, 0] = 1.0


@pytest.mark.parametrize(
    "x, y1, y2, msg",
    [
        (np.zeros((1, 1)), np.zeros(1), np.zeros(1), "at least 2"),
        (np.zeros((3, 1)), np.zeros(2), np.zeros(3), "mismatch"),
        (np.array([[np.nan], [0.0]]), np.zeros(2), np.zeros(2), "non-finite"),
        (np.zeros((3, 1)), np.array([0.0, np.inf, 0.0]), np.zeros(3), "non-finite"),
    ],
)
def test_invalid_inputs(x, y1, y2, msg):
    with pytest.raises(ValueError, match=msg):
        Dataset(x, y1, y2)


def test_take_resamples_rows():
    ds = Dataset(np.arange(6.0).reshape(3, 2), np.array([1.0, 2.0, 3.0]),
                 np.array([4.0, 5.0, 6.0]))
    sub = ds.take(np.array([2, 0]))
    assert np.array_equal(sub.y1, [3.0, 1.0])
    assert np.array_equal(sub.x[0], ds.x[2])


def test_standardized_columns():
    rng = np.random.default_rng(0)
    ds = Dataset(5.0 + 3.0 * rng.standard_normal((200, 2)), rng.standard_normal(200),
                 rng.standard_normal(200))
    z = ds.standardized()
    assert np.allclose(z.x.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(z.x.std(axis=0), 1.0, atol=1e-12)
