"""Hilbert curve index: bijectivity, locality, inverse round trips."""

import numpy as np
import pytest

from abcloss.hilbert import hilbert_index, hilbert_point


def full_grid(order):
    side = 2**order
    xs, ys = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    return xs.ravel(), ys.ravel()


def test_order_one_is_a_u_shape():
    cells = {(x, y): hilbert_index(x, y, 1) for x in (0, 1) for y in (0, 1)}
    assert sorted(cells.values()) == [0, 1, 2, 3]
    assert cells[(0, 0)] == 0
    by_index = {v: k for k, v in cells.items()}
    for d in range(3):
        (x1, y1), (x2, y2) = by_index[d], by_index[d + 1]
        assert abs(x1 - x2) + abs(y1 - y2) == 1


@pytest.mark.parametrize("order", [1, 2, 3, 4, 5])
def test_bijection_and_inverse_exhaustively(order):
    xs, ys = full_grid(order)
    idx = hilbert_index(xs, ys, order)
    assert idx.min() == 0
    assert idx.max() == xs.size - 1
    assert np.unique(idx).size == xs.size
    bx, by = hilbert_point(idx, order)
    assert np.array_equal(bx, xs)
    assert np.array_equal(by, ys)


@pytest.mark.parametrize("order", [1, 2, 3, 4, 5])
def test_consecutive_positions_are_grid_neighbors(order):
    xs, ys = full_grid(order)
    walk = np.argsort(hilbert_index(xs, ys, order))
    steps = np.abs(np.diff(xs[walk])) + np.abs(np.diff(ys[walk]))
    assert np.all(steps == 1)


def test_round_trip_at_the_maximum_order():
    rng = np.random.default_rng(7)
    side = np.int64(1) << 31
    x = rng.integers(0, side, 1000)
    y = rng.integers(0, side, 1000)
    rx, ry = hilbert_point(hilbert_index(x, y, 31), 31)
    assert np.array_equal(rx, x)
    assert np.array_equal(ry, y)


def test_scalar_calls_return_plain_ints():
    d = hilbert_index(3, 5, 4)
    assert isinstance(d, int)
    assert hilbert_point(d, 4) == (3, 5)


def test_out_of_grid_coordinates_are_rejected():
    with pytest.raises(ValueError):
        hilbert_index(2, 0, 1)
    with pytest.raises(ValueError):
        hilbert_index(-1, 0, 3)
    with pytest.raises(ValueError):
        hilbert_point(4**3, 3)
    with pytest.raises(ValueError):
        hilbert_index(0, 0, 0)
    with pytest.raises(ValueError):
        hilbert_index(0, 0, 32)
