"""Hilbert space-filling curve on the 2-d integer grid.

Maps grid points in {0, ..., 2**order - 1}^2 to positions along the
order-`order` Hilbert curve and back. The curve starts at (0, 0), and
consecutive positions are grid neighbours (L1 distance 1), which is what
makes sorting points by their curve position a cheap proxy for planar
optimal matching.
"""

import numpy as np

__all__ = ["hilbert_index", "hilbert_point"]

MAX_ORDER = 31  # 2*order index bits must fit in int64


def _check_order(order):
    if not isinstance(order, (int, np.integer)) or not 1 <= order <= MAX_ORDER:
        raise ValueError(f"order must be an integer in [1, {MAX_ORDER}], got {order!r}")


def hilbert_index(x, y, order):
    """Curve position of grid point(s) (x, y) on the order-`order` curve.

    Accepts scalars or arrays; returns int64 position(s) in
    [0, 4**order). Coordinates outside the grid raise ValueError.
    """
    _check_order(order)
    x = np.array(x, dtype=np.int64, copy=True)
    y = np.array(y, dtype=np.int64, copy=True)
    n = np.int64(1) << order
    if np.any(x < 0) or np.any(y < 0) or np.any(x >= n) or np.any(y >= n):
        raise ValueError(f"coordinates must lie in [0, {int(n)}) for order {order}")
    d = np.zeros(np.broadcast(x, y).shape, dtype=np.int64)
    x, y = np.broadcast_arrays(x, y)
    x, y = x.copy(), y.copy()
    s = n >> 1
    while s > 0:
        rx = (x & s) > 0
        ry = (y & s) > 0
        d += (s * s) * ((3 * rx.astype(np.int64)) ^ ry.astype(np.int64))
        # rotate the quadrant so the sub-curve is oriented like the top level
        flip = ~ry & rx
        x = np.where(flip, n - 1 - x, x)
        y = np.where(flip, n - 1 - y, y)
        swap = ~ry
        x, y = np.where(swap, y, x), np.where(swap, x, y)
        s >>= 1
    if d.ndim == 0:
        return int(d)
    return d


def hilbert_point(d, order):
    """Inverse of hilbert_index: grid point (x, y) at curve position(s) d."""
    _check_order(order)
    d = np.array(d, dtype=np.int64, copy=True)
    n = np.int64(1) << order
    if np.any(d < 0) or np.any(d >= n * n):
        raise ValueError(f"position must lie in [0, {int(n * n)}) for order {order}")
    scalar = d.ndim == 0
    d = np.atleast_1d(d)
    x = np.zeros_like(d)
    y = np.zeros_like(d)
    t = d.copy()
    s = np.int64(1)
    while s < n:
        rx = 1 & (t >> 1)
        ry = 1 & (t ^ rx)
        flip = (ry == 0) & (rx == 1)
        x = np.where(flip, s - 1 - x, x)
        y = np.where(flip, s - 1 - y, y)
        swap = ry == 0
        x, y = np.where(swap, y, x), np.where(swap, x, y)
        x += s * rx
        y += s * ry
        t >>= 2
        s <<= 1
    if scalar:
        return int(x[0]), int(y[0])
    return x, y
