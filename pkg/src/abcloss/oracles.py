"""Independent reference computations used to validate the sampler.

The geometric-exponential compound model admits a closed-form likelihood:
with t periods, t0 of them zero, and S the sum of the positive totals,
p(x | p, delta) = (1-p)**t * (p/delta)**(t-t0) * exp(-(1-p) * S / delta).
A dense grid over the uniform prior box therefore gives a trustworthy
posterior to compare the simulation-based one against.

The brute-force Wasserstein routine enumerates every pairing, so it is the
ground truth the fast matchers must not undercut.
"""

from dataclasses import dataclass
from itertools import permutations
import math

import numpy as np
from scipy.integrate import cumulative_trapezoid

__all__ = ["GridPosterior", "grid_posterior_geom_exp", "w1_exact_bruteforce", "w1_sample_vs_density"]


@dataclass
class GridPosterior:
    """Posterior density of (p, delta) tabulated on a rectangular grid."""

    p_grid: np.ndarray
    delta_grid: np.ndarray
    density: np.ndarray  # (len(p_grid), len(delta_grid)), integrates to 1
    p_marginal: np.ndarray
    delta_marginal: np.ndarray
    p_mean: float
    delta_mean: float
    p_sd: float
    delta_sd: float


def geom_exp_log_likelihood(p, delta, t, t0, positive_sum):
    """Closed-form log likelihood on broadcastable (p, delta) arrays."""
    p = np.asarray(p, dtype=float)
    delta = np.asarray(delta, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # zeros_like(delta) keeps the broadcast shape even when the
        # positive-part factors drop out (all-zero data)
        out = t * np.log1p(-p) + np.zeros_like(delta)
        if t > t0:
            out = (
                out
                + (t - t0) * (np.log(p) - np.log(delta))
                - (1.0 - p) * positive_sum / delta
            )
    out = np.where(np.isnan(out), -np.inf, out)
    return out


def grid_posterior_geom_exp(values, p_range=(0.0, 1.0), delta_range=(0.0, 100.0), grid=200):
    """Grid posterior of the geometric-exponential model under uniform priors.

    values are the observed per-period totals; the grid is at least 200
    points per axis.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size == 0 or np.any(values < 0):
        raise ValueError("observed totals must form a nonempty nonnegative 1-d array")
    if grid < 200:
        raise ValueError(f"grid must have at least 200 points per axis, got {grid}")
    t = values.size
    t0 = int(np.sum(values == 0.0))
    s_pos = float(values.sum())

    p = np.linspace(p_range[0], p_range[1], grid)
    delta = np.linspace(delta_range[0], delta_range[1], grid)
    log_lik = geom_exp_log_likelihood(p[:, None], delta[None, :], t, t0, s_pos)
    log_lik -= np.max(log_lik)
    density = np.exp(log_lik)  # flat prior: posterior ~ likelihood on the box

    norm = np.trapezoid(np.trapezoid(density, delta, axis=1), p)
    density /= norm
    p_marginal = np.trapezoid(density, delta, axis=1)
    delta_marginal = np.trapezoid(density, p, axis=0)
    p_mean = float(np.trapezoid(p * p_marginal, p))
    delta_mean = float(np.trapezoid(delta * delta_marginal, delta))
    p_var = float(np.trapezoid((p - p_mean) ** 2 * p_marginal, p))
    delta_var = float(np.trapezoid((delta - delta_mean) ** 2 * delta_marginal, delta))
    return GridPosterior(
        p, delta, density, p_marginal, delta_marginal,
        p_mean, delta_mean, math.sqrt(p_var), math.sqrt(delta_var),
    )


def w1_exact_bruteforce(a, b):
    """Exact first Wasserstein distance by enumerating all pairings.

    Samples of up to 8 points, univariate (absolute difference) or planar
    (Euclidean). Minimizing over full permutations is the definition, so
    this is slow and meant only as a reference.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.shape[0] == 0:
        raise ValueError("samples must share a nonempty shape")
    m = a.shape[0]
    if m > 8:
        raise ValueError(f"brute force is capped at 8 points, got {m}")
    if a.ndim == 1:
        cost = np.abs(a[:, None] - b[None, :])
    elif a.ndim == 2 and a.shape[1] == 2:
        cost = np.hypot(
            a[:, 0, None] - b[None, :, 0], a[:, 1, None] - b[None, :, 1]
        )
    else:
        raise ValueError("samples must be (m,) or (m, 2)")
    best = math.inf
    for perm in permutations(range(m)):
        total = sum(cost[i, j] for i, j in enumerate(perm))
        if total < best:
            best = total
    return best / m


def w1_sample_vs_density(sample, weights, grid, density, n_quantiles=2001):
    """W1 distance between a weighted sample and a gridded density, via the
    quantile coupling on a common uniform grid."""
    sample = np.asarray(sample, dtype=float)
    weights = np.asarray(weights, dtype=float)
    order = np.argsort(sample, kind="stable")
    s = sample[order]
    cw = np.cumsum(weights[order])
    cw /= cw[-1]

    cdf = cumulative_trapezoid(density, grid, initial=0.0)
    cdf /= cdf[-1]
    # keep strictly increasing knots so the inverse is well defined
    keep = np.concatenate(([True], np.diff(cdf) > 0))
    cdf_k, grid_k = cdf[keep], np.asarray(grid)[keep]

    u = (np.arange(n_quantiles) + 0.5) / n_quantiles
    q_sample = s[np.searchsorted(cw, u, side="left").clip(0, s.size - 1)]
    q_density = np.interp(u, cdf_k, grid_k)
    return float(np.mean(np.abs(q_sample - q_density)))
