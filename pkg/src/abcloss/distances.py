"""Wasserstein-type distances between observed and synthetic aggregated data.

Mixed (zero-inflated) data is compared by matching the zero counts exactly
and taking the order-statistics L1 distance between the positive parts.
Bivariate data splits into the four zero/positive blocks; the (+,+) block is
matched along a Hilbert curve. Time series are compared index-matched,
sorted, or through a plane embedding that trades value error against time
displacement (gamma).

All distances return REJECT (== +inf) when the zero-pattern gate fails; the
sampler treats that as an ordinary infinite distance, not an error.
"""

from dataclasses import dataclass
import math

import numpy as np

from .hilbert import hilbert_index

__all__ = [
    "REJECT",
    "DistanceSpec",
    "PreparedDistance",
    "partition",
    "partition_bivariate",
    "w1_sorted",
    "w1_hilbert",
    "curve_distance",
    "distance",
]

REJECT = math.inf

REGIMES = ("univariate", "bivariate", "curve")
GAMMA_MODES = ("zero", "inf", "fixed", "aspect")


def w1_sorted(a, b):
    """Mean absolute difference of order statistics (exact 1-d W1 pairing)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or a.shape != b.shape or a.size == 0:
        raise ValueError("w1_sorted needs two nonempty equal-length 1-d samples")
    return float(np.mean(np.abs(np.sort(a) - np.sort(b))))


def w1_hilbert(a, b, order=16):
    """Hilbert-curve matched mean Euclidean distance between planar samples.

    Both samples are affinely rescaled (per axis, over the pooled points) to
    the integer grid of the order-`order` Hilbert curve, sorted by curve
    position, and paired off in that order. The result upper-bounds the exact
    planar W1 under the Euclidean ground distance.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape[1] != 2 or a.shape != b.shape or a.shape[0] == 0:
        raise ValueError("w1_hilbert needs two nonempty equal-shape (m, 2) samples")
    lo = np.minimum(a.min(axis=0), b.min(axis=0))
    hi = np.maximum(a.max(axis=0), b.max(axis=0))
    span = hi - lo
    scale = (2.0**order - 1.0) / np.where(span > 0, span, 1.0)  # flat axis -> grid 0
    ga = np.rint((a - lo) * scale).astype(np.int64)
    gb = np.rint((b - lo) * scale).astype(np.int64)
    ia = np.argsort(hilbert_index(ga[:, 0], ga[:, 1], order), kind="stable")
    ib = np.argsort(hilbert_index(gb[:, 0], gb[:, 1], order), kind="stable")
    diff = a[ia] - b[ib]
    return float(np.mean(np.hypot(diff[:, 0], diff[:, 1])))


def partition(values):
    """Zero count and ascending positive part of a univariate sample."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 1:
        raise ValueError("partition expects a 1-d sample")
    positives = np.sort(values[values != 0.0])
    return values.size - positives.size, positives


def partition_bivariate(values):
    """Block split of an (t, 2) sample by the zero pattern of each pair.

    Returns (t00, first10, second01, both11): the count of (0, 0) pairs, the
    positive first components where the second is zero, the positive second
    components where the first is zero, and the (m, 2) block where both are
    positive.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[1] != 2:
        raise ValueError("partition_bivariate expects an (t, 2) sample")
    z1 = values[:, 0] == 0.0
    z2 = values[:, 1] == 0.0
    t00 = int(np.sum(z1 & z2))
    first10 = np.sort(values[~z1 & z2, 0])
    second01 = np.sort(values[z1 & ~z2, 1])
    both11 = values[~z1 & ~z2]
    return t00, first10, second01, both11


def curve_distance(x, y, gamma, order=16):
    """Distance between two equal-length series under time penalty gamma.

    gamma = inf matches periods index to index (mean L1); gamma = 0 ignores
    time entirely (sorted W1 of the values); a finite positive gamma embeds
    each series as the planar points (x_s, gamma * s) and applies the
    Hilbert-matched W1.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape or x.size == 0:
        raise ValueError("curve_distance needs two nonempty equal-length series")
    if not gamma >= 0.0:
        raise ValueError(f"gamma must be nonnegative (or inf), got {gamma}")
    if math.isinf(gamma):
        return float(np.mean(np.abs(x - y)))
    if gamma == 0.0:
        return w1_sorted(x, y)
    s = gamma * np.arange(1.0, x.size + 1.0)
    return w1_hilbert(np.column_stack([x, s]), np.column_stack([y, s]), order)


@dataclass(frozen=True)
class DistanceSpec:
    """Which comparison regime to run and its knobs.

    gamma_mode applies to the curve regime only: "zero", "inf", "fixed"
    (gamma gives the value) or "aspect" (gamma derived from the observed
    series so the value spread spans H units per V units of time).
    """

    regime: str
    gamma_mode: str = "inf"
    gamma: float = None
    H: float = 1.0
    V: float = 1.0
    hilbert_order: int = 16

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if not 1 <= int(self.hilbert_order) <= 31:
            raise ValueError(f"hilbert_order must lie in [1, 31], got {self.hilbert_order}")
        if self.regime == "curve":
            if self.gamma_mode not in GAMMA_MODES:
                raise ValueError(f"gamma_mode must be one of {GAMMA_MODES}, got {self.gamma_mode!r}")
            if self.gamma_mode == "fixed":
                if self.gamma is None or not self.gamma > 0.0 or math.isinf(self.gamma):
                    raise ValueError("fixed gamma_mode needs a finite positive gamma")
            if self.gamma_mode == "aspect" and not (self.H > 0.0 and self.V > 0.0):
                raise ValueError("aspect gamma_mode needs positive H and V")


def _resolve_gamma(spec, observed):
    if spec.gamma_mode == "zero":
        return 0.0
    if spec.gamma_mode == "inf":
        return math.inf
    if spec.gamma_mode == "fixed":
        return float(spec.gamma)
    t = observed.size
    if t < 2:
        raise ValueError("aspect-ratio gamma needs at least two observed periods")
    spread = float(observed.max() - observed.min())
    return spread / (t - 1.0) * (spec.H / spec.V)


class PreparedDistance:
    """Distance to a fixed observed dataset, set up once and called per draw.

    Instances are picklable and cheap to call, which is what the sampler's
    worker processes need. gate_from_counts answers the zero-pattern gate
    from claim counts alone, for models whose zeros are count-determined.
    """

    def __init__(self, spec, observed):
        self.spec = spec
        observed = np.asarray(observed, dtype=float)
        self.t = observed.shape[0]
        if spec.regime == "univariate":
            self.has_gate = True
            self._t0, self._pos = partition(observed)
        elif spec.regime == "bivariate":
            self.has_gate = True
            self._t00, self._b10, self._b01, self._b11 = partition_bivariate(observed)
        else:
            self.has_gate = False
            if observed.ndim != 1:
                raise ValueError("curve regime expects a univariate series")
            self._series = observed
            self.gamma = _resolve_gamma(spec, observed)
            self._time = None
            if 0.0 < self.gamma < math.inf:
                self._time = self.gamma * np.arange(1.0, self.t + 1.0)

    def gate_from_counts(self, counts):
        if self.spec.regime == "univariate":
            return int(np.sum(counts == 0)) == self._t0
        z1 = counts[:, 0] == 0
        z2 = counts[:, 1] == 0
        return (
            int(np.sum(z1 & z2)) == self._t00
            and int(np.sum(~z1 & z2)) == self._b10.size
            and int(np.sum(z1 & ~z2)) == self._b01.size
        )

    def __call__(self, synthetic):
        spec = self.spec
        if spec.regime == "curve":
            y = np.asarray(synthetic, dtype=float)
            if y.shape != self._series.shape:
                raise ValueError("synthetic series length differs from the observed one")
            if math.isinf(self.gamma):
                return float(np.mean(np.abs(self._series - y)))
            if self.gamma == 0.0:
                return w1_sorted(self._series, y)
            return w1_hilbert(
                np.column_stack([self._series, self._time]),
                np.column_stack([y, self._time]),
                spec.hilbert_order,
            )
        if spec.regime == "univariate":
            y = np.asarray(synthetic, dtype=float)
            if y.shape != (self.t,):
                raise ValueError("synthetic sample length differs from the observed one")
            pos = np.sort(y[y != 0.0])
            if self.t - pos.size != self._t0:
                return REJECT
            if pos.size == 0:
                return 0.0
            return float(np.mean(np.abs(self._pos - pos)))
        t00, b10, b01, b11 = partition_bivariate(synthetic)
        if t00 != self._t00 or b10.size != self._b10.size or b01.size != self._b01.size:
            return REJECT
        total = 0.0
        if b10.size:
            total += float(np.mean(np.abs(self._b10 - b10)))
        if b01.size:
            total += float(np.mean(np.abs(self._b01 - b01)))
        if b11.shape[0]:
            total += w1_hilbert(self._b11, b11, spec.hilbert_order)
        return total


def distance(observed, synthetic, spec):
    """One-shot distance between observed and synthetic data under spec."""
    return PreparedDistance(spec, observed)(synthetic)
