"""Claim frequency and claim severity families, and uniform prior boxes.

Every family is a small frozen dataclass validated at construction. Sampling
is a pure function of an explicitly passed numpy Generator; the batch entry
points (sample_counts, sample_claims) are the ones the simulator uses and are
fully vectorized.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import special

from .errors import ParameterDomainError

__all__ = [
    "Geometric",
    "Poisson",
    "NegativeBinomial",
    "BivariateMixedPoisson",
    "CyclicalPoisson",
    "Exponential",
    "Gamma",
    "Weibull",
    "LogNormal",
    "FrequencyDependentExponential",
    "PriorBox",
    "FREQUENCY_KINDS",
    "SEVERITY_KINDS",
    "sample_frequency",
    "sample_severity",
    "log_mass_or_density",
]

_LOG_2PI = math.log(2.0 * math.pi)


def _require(cond, message):
    if not cond:
        raise ParameterDomainError(message)


# ---------------------------------------------------------------------------
# frequency families (claim counts per period)


@dataclass(frozen=True)
class Geometric:
    """Number of claims with mass (1 - p) * p**n on n = 0, 1, 2, ..."""

    p: float

    def __post_init__(self):
        _require(0.0 < self.p < 1.0, f"geometric p must lie in (0, 1), got {self.p}")

    def sample_counts(self, rng, periods):
        # numpy's geometric counts trials >= 1 with success rate 1 - p
        return rng.geometric(1.0 - self.p, periods) - 1

    def log_mass(self, n):
        n = np.asarray(n)
        return np.where(n >= 0, math.log1p(-self.p) + n * math.log(self.p), -np.inf)

    def mean(self):
        return self.p / (1.0 - self.p)

    def variance(self):
        return self.p / (1.0 - self.p) ** 2


@dataclass(frozen=True)
class Poisson:
    lam: float

    def __post_init__(self):
        _require(self.lam > 0.0, f"poisson rate must be positive, got {self.lam}")

    def sample_counts(self, rng, periods):
        return rng.poisson(self.lam, periods)

    def log_mass(self, n):
        n = np.asarray(n)
        out = n * math.log(self.lam) - self.lam - special.gammaln(n + 1.0)
        return np.where(n >= 0, out, -np.inf)

    def mean(self):
        return self.lam

    def variance(self):
        return self.lam


@dataclass(frozen=True)
class NegativeBinomial:
    """Mass C(alpha + n - 1, n) * p**alpha * (1 - p)**n on n = 0, 1, ..."""

    alpha: float
    p: float

    def __post_init__(self):
        _require(self.alpha > 0.0, f"negbin alpha must be positive, got {self.alpha}")
        _require(0.0 < self.p < 1.0, f"negbin p must lie in (0, 1), got {self.p}")

    def sample_counts(self, rng, periods):
        # gamma-Poisson mixture keeps the draw exact for non-integer alpha
        lam = rng.gamma(self.alpha, (1.0 - self.p) / self.p, periods)
        return rng.poisson(lam)

    def log_mass(self, n):
        n = np.asarray(n, dtype=float)
        out = (
            special.gammaln(self.alpha + n)
            - special.gammaln(self.alpha)
            - special.gammaln(n + 1.0)
            + self.alpha * math.log(self.p)
            + n * math.log1p(-self.p)
        )
        return np.where(n >= 0, out, -np.inf)

    def mean(self):
        return self.alpha * (1.0 - self.p) / self.p

    def variance(self):
        return self.alpha * (1.0 - self.p) / self.p**2


@dataclass(frozen=True)
class BivariateMixedPoisson:
    """Pair of counts sharing a lognormal intensity.

    Per period, Lambda ~ LogNormal(0, sigma); the two counts are independent
    Poisson(Lambda * w1) and Poisson(Lambda * w2) given Lambda.
    """

    sigma: float
    w1: float
    w2: float

    def __post_init__(self):
        _require(self.sigma > 0.0, f"mixing sigma must be positive, got {self.sigma}")
        _require(self.w1 > 0.0 and self.w2 > 0.0, "exposure weights must be positive")

    def sample_counts(self, rng, periods):
        lam = rng.lognormal(0.0, self.sigma, periods)
        return np.column_stack([rng.poisson(lam * self.w1), rng.poisson(lam * self.w2)])

    def log_mass(self, pair, quad_points=96):
        """Joint mass of (n, m) by Gauss-Hermite quadrature over the intensity."""
        n, m = pair
        if n < 0 or m < 0:
            return -np.inf
        z, w = np.polynomial.hermite_e.hermegauss(quad_points)
        lam = np.exp(self.sigma * z)
        ln = n * np.log(lam * self.w1) - lam * self.w1 - special.gammaln(n + 1.0)
        lm = m * np.log(lam * self.w2) - lam * self.w2 - special.gammaln(m + 1.0)
        vals = np.exp(ln + lm)
        return float(np.log(np.sum(w * vals) / math.sqrt(2.0 * math.pi)))

    def mean(self):
        e_lam = math.exp(self.sigma**2 / 2.0)
        return np.array([self.w1 * e_lam, self.w2 * e_lam])

    def variance(self):
        e_lam = math.exp(self.sigma**2 / 2.0)
        v_lam = (math.exp(self.sigma**2) - 1.0) * math.exp(self.sigma**2)
        return np.array(
            [
                self.w1 * e_lam + self.w1**2 * v_lam,
                self.w2 * e_lam + self.w2**2 * v_lam,
            ]
        )


@dataclass(frozen=True)
class CyclicalPoisson:
    """Poisson counts from the intensity a + b * (1 + sin(2 pi c t)).

    The count for period s is Poisson with mean equal to the intensity
    integrated over (s - 1, s].
    """

    a: float
    b: float
    c: float

    def __post_init__(self):
        _require(self.a > 0.0, f"baseline a must be positive, got {self.a}")
        _require(self.b >= 0.0, f"amplitude b must be nonnegative, got {self.b}")
        _require(self.c > 0.0, f"frequency c must be positive, got {self.c}")

    def period_mean(self, period):
        """Integrated intensity over (period - 1, period]."""
        s = np.asarray(period, dtype=float)
        two_pi_c = 2.0 * math.pi * self.c
        out = (
            self.a
            + self.b
            + (self.b / two_pi_c) * (np.cos(two_pi_c * (s - 1.0)) - np.cos(two_pi_c * s))
        )
        if out.ndim == 0:
            return float(out)
        return out

    def sample_counts(self, rng, periods):
        mu = self.period_mean(np.arange(1, periods + 1))
        return rng.poisson(mu)

    def log_mass(self, n, period=1):
        n = np.asarray(n)
        mu = self.period_mean(period)
        out = n * math.log(mu) - mu - special.gammaln(n + 1.0)
        return np.where(n >= 0, out, -np.inf)

    def mean(self, period=1):
        return self.period_mean(period)

    def variance(self, period=1):
        return self.period_mean(period)


# ---------------------------------------------------------------------------
# severity families (individual claim sizes)


@dataclass(frozen=True)
class Exponential:
    """Exponential claim sizes with scale delta (density exp(-x/delta)/delta)."""

    delta: float

    def __post_init__(self):
        _require(self.delta > 0.0, f"exponential scale must be positive, got {self.delta}")

    def sample_claims(self, rng, counts):
        return rng.standard_exponential(int(np.sum(counts))) * self.delta

    def log_density(self, x):
        x = np.asarray(x)
        return np.where(x >= 0, -x / self.delta - math.log(self.delta), -np.inf)

    def mean(self):
        return self.delta

    def variance(self):
        return self.delta**2


@dataclass(frozen=True)
class Gamma:
    """Gamma claim sizes with shape r and scale m."""

    r: float
    m: float

    def __post_init__(self):
        _require(self.r > 0.0, f"gamma shape must be positive, got {self.r}")
        _require(self.m > 0.0, f"gamma scale must be positive, got {self.m}")

    def sample_claims(self, rng, counts):
        return rng.gamma(self.r, self.m, int(np.sum(counts)))

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (
                -x / self.m
                + (self.r - 1.0) * np.log(x)
                - self.r * math.log(self.m)
                - special.gammaln(self.r)
            )
        return np.where(x > 0, out, -np.inf)

    def mean(self):
        return self.r * self.m

    def variance(self):
        return self.r * self.m**2


@dataclass(frozen=True)
class Weibull:
    """Weibull claim sizes with shape k and scale beta."""

    k: float
    beta: float

    def __post_init__(self):
        _require(self.k > 0.0, f"weibull shape must be positive, got {self.k}")
        _require(self.beta > 0.0, f"weibull scale must be positive, got {self.beta}")

    def sample_claims(self, rng, counts):
        return rng.weibull(self.k, int(np.sum(counts))) * self.beta

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        z = x / self.beta
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (
                math.log(self.k / self.beta)
                + (self.k - 1.0) * np.log(z)
                - z**self.k
            )
        return np.where(x > 0, out, -np.inf)

    def mean(self):
        return self.beta * math.gamma(1.0 + 1.0 / self.k)

    def variance(self):
        g1 = math.gamma(1.0 + 1.0 / self.k)
        g2 = math.gamma(1.0 + 2.0 / self.k)
        return self.beta**2 * (g2 - g1**2)


@dataclass(frozen=True)
class LogNormal:
    """Lognormal claim sizes: log X ~ Normal(mu, sigma**2)."""

    mu: float
    sigma: float

    def __post_init__(self):
        _require(self.sigma > 0.0, f"lognormal sigma must be positive, got {self.sigma}")

    def sample_claims(self, rng, counts):
        return rng.lognormal(self.mu, self.sigma, int(np.sum(counts)))

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            lx = np.log(x)
            out = (
                -((lx - self.mu) ** 2) / (2.0 * self.sigma**2)
                - lx
                - math.log(self.sigma)
                - 0.5 * _LOG_2PI
            )
        return np.where(x > 0, out, -np.inf)

    def mean(self):
        return math.exp(self.mu + self.sigma**2 / 2.0)

    def variance(self):
        s2 = self.sigma**2
        return (math.exp(s2) - 1.0) * math.exp(2.0 * self.mu + s2)


@dataclass(frozen=True)
class FrequencyDependentExponential:
    """Exponential claim sizes whose scale beta * exp(delta * n) depends on
    the number of claims n in the same period. delta > 0 means crowded
    periods carry larger claims; delta = 0 recovers plain Exponential(beta).
    """

    beta: float
    delta: float

    def __post_init__(self):
        _require(self.beta > 0.0, f"base scale must be positive, got {self.beta}")
        _require(np.isfinite(self.delta), "dependence delta must be finite")

    def scale_for(self, n_claims):
        return self.beta * np.exp(self.delta * np.asarray(n_claims, dtype=float))

    def sample_claims(self, rng, counts):
        counts = np.asarray(counts)
        total = int(np.sum(counts))
        scales = np.repeat(self.scale_for(counts), counts)
        return rng.standard_exponential(total) * scales

    def log_density(self, x, n_claims=0):
        x = np.asarray(x)
        scale = float(self.scale_for(n_claims))
        return np.where(x >= 0, -x / scale - math.log(scale), -np.inf)

    def mean(self, n_claims=0):
        return float(self.scale_for(n_claims))

    def variance(self, n_claims=0):
        return float(self.scale_for(n_claims)) ** 2


# ---------------------------------------------------------------------------
# registry and generic entry points

# config kind -> (class, parameter names in theta order)
FREQUENCY_KINDS = {
    "geometric": (Geometric, ("p",)),
    "poisson": (Poisson, ("lam",)),
    "negbin": (NegativeBinomial, ("alpha", "p")),
    "bivariate-mixed-poisson": (BivariateMixedPoisson, ("sigma", "w1", "w2")),
    "cyclical-poisson": (CyclicalPoisson, ("a", "b", "c")),
}

SEVERITY_KINDS = {
    "exponential": (Exponential, ("delta",)),
    "gamma": (Gamma, ("r", "m")),
    "weibull": (Weibull, ("k", "beta")),
    "lognormal": (LogNormal, ("mu", "sigma")),
    "dep-exp": (FrequencyDependentExponential, ("beta", "delta")),
}


def sample_frequency(fam, period_index, rng):
    """One claim count for the given period (bivariate families give a pair)."""
    if isinstance(fam, CyclicalPoisson):
        return int(rng.poisson(fam.period_mean(period_index)))
    out = fam.sample_counts(rng, 1)[0]
    if isinstance(fam, BivariateMixedPoisson):
        return out
    return int(out)


def sample_severity(fam, n_claims, rng):
    """The n_claims individual claim sizes for one period."""
    return fam.sample_claims(rng, np.array([n_claims]))


def log_mass_or_density(fam, value, period=1, n_claims=0):
    """Log pmf (counts) or log pdf (claim sizes); -inf outside the support.

    period is honoured by the cyclical family, n_claims by the
    frequency-dependent severity; both are ignored elsewhere.
    """
    if isinstance(fam, CyclicalPoisson):
        return fam.log_mass(value, period)
    if isinstance(fam, FrequencyDependentExponential):
        return fam.log_density(value, n_claims)
    if isinstance(fam, BivariateMixedPoisson):
        return fam.log_mass(value)
    if hasattr(fam, "log_mass"):
        return fam.log_mass(value)
    return fam.log_density(value)


# ---------------------------------------------------------------------------
# priors


@dataclass(frozen=True)
class PriorBox:
    """Independent uniform priors on a box, one named component per axis."""

    names: tuple
    lows: tuple
    highs: tuple

    def __post_init__(self):
        if not (len(self.names) == len(self.lows) == len(self.highs) > 0):
            raise ValueError("names, lows and highs must have equal positive length")
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"duplicate parameter names in {self.names}")
        for name, lo, hi in zip(self.names, self.lows, self.highs):
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError(f"prior for {name!r} needs finite low < high, got ({lo}, {hi})")
        object.__setattr__(self, "lows", tuple(float(v) for v in self.lows))
        object.__setattr__(self, "highs", tuple(float(v) for v in self.highs))

    @property
    def dim(self):
        return len(self.names)

    @property
    def volume(self):
        return float(np.prod(np.subtract(self.highs, self.lows)))

    def sample(self, rng):
        lo = np.asarray(self.lows)
        return lo + rng.random(self.dim) * (np.asarray(self.highs) - lo)

    def density(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            raise ValueError(f"theta must have shape ({self.dim},), got {theta.shape}")
        inside = np.all(theta >= self.lows) and np.all(theta <= self.highs)
        return 1.0 / self.volume if inside else 0.0

    def range(self, name):
        i = self.names.index(name)
        return self.lows[i], self.highs[i]
