"""Loss models: frequency + severity + a per-period summary operator.

A LossModel binds family parameters to a named theta vector so the sampler
can propose parameter points and simulate aggregated data from them. Counts
can instead be pinned to observed frequencies, in which case they are used
verbatim and the frequency family plays no role.
"""

from dataclasses import dataclass
import math

import numpy as np

from .families import (
    FREQUENCY_KINDS,
    SEVERITY_KINDS,
    BivariateMixedPoisson,
    CyclicalPoisson,
)

__all__ = [
    "Sum",
    "QuotaShare",
    "StopLoss",
    "BivariatePairOfSums",
    "TimeIndexedSum",
    "SUMMARY_KINDS",
    "FamilySpec",
    "LossModel",
    "apply_summary",
    "simulate",
    "integrated_intensity",
    "segment_sums",
]


# ---------------------------------------------------------------------------
# summary operators (claim sizes of one period -> one reported number)


@dataclass(frozen=True)
class Sum:
    kind = "sum"

    def apply_to_sums(self, sums):
        return sums


@dataclass(frozen=True)
class QuotaShare:
    """Retained share alpha of the period total."""

    alpha: float
    kind = "quota-share"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"quota share alpha must lie in (0, 1), got {self.alpha}")

    def apply_to_sums(self, sums):
        return self.alpha * sums


@dataclass(frozen=True)
class StopLoss:
    """Period total in excess of the priority c."""

    c: float
    kind = "stop-loss"

    def __post_init__(self):
        if not (np.isfinite(self.c) and self.c >= 0.0):
            raise ValueError(f"stop-loss priority must be finite and >= 0, got {self.c}")

    def apply_to_sums(self, sums):
        return np.maximum(sums - self.c, 0.0)


@dataclass(frozen=True)
class BivariatePairOfSums:
    kind = "bivariate-sums"


@dataclass(frozen=True)
class TimeIndexedSum:
    """Plain period total for series meant to be compared in time order."""

    kind = "time-indexed-sum"

    def apply_to_sums(self, sums):
        return sums


SUMMARY_KINDS = {
    "sum": Sum,
    "quota-share": QuotaShare,
    "stop-loss": StopLoss,
    "bivariate-sums": BivariatePairOfSums,
    "time-indexed-sum": TimeIndexedSum,
}

# zero output <=> zero claim count, for a.s.-positive severities
_ZEROS_FROM_COUNTS = (Sum, QuotaShare, TimeIndexedSum, BivariatePairOfSums)


def apply_summary(op, claims):
    """Summary of a single period's claim sizes (pure, no randomness).

    For the bivariate pair of sums, claims is a (first, second) pair of
    sequences and the result is the pair of totals.
    """
    if isinstance(op, BivariatePairOfSums):
        u, v = claims
        return float(np.sum(u)), float(np.sum(v))
    return float(op.apply_to_sums(np.sum(claims)))


def segment_sums(values, counts):
    """Per-period totals of a flat claim array split by per-period counts."""
    csum = np.concatenate(([0.0], np.cumsum(values)))
    ends = np.cumsum(counts)
    return csum[ends] - csum[ends - counts]


# ---------------------------------------------------------------------------
# parameter binding


@dataclass(frozen=True)
class FamilySpec:
    """A family kind plus per-parameter bindings.

    Each parameter maps either to a fixed number or to the name of a theta
    component, e.g. FamilySpec("weibull", {"k": "k", "beta": 1.0}).
    """

    kind: str
    params: dict


class _Binding:
    def __init__(self, spec, registry, param_names, role):
        if spec.kind not in registry:
            raise ValueError(f"unknown {role} family kind {spec.kind!r}; expected one of {sorted(registry)}")
        self.cls, arg_names = registry[spec.kind]
        extra = set(spec.params) - set(arg_names)
        missing = set(arg_names) - set(spec.params)
        if extra or missing:
            raise ValueError(
                f"{role} family {spec.kind!r} takes parameters {arg_names}; "
                f"missing {sorted(missing)}, unexpected {sorted(extra)}"
            )
        self.arg_names = arg_names
        fixed, idx = [], []
        for name in arg_names:
            v = spec.params[name]
            if isinstance(v, str):
                if v not in param_names:
                    raise ValueError(f"{role} parameter {name!r} references unknown theta component {v!r}")
                fixed.append(0.0)
                idx.append(param_names.index(v))
            else:
                fixed.append(float(v))
                idx.append(-1)
        self.fixed = np.array(fixed)
        self.theta_idx = np.array(idx)
        self.bound_names = tuple(v for v in spec.params.values() if isinstance(v, str))

    def build(self, theta):
        if np.all(self.theta_idx < 0):
            return self.cls(*self.fixed.tolist())
        # -1 marks fixed slots; clamp so the gather stays in bounds there
        args = np.where(self.theta_idx < 0, self.fixed,
                        np.asarray(theta)[np.maximum(self.theta_idx, 0)])
        return self.cls(*args.tolist())


def _as_spec(value):
    if isinstance(value, FamilySpec):
        return value
    kind, params = value
    return FamilySpec(kind, dict(params))


class LossModel:
    """Generative program for t periods of aggregated loss data.

    Parameters
    ----------
    params : tuple of theta component names, defining the theta layout.
    severity : FamilySpec, or a pair of them for the bivariate summary.
    summary : summary operator instance.
    frequency : FamilySpec for the claim-count family; ignored when
        observed_frequencies is given.
    horizon : number of periods t (inferred from observed_frequencies).
    observed_frequencies : observed claim counts used verbatim, shape (t,)
        or (t, 2) for the bivariate model.
    """

    def __init__(self, params, severity, summary, frequency=None, horizon=None,
                 observed_frequencies=None):
        self.param_names = tuple(params)
        self.summary = summary
        self.bivariate = isinstance(summary, BivariatePairOfSums)

        if observed_frequencies is not None:
            counts = np.asarray(observed_frequencies)
            if counts.ndim != (2 if self.bivariate else 1):
                raise ValueError("observed frequency shape does not match the summary operator")
            if counts.size == 0 or np.any(counts < 0) or not np.issubdtype(counts.dtype, np.integer):
                raise ValueError("observed frequencies must be nonnegative integers")
            if horizon is not None and horizon != len(counts):
                raise ValueError(f"horizon {horizon} conflicts with {len(counts)} observed periods")
            horizon = len(counts)
            self.observed_frequencies = counts
            self._freq = None
        else:
            if frequency is None:
                raise ValueError("a frequency family is required without observed frequencies")
            self.observed_frequencies = None
            self._freq = _Binding(_as_spec(frequency), FREQUENCY_KINDS, self.param_names, "frequency")
            freq_bivariate = self._freq.cls is BivariateMixedPoisson
            if freq_bivariate != self.bivariate:
                raise ValueError("bivariate frequency and bivariate summary must be used together")
        if horizon is None or int(horizon) < 1:
            raise ValueError("horizon must be a positive number of periods")
        self.horizon = int(horizon)

        if self.bivariate:
            try:
                sev1, sev2 = severity
            except TypeError:
                raise ValueError("the bivariate summary needs a pair of severity families") from None
            self._sev = (
                _Binding(_as_spec(sev1), SEVERITY_KINDS, self.param_names, "severity"),
                _Binding(_as_spec(sev2), SEVERITY_KINDS, self.param_names, "severity"),
            )
        else:
            self._sev = (_Binding(_as_spec(severity), SEVERITY_KINDS, self.param_names, "severity"),)

        bound = [n for b in ((self._freq,) if self._freq else ()) + self._sev for n in b.bound_names]
        unused = set(self.param_names) - set(bound)
        if unused:
            raise ValueError(f"theta components {sorted(unused)} are not bound to any family parameter")

    # zero reported value <=> zero count, so the count draw alone decides
    # the zero-match gate (not true for StopLoss, where totals below c vanish)
    @property
    def zeros_from_counts(self):
        return isinstance(self.summary, _ZEROS_FROM_COUNTS)

    def simulate_counts(self, theta, rng):
        if self.observed_frequencies is not None:
            return self.observed_frequencies
        return self._freq.build(theta).sample_counts(rng, self.horizon)

    def finish(self, theta, counts, rng):
        """Severity draws and the summary, given the per-period counts."""
        if self.bivariate:
            x1 = segment_sums(self._sev[0].build(theta).sample_claims(rng, counts[:, 0]), counts[:, 0])
            x2 = segment_sums(self._sev[1].build(theta).sample_claims(rng, counts[:, 1]), counts[:, 1])
            return np.column_stack([x1, x2])
        sums = segment_sums(self._sev[0].build(theta).sample_claims(rng, counts), counts)
        return self.summary.apply_to_sums(sums)

    def simulate(self, theta, rng):
        """One synthetic dataset: shape (t,) or (t, 2) for the bivariate model."""
        return self.finish(theta, self.simulate_counts(theta, rng), rng)


def simulate(model, theta, rng):
    """Synthetic aggregated data from the model at parameter point theta."""
    return model.simulate(theta, rng)


def integrated_intensity(fam, period):
    """Expected count of the given period under a cyclical intensity."""
    if not isinstance(fam, CyclicalPoisson):
        raise TypeError("integrated intensity is defined for the cyclical Poisson family")
    return fam.period_mean(period)
