"""Adaptive sequential Monte Carlo sampler for likelihood-free calibration.

Generation 1 proposes parameters from the prior at infinite tolerance; each
later generation proposes from a weighted Gaussian-mixture smoothing of the
previous one, accepts draws whose synthetic data lands strictly inside the
previous tolerance, pools them with the recycled survivors, and tightens the
tolerance until the effective sample size of the pooled importance weights
sits at half the per-generation particle count.

Slot k of generation g draws from its own counter-based stream seeded by
(master seed, g, k), so results are bit-identical no matter how many worker
processes share the load or in which order slots finish.
"""

from dataclasses import dataclass, replace
import logging
import math
import multiprocessing
import os
import time

import numpy as np
from scipy.linalg import solve_triangular

from .distances import REJECT, PreparedDistance
from .errors import ParameterDomainError, StallError

logger = logging.getLogger(__name__)

__all__ = [
    "DEFAULT_PROPOSAL_BUDGET",
    "ess",
    "combined_ess",
    "weighted_quantile",
    "select_epsilon",
    "count_epsilon",
    "KdeProposal",
    "fit_kde",
    "kde_density",
    "kde_sample",
    "ModelGroup",
    "Population",
    "FitResult",
    "run_smc",
]

DEFAULT_PROPOSAL_BUDGET = 10_000_000


def ess(weights):
    """Effective sample size 1 / sum(w^2) of a normalized weight vector."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must form a nonempty 1-d vector")
    if np.any(w < 0) or abs(float(w.sum()) - 1.0) > 1e-9:
        raise ValueError("weights must be nonnegative and sum to 1")
    return 1.0 / float(np.sum(w * w))


def weighted_quantile(values, weights, q):
    """Quantile(s) of a weighted sample: smallest value whose cumulative
    weight reaches q. Weights need not be normalized."""
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if v.shape != w.shape or v.ndim != 1 or v.size == 0:
        raise ValueError("values and weights must be matching nonempty 1-d arrays")
    if np.any(w < 0) or not w.sum() > 0:
        raise ValueError("weights must be nonnegative with a positive sum")
    order = np.argsort(v, kind="stable")
    cum = np.cumsum(w[order])
    cum /= cum[-1]
    idx = np.minimum(np.searchsorted(cum, np.asarray(q, dtype=float)), v.size - 1)
    return v[order][idx]


def combined_ess(weights, labels=None, n_models=1):
    """Sum over models of the effective sample size of that model's weights.

    Weights carry one global normalization; the per-model ESS
    (sum w)^2 / sum(w^2) is invariant to it, and for a single model the
    total reduces to the plain 1 / sum(w^2).
    """
    w = np.asarray(weights, dtype=float)
    if labels is None or n_models == 1:
        sq = float(np.sum(w * w))
        return (float(w.sum()) ** 2 / sq) if sq > 0 else 0.0
    tot = np.bincount(labels, weights=w, minlength=n_models)
    sq = np.bincount(labels, weights=w * w, minlength=n_models)
    mask = sq > 0
    return float(np.sum(tot[mask] ** 2 / sq[mask]))


def _epsilon_scan(distances, ratios, labels, n_models, target):
    """Smallest candidate tolerance keeping the combined ESS >= target.

    Candidates are the distinct realized distances; if none reaches the
    target the ESS-maximizing candidate wins. Returns (eps, ess_at_eps).
    """
    order = np.argsort(distances, kind="stable")
    d_sorted = distances[order]
    r = ratios[order]
    lab = labels[order] if labels is not None else np.zeros(r.size, dtype=np.int64)
    cum_w = np.empty((n_models, r.size))
    cum_s = np.empty((n_models, r.size))
    for m in range(n_models):
        rm = np.where(lab == m, r, 0.0)
        cum_w[m] = np.cumsum(rm)
        cum_s[m] = np.cumsum(rm * rm)
    with np.errstate(divide="ignore", invalid="ignore"):
        per_model = np.where(cum_s > 0, cum_w**2 / cum_s, 0.0)
    ess_at = per_model.sum(axis=0)
    # last index of each run of equal distances = that candidate's survivor set
    last = np.nonzero(np.diff(d_sorted, append=np.inf) != 0)[0]
    ess_c = ess_at[last]
    reaches = ess_c >= target
    pick = int(np.argmax(reaches)) if reaches.any() else int(np.argmax(ess_c))
    return float(d_sorted[last[pick]]), float(ess_c[pick])


def select_epsilon(distances, ratios, n_particles, eps_prev=math.inf, labels=None, n_models=1):
    """Tolerance for the next weight update, never above the previous one.

    distances and ratios (prior density / proposal density) describe the
    pooled particles; the target effective sample size is n_particles / 2.
    """
    d = np.asarray(distances, dtype=float)
    r = np.asarray(ratios, dtype=float)
    if d.shape != r.shape or d.ndim != 1 or d.size == 0:
        raise ValueError("distances and ratios must be matching nonempty 1-d arrays")
    eps, _ = _epsilon_scan(d, r, labels, n_models, n_particles / 2.0)
    return min(eps, eps_prev)


def count_epsilon(distances, target):
    """Smallest distance value that at least `target` of the inputs reach.

    Order-statistic form of the tolerance rule under uniform weights, used
    when several candidate models share one schedule: importance ratios are
    not comparable across models (a concentrated proposal spreads its ratios
    over orders of magnitude while a diffuse one keeps them flat), so a
    ratio-weighted scan lets whichever model has the flattest ratios pin the
    tolerance. Counting survivors weighs every model's particle equally.
    """
    d = np.asarray(distances, dtype=float)
    if d.ndim != 1 or d.size == 0:
        raise ValueError("distances must be a nonempty 1-d array")
    k = min(int(math.ceil(target)), d.size) - 1
    if k < 0:
        raise ValueError("target must be positive")
    return float(np.partition(d, k)[k])


# ---------------------------------------------------------------------------
# weighted Gaussian-mixture proposal


@dataclass
class KdeProposal:
    """Equal-bandwidth Gaussian mixture over weighted particle centers."""

    centers: np.ndarray
    weights: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float)
        self.cov = np.asarray(self.cov, dtype=float)
        d = self.centers.shape[1]
        try:
            chol = np.linalg.cholesky(self.cov)
        except np.linalg.LinAlgError:
            jitter = 1e-10 * float(np.trace(self.cov)) / d
            if jitter <= 0:
                raise ValueError("mixture bandwidth is singular with zero trace") from None
            logger.warning("singular mixture bandwidth; adding %.3g to the diagonal", jitter)
            self.cov = self.cov + jitter * np.eye(d)
            chol = np.linalg.cholesky(self.cov)
        self._chol = chol
        self._inv_chol = solve_triangular(chol, np.eye(d), lower=True)
        self._log_norm = d / 2.0 * math.log(2.0 * math.pi) + float(np.sum(np.log(np.diag(chol))))
        self._cum = np.cumsum(self.weights)
        self._cum[-1] = 1.0

    @property
    def dim(self):
        return self.centers.shape[1]

    def sample(self, rng):
        i = int(np.searchsorted(self._cum, rng.random(), side="right"))
        return self.centers[i] + self._chol @ rng.standard_normal(self.dim)

    def density(self, theta):
        diff = self.centers - np.asarray(theta, dtype=float)
        z = diff @ self._inv_chol.T
        q = np.einsum("ij,ij->i", z, z)
        return float(np.dot(self.weights, np.exp(-0.5 * q - self._log_norm)))


def fit_kde(thetas, weights):
    """Mixture proposal with bandwidth twice the weighted covariance."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    weights = np.asarray(weights, dtype=float)
    if thetas.shape[0] != weights.size:
        raise ValueError("one weight per particle is required")
    if thetas.shape[0] < 2 or not np.any(np.ptp(thetas, axis=0) > 0):
        raise ValueError("mixture fit needs at least two distinct particles")
    if np.any(weights < 0) or abs(float(weights.sum()) - 1.0) > 1e-9:
        raise ValueError("weights must be nonnegative and sum to 1")
    mu = weights @ thetas
    diff = thetas - mu
    cov = (weights[:, None] * diff).T @ diff
    return KdeProposal(thetas, weights, 2.0 * cov)


def kde_density(kde, theta):
    """Mixture density at theta."""
    return kde.density(theta)


def kde_sample(kde, rng):
    """One draw from the mixture."""
    return kde.sample(rng)


def _single_center_proposal(theta, prior):
    # lone survivor: borrow a diagonal bandwidth from the prior ranges
    sd = 0.05 * (np.asarray(prior.highs) - np.asarray(prior.lows))
    return KdeProposal(np.asarray(theta)[None, :], np.ones(1), np.diag(sd**2))


# ---------------------------------------------------------------------------
# worker side


@dataclass(frozen=True)
class _GenContext:
    seed: int
    gen: int
    models: tuple
    priors: tuple
    proposals: tuple
    model_cum: np.ndarray  # None for a single model
    dist: PreparedDistance
    eps_prev: float
    slot_budget: int
    gate_shortcut: tuple
    accept_all: bool = False  # closed ball at infinite tolerance


_CTX = None


def _init_worker(ctx):
    global _CTX
    _CTX = ctx


def _slot_rng(seed, gen, slot):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, gen, slot))))


def _run_slot(k):
    """Propose until one particle is accepted; self-contained per slot."""
    ctx = _CTX
    rng = _slot_rng(ctx.seed, ctx.gen, k)
    n_models = len(ctx.models)
    attempts = 0
    sims = 0
    while attempts < ctx.slot_budget:
        attempts += 1
        m = 0
        if ctx.model_cum is not None:
            m = min(int(np.searchsorted(ctx.model_cum, rng.random(), side="right")), n_models - 1)
        theta = ctx.proposals[m].sample(rng)
        prior_den = ctx.priors[m].density(theta)
        if prior_den <= 0.0:
            continue
        try:
            model = ctx.models[m]
            counts = model.simulate_counts(theta, rng)
            if ctx.gate_shortcut[m] and not ctx.dist.gate_from_counts(counts):
                d = REJECT  # gate already failed; severities cannot change that
            else:
                values = model.finish(theta, counts, rng)
                sims += 1
                d = ctx.dist(values)
        except ParameterDomainError:
            continue  # box boundary can touch the family domain edge
        if ctx.accept_all or d < ctx.eps_prev:
            return m, theta, d, prior_den, ctx.proposals[m].density(theta), attempts, sims
    return -1, None, math.inf, 0.0, 0.0, attempts, sims


def _map_slots(ctx, slots, workers):
    if workers <= 1:
        _init_worker(ctx)
        return [_run_slot(k) for k in slots]
    method = "fork" if "fork" in multiprocessing.get_all_start_methods() else "spawn"
    mp = multiprocessing.get_context(method)
    with mp.Pool(workers, initializer=_init_worker, initargs=(ctx,)) as pool:
        return pool.map(_run_slot, slots, chunksize=max(1, len(slots) // (4 * workers)))


# ---------------------------------------------------------------------------
# results


@dataclass
class ModelGroup:
    """Pooled particles of one model within a generation."""

    thetas: np.ndarray
    distances: np.ndarray
    prior_densities: np.ndarray
    proposal_densities: np.ndarray
    weights: np.ndarray  # globally normalized across all groups

    @property
    def size(self):
        return self.distances.size


@dataclass
class Population:
    """One generation's pooled, weighted particle population."""

    generation: int
    epsilon: float
    ess: float
    model_probs: np.ndarray
    groups: list

    @property
    def size(self):
        return int(sum(g.size for g in self.groups))


@dataclass
class FitResult:
    """Posterior sample and per-generation traces of a single-model run."""

    param_names: tuple
    populations: list
    eps_trace: list
    ess_trace: list
    acceptance_trace: list
    seconds: list
    seed: int
    n_particles: int
    generations: int

    @property
    def population(self):
        return self.populations[-1]

    @property
    def thetas(self):
        return self.population.groups[0].thetas

    @property
    def weights(self):
        return self.population.groups[0].weights

    @property
    def distances(self):
        return self.population.groups[0].distances


# ---------------------------------------------------------------------------
# driver


def _resolve_workers(workers):
    if workers is None or workers <= 0:
        return os.cpu_count() or 1
    return int(workers)


def _run_engine(models, priors, model_prior, prepared, K, G, seed, workers, budget):
    if K < 10:
        raise ValueError(f"need at least 10 particles per generation, got {K}")
    if G < 1:
        raise ValueError(f"need at least one generation, got {G}")
    n_models = len(models)
    for model, prior in zip(models, priors):
        if tuple(model.param_names) != tuple(prior.names):
            raise ValueError(
                f"model parameters {model.param_names} do not match prior components {prior.names}"
            )
        if model.horizon != prepared.t:
            raise ValueError(f"model horizon {model.horizon} != observed periods {prepared.t}")
    workers = _resolve_workers(workers)
    slot_budget = max(1, int(budget) // K)
    model_cum = None
    if n_models > 1:
        model_cum = np.cumsum(model_prior)
        model_cum[-1] = 1.0
    gate_shortcut = tuple(prepared.has_gate and m.zeros_from_counts for m in models)

    proposals = list(priors)
    eps_prev = math.inf
    prev_groups = None
    populations = []
    eps_trace, ess_trace, acc_trace, secs = [], [], [], []

    for g in range(1, G + 1):
        tic = time.perf_counter()
        ctx = _GenContext(
            seed, g, tuple(models), tuple(priors), tuple(proposals), model_cum,
            prepared, eps_prev, slot_budget, gate_shortcut,
        )
        rows = _map_slots(ctx, range(K), workers)
        # An unlucky slot may exhaust its share of the budget even when the
        # generation as a whole is far under it.  Rerun stalled slots with a
        # doubled cap (replaying the same stream, so counts replace rather
        # than add) until every slot accepts or the generation budget is hit.
        cap = slot_budget
        while True:
            stalled = [k for k in range(K) if rows[k][0] < 0]
            if not stalled:
                break
            spent = sum(rows[k][5] for k in range(K) if rows[k][0] >= 0)
            cap *= 2
            if spent + len(stalled) * cap > budget:
                raise StallError(
                    f"generation {g}: proposal budget {budget} exhausted with "
                    f"{len(stalled)} of {K} slots unfilled (tolerance {eps_prev:.6g})",
                    g, eps_trace, ess_trace, acc_trace,
                )
            retry = replace(ctx, slot_budget=cap)
            for k, row in zip(stalled, _map_slots(retry, stalled, workers)):
                rows[k] = row
        attempts = sum(row[5] for row in rows)

        new = [[] for _ in range(n_models)]
        for row in rows:
            new[row[0]].append(row)
        pooled = []
        for m in range(n_models):
            th = [r[1] for r in new[m]]
            parts = {
                "thetas": np.array(th).reshape(len(th), priors[m].dim),
                "distances": np.array([r[2] for r in new[m]]),
                "prior_densities": np.array([r[3] for r in new[m]]),
                "proposal_densities": np.array([r[4] for r in new[m]]),
            }
            if prev_groups is not None:
                prev = prev_groups[m]
                parts = {
                    "thetas": np.vstack([prev["thetas"], parts["thetas"]]),
                    "distances": np.concatenate([prev["distances"], parts["distances"]]),
                    "prior_densities": np.concatenate([prev["prior_densities"], parts["prior_densities"]]),
                    "proposal_densities": np.concatenate([prev["proposal_densities"], parts["proposal_densities"]]),
                }
            pooled.append(parts)

        dist_all = np.concatenate([p["distances"] for p in pooled])
        ratio_all = np.concatenate(
            [p["prior_densities"] / p["proposal_densities"] for p in pooled]
        )
        labels = np.repeat(np.arange(n_models), [p["distances"].size for p in pooled])
        if n_models > 1:
            # Joint schedule across models: pace the tolerance by survivor
            # count over the fresh generation (see count_epsilon for why
            # ratio-weighted ESS cannot be compared across models).
            eps_g = count_epsilon(np.array([row[2] for row in rows]), K / 2.0)
        else:
            eps_g, _ = _epsilon_scan(dist_all, ratio_all, labels, n_models, K / 2.0)
        eps_g = min(eps_g, eps_prev)

        w_all = ratio_all * (dist_all <= eps_g)
        w_all /= w_all.sum()
        comb = combined_ess(w_all, labels, n_models)
        model_probs = np.bincount(labels, weights=w_all, minlength=n_models)

        groups = []
        offset = 0
        for m in range(n_models):
            n_m = pooled[m]["distances"].size
            groups.append(ModelGroup(weights=w_all[offset : offset + n_m], **pooled[m]))
            offset += n_m
        populations.append(Population(g, eps_g, comb, model_probs, groups))

        eps_trace.append(eps_g)
        ess_trace.append(comb)
        acc_trace.append(K / attempts)
        secs.append(time.perf_counter() - tic)
        logger.info(
            "generation %d/%d: eps=%.6g ess=%.1f acceptance=%.4f pooled=%d (%.1fs)",
            g, G, eps_g, comb, acc_trace[-1], populations[-1].size, secs[-1],
        )

        if g == G:
            break

        prev_groups = []
        proposals = []
        for m, grp in enumerate(groups):
            keep = grp.weights > 0
            kept = {
                "thetas": grp.thetas[keep],
                "distances": grp.distances[keep],
                "prior_densities": grp.prior_densities[keep],
                "proposal_densities": grp.proposal_densities[keep],
            }
            prev_groups.append(kept)
            n_kept = int(keep.sum())
            if n_kept >= 2:
                w_m = grp.weights[keep]
                try:
                    proposals.append(fit_kde(kept["thetas"], w_m / w_m.sum()))
                    continue
                except ValueError:
                    pass  # coincident particles; fall through to the prior
            if n_kept == 1:
                logger.warning("model %d: single survivor at generation %d; borrowing prior-range bandwidth", m, g)
                proposals.append(_single_center_proposal(kept["thetas"][0], priors[m]))
            else:
                logger.warning("model %d: no usable survivors at generation %d; proposing from the prior", m, g)
                proposals.append(priors[m])
        eps_prev = eps_g

    return populations, eps_trace, ess_trace, acc_trace, secs


def run_smc(model, prior, observed, dist_spec, n_particles, generations, seed=0,
            workers=1, proposal_budget=DEFAULT_PROPOSAL_BUDGET):
    """Calibrate one loss model against observed aggregated data.

    Returns a FitResult whose final population carries the pooled particles,
    their globally normalized importance weights, and per-generation traces
    of tolerance, effective sample size, acceptance rate and wall time.
    """
    prepared = PreparedDistance(dist_spec, observed)
    pops, eps_t, ess_t, acc_t, secs = _run_engine(
        [model], [prior], np.ones(1), prepared, n_particles, generations,
        seed, workers, proposal_budget,
    )
    return FitResult(
        tuple(prior.names), pops, eps_t, ess_t, acc_t, secs, seed, n_particles, generations
    )
