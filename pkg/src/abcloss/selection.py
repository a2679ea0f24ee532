"""Posterior model probabilities by simulation-based rejection or SMC.

The accept-reject variant draws (model, parameters, data) from the joint
prior and reports acceptance shares inside a fixed tolerance ball. The SMC
variant shares the adaptive engine: the model label is always drawn from the
model prior (so no model dies out merely for being unpopular in an early
generation), parameters come from that model's previous-generation mixture,
and one joint tolerance is tightened so half of each fresh generation
survives, counting particles equally across models (see count_epsilon).
"""

from dataclasses import dataclass, replace
import math
import time

import numpy as np

from .distances import PreparedDistance
from .errors import StallError
from .smc import (
    DEFAULT_PROPOSAL_BUDGET,
    ModelGroup,
    Population,
    _GenContext,
    _map_slots,
    _run_engine,
)

__all__ = ["ModelEnsemble", "SelectionResult", "run_ar_selection", "run_smc_selection"]


@dataclass(frozen=True)
class ModelEnsemble:
    """Candidate models with their priors and a prior over model labels."""

    names: tuple
    models: tuple
    priors: tuple
    model_prior: tuple = None

    def __post_init__(self):
        m = len(self.models)
        if not (m >= 1 and len(self.names) == len(self.priors) == m):
            raise ValueError("names, models and priors must have equal positive length")
        if len(set(self.names)) != m:
            raise ValueError(f"duplicate model names in {self.names}")
        if self.model_prior is None:
            object.__setattr__(self, "model_prior", tuple([1.0 / m] * m))
        prior = np.asarray(self.model_prior, dtype=float)
        if prior.shape != (m,) or np.any(prior <= 0) or abs(float(prior.sum()) - 1.0) > 1e-9:
            raise ValueError("model_prior must be positive and sum to 1")

    @property
    def size(self):
        return len(self.models)


@dataclass
class SelectionResult:
    """Model probabilities per generation plus the final labeled particles."""

    model_names: tuple
    param_names: tuple  # tuple of per-model name tuples
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
    def model_prob_trace(self):
        return np.array([p.model_probs for p in self.populations])

    @property
    def model_probs(self):
        return self.populations[-1].model_probs


def run_smc_selection(ensemble, observed, dist_spec, n_particles, generations,
                      seed=0, workers=1, proposal_budget=DEFAULT_PROPOSAL_BUDGET):
    """Adaptive-tolerance model choice; a single-model ensemble reproduces
    run_smc exactly (same seed, same particles)."""
    prepared = PreparedDistance(dist_spec, observed)
    pops, eps_t, ess_t, acc_t, secs = _run_engine(
        list(ensemble.models), list(ensemble.priors), np.asarray(ensemble.model_prior),
        prepared, n_particles, generations, seed, workers, proposal_budget,
    )
    return SelectionResult(
        tuple(ensemble.names), tuple(p.names for p in ensemble.priors),
        pops, eps_t, ess_t, acc_t, secs, seed, n_particles, generations,
    )


def run_ar_selection(ensemble, observed, dist_spec, epsilon, n_particles, seed=0,
                     workers=1, proposal_budget=DEFAULT_PROPOSAL_BUDGET):
    """Accept-reject model choice inside the closed tolerance ball.

    Draws from the joint prior until n_particles land within distance
    epsilon of the observed data; the posterior probability of a model is
    its share of the accepted draws. epsilon may be inf, in which case every
    draw is accepted and the shares estimate the model prior.
    """
    if n_particles < 10:
        raise ValueError(f"need at least 10 accepted draws, got {n_particles}")
    if not epsilon > 0:
        raise ValueError(f"tolerance must be positive (or inf), got {epsilon}")
    tic = time.perf_counter()
    prepared = PreparedDistance(dist_spec, observed)
    n_models = ensemble.size
    for model, prior in zip(ensemble.models, ensemble.priors):
        if tuple(model.param_names) != tuple(prior.names):
            raise ValueError("model parameters do not match prior components")
        if model.horizon != prepared.t:
            raise ValueError(f"model horizon {model.horizon} != observed periods {prepared.t}")
    model_cum = None
    if n_models > 1:
        model_cum = np.cumsum(np.asarray(ensemble.model_prior))
        model_cum[-1] = 1.0
    gate_shortcut = tuple(prepared.has_gate and m.zeros_from_counts for m in ensemble.models)
    slot_budget = max(1, int(proposal_budget) // n_particles)
    # closed ball: express d <= eps through the engine's strict-< gate
    unbounded = math.isinf(epsilon)
    eps_gate = math.inf if unbounded else float(np.nextafter(epsilon, math.inf))
    ctx = _GenContext(
        seed, 1, tuple(ensemble.models), tuple(ensemble.priors), tuple(ensemble.priors),
        model_cum, prepared, eps_gate, slot_budget, gate_shortcut, accept_all=unbounded,
    )
    rows = _map_slots(ctx, range(n_particles), workers)
    cap = slot_budget
    while True:
        stalled = [k for k in range(n_particles) if rows[k][0] < 0]
        if not stalled:
            break
        spent = sum(rows[k][5] for k in range(n_particles) if rows[k][0] >= 0)
        cap *= 2
        if spent + len(stalled) * cap > proposal_budget:
            raise StallError(
                f"proposal budget {proposal_budget} exhausted with {len(stalled)} of "
                f"{n_particles} slots unfilled (tolerance {epsilon:.6g})",
                1, [], [], [],
            )
        retry = replace(ctx, slot_budget=cap)
        for k, row in zip(stalled, _map_slots(retry, stalled, workers)):
            rows[k] = row
    attempts = sum(row[5] for row in rows)
    groups = []
    weight = 1.0 / n_particles
    for m in range(n_models):
        mine = [row for row in rows if row[0] == m]
        d = ensemble.priors[m].dim
        groups.append(
            ModelGroup(
                thetas=np.array([r[1] for r in mine]).reshape(len(mine), d),
                distances=np.array([r[2] for r in mine]),
                prior_densities=np.array([r[3] for r in mine]),
                proposal_densities=np.array([r[4] for r in mine]),
                weights=np.full(len(mine), weight),
            )
        )
    model_probs = np.array([g.size for g in groups], dtype=float) / n_particles
    pop = Population(1, epsilon, float(n_particles), model_probs, groups)
    return SelectionResult(
        tuple(ensemble.names), tuple(p.names for p in ensemble.priors),
        [pop], [epsilon], [float(n_particles)], [n_particles / attempts],
        [time.perf_counter() - tic], seed, n_particles, 1,
    )
