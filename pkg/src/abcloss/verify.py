"""Self-contained verification suites runnable from the command line.

Each suite re-derives expected behavior from an independent source (a
closed-form likelihood on a grid, brute-force enumeration, or an exact
distributional identity) and checks the library against it, writing a
report and any comparison figures to the chosen directory.
"""

import itertools
import math
import os
import time

import numpy as np

from .dataio import write_yaml
from .distances import DistanceSpec, distance, w1_hilbert, w1_sorted
from .families import PriorBox
from .hilbert import hilbert_index, hilbert_point
from .models import FamilySpec, LossModel, Sum
from .oracles import grid_posterior_geom_exp, w1_exact_bruteforce, w1_sample_vs_density
from .selection import ModelEnsemble, run_ar_selection, run_smc_selection
from .smc import run_smc, weighted_quantile

__all__ = ["SUITES", "run_suite"]


def _check(checks, name, passed, detail):
    checks.append({"name": name, "passed": bool(passed), "detail": detail})


def _w1_exact_planar(a, b):
    # brute force over pairings, Euclidean ground distance
    best = math.inf
    for perm in itertools.permutations(range(len(b))):
        cost = float(np.mean(np.hypot(*(a - b[list(perm)]).T)))
        best = min(best, cost)
    return best


def suite_geom_exp(outdir, seed=20):
    """Calibrate the geometric-exponential model and compare against the
    closed-form posterior evaluated on a grid."""
    checks = []
    truth = np.array([0.8, 5.0])
    prior = PriorBox(("p", "delta"), (0.0, 0.0), (1.0, 100.0))
    model = LossModel(
        params=("p", "delta"),
        frequency=FamilySpec("geometric", {"p": "p"}),
        severity=FamilySpec("exponential", {"delta": "delta"}),
        summary=Sum(),
        horizon=100,
    )
    obs = model.simulate(truth, np.random.default_rng(seed))
    fit = run_smc(model, prior, obs, DistanceSpec("univariate"),
                  n_particles=1000, generations=10, seed=seed)
    oracle = grid_posterior_geom_exp(obs)

    w, th = fit.weights, fit.thetas
    p_mean, d_mean = float(w @ th[:, 0]), float(w @ th[:, 1])
    _check(checks, "posterior mean of p matches the grid oracle",
           abs(p_mean - oracle.p_mean) <= 0.05,
           f"|{p_mean:.4f} - {oracle.p_mean:.4f}| <= 0.05")
    _check(checks, "posterior mean of delta matches the grid oracle",
           abs(d_mean - oracle.delta_mean) <= 1.0,
           f"|{d_mean:.4f} - {oracle.delta_mean:.4f}| <= 1.0")
    w1_p = w1_sample_vs_density(th[:, 0], w, oracle.p_grid, oracle.p_marginal)
    _check(checks, "W1 between p marginals", w1_p <= 0.03, f"{w1_p:.5f} <= 0.03")

    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(7.2, 3.0))
    for ax, i, grid, marg, name in (
        (axes[0], 0, oracle.p_grid, oracle.p_marginal, "p"),
        (axes[1], 1, oracle.delta_grid, oracle.delta_marginal, "delta"),
    ):
        lo = weighted_quantile(th[:, i], w, 0.0005)
        hi = weighted_quantile(th[:, i], w, 0.9995)
        ax.hist(th[:, i], bins=40, range=(lo, hi), weights=w, density=True,
                color="#4878b0", alpha=0.8, label="sampler")
        ax.plot(grid, marg, color="#b05048", label="closed form")
        ax.set_xlim(lo, hi)
        ax.set_xlabel(name)
        ax.set_yticks([])
        ax.legend(fontsize=7, frameon=False)
    fig.tight_layout()
    fig.savefig(os.path.join(outdir, "geom_exp_marginals.png"), dpi=130)
    plt.close(fig)
    return checks


def suite_distances(outdir, seed=20):
    """Distance computations against brute-force enumeration."""
    checks = []
    rng = np.random.default_rng(seed)

    ok, worst = True, 0.0
    for _ in range(30):
        a, b = rng.exponential(2.0, size=(2, 6))
        gap = abs(w1_sorted(a, b) - w1_exact_bruteforce(a, b))
        worst = max(worst, gap)
        ok &= gap < 1e-12
    _check(checks, "sorted pairing is the exact 1-d optimum (m=6, 30 draws)",
           ok, f"max |difference| = {worst:.2e}")

    ok, worst = True, math.inf
    for _ in range(20):
        a, b = rng.normal(size=(2, 5, 2))
        exact = _w1_exact_planar(a, b)
        approx = w1_hilbert(a, b)
        ok &= approx >= exact - 1e-9
        worst = min(worst, approx - exact)
    _check(checks, "curve-matched planar distance never beats brute force (m=5, 20 draws)",
           ok, f"min (matched - exact) = {worst:.2e}")

    spec = DistanceSpec("univariate")
    d = distance(np.array([0.0, 2.5, 0.0]), np.array([1.0, 2.0, 3.0]), spec)
    _check(checks, "zero-pattern gate rejects a mismatched sample",
           math.isinf(d), f"distance = {d}")

    ok = True
    for _ in range(20):
        x = np.concatenate([np.zeros(3), rng.exponential(1.0, 5)])
        y = np.concatenate([np.zeros(3), rng.exponential(1.0, 5)])
        rng.shuffle(x)
        rng.shuffle(y)
        dxy = distance(x, y, spec)
        ok &= abs(dxy - distance(y, x, spec)) < 1e-12  # symmetric
        ok &= distance(x, x, spec) == 0.0  # identical sample
        ok &= math.isfinite(dxy)
    _check(checks, "gate-matched samples give a finite symmetric distance",
           ok, "20 shuffled zero-inflated pairs")

    series = np.array([1.0, 3.0, 2.0])
    shuffled = np.array([3.0, 2.0, 1.0])
    d_inf = distance(series, shuffled, DistanceSpec("curve", gamma_mode="inf"))
    d_zero = distance(series, shuffled, DistanceSpec("curve", gamma_mode="zero"))
    _check(checks, "index matching feels a reordering, value matching does not",
           d_inf > 0.0 and d_zero == 0.0, f"index-matched {d_inf:.3f}, sorted {d_zero}")
    return checks


def suite_hilbert(outdir, seed=20):
    """Curve indexing against exhaustive enumeration at small orders."""
    checks = []
    ok = True
    for k in range(1, 6):
        n = 1 << k
        xs, ys = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        d = hilbert_index(xs.ravel(), ys.ravel(), k)
        ok &= np.array_equal(np.sort(d), np.arange(n * n))
        x2, y2 = hilbert_point(d, k)
        ok &= np.array_equal(x2, xs.ravel()) and np.array_equal(y2, ys.ravel())
    _check(checks, "bijective with exact inverse up to order 5", ok, "exhaustive")

    ok = True
    for k in range(1, 6):
        n = 1 << k
        x, y = hilbert_point(np.arange(n * n), k)
        steps = np.abs(np.diff(x)) + np.abs(np.diff(y))
        ok &= np.all(steps == 1)
    _check(checks, "consecutive positions are grid neighbors up to order 5", ok, "exhaustive")

    rng = np.random.default_rng(seed)
    x = rng.integers(0, 1 << 31, size=1000)
    y = rng.integers(0, 1 << 31, size=1000)
    x2, y2 = hilbert_point(hilbert_index(x, y, 31), 31)
    _check(checks, "round trip at order 31",
           np.array_equal(x, x2) and np.array_equal(y, y2), "1000 random points")
    return checks


def suite_selection(outdir, seed=20):
    """Model-choice machinery against exact reductions."""
    checks = []
    rng = np.random.default_rng(seed)
    prior = PriorBox(("p", "delta"), (0.0, 0.0), (1.0, 100.0))

    def make_model():
        return LossModel(
            params=("p", "delta"),
            frequency=FamilySpec("geometric", {"p": "p"}),
            severity=FamilySpec("exponential", {"delta": "delta"}),
            summary=Sum(),
            horizon=50,
        )

    obs = make_model().simulate(np.array([0.8, 5.0]), rng)
    spec = DistanceSpec("univariate")

    fit = run_smc(make_model(), prior, obs, spec, n_particles=200, generations=4, seed=seed)
    sel = run_smc_selection(
        ModelEnsemble(("only",), (make_model(),), (prior,)),
        obs, spec, n_particles=200, generations=4, seed=seed,
    )
    same = (
        np.array_equal(fit.thetas, sel.populations[-1].groups[0].thetas)
        and np.allclose(fit.weights, sel.populations[-1].groups[0].weights, rtol=0, atol=1e-15)
        and fit.eps_trace == sel.eps_trace
        and abs(float(sel.model_probs[0]) - 1.0) < 1e-12
    )
    _check(checks, "one-model choice reduces to the plain calibration run",
           same, "identical particles, weights and traces")

    ens = ModelEnsemble(
        ("first", "second"), (make_model(), make_model()), (prior, prior),
        model_prior=(0.3, 0.7),
    )
    ar = run_ar_selection(ens, obs, spec, epsilon=math.inf, n_particles=1000, seed=seed)
    gap = float(np.max(np.abs(ar.model_probs - np.array([0.3, 0.7]))))
    bound = 3.0 * math.sqrt(0.25 / 1000)
    _check(checks, "infinite tolerance recovers the model prior",
           gap <= bound, f"max |share - prior| = {gap:.4f} <= {bound:.4f}")

    sel2 = run_smc_selection(
        ModelEnsemble(("twin-a", "twin-b"), (make_model(), make_model()), (prior, prior)),
        obs, spec, n_particles=400, generations=4, seed=seed,
    )
    gap = abs(float(sel2.model_probs[0]) - 0.5)
    _check(checks, "identical twin models split the probability evenly",
           gap <= 0.15, f"|prob - 1/2| = {gap:.3f} <= 0.15")
    return checks


SUITES = {
    "geom-exp": suite_geom_exp,
    "distances": suite_distances,
    "hilbert": suite_hilbert,
    "selection": suite_selection,
}


def run_suite(name, outdir, seed=20, echo=print):
    """Run one suite, write its report, return True when everything passed."""
    os.makedirs(outdir, exist_ok=True)
    tic = time.perf_counter()
    checks = SUITES[name](outdir, seed=seed)
    passed = all(c["passed"] for c in checks)
    report = {
        "suite": name,
        "seed": seed,
        "passed": passed,
        "seconds": round(time.perf_counter() - tic, 3),
        "checks": checks,
    }
    write_yaml(os.path.join(outdir, f"report_{name}.yaml"), report)
    for c in checks:
        echo(f"{'ok  ' if c['passed'] else 'FAIL'} {name}: {c['name']} ({c['detail']})")
    return passed
