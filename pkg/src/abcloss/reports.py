"""Figure rendering for fit, selection and verification outputs.

Figures are written as PNG files next to the delimited output: posterior
marginals with the prior overlaid, per-generation sampler traces, and model
probability trajectories. Rendering uses the Agg backend so it works in
batch jobs without a display.
"""

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

__all__ = [
    "render_marginals",
    "render_traces",
    "render_model_probabilities",
    "render_fit_figures",
    "render_selection_figures",
]

_DPI = 130


def render_marginals(path, thetas, weights, names, prior=None, title=None):
    """Weighted posterior histogram per parameter, prior density overlaid."""
    n = len(names)
    fig, axes = plt.subplots(1, n, figsize=(3.2 * n, 2.8), squeeze=False)
    for i, (ax, name) in enumerate(zip(axes[0], names)):
        v, w = thetas[:, i], weights
        if prior is not None:
            lo, hi = prior.range(name)
            ax.hist(v, bins=40, range=(lo, hi), weights=w, density=True,
                    color="#4878b0", alpha=0.85)
            ax.hlines(1.0 / (hi - lo), lo, hi, color="#bbbbbb", linestyle="--",
                      label="prior")
            ax.legend(fontsize=7, frameon=False)
        else:
            ax.hist(v, bins=40, weights=w, density=True, color="#4878b0", alpha=0.85)
        ax.set_xlabel(name)
        ax.set_yticks([])
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_traces(path, result):
    """Tolerance, effective sample size and acceptance rate per generation."""
    gens = np.arange(1, len(result.eps_trace) + 1)
    fig, (ax1, ax2, ax3) = plt.subplots(3, 1, figsize=(5.2, 6.4), sharex=True)
    ax1.plot(gens, result.eps_trace, marker="o", color="#4878b0")
    ax1.set_ylabel("tolerance")
    finite = [e for e in result.eps_trace if np.isfinite(e) and e > 0]
    if len(finite) == len(result.eps_trace):
        ax1.set_yscale("log")
    ax2.plot(gens, result.ess_trace, marker="o", color="#588157")
    ax2.axhline(result.n_particles / 2.0, color="#bbbbbb", linestyle="--")
    ax2.set_ylabel("ESS")
    ax3.semilogy(gens, result.acceptance_trace, marker="o", color="#b05048")
    ax3.set_ylabel("acceptance")
    ax3.set_xlabel("generation")
    ax3.xaxis.set_major_locator(plt.MaxNLocator(integer=True))
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_model_probabilities(path, result):
    """Posterior model probability per generation, one line per model."""
    trace = result.model_prob_trace
    gens = np.arange(1, trace.shape[0] + 1)
    fig, ax = plt.subplots(figsize=(5.2, 3.2))
    for m, name in enumerate(result.model_names):
        ax.plot(gens, trace[:, m], marker="o", label=name)
    ax.set_xlabel("generation")
    ax.set_ylabel("model probability")
    ax.set_ylim(-0.02, 1.02)
    ax.xaxis.set_major_locator(plt.MaxNLocator(integer=True))
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_fit_figures(dirpath, result, prior=None):
    """Marginals and traces for a single-model calibration."""
    pop = result.populations[-1]
    grp = pop.groups[0]
    paths = [
        render_marginals(
            os.path.join(dirpath, "marginals.png"),
            grp.thetas, grp.weights, result.param_names, prior,
        ),
        render_traces(os.path.join(dirpath, "traces.png"), result),
    ]
    return paths


def render_selection_figures(dirpath, result, priors=None):
    """Model probabilities, traces and per-model marginals."""
    paths = [
        render_model_probabilities(os.path.join(dirpath, "model_probabilities.png"), result),
        render_traces(os.path.join(dirpath, "traces.png"), result),
    ]
    pop = result.populations[-1]
    for m, name in enumerate(result.model_names):
        grp = pop.groups[m]
        if grp.size == 0 or not grp.weights.sum() > 0:
            continue  # nothing survived for this model
        w = grp.weights / grp.weights.sum()
        prior = priors[m] if priors is not None else None
        paths.append(
            render_marginals(
                os.path.join(dirpath, f"marginals_{name}.png"),
                grp.thetas, w, result.param_names[m], prior, title=name,
            )
        )
    return paths
