"""Command line front door.

Subcommands:

* ``simulate`` draws one synthetic data file from a model at a fixed
  parameter point.
* ``fit`` calibrates a single model against a data file.
* ``select`` computes posterior model probabilities for the configured
  ensemble, either with the sequential sampler or, with ``--ar``, by plain
  accept-reject inside a fixed tolerance.
* ``verify`` runs one of the built-in oracle-backed check suites.

Every run writes a manifest (config echo, seed, version, wall time) next to
its output; rerunning from the manifest reproduces the run exactly. The env
var ``ABC_LOSS_WORKERS`` overrides the configured worker count.
"""

import argparse
import logging
import math
import os
import sys
import time

import numpy as np
import yaml

from . import __version__
from .config import parse_config
from .dataio import build_summary, load_data, write_data, write_particles, write_traces, write_yaml
from .errors import ConfigError, DataSchemaError, StallError
from .selection import ModelEnsemble, run_ar_selection, run_smc_selection
from .smc import run_smc

logger = logging.getLogger(__name__)

__all__ = ["main"]


def _load_doc(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a mapping")
    return doc, os.path.dirname(os.path.abspath(path))


def _resolve_workers(cfg):
    env = os.environ.get("ABC_LOSS_WORKERS")
    if env is None:
        return cfg.workers
    try:
        workers = int(env)
        if workers < 1:
            raise ValueError
    except ValueError:
        raise ConfigError(f"ABC_LOSS_WORKERS must be a positive integer, got {env!r}") from None
    return workers


def _parse_theta(text, param_names):
    values = {}
    for item in text.split(","):
        name, sep, value = item.partition("=")
        name = name.strip()
        if not sep or not name:
            raise ConfigError(f"--theta items must look like name=value, got {item!r}")
        if name not in param_names:
            raise ConfigError(f"--theta names unknown parameter {name!r}")
        if name in values:
            raise ConfigError(f"--theta repeats parameter {name!r}")
        try:
            values[name] = float(value)
        except ValueError:
            raise ConfigError(f"--theta value for {name!r} is not a number: {value!r}") from None
    missing = [n for n in param_names if n not in values]
    if missing:
        raise ConfigError(f"--theta is missing parameter {missing[0]!r}")
    return np.array([values[n] for n in param_names])


def _manifest_config(cfg, data_path, output_dir):
    doc = dict(cfg.raw)
    if data_path is not None:
        doc["data"] = os.path.abspath(data_path)
    else:
        doc.pop("data", None)
    if output_dir is not None:
        doc["output"] = os.path.abspath(output_dir)
    doc["sampler"] = {
        "particles": cfg.n_particles,
        "generations": cfg.generations,
        "seed": cfg.seed,
        "workers": cfg.workers,
        "proposal_budget": cfg.proposal_budget,
    }
    return doc


def _write_manifest(path, command, cfg, data_path, output_dir, wall_time, flags=None):
    doc = {
        "command": command,
        "version": __version__,
        "seed": cfg.seed,
        "wall_time_seconds": round(wall_time, 3),
    }
    if flags:
        doc["flags"] = flags
    doc["config"] = _manifest_config(cfg, data_path, output_dir)
    write_yaml(path, doc)


def _out_dir(args, cfg):
    out = args.out or cfg.output_dir
    if out is None:
        raise ConfigError("no output directory: give --out or set 'output' in the config")
    return out


def _data_path(args, cfg):
    path = args.data or cfg.data_path
    if path is None:
        raise ConfigError("no data file: give --data or set 'data' in the config")
    if not os.path.isfile(path):
        raise ConfigError(f"data file does not exist: {path}")
    return path


def _check_regime(cfg, data):
    need_two = cfg.dist_spec.regime == "bivariate"
    if need_two != data.bivariate:
        have = "x1,x2 columns" if data.bivariate else "a single x column"
        raise ConfigError(
            f"distance regime '{cfg.dist_spec.regime}' does not match the data file ({have})"
        )


def _preserve_stall(outdir, exc):
    os.makedirs(outdir, exist_ok=True)
    write_yaml(
        os.path.join(outdir, "stall.yaml"),
        {
            "error": str(exc),
            "generation": exc.generation,
            "eps_trace": [float(e) for e in exc.eps_trace],
            "ess_trace": [float(e) for e in exc.ess_trace],
            "acceptance_trace": [float(a) for a in exc.acceptance_trace],
        },
    )


def _cmd_simulate(args):
    doc, base = _load_doc(args.config)
    cfg = parse_config(doc, base_dir=base, check_data=False)
    model_cfg = cfg.model
    flags = (doc.get("flags") or {}) if "config" in doc else {}
    theta_text = args.theta or flags.get("theta")
    if not theta_text:
        raise ConfigError("simulate needs --theta \"name=value,...\"")
    theta = _parse_theta(theta_text, model_cfg.param_names)
    model = model_cfg.build()
    tic = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    counts = model.simulate_counts(theta, rng)
    x = model.finish(theta, counts, rng)
    write_data(args.out, x, counts if model.observed_frequencies is None else None)
    _write_manifest(
        args.out + ".manifest.yaml", "simulate", cfg, None, None,
        time.perf_counter() - tic, flags={"theta": theta_text, "out": os.path.abspath(args.out)},
    )
    logger.info("wrote %d periods to %s", model.horizon, args.out)
    return 0


def _cmd_fit(args):
    doc, base = _load_doc(args.config)
    cfg = parse_config(doc, base_dir=base)
    model_cfg = cfg.model
    data_path = _data_path(args, cfg)
    outdir = _out_dir(args, cfg)
    data = load_data(data_path)
    _check_regime(cfg, data)
    model = model_cfg.build(data)
    workers = _resolve_workers(cfg)

    tic = time.perf_counter()
    try:
        result = run_smc(
            model, model_cfg.prior, data.x, cfg.dist_spec,
            n_particles=cfg.n_particles, generations=cfg.generations,
            seed=cfg.seed, workers=workers, proposal_budget=cfg.proposal_budget,
        )
    except StallError as exc:
        _preserve_stall(outdir, exc)
        logger.error("stalled: %s (traces in %s)", exc, os.path.join(outdir, "stall.yaml"))
        return 1
    wall = time.perf_counter() - tic

    os.makedirs(outdir, exist_ok=True)
    write_particles(os.path.join(outdir, "particles.csv"), result)
    write_traces(os.path.join(outdir, "traces.csv"), result)
    write_yaml(os.path.join(outdir, "summary.yaml"), build_summary(result))
    _write_manifest(os.path.join(outdir, "manifest.yaml"), "fit", cfg, data_path, outdir, wall)
    if not args.no_plots:
        from .reports import render_fit_figures

        render_fit_figures(outdir, result, model_cfg.prior)
    logger.info("fit finished in %.1fs; output in %s", wall, outdir)
    return 0


def _cmd_select(args):
    doc, base = _load_doc(args.config)
    cfg = parse_config(doc, base_dir=base)
    data_path = _data_path(args, cfg)
    outdir = _out_dir(args, cfg)
    data = load_data(data_path)
    _check_regime(cfg, data)
    ensemble = ModelEnsemble(
        tuple(m.name for m in cfg.models),
        tuple(m.build(data) for m in cfg.models),
        tuple(m.prior for m in cfg.models),
        model_prior=tuple(cfg.model_prior),
    )
    workers = _resolve_workers(cfg)

    flags = (doc.get("flags") or {}) if "config" in doc else {}
    use_ar = args.ar or bool(flags.get("ar"))
    epsilon = args.epsilon if args.epsilon is not None else flags.get("epsilon")
    if use_ar:
        if epsilon is None:
            raise ConfigError("--ar needs --epsilon (a positive tolerance, or 'inf')")
        epsilon = float(epsilon)
    elif epsilon is not None:
        raise ConfigError("--epsilon only applies together with --ar")

    tic = time.perf_counter()
    try:
        if use_ar:
            result = run_ar_selection(
                ensemble, data.x, cfg.dist_spec, epsilon=epsilon,
                n_particles=cfg.n_particles, seed=cfg.seed, workers=workers,
                proposal_budget=cfg.proposal_budget,
            )
        else:
            result = run_smc_selection(
                ensemble, data.x, cfg.dist_spec,
                n_particles=cfg.n_particles, generations=cfg.generations,
                seed=cfg.seed, workers=workers, proposal_budget=cfg.proposal_budget,
            )
    except StallError as exc:
        _preserve_stall(outdir, exc)
        logger.error("stalled: %s (traces in %s)", exc, os.path.join(outdir, "stall.yaml"))
        return 1
    wall = time.perf_counter() - tic

    os.makedirs(outdir, exist_ok=True)
    write_particles(os.path.join(outdir, "particles.csv"), result)
    write_traces(os.path.join(outdir, "traces.csv"), result)
    write_yaml(os.path.join(outdir, "summary.yaml"), build_summary(result))
    sel_flags = {"ar": True, "epsilon": epsilon} if use_ar else None
    _write_manifest(
        os.path.join(outdir, "manifest.yaml"), "select", cfg, data_path, outdir, wall,
        flags=sel_flags,
    )
    if not args.no_plots:
        from .reports import render_selection_figures

        render_selection_figures(outdir, result, [m.prior for m in cfg.models])
    for name, prob in zip(result.model_names, result.model_probs):
        logger.info("model %s: probability %.4f", name, prob)
    logger.info("selection finished in %.1fs; output in %s", wall, outdir)
    return 0


def _cmd_verify(args):
    from .verify import run_suite

    ok = run_suite(args.suite, args.out, seed=args.seed)
    return 0 if ok else 1


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="abcloss",
        description="Simulation-based calibration and comparison of insurance loss models.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write one synthetic data file from a fixed parameter point")
    p.add_argument("--config", required=True, help="YAML run configuration")
    p.add_argument("--theta", help='parameter point, e.g. "p=0.8,delta=5"')
    p.add_argument("--out", required=True, help="output data file")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="calibrate the configured model against a data file")
    p.add_argument("--config", required=True, help="YAML run configuration")
    p.add_argument("--data", help="data file (default: 'data' in the config)")
    p.add_argument("--out", help="output directory (default: 'output' in the config)")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("select", help="posterior model probabilities for the configured ensemble")
    p.add_argument("--config", required=True, help="YAML run configuration")
    p.add_argument("--data", help="data file (default: 'data' in the config)")
    p.add_argument("--out", help="output directory (default: 'output' in the config)")
    p.add_argument("--ar", action="store_true", help="accept-reject at a fixed tolerance")
    p.add_argument("--epsilon", help="tolerance for --ar (number or 'inf')")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("verify", help="run an oracle-backed verification suite")
    p.add_argument("--suite", required=True, choices=("geom-exp", "distances", "hilbert", "selection"))
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--seed", type=int, default=20, help="suite seed (default 20)")
    p.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DataSchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
