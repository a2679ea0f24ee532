"""Run configuration: a YAML document describing models, priors, distance
and sampler settings, validated into ready-to-run objects.

A config names one model (``model:``) or several (``models:``). Each model
block binds family parameters to named theta components or to fixed numbers,
states the summary operator, and gives a uniform prior box over the theta
components. Paths are resolved relative to the config file's directory.
"""

import math
import os

import numpy as np
import yaml

from .distances import DistanceSpec
from .errors import ConfigError
from .families import FREQUENCY_KINDS, SEVERITY_KINDS, PriorBox
from .models import SUMMARY_KINDS, BivariatePairOfSums, FamilySpec, LossModel
from .smc import DEFAULT_PROPOSAL_BUDGET

__all__ = ["ModelConfig", "RunConfig", "load_config", "parse_config"]


class ModelConfig:
    """One model block: families, summary operator, prior box."""

    def __init__(self, name, param_names, frequency, severity, summary,
                 prior, use_frequencies, horizon):
        self.name = name
        self.param_names = param_names
        self.frequency = frequency
        self.severity = severity
        self.summary = summary
        self.prior = prior
        self.use_frequencies = use_frequencies
        self.horizon = horizon

    def build(self, data=None):
        """Instantiate the loss model, attaching observed data as needed."""
        horizon = self.horizon
        observed_frequencies = None
        if data is not None:
            if horizon is None:
                horizon = data.t
            elif horizon != data.t:
                raise ConfigError(
                    f"model '{self.name}': horizon {horizon} does not match "
                    f"the {data.t} periods in the data file"
                )
            if self.use_frequencies:
                if data.frequencies is None:
                    raise ConfigError(
                        f"model '{self.name}' uses observed frequencies but the "
                        "data file has no claim count column"
                    )
                observed_frequencies = data.frequencies
        if horizon is None:
            raise ConfigError(f"model '{self.name}' needs a horizon or a data file")
        try:
            return LossModel(
                params=self.param_names,
                severity=self.severity,
                summary=self.summary,
                frequency=self.frequency,
                horizon=horizon,
                observed_frequencies=observed_frequencies,
            )
        except ValueError as exc:
            raise ConfigError(f"model '{self.name}': {exc}") from exc


class RunConfig:
    """Validated run description: models, distance, sampler, paths."""

    def __init__(self, models, model_prior, dist_spec, n_particles, generations,
                 seed, workers, proposal_budget, data_path, output_dir, raw):
        self.models = models
        self.model_prior = model_prior
        self.dist_spec = dist_spec
        self.n_particles = n_particles
        self.generations = generations
        self.seed = seed
        self.workers = workers
        self.proposal_budget = proposal_budget
        self.data_path = data_path
        self.output_dir = output_dir
        self.raw = raw  # resolved mapping, echoed into the manifest

    @property
    def model(self):
        if len(self.models) != 1:
            raise ConfigError(f"expected a single model block, found {len(self.models)}")
        return self.models[0]


def _require_mapping(node, where):
    if not isinstance(node, dict):
        raise ConfigError(f"{where} must be a mapping, got {type(node).__name__}")
    return node


def _pop(node, key, where, required=False, default=None):
    if key in node:
        return node.pop(key)
    if required:
        raise ConfigError(f"{where} is missing required key '{key}'")
    return default


def _reject_unknown(node, where):
    if node:
        raise ConfigError(f"{where} has unknown key(s): {', '.join(sorted(map(str, node)))}")


def _as_number(value, where, integer=False, minimum=None, maximum=None,
               allow_inf=False):
    ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    if ok and integer and not float(value).is_integer():
        ok = False
    if ok and not allow_inf and not math.isfinite(value):
        ok = False
    if not ok:
        kind = "an integer" if integer else "a number"
        raise ConfigError(f"{where} must be {kind}, got {value!r}")
    value = int(value) if integer else float(value)
    if minimum is not None and value < minimum:
        raise ConfigError(f"{where} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ConfigError(f"{where} must be <= {maximum}, got {value}")
    return value


def _parse_family(node, kinds, param_names, where):
    node = dict(_require_mapping(node, where))
    kind = _pop(node, "kind", where, required=True)
    if kind not in kinds:
        raise ConfigError(
            f"{where} kind must be one of {sorted(kinds)}, got {kind!r}"
        )
    _, fields = kinds[kind]
    params = {}
    for field in fields:
        value = _pop(node, field, where, required=True)
        if isinstance(value, str):
            if value not in param_names:
                raise ConfigError(
                    f"{where}: '{field}: {value}' names no entry of 'parameters'"
                )
            params[field] = value
        else:
            params[field] = _as_number(value, f"{where}.{field}")
    _reject_unknown(node, where)
    return FamilySpec(kind, params)


def _parse_summary(node, where):
    if isinstance(node, str):
        node = {"kind": node}
    node = dict(_require_mapping(node, where))
    kind = _pop(node, "kind", where, required=True)
    if kind not in SUMMARY_KINDS:
        raise ConfigError(
            f"{where} kind must be one of {sorted(SUMMARY_KINDS)}, got {kind!r}"
        )
    kwargs = {k: _as_number(v, f"{where}.{k}") for k, v in node.items()}
    try:
        return SUMMARY_KINDS[kind](**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _parse_prior(node, param_names, where):
    node = dict(_require_mapping(node, where))
    lows, highs = [], []
    for name in param_names:
        bounds = _pop(node, name, where, required=True)
        if not (isinstance(bounds, (list, tuple)) and len(bounds) == 2):
            raise ConfigError(f"{where}.{name} must be a [low, high] pair")
        lo = _as_number(bounds[0], f"{where}.{name}[0]")
        hi = _as_number(bounds[1], f"{where}.{name}[1]")
        if not lo < hi:
            raise ConfigError(f"{where}.{name}: low {lo} must be below high {hi}")
        lows.append(lo)
        highs.append(hi)
    _reject_unknown(node, where)
    return PriorBox(param_names, tuple(lows), tuple(highs))


def _parse_model(node, index, where):
    node = dict(_require_mapping(node, where))
    name = _pop(node, "name", where, default=f"model-{index + 1}")
    if not isinstance(name, str) or not name:
        raise ConfigError(f"{where}.name must be a nonempty string")
    raw_params = _pop(node, "parameters", where, required=True)
    if (not isinstance(raw_params, list) or not raw_params
            or not all(isinstance(p, str) for p in raw_params)):
        raise ConfigError(f"{where}.parameters must be a nonempty list of names")
    if len(set(raw_params)) != len(raw_params):
        raise ConfigError(f"{where}.parameters has duplicate names")
    param_names = tuple(raw_params)

    frequency = None
    if "frequency" in node:
        frequency = _parse_family(
            node.pop("frequency"), FREQUENCY_KINDS, param_names, f"{where}.frequency"
        )
    summary = _parse_summary(_pop(node, "summary", where, default="sum"), f"{where}.summary")
    raw_sev = _pop(node, "severity", where, required=True)
    if isinstance(summary, BivariatePairOfSums):
        if not (isinstance(raw_sev, list) and len(raw_sev) == 2):
            raise ConfigError(f"{where}.severity must list two families for paired sums")
        severity = tuple(
            _parse_family(s, SEVERITY_KINDS, param_names, f"{where}.severity[{i}]")
            for i, s in enumerate(raw_sev)
        )
    else:
        severity = _parse_family(raw_sev, SEVERITY_KINDS, param_names, f"{where}.severity")

    prior = _parse_prior(_pop(node, "prior", where, required=True), param_names, f"{where}.prior")
    use_frequencies = _pop(node, "use_frequencies", where, default=False)
    if not isinstance(use_frequencies, bool):
        raise ConfigError(f"{where}.use_frequencies must be true or false")
    horizon = _pop(node, "horizon", where)
    if horizon is not None:
        horizon = _as_number(horizon, f"{where}.horizon", integer=True, minimum=1)
    if frequency is None and not use_frequencies:
        raise ConfigError(
            f"{where} needs a frequency family or 'use_frequencies: true'"
        )
    _reject_unknown(node, where)
    return ModelConfig(name, param_names, frequency, severity, summary,
                       prior, use_frequencies, horizon)


_GAMMA_WORDS = {"zero": "zero", "inf": "inf", "infinity": "inf", "aspect": "aspect"}


def _parse_distance(node, where):
    node = dict(_require_mapping(node, where or "distance"))
    regime = _pop(node, "regime", where, default="univariate")
    kwargs = {}
    if "gamma" in node:
        gamma = node.pop("gamma")
        if isinstance(gamma, str) and gamma.lower() in _GAMMA_WORDS:
            kwargs["gamma_mode"] = _GAMMA_WORDS[gamma.lower()]
        else:
            value = _as_number(gamma, f"{where}.gamma", minimum=0.0, allow_inf=True)
            if value == 0.0:
                kwargs["gamma_mode"] = "zero"
            elif math.isinf(value):
                kwargs["gamma_mode"] = "inf"
            else:
                kwargs["gamma_mode"] = "fixed"
                kwargs["gamma"] = value
    if "aspect_width" in node:
        kwargs["H"] = _as_number(node.pop("aspect_width"), f"{where}.aspect_width", minimum=0.0)
    if "aspect_height" in node:
        kwargs["V"] = _as_number(node.pop("aspect_height"), f"{where}.aspect_height", minimum=0.0)
    if "hilbert_order" in node:
        kwargs["hilbert_order"] = _as_number(
            node.pop("hilbert_order"), f"{where}.hilbert_order", integer=True, minimum=1
        )
    _reject_unknown(node, where)
    try:
        return DistanceSpec(regime, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def parse_config(doc, base_dir=".", check_data=True):
    """Validate a parsed YAML mapping into a RunConfig.

    Accepts a manifest document as well: if the mapping carries a 'config'
    key, that sub-mapping is taken as the run description, so a run can be
    repeated straight from the manifest it wrote. check_data=False skips the
    existence check on the data path, for commands that create it.
    """
    doc = _require_mapping(doc, "config document")
    if "config" in doc:
        doc = _require_mapping(doc["config"], "config")
    raw = doc
    doc = dict(doc)

    if ("model" in doc) == ("models" in doc):
        raise ConfigError("config needs exactly one of 'model' or 'models'")
    if "model" in doc:
        blocks = [doc.pop("model")]
        where = ["model"]
    else:
        blocks = doc.pop("models")
        if not isinstance(blocks, list) or not blocks:
            raise ConfigError("'models' must be a nonempty list")
        where = [f"models[{i}]" for i in range(len(blocks))]
    models = [_parse_model(b, i, w) for i, (b, w) in enumerate(zip(blocks, where))]
    names = [m.name for m in models]
    if len(set(names)) != len(names):
        raise ConfigError("model names must be distinct")

    model_prior = _pop(doc, "model_prior", "config")
    if model_prior is not None:
        if not (isinstance(model_prior, list) and len(model_prior) == len(models)):
            raise ConfigError(f"'model_prior' must list one weight per model ({len(models)})")
        weights = np.array(
            [_as_number(v, f"model_prior[{i}]", minimum=0.0) for i, v in enumerate(model_prior)]
        )
        if not weights.sum() > 0:
            raise ConfigError("'model_prior' weights must not all be zero")
        model_prior = weights / weights.sum()
    else:
        model_prior = np.full(len(models), 1.0 / len(models))

    dist_spec = _parse_distance(_pop(doc, "distance", "config", default={}), "distance")

    sampler = dict(_require_mapping(_pop(doc, "sampler", "config", default={}), "sampler"))
    n_particles = _as_number(
        _pop(sampler, "particles", "sampler", default=1000), "sampler.particles",
        integer=True, minimum=10,
    )
    generations = _as_number(
        _pop(sampler, "generations", "sampler", default=10), "sampler.generations",
        integer=True, minimum=1,
    )
    seed = _as_number(_pop(sampler, "seed", "sampler", default=0), "sampler.seed", integer=True, minimum=0)
    workers = _as_number(_pop(sampler, "workers", "sampler", default=1), "sampler.workers", integer=True, minimum=1)
    proposal_budget = _as_number(
        _pop(sampler, "proposal_budget", "sampler", default=DEFAULT_PROPOSAL_BUDGET),
        "sampler.proposal_budget", integer=True, minimum=1,
    )
    _reject_unknown(sampler, "sampler")

    data_path = _pop(doc, "data", "config")
    if data_path is not None:
        if not isinstance(data_path, str):
            raise ConfigError("'data' must be a path string")
        data_path = os.path.normpath(os.path.join(base_dir, data_path))
        if check_data and not os.path.isfile(data_path):
            raise ConfigError(f"data file does not exist: {data_path}")
    output_dir = _pop(doc, "output", "config")
    if output_dir is not None:
        if not isinstance(output_dir, str):
            raise ConfigError("'output' must be a path string")
        output_dir = os.path.normpath(os.path.join(base_dir, output_dir))
    _reject_unknown(doc, "config")

    return RunConfig(models, model_prior, dist_spec, n_particles, generations,
                     seed, workers, proposal_budget, data_path, output_dir, raw)


def load_config(path, check_data=True):
    """Parse and validate the YAML run configuration at path."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    return parse_config(doc, base_dir=os.path.dirname(os.path.abspath(path)), check_data=check_data)
