"""Run-configuration parsing and validation."""

import math

import numpy as np
import pytest

from abcloss.config import load_config, parse_config
from abcloss.dataio import ObservedData
from abcloss.errors import ConfigError
from abcloss.models import QuotaShare, StopLoss, Sum


def base_doc():
    return {
        "model": {
            "name": "frequency-severity",
            "parameters": ["p", "delta"],
            "frequency": {"kind": "geometric", "p": "p"},
            "severity": {"kind": "exponential", "delta": "delta"},
            "prior": {"p": [0.0, 1.0], "delta": [0.0, 100.0]},
            "horizon": 50,
        },
    }


class TestSingleModel:
    def test_minimal_document(self):
        cfg = parse_config(base_doc())
        assert len(cfg.models) == 1
        block = cfg.model
        assert block.param_names == ("p", "delta")
        assert block.prior.range("delta") == (0.0, 100.0)
        assert isinstance(block.summary, Sum)
        model = block.build()
        assert model.horizon == 50

    def test_sampler_defaults(self):
        cfg = parse_config(base_doc())
        assert cfg.n_particles == 1000
        assert cfg.generations == 10
        assert cfg.seed == 0
        assert cfg.workers == 1
        assert cfg.dist_spec.regime == "univariate"

    def test_fixed_numeric_binding(self):
        doc = base_doc()
        doc["model"]["parameters"] = ["p"]
        doc["model"]["severity"] = {"kind": "exponential", "delta": 5.0}
        doc["model"]["prior"] = {"p": [0.0, 1.0]}
        cfg = parse_config(doc)
        assert cfg.model.severity.params == {"delta": 5.0}

    def test_summary_string_shorthand_and_parameters(self):
        doc = base_doc()
        doc["model"]["summary"] = "sum"
        assert isinstance(parse_config(doc).model.summary, Sum)
        doc["model"]["summary"] = {"kind": "stop-loss", "c": 1.0}
        assert parse_config(doc).model.summary == StopLoss(1.0)
        doc["model"]["summary"] = {"kind": "quota-share", "alpha": 0.3}
        assert parse_config(doc).model.summary == QuotaShare(0.3)

    def test_bad_summary_parameter_is_a_config_error(self):
        doc = base_doc()
        doc["model"]["summary"] = {"kind": "quota-share", "alpha": 1.5}
        with pytest.raises(ConfigError, match="quota share"):
            parse_config(doc)

    def test_severity_only_model_uses_observed_counts(self):
        doc = base_doc()
        del doc["model"]["frequency"]
        del doc["model"]["horizon"]
        doc["model"]["parameters"] = ["delta"]
        doc["model"]["prior"] = {"delta": [0.0, 100.0]}
        doc["model"]["use_frequencies"] = True
        cfg = parse_config(doc)
        data = ObservedData(np.array([3.0, 0.0]), np.array([2, 0]))
        model = cfg.model.build(data)
        np.testing.assert_array_equal(model.observed_frequencies, [2, 0])

    def test_frequency_or_observed_counts_required(self):
        doc = base_doc()
        del doc["model"]["frequency"]
        with pytest.raises(ConfigError, match="frequency"):
            parse_config(doc)

    def test_build_rejects_missing_count_column(self):
        doc = base_doc()
        del doc["model"]["frequency"]
        del doc["model"]["horizon"]
        doc["model"]["use_frequencies"] = True
        cfg = parse_config(doc)
        with pytest.raises(ConfigError, match="count column"):
            cfg.model.build(ObservedData(np.array([1.0, 2.0])))

    def test_build_rejects_horizon_conflicts(self):
        cfg = parse_config(base_doc())
        with pytest.raises(ConfigError, match="horizon"):
            cfg.model.build(ObservedData(np.ones(3)))


class TestValidationErrors:
    def test_model_and_models_are_exclusive(self):
        doc = base_doc()
        doc["models"] = [doc["model"]]
        with pytest.raises(ConfigError, match="exactly one"):
            parse_config(doc)
        with pytest.raises(ConfigError, match="exactly one"):
            parse_config({})

    def test_unknown_keys_are_named(self):
        doc = base_doc()
        doc["tolerance"] = 0.1
        with pytest.raises(ConfigError, match="tolerance"):
            parse_config(doc)
        doc = base_doc()
        doc["model"]["extras"] = 1
        with pytest.raises(ConfigError, match="extras"):
            parse_config(doc)
        doc = base_doc()
        doc["sampler"] = {"particles": 100, "alpha": 0.5}
        with pytest.raises(ConfigError, match="alpha"):
            parse_config(doc)

    def test_binding_must_name_a_parameter(self):
        doc = base_doc()
        doc["model"]["severity"] = {"kind": "exponential", "delta": "scale"}
        with pytest.raises(ConfigError, match="scale"):
            parse_config(doc)

    def test_family_kinds_are_checked(self):
        doc = base_doc()
        doc["model"]["severity"] = {"kind": "pareto", "delta": "delta"}
        with pytest.raises(ConfigError, match="pareto"):
            parse_config(doc)

    def test_prior_bounds_are_checked(self):
        doc = base_doc()
        doc["model"]["prior"]["delta"] = [10.0, 1.0]
        with pytest.raises(ConfigError, match="below"):
            parse_config(doc)
        doc["model"]["prior"]["delta"] = [0.0]
        with pytest.raises(ConfigError, match="pair"):
            parse_config(doc)
        del doc["model"]["prior"]["delta"]
        with pytest.raises(ConfigError, match="delta"):
            parse_config(doc)

    def test_duplicate_parameters_and_names(self):
        doc = base_doc()
        doc["model"]["parameters"] = ["p", "p"]
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config(doc)
        two = {"models": [base_doc()["model"], base_doc()["model"]]}
        with pytest.raises(ConfigError, match="distinct"):
            parse_config(two)

    def test_sampler_bounds(self):
        for key, bad in [("particles", 5), ("generations", 0), ("particles", 10.5),
                         ("seed", -1), ("workers", 0)]:
            doc = base_doc()
            doc["sampler"] = {key: bad}
            with pytest.raises(ConfigError, match=f"sampler.{key}"):
                parse_config(doc)

    def test_booleans_are_not_numbers(self):
        doc = base_doc()
        doc["sampler"] = {"particles": True}
        with pytest.raises(ConfigError, match="particles"):
            parse_config(doc)

    def test_missing_data_file(self, tmp_path):
        doc = base_doc()
        doc["data"] = "nope.csv"
        with pytest.raises(ConfigError, match="does not exist"):
            parse_config(doc, base_dir=str(tmp_path))
        cfg = parse_config(doc, base_dir=str(tmp_path), check_data=False)
        assert cfg.data_path == str(tmp_path / "nope.csv")


class TestDistanceBlock:
    def check(self, block):
        doc = base_doc()
        doc["distance"] = block
        return parse_config(doc).dist_spec

    def test_gamma_words_and_numbers(self):
        assert self.check({"gamma": "inf"}).gamma_mode == "inf"
        assert self.check({"gamma": "infinity"}).gamma_mode == "inf"
        assert self.check({"gamma": "zero"}).gamma_mode == "zero"
        assert self.check({"gamma": 0.0}).gamma_mode == "zero"
        assert self.check({"gamma": math.inf}).gamma_mode == "inf"
        spec = self.check({"gamma": 2.5})
        assert spec.gamma_mode == "fixed" and spec.gamma == 2.5

    def test_curve_regime_with_aspect(self):
        spec = self.check({"regime": "curve", "gamma": "aspect",
                           "aspect_width": 2.0, "aspect_height": 0.5})
        assert spec.regime == "curve"
        assert spec.gamma_mode == "aspect"
        assert (spec.H, spec.V) == (2.0, 0.5)

    def test_bivariate_with_hilbert_order(self):
        spec = self.check({"regime": "bivariate", "hilbert_order": 12})
        assert spec.hilbert_order == 12

    def test_bad_values_are_config_errors(self):
        with pytest.raises(ConfigError, match="gamma"):
            self.check({"gamma": -1.0})
        with pytest.raises(ConfigError, match="regime"):
            self.check({"regime": "triangular"})
        with pytest.raises(ConfigError, match="warp"):
            self.check({"warp": 1})


class TestEnsembleDocuments:
    def two_models(self):
        severity = {
            "name": "plain",
            "parameters": ["delta"],
            "severity": {"kind": "exponential", "delta": "delta"},
            "prior": {"delta": [0.0, 100.0]},
            "use_frequencies": True,
        }
        gamma = {
            "name": "shaped",
            "parameters": ["r", "m"],
            "severity": {"kind": "gamma", "r": "r", "m": "m"},
            "prior": {"r": [0.0, 5.0], "m": [0.0, 50.0]},
            "use_frequencies": True,
        }
        return {"models": [severity, gamma]}

    def test_uniform_model_prior_by_default(self):
        cfg = parse_config(self.two_models())
        np.testing.assert_allclose(cfg.model_prior, [0.5, 0.5])
        with pytest.raises(ConfigError, match="single model"):
            cfg.model

    def test_model_prior_is_normalized(self):
        doc = self.two_models()
        doc["model_prior"] = [3, 1]
        np.testing.assert_allclose(parse_config(doc).model_prior, [0.75, 0.25])

    def test_model_prior_length_must_match(self):
        doc = self.two_models()
        doc["model_prior"] = [1, 1, 1]
        with pytest.raises(ConfigError, match="one weight per model"):
            parse_config(doc)
        doc["model_prior"] = [0, 0]
        with pytest.raises(ConfigError, match="not all be zero"):
            parse_config(doc)

    def test_empty_models_list(self):
        with pytest.raises(ConfigError, match="nonempty"):
            parse_config({"models": []})

    def test_unnamed_models_are_numbered(self):
        doc = self.two_models()
        del doc["models"][0]["name"]
        del doc["models"][1]["name"]
        cfg = parse_config(doc)
        assert [m.name for m in cfg.models] == ["model-1", "model-2"]


class TestLoadConfig:
    def test_round_trip_through_a_file(self, tmp_path):
        import yaml

        path = tmp_path / "run.yaml"
        path.write_text(yaml.safe_dump(base_doc()))
        cfg = load_config(str(path))
        assert cfg.model.name == "frequency-severity"

    def test_manifest_style_document(self):
        cfg = parse_config({"config": base_doc(), "results": "ignored"})
        assert cfg.model.name == "frequency-severity"

    def test_invalid_yaml(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("model: [unclosed")
        with pytest.raises(ConfigError, match="not valid YAML"):
            load_config(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(str(tmp_path / "absent.yaml"))

    def test_relative_paths_resolve_against_the_config(self, tmp_path):
        import yaml

        doc = base_doc()
        doc["data"] = "obs.csv"
        doc["output"] = "out"
        (tmp_path / "obs.csv").write_text("period,x\n1,2.0\n")
        path = tmp_path / "run.yaml"
        path.write_text(yaml.safe_dump(doc))
        cfg = load_config(str(path))
        assert cfg.data_path == str(tmp_path / "obs.csv")
        assert cfg.output_dir == str(tmp_path / "out")
