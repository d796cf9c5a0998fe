import json
import os
import tempfile

import pytest
import yaml

from reminiq.config import DEFAULT_CONFIG, Config, ModelSource, experiment_from_manifest
from reminiq.domain import RewardVariant
from reminiq.validators import ValidationError


class TestConfig:
    """Tests for the Config class"""

    def test_default_config(self):
        """Test that default config is loaded correctly"""
        config = Config()
        assert config.get("train.alpha") == DEFAULT_CONFIG["train"]["alpha"]
        assert config.get("environment.max_rounds") == 50
        assert config.get("seeds") == [0]
        assert config.get("missing.key", "fallback") == "fallback"

    def test_defaults_not_shared(self):
        """Test that instances do not share the default dict"""
        config = Config()
        config.set("train.alpha", 0.5)
        assert DEFAULT_CONFIG["train"]["alpha"] == 0.05
        assert Config().get("train.alpha") == 0.05

    def test_config_get_set(self):
        """Test getting and setting config values"""
        config = Config()
        config.set("train.epochs", 10)
        assert config.get("train.epochs") == 10
        config.set("new.nested.key", "x")
        assert config.get("new.nested.key") == "x"

    def test_yaml_file_merge(self):
        """Test that a YAML file is merged over the defaults"""
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "experiment.yaml")
            with open(path, "w") as f:
                yaml.safe_dump({"train": {"epochs": 20}, "seeds": [1, 2]}, f)
            config = Config(path)
            assert config.get("train.epochs") == 20
            assert config.get("train.alpha") == 0.05
            assert config.get("seeds") == [1, 2]

    def test_json_file(self):
        """Test that a JSON file loads through the same loader"""
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "experiment.json")
            with open(path, "w") as f:
                json.dump({"reward": {"variant": "R2"}}, f)
            assert Config(path).get("reward.variant") == "R2"

    def test_config_save_load(self):
        """Test saving and loading config"""
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "experiment.yaml")
            config1 = Config()
            config1.set("train.epsilon", 0.2)
            config1.save(path)

            config2 = Config(path)
            assert config2.get("train.epsilon") == 0.2

    def test_missing_file(self):
        """Test that a missing config file is an error"""
        with pytest.raises(ValidationError):
            Config("/nonexistent/experiment.yaml")

    def test_broken_file(self):
        """Test that an unparsable or non-mapping file is an error"""
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "broken.yaml")
            with open(path, "w") as f:
                f.write("train: [unclosed\n")
            with pytest.raises(ValidationError):
                Config(path)
            with open(path, "w") as f:
                f.write("- a\n- b\n")
            with pytest.raises(ValidationError):
                Config(path)

    def test_overrides(self):
        """Test command-line overrides"""
        config = Config()
        config.apply_overrides(seeds=[3, 4], output_dir="out", reward="R2", model="m.json")
        assert config.get("seeds") == [3, 4]
        assert config.get("output_dir") == "out"
        assert config.get("reward.variant") == "R2"
        assert config.get("model.source") == "m.json"

    def test_env_overrides(self, monkeypatch):
        """Test environment variable overrides"""
        monkeypatch.setenv("REMINIQ_LOG_LEVEL", "DEBUG")
        monkeypatch.setenv("REMINIQ_WORKERS", "3")
        config = Config()
        assert config.get_log_level() == "DEBUG"
        assert config.get_workers() == 3

    def test_config_booleans(self):
        """Test boolean config methods"""
        config = Config()
        assert config.is_logging_enabled() is True
        assert config.should_save_history() is True

    def test_validate_lists_every_error(self):
        """Test that validation reports all problems at once"""
        config = Config(data={"train": {"alpha": 0.0, "gamma": 1.0}, "seeds": []})
        with pytest.raises(ValidationError) as exc:
            config.validate()
        message = str(exc.value)
        assert "train.alpha" in message
        assert "train.gamma" in message
        assert "seeds" in message


class TestExperimentConfig:
    """Tests for the typed experiment config"""

    def test_to_experiment(self):
        """Test conversion of the defaults"""
        experiment = Config().to_experiment()
        assert experiment.train.epochs == 1500
        assert experiment.env.max_triggers == 15
        assert experiment.reward_variant is RewardVariant.R1
        assert experiment.seeds == (0,)
        assert experiment.evaluation.top_k == 5
        assert experiment.model == ModelSource()

    def test_train_config_per_seed(self):
        """Test the per-seed training config"""
        experiment = Config(data={"reward": {"variant": "R2"}}).to_experiment()
        cfg = experiment.train_config(7)
        assert cfg.seed == 7
        assert cfg.reward_variant is RewardVariant.R2

    def test_with_reward(self):
        """Test switching the reward variant"""
        experiment = Config().to_experiment().with_reward(RewardVariant.R2)
        assert experiment.reward_spec().variant is RewardVariant.R2
        assert experiment.train.reward_variant is RewardVariant.R2

    def test_custom_reward(self):
        """Test a custom reward table"""
        custom = {"response_table": {"a2": [0, 1, 2], "a3": [0, 1, 3], "generic": [0, 0, 1]}}
        experiment = Config(data={"reward": {"variant": "Custom", "custom": custom}}).to_experiment()
        assert experiment.reward_spec().bounds() == pytest.approx((-5.5, 7.0))

    def test_bad_custom_reward(self):
        """Test that a malformed custom table fails before any run"""
        custom = {"response_table": {"a2": [0, 1, 2]}}
        with pytest.raises(ValidationError):
            Config(data={"reward": {"variant": "Custom", "custom": custom}}).to_experiment()

    def test_choice_override(self):
        """Test the model choice override"""
        experiment = Config(data={"model": {"choice": {"stop": 1.0, "continue": 0.0, "change": 0.0}}}).to_experiment()
        assert experiment.model.load().choice[0].tolist() == [1.0, 0.0, 0.0]

    def test_manifest_round_trip(self):
        """Test rebuilding an experiment from its manifest config"""
        experiment = Config(data={"train": {"epochs": 9}, "seeds": [2]}).to_experiment()
        again = experiment_from_manifest({"config": experiment.to_dict()})
        assert again.train == experiment.train
        assert again.env == experiment.env
        assert again.evaluation == experiment.evaluation
