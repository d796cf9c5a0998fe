import copy
import json
import os
import tempfile

import pytest

from reminiq.config import DEFAULT_CONFIG
from reminiq.validators import ValidationError, Validator, safe_file_operation


def config_with(**sections):
    config = copy.deepcopy(DEFAULT_CONFIG)
    for key, value in sections.items():
        if isinstance(value, dict) and isinstance(config.get(key), dict):
            config[key].update(value)
        else:
            config[key] = value
    return config


class TestValidator:
    """Tests for the Validator class"""

    def test_defaults_valid(self):
        """Test that the default config passes"""
        is_valid, error = Validator.validate_config_dict(copy.deepcopy(DEFAULT_CONFIG))
        assert is_valid is True
        assert error is None

    @pytest.mark.parametrize("sections, fragment", [
        ({"train": {"alpha": 0.0}}, "train.alpha"),
        ({"train": {"gamma": 1.0}}, "train.gamma"),
        ({"train": {"epochs": 2.5}}, "train.epochs"),
        ({"train": {"special_branch": "stop"}}, "special_branch"),
        ({"environment": {"max_triggers": 0}}, "max_triggers"),
        ({"model": {"jitter": 0.5}}, "model.jitter"),
        ({"model": {"choice": {"stop": 0.5, "continue": 0.2}}}, "sum"),
        ({"model": {"choice": {"quit": 1.0}}}, "model.choice"),
        ({"reward": {"variant": "R3"}}, "reward.variant"),
        ({"reward": {"variant": "Custom"}}, "custom"),
        ({"evaluation": {"top_k": 0}}, "evaluation.top_k"),
        ({"seeds": [1, 1]}, "repeat"),
        ({"seeds": [-1]}, "non-negative"),
        ({"workers": 0}, "workers"),
    ])
    def test_invalid_config(self, sections, fragment):
        """Test that each invalid value is reported"""
        is_valid, error = Validator.validate_config_dict(config_with(**sections))
        assert is_valid is False
        assert fragment in error

    def test_missing_model_file(self):
        """Test a model source that does not exist"""
        errors = Validator.config_errors(config_with(model={"source": "/nonexistent/model.json"}))
        assert any("not found" in e for e in errors)

    def test_validate_model_file_missing(self):
        """Test model file validation with missing file"""
        is_valid, error, data = Validator.validate_model_file("/nonexistent/model.json")
        assert is_valid is False
        assert "not found" in error
        assert data is None

    def test_validate_model_file_invalid(self):
        """Test model file validation with invalid JSON"""
        with tempfile.NamedTemporaryFile(mode='w', suffix='.json', delete=False) as f:
            f.write("{invalid json")
            model_path = f.name

        try:
            is_valid, error, data = Validator.validate_model_file(model_path)
            assert is_valid is False
            assert "not valid JSON" in error
        finally:
            os.unlink(model_path)

    def test_validate_model_file_missing_keys(self):
        """Test model file validation without a choice object"""
        with tempfile.NamedTemporaryFile(mode='w', suffix='.json', delete=False) as f:
            json.dump({"actions": {}}, f)
            model_path = f.name

        try:
            is_valid, error, data = Validator.validate_model_file(model_path)
            assert is_valid is False
            assert "choice" in error
        finally:
            os.unlink(model_path)

    def test_validate_model_file_valid(self, model):
        """Test model file validation with valid file"""
        with tempfile.NamedTemporaryFile(mode='w', suffix='.json', delete=False) as f:
            json.dump(model.to_dict(), f)
            model_path = f.name

        try:
            is_valid, error, data = Validator.validate_model_file(model_path)
            assert is_valid is True
            assert error is None
            assert set(data["actions"]) == {"a1", "a2", "a3", "a4", "a5", "a6"}
        finally:
            os.unlink(model_path)

    def test_validate_output_dir(self):
        """Test output directory validation"""
        with tempfile.TemporaryDirectory() as tmpdir:
            nested = os.path.join(tmpdir, "a", "b")
            assert Validator.validate_output_dir(nested) == (True, None)
            assert os.path.isdir(nested)

            path = os.path.join(tmpdir, "file.txt")
            with open(path, "w") as f:
                f.write("x")
            is_valid, error = Validator.validate_output_dir(path)
            assert is_valid is False
            assert "not a directory" in error

    def test_validate_run_dir(self):
        """Test run directory validation"""
        with tempfile.TemporaryDirectory() as tmpdir:
            is_valid, error = Validator.validate_run_dir(os.path.join(tmpdir, "seed-0"))
            assert is_valid is False
            assert "not found" in error

            is_valid, error = Validator.validate_run_dir(tmpdir)
            assert is_valid is False
            assert "qtable.json" in error
            assert "manifest.json" in error


class TestSafeFileOperation:
    """Tests for safe_file_operation"""

    def test_passes_result(self):
        """Test that results are returned unchanged"""
        assert safe_file_operation(lambda x: x + 1, 1) == 2

    def test_wraps_os_errors(self):
        """Test that OS errors become ValidationError"""
        with pytest.raises(ValidationError) as exc:
            safe_file_operation(open, "/nonexistent/file.txt")
        assert "File not found" in str(exc.value)
