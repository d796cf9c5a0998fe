import json
import os
from typing import Any, Dict, List, Optional, Tuple

SPECIAL_BRANCHES = ("give_choices", "comfort")
REWARD_VARIANTS = ("r1", "r2", "custom")


class ValidationError(Exception):
    """Raised for any user-facing validation failure (config, model file, artifacts)."""
    pass


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _check_range(errors: List[str], name: str, value: Any, low: Optional[float] = None,
                 high: Optional[float] = None, low_open: bool = False,
                 high_open: bool = False):
    if not _is_number(value):
        errors.append(f"{name} must be a number, got {value!r}")
        return
    if low is not None and (value < low or (low_open and value == low)):
        errors.append(f"{name} must be {'>' if low_open else '>='} {low}, got {value}")
    if high is not None and (value > high or (high_open and value == high)):
        errors.append(f"{name} must be {'<' if high_open else '<='} {high}, got {value}")


def _check_count(errors: List[str], name: str, value: Any, minimum: int = 1):
    if not _is_int(value):
        errors.append(f"{name} must be an integer, got {value!r}")
    elif value < minimum:
        errors.append(f"{name} must be >= {minimum}, got {value}")


class Validator:
    """Fail-fast checks for configs, model files and run directories."""

    @staticmethod
    def config_errors(config: Dict[str, Any]) -> List[str]:
        """Every problem of a merged experiment config dict."""
        errors: List[str] = []

        train = config.get("train", {})
        _check_range(errors, "train.alpha", train.get("alpha"), 0.0, 1.0, low_open=True)
        _check_range(errors, "train.gamma", train.get("gamma"), 0.0, 1.0, high_open=True)
        _check_range(errors, "train.epsilon", train.get("epsilon"), 0.0, 1.0)
        _check_count(errors, "train.epochs", train.get("epochs"))
        _check_count(errors, "train.episodes_per_epoch", train.get("episodes_per_epoch"))
        _check_count(errors, "train.probe_episode", train.get("probe_episode"))
        _check_count(errors, "train.snapshot_window", train.get("snapshot_window"), minimum=0)
        if train.get("special_branch") not in SPECIAL_BRANCHES:
            errors.append(
                f"train.special_branch must be one of {', '.join(SPECIAL_BRANCHES)}, "
                f"got {train.get('special_branch')!r}"
            )

        env = config.get("environment", {})
        _check_count(errors, "environment.max_rounds", env.get("max_rounds"), minimum=0)
        _check_count(errors, "environment.max_triggers", env.get("max_triggers"))
        _check_count(errors, "environment.streak_threshold", env.get("streak_threshold"))

        model = config.get("model", {})
        source = model.get("source")
        if not isinstance(source, str) or not source:
            errors.append("model.source must be 'default' or a model file path")
        elif source != "default" and not os.path.isfile(source):
            errors.append(f"Model file not found: {source}")
        _check_count(errors, "model.seed", model.get("seed"), minimum=0)
        _check_range(errors, "model.clear_probability", model.get("clear_probability"), 0.0, 1.0)
        _check_range(errors, "model.jitter", model.get("jitter"), 0.0, 0.5, high_open=True)
        choice = model.get("choice")
        if choice is not None:
            if not isinstance(choice, dict) or set(choice) - {"stop", "continue", "change"}:
                errors.append("model.choice must map stop/continue/change to probabilities")
            elif not all(_is_number(v) and 0.0 <= v <= 1.0 for v in choice.values()):
                errors.append("model.choice probabilities must lie in [0, 1]")
            elif abs(sum(choice.values()) - 1.0) > 1e-6:
                errors.append(f"model.choice probabilities sum to {sum(choice.values()):.10g}, expected 1")

        reward = config.get("reward", {})
        variant = str(reward.get("variant", "")).lower()
        if variant not in REWARD_VARIANTS:
            errors.append(f"reward.variant must be R1, R2 or Custom, got {reward.get('variant')!r}")
        elif variant == "custom" and not reward.get("custom"):
            errors.append("reward.variant Custom requires a reward.custom table")

        evaluation = config.get("evaluation", {})
        for key in ("probe_rollouts", "top_k", "selection_rollouts", "trace_rollouts",
                    "dp_check_rollouts"):
            _check_count(errors, f"evaluation.{key}", evaluation.get(key))
        if evaluation.get("random_episodes_per_epoch") is not None:
            _check_count(errors, "evaluation.random_episodes_per_epoch",
                         evaluation.get("random_episodes_per_epoch"))
        _check_range(errors, "evaluation.dp_tolerance_se", evaluation.get("dp_tolerance_se"),
                     0.0, low_open=True)

        seeds = config.get("seeds")
        if not isinstance(seeds, list) or not seeds:
            errors.append("seeds must be a non-empty list of integers")
        elif not all(_is_int(s) and s >= 0 for s in seeds):
            errors.append("seeds must be non-negative integers")
        elif len(set(seeds)) != len(seeds):
            errors.append("seeds must not repeat")
        _check_count(errors, "workers", config.get("workers"))
        if not isinstance(config.get("output_dir"), str) or not config.get("output_dir"):
            errors.append("output_dir must be a directory path")
        return errors

    @staticmethod
    def validate_config_dict(config: Dict[str, Any]) -> Tuple[bool, Optional[str]]:
        """Validate a merged experiment config."""
        errors = Validator.config_errors(config)
        if errors:
            return False, "; ".join(errors)
        return True, None

    @staticmethod
    def validate_model_file(path: str) -> Tuple[bool, Optional[str], Optional[Dict]]:
        """Check that a model file exists and parses as a JSON object; return the parsed data."""
        if not os.path.exists(path):
            return False, f"Model file not found: {path}", None
        try:
            with open(path, "r") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            return False, f"Model file is not valid JSON: {str(e)}", None
        except OSError as e:
            return False, f"Error reading model file: {str(e)}", None

        if not isinstance(data, dict):
            return False, "Model file must contain a JSON object", None
        for key in ("actions", "choice"):
            if key not in data:
                return False, f"Model file missing '{key}'", None
        return True, None, data

    @staticmethod
    def validate_output_dir(path: str) -> Tuple[bool, Optional[str]]:
        """Check that an output directory exists or can be created, and is writable."""
        if os.path.exists(path) and not os.path.isdir(path):
            return False, f"Output path is not a directory: {path}"
        if not os.path.exists(path):
            try:
                os.makedirs(path, exist_ok=True)
            except OSError as e:
                return False, f"Cannot create output directory: {str(e)}"
        if not os.access(path, os.W_OK):
            return False, f"Output directory is not writable: {path}"
        return True, None

    @staticmethod
    def validate_run_dir(run_dir: str) -> Tuple[bool, Optional[str]]:
        """Check that a seed directory holds every training artifact."""
        from .artifacts import TRAINING_ARTIFACTS, MANIFEST

        if not os.path.isdir(run_dir):
            return False, f"Run directory not found: {run_dir}"
        missing = [
            name for name in TRAINING_ARTIFACTS + (MANIFEST,)
            if not os.path.isfile(os.path.join(run_dir, name))
        ]
        if missing:
            return False, f"Run directory {run_dir} missing artifacts: {', '.join(missing)}"
        return True, None


def safe_file_operation(operation, *args, **kwargs):
    """Wrapper for file operations that turns OS errors into ValidationError."""
    try:
        return operation(*args, **kwargs)
    except PermissionError as e:
        raise ValidationError(f"Permission denied: {str(e)}")
    except FileNotFoundError as e:
        raise ValidationError(f"File not found: {str(e)}")
    except OSError as e:
        raise ValidationError(f"File operation failed: {str(e)}")
