import copy
import os
from dataclasses import dataclass, replace
from typing import Any, Dict, Optional, Tuple

import yaml

from .domain import RewardSpec, RewardVariant, parse_reward
from .environment import EnvConfig
from .evaluation.report import EvaluationSettings
from .patient.generator import default_model
from .patient.model import TransitionModel, choice_distribution_from_dict, load_model
from .qlearning import TrainConfig
from .validators import ValidationError, Validator

DEFAULT_CONFIG: Dict[str, Any] = {
    "train": {
        "alpha": 0.05,
        "gamma": 0.95,
        "epsilon": 0.1,
        "epochs": 1500,
        "episodes_per_epoch": 30,
        "probe_episode": 10,  # greedy policy probed after this episode of each epoch
        "snapshot_window": 600,  # greedy policies recorded over the final episodes
        "special_branch": "give_choices",  # give_choices | comfort
    },
    "environment": {
        "max_rounds": 50,
        "max_triggers": 15,
        "streak_threshold": 2,  # consecutive bad moments that force GiveChoices
    },
    "model": {
        "source": "default",  # "default" or a path to a model JSON file
        "seed": 0,  # generator seed for the default model, shared by all training seeds
        "clear_probability": 0.6,  # chance repeat/explain clears confusion
        "jitter": 0.05,  # relative spread of the seeded base-rate perturbation
        "choice": None,  # optional {"stop": p, "continue": p, "change": p} override
    },
    "reward": {
        "variant": "R1",  # R1 | R2 | Custom
        "custom": None,  # {"response_table": {...}, "emotion": {...}, "confusion": {...}}
    },
    "evaluation": {
        "probe_rollouts": 40,
        "random_episodes_per_epoch": None,  # None uses train.episodes_per_epoch
        "top_k": 5,
        "selection_rollouts": 1000,
        "trace_rollouts": 20,
        "dp_check_rollouts": 10000,
        "dp_tolerance_se": 4.0,
    },
    "seeds": [0],
    "output_dir": "runs",
    "workers": 1,  # > 1 trains/evaluates seeds in a process pool
    "logging": {
        "enabled": True,
        "level": "INFO",
        "save_history": True,
    },
}


@dataclass(frozen=True)
class ModelSource:
    """Where the patient model comes from, plus an optional choice override."""
    source: str = "default"
    seed: int = 0
    clear_probability: float = 0.6
    jitter: float = 0.05
    choice: Optional[Dict[str, float]] = None

    @property
    def is_default(self) -> bool:
        return self.source == "default"

    def load(self) -> TransitionModel:
        if self.is_default:
            model = default_model(self.seed, self.clear_probability, self.jitter)
        else:
            model = load_model(self.source)
        override = choice_distribution_from_dict(self.choice)
        if override:
            model = model.with_choice(override)
        return model

    def to_dict(self) -> Dict[str, Any]:
        return {
            "source": self.source,
            "seed": self.seed,
            "clear_probability": self.clear_probability,
            "jitter": self.jitter,
            "choice": dict(self.choice) if self.choice else None,
        }


@dataclass(frozen=True)
class ExperimentConfig:
    """Typed, resolved experiment settings."""
    train: TrainConfig
    env: EnvConfig
    model: ModelSource
    reward_variant: RewardVariant
    reward_custom: Optional[Dict[str, Any]]
    evaluation: EvaluationSettings
    output_dir: str
    seeds: Tuple[int, ...]
    workers: int = 1
    log_level: str = "INFO"
    logging_enabled: bool = True
    save_history: bool = True

    def reward_spec(self) -> RewardSpec:
        return parse_reward(self.reward_variant, self.reward_custom)

    def train_config(self, seed: int) -> TrainConfig:
        return replace(self.train, seed=seed, reward_variant=self.reward_variant)

    def with_reward(self, variant: RewardVariant) -> "ExperimentConfig":
        return replace(self, reward_variant=variant, train=replace(self.train, reward_variant=variant))

    def to_dict(self) -> Dict[str, Any]:
        """Config-file shaped dict (the manifest's resolved config)."""
        train = self.train.to_dict()
        train.pop("seed")
        train.pop("reward_variant")
        return {
            "train": train,
            "environment": self.env.to_dict(),
            "model": self.model.to_dict(),
            "reward": {"variant": self.reward_variant.value, "custom": self.reward_custom},
            "evaluation": self.evaluation.to_dict(),
            "seeds": list(self.seeds),
            "output_dir": self.output_dir,
            "workers": self.workers,
        }


class Config:
    """
    Experiment configuration loaded from a JSON or YAML file over DEFAULT_CONFIG.

    A JSON document is valid YAML, so one loader handles both formats.
    """

    def __init__(self, path: Optional[str] = None, data: Optional[Dict[str, Any]] = None):
        self.config_path = path
        self.config = self._load_config(path, data)

    def _load_config(self, path: Optional[str], data: Optional[Dict[str, Any]]) -> Dict[str, Any]:
        """Load configuration from file (or a dict) merged over the defaults."""
        user_config: Dict[str, Any] = dict(data or {})
        if path is not None:
            if not os.path.exists(path):
                raise ValidationError(f"Config file not found: {path}")
            try:
                with open(path, "r") as f:
                    loaded = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                raise ValidationError(f"Could not parse config file {path}: {e}")
            if not isinstance(loaded, dict):
                raise ValidationError(f"Config file {path} must contain a mapping")
            user_config = self._merge_config(loaded, user_config)
        return self._merge_config(copy.deepcopy(DEFAULT_CONFIG), user_config)

    def _merge_config(self, default: Dict, user: Dict) -> Dict:
        """Recursively merge user config with defaults."""
        result = default.copy()
        for key, value in user.items():
            if key in result and isinstance(result[key], dict) and isinstance(value, dict):
                result[key] = self._merge_config(result[key], value)
            else:
                result[key] = value
        return result

    def save(self, path: Optional[str] = None):
        """Save the current configuration as YAML."""
        target = path or self.config_path
        if target is None:
            raise ValidationError("No config path to save to")
        with open(target, "w") as f:
            yaml.safe_dump(self.config, f, default_flow_style=False, sort_keys=False)

    def get(self, key: str, default: Any = None) -> Any:
        """Get a configuration value using dot notation."""
        keys = key.split(".")
        value = self.config
        for k in keys:
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default
        return value

    def set(self, key: str, value: Any):
        """Set a configuration value using dot notation."""
        keys = key.split(".")
        config = self.config
        for k in keys[:-1]:
            if k not in config or not isinstance(config[k], dict):
                config[k] = {}
            config = config[k]
        config[keys[-1]] = value

    def apply_overrides(self, seeds=None, output_dir: Optional[str] = None,
                        reward: Optional[str] = None, model: Optional[str] = None):
        """Apply command-line flags on top of the file values."""
        if seeds:
            self.set("seeds", [int(s) for s in seeds])
        if output_dir:
            self.set("output_dir", output_dir)
        if reward:
            self.set("reward.variant", reward)
        if model:
            self.set("model.source", model)

    def get_workers(self) -> int:
        """Number of worker processes (REMINIQ_WORKERS overrides the file)."""
        return int(os.getenv("REMINIQ_WORKERS", self.get("workers", 1)))

    def is_logging_enabled(self) -> bool:
        return self.get("logging.enabled", True)

    def get_log_level(self) -> str:
        """Get the logging level (REMINIQ_LOG_LEVEL overrides the file)."""
        return os.getenv("REMINIQ_LOG_LEVEL", self.get("logging.level", "INFO"))

    def should_save_history(self) -> bool:
        return self.get("logging.save_history", True)

    def validate(self):
        """Raise ValidationError listing every problem of the merged config."""
        resolved = copy.deepcopy(self.config)
        resolved["workers"] = self.get_workers()
        ok, error = Validator.validate_config_dict(resolved)
        if not ok:
            raise ValidationError(f"Invalid configuration: {error}")

    def to_experiment(self) -> ExperimentConfig:
        """Validate and convert to the typed ExperimentConfig."""
        self.validate()
        train = self.get("train")
        model = self.get("model")
        reward = self.get("reward")
        variant = RewardVariant.parse(reward["variant"])
        experiment = ExperimentConfig(
            train=TrainConfig(
                alpha=float(train["alpha"]),
                gamma=float(train["gamma"]),
                epsilon=float(train["epsilon"]),
                epochs=int(train["epochs"]),
                episodes_per_epoch=int(train["episodes_per_epoch"]),
                reward_variant=variant,
                probe_episode=int(train["probe_episode"]),
                snapshot_window=int(train["snapshot_window"]),
                special_branch=train["special_branch"],
            ),
            env=EnvConfig(**self.get("environment")),
            model=ModelSource(
                source=model["source"],
                seed=int(model["seed"]),
                clear_probability=float(model["clear_probability"]),
                jitter=float(model["jitter"]),
                choice={k: float(v) for k, v in model["choice"].items()} if model.get("choice") else None,
            ),
            reward_variant=variant,
            reward_custom=reward.get("custom"),
            evaluation=EvaluationSettings.from_dict(self.get("evaluation")),
            output_dir=self.get("output_dir"),
            seeds=tuple(int(s) for s in self.get("seeds")),
            workers=self.get_workers(),
            log_level=self.get_log_level(),
            logging_enabled=self.is_logging_enabled(),
            save_history=self.should_save_history(),
        )
        # surface bad custom reward tables before any computation
        try:
            experiment.reward_spec()
        except (ValueError, KeyError) as e:
            raise ValidationError(f"Invalid reward configuration: {e}")
        return experiment


def experiment_from_manifest(manifest: Dict[str, Any]) -> ExperimentConfig:
    """Rebuild the ExperimentConfig recorded in a run manifest."""
    return Config(data=manifest["config"]).to_experiment()
