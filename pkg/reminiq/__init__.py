"""
reminiq - simulated reminiscence-therapy patient and revised Q-learning toolkit

A stochastic PwD simulator, a tabular Q-learning trainer whose GiveChoices
steps feed back into the action that led into a bad streak, and an
evaluation harness with an exact dynamic-programming oracle.
"""

__version__ = "0.3.0"
__author__ = "reminiq developers"

from .domain import (
    INITIAL_STATE,
    STATES,
    ConfusionState,
    EmotionLevel,
    PwdChoice,
    PwdState,
    ResponseRelevance,
    RewardSpec,
    RewardVariant,
    RobotAction,
    decode_state,
    encode_state,
    reward,
)
from .environment import EnvConfig, SessionState, StepOutcome, forced_action_required, reset, step
from .qlearning import PolicyTable, QTable, TrainConfig, TrainLog, greedy_policy, select_action, train, update
from .validators import ValidationError, Validator

__all__ = [
    "INITIAL_STATE",
    "STATES",
    "ConfusionState",
    "EmotionLevel",
    "PwdChoice",
    "PwdState",
    "ResponseRelevance",
    "RewardSpec",
    "RewardVariant",
    "RobotAction",
    "decode_state",
    "encode_state",
    "reward",
    "EnvConfig",
    "SessionState",
    "StepOutcome",
    "forced_action_required",
    "reset",
    "step",
    "PolicyTable",
    "QTable",
    "TrainConfig",
    "TrainLog",
    "greedy_policy",
    "select_action",
    "train",
    "update",
    "ValidationError",
    "Validator",
]
