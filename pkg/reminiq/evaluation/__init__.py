"""
Evaluation: rollouts, the exact-value oracle and the per-run report.
"""

from .rollouts import (
    EpisodeTrace,
    RolloutResult,
    TraceRow,
    random_baseline,
    rollout_epsilon_greedy,
    rollout_policy,
    run_episode,
)
from .exact import exact_policy_value
from .report import (
    EvalReport,
    EvaluationSettings,
    ReportError,
    build_report,
    policy_frequency,
    select_final_policy,
)

__all__ = [
    "EpisodeTrace",
    "RolloutResult",
    "TraceRow",
    "random_baseline",
    "rollout_epsilon_greedy",
    "rollout_policy",
    "run_episode",
    "exact_policy_value",
    "EvalReport",
    "EvaluationSettings",
    "ReportError",
    "build_report",
    "policy_frequency",
    "select_final_policy",
]
