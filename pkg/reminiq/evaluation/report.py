"""
Evaluation report for one trained run.

Assembles three per-epoch return curves (epsilon-greedy training returns,
greedy-policy probes, random actions), the Q-value sum and relative-update
series, the frequency of greedy policies over the final training episodes,
the final policy chosen among the most frequent ones, its traces, and a
Monte-Carlo versus exact-value cross-check.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..domain import RewardSpec, RobotAction
from ..environment import DEFAULT_ENV, EnvConfig
from ..patient.model import TransitionModel
from ..qlearning import PolicyTable, TrainLog
from .exact import exact_policy_value
from .rollouts import EpisodeTrace, RolloutResult, random_rollouts, rollout_policy

logger = logging.getLogger(__name__)


class ReportError(RuntimeError):
    """Raised when a training log cannot support the evaluation protocol."""
    pass


@dataclass(frozen=True)
class EvaluationSettings:
    probe_rollouts: int = 40
    random_episodes_per_epoch: Optional[int] = None  # None: same as training
    top_k: int = 5
    selection_rollouts: int = 1000
    trace_rollouts: int = 20
    dp_check_rollouts: int = 10000
    dp_tolerance_se: float = 4.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "probe_rollouts": self.probe_rollouts,
            "random_episodes_per_epoch": self.random_episodes_per_epoch,
            "top_k": self.top_k,
            "selection_rollouts": self.selection_rollouts,
            "trace_rollouts": self.trace_rollouts,
            "dp_check_rollouts": self.dp_check_rollouts,
            "dp_tolerance_se": self.dp_tolerance_se,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EvaluationSettings":
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class SelectionEntry:
    """One top-k candidate: its snapshot count and Monte-Carlo return."""
    rank: int
    policy: PolicyTable
    count: int
    result: RolloutResult

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rank": self.rank,
            "policy_key": self.policy.key(),
            "hash": self.policy.digest(),
            "count": self.count,
            **self.result.to_dict(),
        }


@dataclass(frozen=True)
class DpCheck:
    name: str
    policy: PolicyTable
    exact: float
    mc_mean: float
    mc_std_error: float
    n: int
    tolerance_se: float

    @property
    def deviation(self) -> float:
        return abs(self.mc_mean - self.exact)

    @property
    def within_tolerance(self) -> bool:
        if self.mc_std_error == 0.0:
            return self.deviation <= 1e-9 * max(1.0, abs(self.exact))
        return self.deviation <= self.tolerance_se * self.mc_std_error

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "policy_key": self.policy.key(),
            "exact": self.exact,
            "mc_mean": self.mc_mean,
            "mc_std_error": self.mc_std_error,
            "n": self.n,
            "deviation_se": (self.deviation / self.mc_std_error) if self.mc_std_error else 0.0,
            "tolerance_se": self.tolerance_se,
            "within_tolerance": self.within_tolerance,
        }


@dataclass
class EvalReport:
    epsilon_greedy_ql: List[float]
    greedy_ql: List[float]
    random_action: List[float]
    q_sum_series: List[float]
    q_update_series: List[float]
    policy_frequency: Dict[str, int]
    selection: List[SelectionEntry]
    final_policy: PolicyTable
    final_policy_return: RolloutResult
    traces: List[EpisodeTrace] = field(default_factory=list)
    dp_checks: List[DpCheck] = field(default_factory=list)

    @property
    def epochs(self) -> int:
        return len(self.epsilon_greedy_ql)

    def curve_rows(self) -> List[Tuple[int, float, float, float, float, float]]:
        return list(zip(
            range(self.epochs),
            self.epsilon_greedy_ql,
            self.greedy_ql,
            self.random_action,
            self.q_sum_series,
            self.q_update_series,
        ))

    @property
    def dp_ok(self) -> bool:
        return all(c.within_tolerance for c in self.dp_checks)


def policy_frequency(snapshots: List[PolicyTable]) -> Dict[str, int]:
    """Snapshot counts keyed by policy key, most frequent first (ties by lowest hash)."""
    counts = Counter(p.key() for p in snapshots)
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], PolicyTable.from_key(kv[0]).digest()))
    return dict(ordered)


def select_final_policy(frequency: Dict[str, int], model: TransitionModel, spec: RewardSpec,
                        rng: np.random.Generator, top_k: int = 5, rollouts: int = 1000,
                        env: EnvConfig = DEFAULT_ENV) -> Tuple[PolicyTable, RolloutResult, List[SelectionEntry]]:
    """
    Roll out the ``top_k`` most frequent policies and keep the best mean return.

    Args:
        frequency: policy key -> count, already ordered most frequent first
        model: simulated PwD
        spec: reward function
        rng: parent generator; one child per candidate, in rank order
        top_k: number of candidates
        rollouts: episodes per candidate

    Returns:
        Tuple of (final policy, its rollout result, every candidate entry)
    """
    if not frequency:
        raise ReportError("No policy snapshots to select from")
    candidates = list(frequency.items())[:top_k]
    entries = []
    for rank, ((key, count), child) in enumerate(zip(candidates, rng.spawn(len(candidates))), 1):
        policy = PolicyTable.from_key(key)
        result = rollout_policy(policy, model, spec, child, rollouts, env)
        entries.append(SelectionEntry(rank, policy, count, result))
        logger.debug(f"candidate {rank} ({count} snapshots): mean={result.mean:.4f}")

    best = min(entries, key=lambda e: (-e.result.mean, e.policy.digest()))
    return best.policy, best.result, entries


def dp_check(name: str, policy: PolicyTable, model: TransitionModel, spec: RewardSpec,
             rng: np.random.Generator, rollouts: int, tolerance_se: float,
             env: EnvConfig = DEFAULT_ENV) -> DpCheck:
    exact = exact_policy_value(policy, model, spec, env)
    mc = rollout_policy(policy, model, spec, rng, rollouts, env)
    check = DpCheck(name, policy, exact, mc.mean, mc.std_error, mc.n, tolerance_se)
    if not check.within_tolerance:
        logger.warning(
            f"Monte-Carlo mean of {name} policy ({mc.mean:.4f}) deviates from exact value "
            f"({exact:.4f}) by more than {tolerance_se} standard errors"
        )
    return check


def build_report(log: TrainLog, model: TransitionModel, spec: RewardSpec,
                 rng: np.random.Generator, settings: EvaluationSettings = EvaluationSettings(),
                 env: EnvConfig = DEFAULT_ENV) -> EvalReport:
    """
    Run the full evaluation protocol on a finished training log.

    Raises:
        ReportError: if the log holds fewer policy snapshots than its
            snapshot window, or no probe policy per epoch
    """
    window = log.config.snapshot_window
    if window < 1 or len(log.snapshots) < window:
        raise ReportError(
            f"Need {max(window, 1)} recorded policy snapshots, found {len(log.snapshots)}; "
            "train for more episodes or lower snapshot_window"
        )
    if len(log.probe_policies) != len(log.epochs):
        raise ReportError(
            f"Expected one probe policy per epoch ({len(log.epochs)}), found {len(log.probe_policies)}"
        )

    probe_rng, random_rng, selection_rng, trace_rng, dp_rng = rng.spawn(5)
    n_epochs = len(log.epochs)

    logger.info(f"Probing greedy policies over {n_epochs} epochs")
    greedy = [
        rollout_policy(p, model, spec, child, settings.probe_rollouts, env).mean
        for p, child in zip(log.probe_policies, probe_rng.spawn(n_epochs))
    ]
    random_episodes = settings.random_episodes_per_epoch or log.config.episodes_per_epoch
    random_curve = [
        random_rollouts(model, spec, child, random_episodes, env).mean
        for child in random_rng.spawn(n_epochs)
    ]

    frequency = policy_frequency(log.snapshots[-window:])
    final, final_result, selection = select_final_policy(
        frequency, model, spec, selection_rng, settings.top_k, settings.selection_rollouts, env
    )
    logger.info(f"Final policy {final.key()} with mean return {final_result.mean:.4f}")

    traces = rollout_policy(final, model, spec, trace_rng, settings.trace_rollouts, env,
                            record=True).traces

    checks = [
        dp_check(name, policy, model, spec, child, settings.dp_check_rollouts,
                 settings.dp_tolerance_se, env)
        for (name, policy), child in zip(
            (
                ("final", final),
                ("all_easy_prompt", PolicyTable.uniform(RobotAction.EASY_PROMPT)),
                ("all_difficult_prompt", PolicyTable.uniform(RobotAction.DIFFICULT_PROMPT)),
            ),
            dp_rng.spawn(3),
        )
    ]

    return EvalReport(
        epsilon_greedy_ql=[e.avg_return for e in log.epochs],
        greedy_ql=greedy,
        random_action=random_curve,
        q_sum_series=[e.q_sum for e in log.epochs],
        q_update_series=[e.q_update for e in log.epochs],
        policy_frequency=frequency,
        selection=selection,
        final_policy=final,
        final_policy_return=final_result,
        traces=list(traces),
        dp_checks=checks,
    )
