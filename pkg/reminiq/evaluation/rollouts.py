"""
Monte-Carlo rollouts of fixed and random policies.

Every batch of ``n`` episodes spawns ``n`` child generators from the
caller's generator, one per episode, so a batch's results do not depend on
the order its episodes run in. Returns are undiscounted reward sums.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from ..domain import N_LEARNABLE, PwdChoice, PwdState, RewardSpec, RobotAction
from ..environment import DEFAULT_ENV, EnvConfig, forced_action_required, reset, step
from ..patient.model import TransitionModel
from ..qlearning import PolicyTable, QTable, select_action

# (state, rng) -> learnable action
Chooser = Callable[[PwdState, np.random.Generator], RobotAction]


@dataclass(frozen=True)
class TraceRow:
    """One interaction step: the PwD state, the robot action and, for a7, the PwD's choice."""
    step: int
    state: PwdState
    action: RobotAction
    choice: Optional[PwdChoice] = None


@dataclass
class EpisodeTrace:
    rows: List[TraceRow] = field(default_factory=list)
    total_return: float = 0.0

    def __len__(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class RolloutResult:
    mean: float
    std_error: float
    n: int
    returns: Tuple[float, ...]
    traces: Tuple[EpisodeTrace, ...] = ()

    def to_dict(self):
        return {"mean": self.mean, "std_error": self.std_error, "n": self.n}


def run_episode(choose: Chooser, model: TransitionModel, spec: RewardSpec,
                rng: np.random.Generator, env: EnvConfig = DEFAULT_ENV,
                record: bool = False) -> Tuple[float, Optional[EpisodeTrace]]:
    """Play one episode; a7 is taken whenever it is forced, otherwise ``choose`` decides."""
    ss = reset(env)
    total = 0.0
    trace = EpisodeTrace() if record else None
    while not ss.done:
        if forced_action_required(ss, env):
            a = RobotAction.GIVE_CHOICES
        else:
            a = choose(ss.current, rng)
        out = step(ss, a, model, spec, rng, env)
        if trace is not None:
            trace.rows.append(TraceRow(ss.round, ss.current, a, out.forced_choice_taken))
        total += out.reward
        ss = out.session
    if trace is not None:
        trace.total_return = total
    return total, trace


def summarize(returns: List[float], traces: Tuple[EpisodeTrace, ...] = ()) -> RolloutResult:
    n = len(returns)
    values = np.array(returns, dtype=float)
    std_error = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return RolloutResult(float(values.mean()), std_error, n, tuple(returns), traces)


def _rollout(choose: Chooser, model: TransitionModel, spec: RewardSpec,
             rng: np.random.Generator, n: int, env: EnvConfig,
             record: bool) -> RolloutResult:
    if n < 1:
        raise ValueError(f"Need at least one rollout, got {n}")
    returns: List[float] = []
    traces: List[EpisodeTrace] = []
    for child in rng.spawn(n):
        total, trace = run_episode(choose, model, spec, child, env, record)
        returns.append(total)
        if trace is not None:
            traces.append(trace)
    return summarize(returns, tuple(traces))


def rollout_policy(p: PolicyTable, model: TransitionModel, spec: RewardSpec,
                   rng: np.random.Generator, n: int, env: EnvConfig = DEFAULT_ENV,
                   record: bool = False) -> RolloutResult:
    """
    Run ``n`` independent episodes following ``p`` greedily.

    Args:
        p: policy to follow outside forced a7 steps
        model: simulated PwD
        spec: reward function
        rng: parent generator; one child is spawned per episode
        n: number of episodes (>= 1)
        env: session limits
        record: keep per-step traces

    Returns:
        RolloutResult with the mean return, its standard error (0 when n == 1)
        and the traces if recorded
    """
    return _rollout(lambda s, _rng: p.action_for(s), model, spec, rng, n, env, record)


def random_rollouts(model: TransitionModel, spec: RewardSpec, rng: np.random.Generator,
                    episodes: int, env: EnvConfig = DEFAULT_ENV) -> RolloutResult:
    def choose(s: PwdState, child: np.random.Generator) -> RobotAction:
        return RobotAction(int(child.integers(N_LEARNABLE)))

    return _rollout(choose, model, spec, rng, episodes, env, record=False)


def random_baseline(model: TransitionModel, spec: RewardSpec, rng: np.random.Generator,
                    episodes: int, env: EnvConfig = DEFAULT_ENV) -> float:
    """Mean return of uniformly random a1..a6 actions (a7 still forced)."""
    return random_rollouts(model, spec, rng, episodes, env).mean


def rollout_epsilon_greedy(q: QTable, epsilon: float, model: TransitionModel, spec: RewardSpec,
                           rng: np.random.Generator, n: int,
                           env: EnvConfig = DEFAULT_ENV) -> RolloutResult:
    """Episodes acting epsilon-greedily on a frozen ``q``."""
    return _rollout(lambda s, child: select_action(q, s, epsilon, child),
                    model, spec, rng, n, env, record=False)
