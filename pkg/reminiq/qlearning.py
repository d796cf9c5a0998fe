"""
Revised tabular Q-learning for robot-assisted reminiscence therapy.

GiveChoices (a7) is rule-triggered and has no Q column. Its reward is folded
into the learnable pair that led into the bad streak: on an a7 step the
previous (state, action) entry is updated with the a7 reward and the value
of the state the PwD ends up in, and the a7 step writes no entry of its own.
"""

import hashlib
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .domain import (
    LEARNABLE_ACTIONS,
    N_LEARNABLE,
    N_STATES,
    STATES,
    PwdState,
    RewardSpec,
    RewardVariant,
    RobotAction,
)
from .environment import DEFAULT_ENV, EnvConfig, forced_action_required, reset, step
from .patient.model import TransitionModel
from .seeding import stream
from .validators import ValidationError

logger = logging.getLogger(__name__)

SPECIAL_BRANCH_ACTIONS = {
    "give_choices": RobotAction.GIVE_CHOICES,
    "comfort": RobotAction.COMFORT,
}

PROGRESS_EVERY = 100

PreviousPair = Optional[Tuple[PwdState, RobotAction]]


class TrainingError(RuntimeError):
    """Raised when the Q-table leaves its finite value bounds."""
    pass


class QTable:
    """State x learnable-action values, 18 x 6, canonical state order."""

    def __init__(self, values: Optional[np.ndarray] = None):
        if values is None:
            values = np.zeros((N_STATES, N_LEARNABLE))
        values = np.array(values, dtype=float)
        if values.shape != (N_STATES, N_LEARNABLE):
            raise ValueError(f"Q-table must have shape (18, 6), got {values.shape}")
        self.values = values

    @classmethod
    def zeros(cls) -> "QTable":
        return cls()

    def __getitem__(self, key: Tuple[PwdState, RobotAction]) -> float:
        s, a = key
        return float(self.values[s.index, int(a)])

    def row(self, s: PwdState) -> np.ndarray:
        return self.values[s.index]

    def max_value(self, s: PwdState) -> float:
        return float(self.values[s.index].max())

    def total(self) -> float:
        return float(self.values.sum())

    def copy(self) -> "QTable":
        return QTable(self.values.copy())

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def within(self, low: float, high: float) -> bool:
        return bool(self.values.min() >= low and self.values.max() <= high)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QTable):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "q": self.values.tolist(),
            "ordering": "response-major",
            "actions": [a.label for a in LEARNABLE_ACTIONS],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "QTable":
        ordering = data.get("ordering", "response-major")
        if ordering != "response-major":
            raise ValidationError(f"Unsupported Q-table ordering: {ordering}")
        try:
            return cls(np.array(data["q"], dtype=float))
        except KeyError:
            raise ValidationError("Q-table file missing 'q'")
        except ValueError as e:
            raise ValidationError(f"Invalid Q-table: {e}")


@dataclass(frozen=True)
class TrainConfig:
    """
    Training hyperparameters.

    Attributes:
        alpha: learning rate, in [0, 1] (0 freezes the table; experiment configs require > 0)
        gamma: discount factor, in [0, 1)
        epsilon: exploration rate, in [0, 1]
        epochs: number of epochs
        episodes_per_epoch: episodes per epoch
        seed: experiment seed; training draws from its "train" stream
        reward_variant: reward preset the run trains under
        probe_episode: 1-based episode of each epoch at which the greedy policy is probed
        snapshot_window: number of final episodes whose greedy policy is recorded
        special_branch: which action's update is redirected to the previous pair
    """
    alpha: float = 0.05
    gamma: float = 0.95
    epsilon: float = 0.1
    epochs: int = 1500
    episodes_per_epoch: int = 30
    seed: int = 0
    reward_variant: RewardVariant = RewardVariant.R1
    probe_episode: int = 10
    snapshot_window: int = 600
    special_branch: str = "give_choices"

    def __post_init__(self):
        errors = []
        if not 0.0 <= self.alpha <= 1.0:
            errors.append(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0.0 <= self.gamma < 1.0:
            errors.append(f"gamma must be in [0, 1), got {self.gamma}")
        if not 0.0 <= self.epsilon <= 1.0:
            errors.append(f"epsilon must be in [0, 1], got {self.epsilon}")
        if self.epochs < 1 or self.episodes_per_epoch < 1:
            errors.append("epochs and episodes_per_epoch must be >= 1")
        if self.probe_episode < 1:
            errors.append(f"probe_episode must be >= 1, got {self.probe_episode}")
        if self.snapshot_window < 0:
            errors.append(f"snapshot_window must be >= 0, got {self.snapshot_window}")
        if self.special_branch not in SPECIAL_BRANCH_ACTIONS:
            errors.append(f"Unknown special_branch: {self.special_branch}")
        if errors:
            raise ValidationError("; ".join(errors))
        object.__setattr__(self, "reward_variant", RewardVariant.parse(self.reward_variant))

    @property
    def branch_action(self) -> RobotAction:
        return SPECIAL_BRANCH_ACTIONS[self.special_branch]

    @property
    def total_episodes(self) -> int:
        return self.epochs * self.episodes_per_epoch

    def to_dict(self) -> Dict[str, Any]:
        return {
            "alpha": self.alpha,
            "gamma": self.gamma,
            "epsilon": self.epsilon,
            "epochs": self.epochs,
            "episodes_per_epoch": self.episodes_per_epoch,
            "seed": self.seed,
            "reward_variant": self.reward_variant.value,
            "probe_episode": self.probe_episode,
            "snapshot_window": self.snapshot_window,
            "special_branch": self.special_branch,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TrainConfig":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass(frozen=True)
class PolicyTable:
    """Deterministic policy: one learnable action per canonical state."""
    actions: Tuple[RobotAction, ...]

    def __post_init__(self):
        actions = tuple(RobotAction.parse(a) for a in self.actions)
        if len(actions) != N_STATES:
            raise ValueError(f"A policy needs one action per state (18), got {len(actions)}")
        illegal = [a.label for a in actions if not a.is_learnable]
        if illegal:
            raise ValueError("a7 (GiveChoices) cannot appear in a policy")
        object.__setattr__(self, "actions", actions)

    def action_for(self, s: PwdState) -> RobotAction:
        return self.actions[s.index]

    def key(self) -> str:
        """18 zero-based action digits in canonical state order."""
        return "".join(str(int(a)) for a in self.actions)

    def digest(self) -> str:
        return hashlib.sha256(self.key().encode("ascii")).hexdigest()

    @classmethod
    def from_key(cls, key: str) -> "PolicyTable":
        if len(key) != N_STATES or not key.isdigit():
            raise ValueError(f"Not a policy key: {key!r}")
        return cls(tuple(RobotAction(int(ch)) for ch in key))

    @classmethod
    def uniform(cls, action: RobotAction) -> "PolicyTable":
        return cls((action,) * N_STATES)

    def to_dict(self) -> Dict[str, str]:
        """State code ``[r, e, c]`` -> action slug."""
        return {s.code(): self.actions[s.index].slug for s in STATES}

    @classmethod
    def from_dict(cls, data: Mapping[str, str]) -> "PolicyTable":
        actions = []
        for s in STATES:
            if s.code() not in data:
                raise ValidationError(f"Policy missing state {s.code()}")
            try:
                actions.append(RobotAction.parse(data[s.code()]))
            except ValueError as e:
                raise ValidationError(str(e))
        try:
            return cls(tuple(actions))
        except ValueError as e:
            raise ValidationError(str(e))


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    avg_return: float
    q_sum: float
    q_update: float


@dataclass
class TrainLog:
    """
    Per-epoch metrics plus the policies evaluation needs.

    ``probe_policies`` holds the greedy policy at the probe episode of every
    epoch; ``snapshots`` the greedy policy after each of the final
    ``snapshot_window`` episodes.
    """
    config: TrainConfig
    epochs: List[EpochRecord] = field(default_factory=list)
    probe_policies: List[PolicyTable] = field(default_factory=list)
    snapshots: List[PolicyTable] = field(default_factory=list)

    @property
    def avg_returns(self) -> np.ndarray:
        return np.array([e.avg_return for e in self.epochs])

    @property
    def q_sums(self) -> np.ndarray:
        return np.array([e.q_sum for e in self.epochs])

    @property
    def q_updates(self) -> np.ndarray:
        return np.array([e.q_update for e in self.epochs])


def select_action(q: QTable, s: PwdState, epsilon: float, rng: np.random.Generator) -> RobotAction:
    """
    Epsilon-greedy over a1..a6. One uniform draw decides exploration; an
    exploring step draws a second, uniform action index. Greedy ties go to the
    lowest action index.
    """
    if rng.random() < epsilon:
        return RobotAction(int(rng.integers(N_LEARNABLE)))
    return RobotAction(int(np.argmax(q.values[s.index])))


def greedy_policy(q: QTable) -> PolicyTable:
    return PolicyTable(tuple(RobotAction(int(i)) for i in np.argmax(q.values, axis=1)))


def update(q: QTable, s_prev: PreviousPair, s_t: PwdState, a_t: RobotAction, r_t: float,
           s_next: PwdState, cfg: TrainConfig, terminal: bool) -> QTable:
    """
    Apply one revised Q-learning update in place and return ``q``.

    Args:
        q: table to update
        s_prev: (state, action) of the previous step in the episode, or None
        s_t: state the action was taken in
        a_t: action taken
        r_t: reward observed
        s_next: state observed after the action
        cfg: supplies alpha, gamma and the special branch
        terminal: the step ended the episode; the bootstrap term is dropped

    With the default branch an a7 step updates ``s_prev`` instead of
    (s_t, a7). With the comfort branch an a6 step updates ``s_prev`` (skipped
    when there is none or it was an a7 step) and a7 steps update nothing.
    """
    if cfg.alpha == 0.0:
        return q

    branch = cfg.branch_action
    if a_t is branch:
        if s_prev is None:
            if branch is RobotAction.GIVE_CHOICES:
                raise ValueError("An a7 update needs the previous state-action pair")
            return q
        target_state, target_action = s_prev
        if target_action is RobotAction.GIVE_CHOICES:
            return q
    elif a_t is RobotAction.GIVE_CHOICES:
        return q
    else:
        target_state, target_action = s_t, a_t

    bootstrap = 0.0 if terminal else cfg.gamma * q.max_value(s_next)
    i, j = target_state.index, int(target_action)
    q.values[i, j] += cfg.alpha * (r_t + bootstrap - q.values[i, j])
    return q


def q_value_bounds(spec: RewardSpec, gamma: float) -> Tuple[float, float]:
    """Range every Q entry stays in when starting from zero."""
    r_min, r_max = spec.bounds()
    return min(0.0, r_min) / (1.0 - gamma), max(0.0, r_max) / (1.0 - gamma)


def run_training_episode(q: QTable, cfg: TrainConfig, model: TransitionModel, spec: RewardSpec,
                         rng: np.random.Generator, env: EnvConfig = DEFAULT_ENV) -> float:
    """Play one episode epsilon-greedily, updating ``q`` after every step; return the undiscounted return."""
    ss = reset(env)
    prev: PreviousPair = None
    total = 0.0
    while not ss.done:
        if forced_action_required(ss, env):
            a = RobotAction.GIVE_CHOICES
        else:
            a = select_action(q, ss.current, cfg.epsilon, rng)
        out = step(ss, a, model, spec, rng, env)
        update(q, prev, ss.current, a, out.reward, out.next_state, cfg, terminal=out.done)
        prev = (ss.current, a)
        total += out.reward
        ss = out.session
    return total


def train(cfg: TrainConfig, model: TransitionModel, spec: RewardSpec,
          env: EnvConfig = DEFAULT_ENV, rng: Optional[np.random.Generator] = None,
          progress: Optional[Callable[[EpochRecord], None]] = None) -> Tuple[QTable, TrainLog]:
    """
    Train a Q-table for ``cfg.epochs`` x ``cfg.episodes_per_epoch`` episodes.

    Args:
        cfg: hyperparameters and schedule
        model: simulated PwD
        spec: reward function
        env: session limits
        rng: random stream (defaults to the "train" stream of ``cfg.seed``)
        progress: called with each finished epoch record

    Returns:
        Tuple of (final QTable, TrainLog)

    Raises:
        TrainingError: if any Q entry becomes non-finite or leaves its value bounds
    """
    rng = rng if rng is not None else stream(cfg.seed, "train")
    q = QTable.zeros()
    log = TrainLog(config=cfg)
    low, high = q_value_bounds(spec, cfg.gamma)
    # small slack for float accumulation at the bounds
    slack = 1e-9 * max(abs(low), abs(high), 1.0)

    probe_index = min(cfg.probe_episode, cfg.episodes_per_epoch) - 1
    snapshot_start = cfg.total_episodes - cfg.snapshot_window
    floor = np.finfo(float).eps
    prev_sum: Optional[float] = None

    logger.info(
        f"Training {cfg.epochs} epochs x {cfg.episodes_per_epoch} episodes "
        f"(seed={cfg.seed}, reward={cfg.reward_variant.value}, branch={cfg.special_branch})"
    )
    for epoch in range(cfg.epochs):
        returns: List[float] = []
        sums: List[float] = []
        for episode in range(cfg.episodes_per_epoch):
            returns.append(run_training_episode(q, cfg, model, spec, rng, env))
            sums.append(q.total())
            if episode == probe_index:
                log.probe_policies.append(greedy_policy(q))
            if epoch * cfg.episodes_per_epoch + episode >= snapshot_start:
                log.snapshots.append(greedy_policy(q))

        if not q.is_finite():
            raise TrainingError(f"Q-table became non-finite in epoch {epoch}")
        if not q.within(low - slack, high + slack):
            raise TrainingError(
                f"Q-table left [{low:g}, {high:g}] in epoch {epoch}: "
                f"min={q.values.min():g}, max={q.values.max():g}"
            )

        q_sum = float(np.mean(sums))
        q_update = 0.0 if prev_sum is None else abs(q_sum - prev_sum) / max(abs(prev_sum), floor)
        prev_sum = q_sum
        record = EpochRecord(epoch, float(np.mean(returns)), q_sum, q_update)
        log.epochs.append(record)

        logger.debug(
            f"epoch {epoch}: avg_return={record.avg_return:.4f} "
            f"q_sum={record.q_sum:.4f} q_update={record.q_update:.6f}"
        )
        if (epoch + 1) % PROGRESS_EVERY == 0 or epoch + 1 == cfg.epochs:
            logger.info(f"epoch {epoch + 1}/{cfg.epochs}: avg_return={record.avg_return:.3f}")
        if progress is not None:
            progress(record)

    return q, log


def policy_keys(policies: Sequence[PolicyTable]) -> List[str]:
    return [p.key() for p in policies]
