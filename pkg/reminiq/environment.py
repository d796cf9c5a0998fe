"""
One reminiscence-therapy session as a reset/step environment.

The session tracks the round counter, the number of memory triggers
discussed and the streak of consecutive bad moments. Once the streak
reaches the threshold the only legal action is GiveChoices, whose outcome
(stop, continue, change trigger) is drawn from the patient model.

Sessions are immutable values: ``step`` returns the next SessionState inside
the StepOutcome and never mutates its input.
"""

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from .domain import INITIAL_STATE, PwdChoice, PwdState, RewardSpec, RobotAction, reward
from .patient.model import TransitionModel, sample_choice, sample_transition
from .validators import ValidationError


class SessionError(RuntimeError):
    """Misuse of a session (illegal action, stepping a finished session)."""
    pass


class IllegalActionError(SessionError):
    pass


class SessionFinishedError(SessionError):
    pass


class DoneReason(Enum):
    STOP_CHOSEN = "stop_chosen"
    MAX_ROUNDS = "max_rounds"
    MAX_TRIGGERS = "max_triggers"


@dataclass(frozen=True)
class EnvConfig:
    """Session limits. Defaults: 50 rounds, 15 memory triggers, forced choice after 2 bad moments."""
    max_rounds: int = 50
    max_triggers: int = 15
    streak_threshold: int = 2

    def __post_init__(self):
        if self.max_rounds < 0:
            raise ValidationError(f"max_rounds must be >= 0, got {self.max_rounds}")
        if self.max_triggers < 1:
            raise ValidationError(f"max_triggers must be >= 1, got {self.max_triggers}")
        if self.streak_threshold < 1:
            raise ValidationError(f"streak_threshold must be >= 1, got {self.streak_threshold}")

    def to_dict(self):
        return {
            "max_rounds": self.max_rounds,
            "max_triggers": self.max_triggers,
            "streak_threshold": self.streak_threshold,
        }


DEFAULT_ENV = EnvConfig()


@dataclass(frozen=True)
class SessionState:
    current: PwdState
    previous: Optional[PwdState]
    round: int
    triggers_discussed: int
    bad_streak: int
    done: bool = False
    done_reason: Optional[DoneReason] = None


@dataclass(frozen=True)
class StepOutcome:
    """Result of one step; ``session`` is the state to continue from."""
    next_state: PwdState
    reward: float
    done: bool
    forced_choice_taken: Optional[PwdChoice]
    session: SessionState

    @property
    def done_reason(self) -> Optional[DoneReason]:
        return self.session.done_reason

    @property
    def info(self) -> Tuple[int, int, int]:
        return (self.session.round, self.session.triggers_discussed, self.session.bad_streak)


def reset(env: EnvConfig = DEFAULT_ENV) -> SessionState:
    """Fresh session starting from [NR, Neu, No] with the first memory trigger."""
    if env.max_rounds == 0:
        return SessionState(INITIAL_STATE, None, 0, 1, 0, True, DoneReason.MAX_ROUNDS)
    return SessionState(
        current=INITIAL_STATE,
        previous=None,
        round=0,
        triggers_discussed=1,
        bad_streak=0,
    )


def forced_action_required(ss: SessionState, env: EnvConfig = DEFAULT_ENV) -> bool:
    """True when the bad-moment streak forces GiveChoices as the next action."""
    return not ss.done and ss.bad_streak >= env.streak_threshold


def step(ss: SessionState, a: RobotAction, model: TransitionModel, spec: RewardSpec,
         rng: np.random.Generator, env: EnvConfig = DEFAULT_ENV) -> StepOutcome:
    """
    Apply action ``a`` to the session.

    Raises:
        SessionFinishedError: the session is already done
        IllegalActionError: ``a`` is not legal here (GiveChoices when not forced,
            anything else when forced)
    """
    if ss.done:
        raise SessionFinishedError("Cannot step a finished session; call reset()")

    forced = forced_action_required(ss, env)
    if forced and a is not RobotAction.GIVE_CHOICES:
        raise IllegalActionError(
            f"Bad-moment streak of {ss.bad_streak} forces a7 (GiveChoices), got {a.label}"
        )
    if not forced and a is RobotAction.GIVE_CHOICES:
        raise IllegalActionError("a7 (GiveChoices) is only taken when forced by a bad-moment streak")

    if a is RobotAction.GIVE_CHOICES:
        return _give_choices(ss, model, spec, rng, env)

    next_state = sample_transition(model, ss.current, a, rng)
    r = reward(next_state, a, spec)
    round_ = ss.round + 1
    done = round_ >= env.max_rounds
    session = replace(
        ss,
        current=next_state,
        previous=ss.current,
        round=round_,
        bad_streak=ss.bad_streak + 1 if next_state.is_bad else 0,
        done=done,
        done_reason=DoneReason.MAX_ROUNDS if done else None,
    )
    return StepOutcome(next_state, r, done, None, session)


def _give_choices(ss: SessionState, model: TransitionModel, spec: RewardSpec,
                  rng: np.random.Generator, env: EnvConfig) -> StepOutcome:
    choice = sample_choice(model, ss.current, rng)
    next_state = ss.current
    triggers = ss.triggers_discussed
    reason: Optional[DoneReason] = None

    if choice is PwdChoice.STOP:
        reason = DoneReason.STOP_CHOSEN
    elif choice is PwdChoice.CHANGE_TRIGGER:
        next_state = INITIAL_STATE
        if triggers + 1 > env.max_triggers:
            reason = DoneReason.MAX_TRIGGERS
        else:
            triggers += 1

    round_ = ss.round + 1
    if reason is None and round_ >= env.max_rounds:
        reason = DoneReason.MAX_ROUNDS

    session = SessionState(
        current=next_state,
        previous=ss.current,
        round=round_,
        triggers_discussed=triggers,
        bad_streak=0,
        done=reason is not None,
        done_reason=reason,
    )
    r = reward(next_state, RobotAction.GIVE_CHOICES, spec)
    return StepOutcome(next_state, r, session.done, choice, session)
