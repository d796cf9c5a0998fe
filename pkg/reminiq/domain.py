"""
State, action and reward vocabulary of the reminiscence-therapy MDP.

A PwD (person with dementia) state is the triple
(response relevance, emotion level, confusion condition), giving 18 states.
States are indexed response-major, then emotion, then confusion, so that
Q-tables, policies and traces line up across runs.
"""

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Dict, Mapping, Optional, Tuple


class ResponseRelevance(IntEnum):
    """How relevant the PwD's answer to the last prompt was."""
    NR = 0
    IR = 1
    RR = 2


class EmotionLevel(IntEnum):
    """Observed emotion; codes match the trace encoding (-1, 0, 1)."""
    NEG = -1
    NEU = 0
    POS = 1


class ConfusionState(IntEnum):
    NO = 0
    YES = 1


class RobotAction(IntEnum):
    """
    Robot actions, valued by their zero-based trace index.

    Prose labels are one-based (``a1`` .. ``a7``); ``label`` gives them.
    GIVE_CHOICES is rule-triggered and never chosen by the learner.
    """
    EASY_PROMPT = 0
    MODERATE_PROMPT = 1
    DIFFICULT_PROMPT = 2
    REPEAT = 3
    EXPLAIN = 4
    COMFORT = 5
    GIVE_CHOICES = 6

    @property
    def label(self) -> str:
        return f"a{self.value + 1}"

    @property
    def slug(self) -> str:
        return self.name.lower()

    @property
    def is_learnable(self) -> bool:
        return self is not RobotAction.GIVE_CHOICES

    @classmethod
    def parse(cls, value) -> "RobotAction":
        """Accept an enum member, a zero-based index, a label like 'a3' or a slug like 'comfort'."""
        if isinstance(value, RobotAction):
            return value
        if isinstance(value, int):
            return cls(value)
        text = str(value).strip().lower()
        for action in cls:
            if text in (action.label, action.slug):
                return action
        raise ValueError(f"Unknown robot action: {value!r}")


LEARNABLE_ACTIONS: Tuple[RobotAction, ...] = tuple(a for a in RobotAction if a.is_learnable)
PROMPT_ACTIONS: Tuple[RobotAction, ...] = (
    RobotAction.EASY_PROMPT,
    RobotAction.MODERATE_PROMPT,
    RobotAction.DIFFICULT_PROMPT,
)
N_LEARNABLE = len(LEARNABLE_ACTIONS)


class PwdChoice(Enum):
    """Outcome of offering choices to the PwD."""
    STOP = "stop"
    CONTINUE = "continue"
    CHANGE_TRIGGER = "change"


CHOICES: Tuple[PwdChoice, ...] = (PwdChoice.STOP, PwdChoice.CONTINUE, PwdChoice.CHANGE_TRIGGER)


@dataclass(frozen=True)
class PwdState:
    """One of the 18 PwD states. ``index`` is the canonical position."""
    response: ResponseRelevance
    emotion: EmotionLevel
    confusion: ConfusionState
    index: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "response", ResponseRelevance(self.response))
        object.__setattr__(self, "emotion", EmotionLevel(self.emotion))
        object.__setattr__(self, "confusion", ConfusionState(self.confusion))
        object.__setattr__(
            self,
            "index",
            int(self.response) * 6 + (int(self.emotion) + 1) * 2 + int(self.confusion),
        )

    @property
    def is_bad(self) -> bool:
        """A bad moment: negative emotion or confused."""
        return self.emotion is EmotionLevel.NEG or self.confusion is ConfusionState.YES

    def as_triple(self) -> Tuple[int, int, int]:
        return (int(self.response), int(self.emotion), int(self.confusion))

    def code(self) -> str:
        """Trace coding, e.g. ``[1, -1, 0]``."""
        r, e, c = self.as_triple()
        return f"[{r}, {e}, {c}]"

    def describe(self) -> str:
        return f"[{self.response.name}, {self.emotion.name.title()}, {self.confusion.name.title()}]"

    @classmethod
    def from_triple(cls, triple) -> "PwdState":
        r, e, c = (int(v) for v in triple)
        return STATES[encode_triple(r, e, c)]

    @classmethod
    def parse(cls, text: str) -> "PwdState":
        """Parse the ``[r, e, c]`` trace coding."""
        parts = text.strip().strip("[]").split(",")
        if len(parts) != 3:
            raise ValueError(f"Not a state triple: {text!r}")
        return cls.from_triple(int(p) for p in parts)


def encode_triple(response: int, emotion: int, confusion: int) -> int:
    return response * 6 + (emotion + 1) * 2 + confusion


STATES: Tuple[PwdState, ...] = tuple(
    PwdState(r, e, c)
    for r in ResponseRelevance
    for e in EmotionLevel
    for c in ConfusionState
)
N_STATES = len(STATES)

INITIAL_STATE = STATES[encode_triple(0, 0, 0)]


def encode_state(s: PwdState) -> int:
    """Canonical index of ``s`` in [0, 18)."""
    return s.index


def decode_state(index: int) -> PwdState:
    if not 0 <= index < N_STATES:
        raise ValueError(f"State index out of range: {index}")
    return STATES[index]


# Response-table rows
ROW_A2 = "a2"
ROW_A3 = "a3"
ROW_GENERIC = "generic"
RESPONSE_ROWS = (ROW_A2, ROW_A3, ROW_GENERIC)


def response_row(action: RobotAction) -> str:
    if action is RobotAction.MODERATE_PROMPT:
        return ROW_A2
    if action is RobotAction.DIFFICULT_PROMPT:
        return ROW_A3
    return ROW_GENERIC


class RewardVariant(Enum):
    R1 = "R1"
    R2 = "R2"
    CUSTOM = "Custom"

    @classmethod
    def parse(cls, value) -> "RewardVariant":
        if isinstance(value, RewardVariant):
            return value
        for variant in cls:
            if str(value).strip().lower() == variant.value.lower():
                return variant
        raise ValueError(f"Unknown reward variant: {value!r}")


DEFAULT_EMOTION_COMPONENT: Dict[EmotionLevel, float] = {
    EmotionLevel.NEG: -3.0,
    EmotionLevel.NEU: 1.0,
    EmotionLevel.POS: 2.0,
}
DEFAULT_CONFUSION_COMPONENT: Dict[ConfusionState, float] = {
    ConfusionState.YES: -2.5,
    ConfusionState.NO: 2.0,
}

# (NR, IR, RR) per row
_PRESET_RESPONSE_TABLES: Dict[RewardVariant, Dict[str, Tuple[float, float, float]]] = {
    RewardVariant.R1: {
        ROW_A2: (-2.0, 0.75, 2.0),
        ROW_A3: (-2.0, 1.75, 3.0),
        ROW_GENERIC: (-2.0, 0.3, 0.75),
    },
    RewardVariant.R2: {
        ROW_A2: (-2.0, 0.75, 2.0),
        ROW_A3: (-2.0, 3.0, 10.0),
        ROW_GENERIC: (-2.0, 0.3, 0.75),
    },
}


@dataclass(frozen=True)
class RewardSpec:
    """
    Additive reward: response component (by action row and relevance) plus
    emotion and confusion components of the state the PwD ends up in.

    Attributes:
        response_table: row name -> (NR, IR, RR) rewards
        emotion_component: EmotionLevel -> reward
        confusion_component: ConfusionState -> reward
        variant: which preset this is, or CUSTOM
    """
    response_table: Mapping[str, Tuple[float, float, float]]
    emotion_component: Mapping[EmotionLevel, float] = field(
        default_factory=lambda: dict(DEFAULT_EMOTION_COMPONENT)
    )
    confusion_component: Mapping[ConfusionState, float] = field(
        default_factory=lambda: dict(DEFAULT_CONFUSION_COMPONENT)
    )
    variant: RewardVariant = RewardVariant.CUSTOM
    table: Tuple[Tuple[float, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        missing = [row for row in RESPONSE_ROWS if row not in self.response_table]
        if missing:
            raise ValueError(f"Reward spec missing response rows: {', '.join(missing)}")
        for row in RESPONSE_ROWS:
            if len(self.response_table[row]) != 3:
                raise ValueError(f"Response row '{row}' needs 3 entries (NR, IR, RR)")
        if set(self.emotion_component) != set(EmotionLevel):
            raise ValueError("Emotion component must cover Neg, Neu and Pos")
        if set(self.confusion_component) != set(ConfusionState):
            raise ValueError("Confusion component must cover Yes and No")

        # action x state lookup, precomputed from the additive formula
        table = tuple(
            tuple(self._compose(s, action) for s in STATES)
            for action in RobotAction
        )
        object.__setattr__(self, "table", table)

    def _compose(self, s: PwdState, action: RobotAction) -> float:
        return (
            float(self.response_table[response_row(action)][int(s.response)])
            + float(self.emotion_component[s.emotion])
            + float(self.confusion_component[s.confusion])
        )

    @classmethod
    def preset(cls, name) -> "RewardSpec":
        variant = RewardVariant.parse(name)
        if variant is RewardVariant.CUSTOM:
            raise ValueError("Custom reward specs are built with RewardSpec.from_dict")
        return cls(
            response_table=dict(_PRESET_RESPONSE_TABLES[variant]),
            variant=variant,
        )

    @classmethod
    def from_dict(cls, data: Dict) -> "RewardSpec":
        """
        Build a custom spec. Missing emotion/confusion components fall back to defaults.

        Expected shape::

            {"response_table": {"a2": [nr, ir, rr], "a3": [...], "generic": [...]},
             "emotion": {"neg": -3, "neu": 1, "pos": 2},
             "confusion": {"yes": -2.5, "no": 2}}
        """
        response = {
            row: tuple(float(v) for v in values)
            for row, values in data.get("response_table", {}).items()
        }
        emotion = dict(DEFAULT_EMOTION_COMPONENT)
        for key, value in data.get("emotion", {}).items():
            emotion[EmotionLevel[str(key).upper()]] = float(value)
        confusion = dict(DEFAULT_CONFUSION_COMPONENT)
        for key, value in data.get("confusion", {}).items():
            confusion[ConfusionState[str(key).upper()]] = float(value)
        return cls(
            response_table=response,
            emotion_component=emotion,
            confusion_component=confusion,
            variant=RewardVariant.CUSTOM,
        )

    def to_dict(self) -> Dict:
        return {
            "variant": self.variant.value,
            "response_table": {row: list(self.response_table[row]) for row in RESPONSE_ROWS},
            "emotion": {e.name.lower(): v for e, v in self.emotion_component.items()},
            "confusion": {c.name.lower(): v for c, v in self.confusion_component.items()},
        }

    def bounds(self) -> Tuple[float, float]:
        """Smallest and largest one-step reward over all (state, action) pairs."""
        flat = [value for row in self.table for value in row]
        return min(flat), max(flat)


def reward(next_state: PwdState, action: RobotAction, spec: RewardSpec) -> float:
    """Reward for ending in ``next_state`` after ``action``."""
    return spec.table[action][next_state.index]


def parse_reward(variant, custom: Optional[Dict] = None) -> RewardSpec:
    if RewardVariant.parse(variant) is RewardVariant.CUSTOM:
        if not custom:
            raise ValueError("Custom reward variant requires a 'custom' reward table")
        return RewardSpec.from_dict(custom)
    return RewardSpec.preset(variant)
