"""
Stochastic transition model of the simulated PwD.

The model holds one 18x18 row-stochastic matrix per learnable robot action
(row = current state, column = next state) and a distribution over the
PwD's choices when offered GiveChoices. Choice probabilities are stored per
current state; the default model uses the same row for every state.

Models are immutable. Every construction path (generation, file load,
choice override) runs the structural checks and fails loudly; rows are
never renormalized on load.
"""

import json
import logging
from bisect import bisect_right
from dataclasses import dataclass, field
from itertools import accumulate
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np

from ..domain import (
    CHOICES,
    LEARNABLE_ACTIONS,
    N_LEARNABLE,
    N_STATES,
    STATES,
    PwdChoice,
    PwdState,
    RobotAction,
)
from ..validators import ValidationError

logger = logging.getLogger(__name__)

STOCHASTIC_TOLERANCE = 1e-6

DEFAULT_CHOICE_DISTRIBUTION: Dict[PwdChoice, float] = {
    PwdChoice.STOP: 0.2,
    PwdChoice.CONTINUE: 0.4,
    PwdChoice.CHANGE_TRIGGER: 0.4,
}


class ModelStructureError(ValidationError):
    """Raised when a transition model is not row-stochastic or badly shaped."""

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        preview = "; ".join(self.errors[:5])
        more = f" (+{len(self.errors) - 5} more)" if len(self.errors) > 5 else ""
        super().__init__(f"Invalid transition model: {preview}{more}")


def structural_errors(matrices: np.ndarray, choice: np.ndarray,
                      tolerance: float = STOCHASTIC_TOLERANCE) -> List[str]:
    """
    List every structural problem of raw model arrays.

    Args:
        matrices: array expected to have shape (6, 18, 18)
        choice: array expected to have shape (18, 3)
        tolerance: allowed deviation of a row sum from 1

    Returns:
        Human-readable error strings, empty when the arrays are well formed
    """
    errors: List[str] = []
    if matrices.shape != (N_LEARNABLE, N_STATES, N_STATES):
        errors.append(f"transition matrices have shape {matrices.shape}, expected (6, 18, 18)")
        return errors
    if choice.shape != (N_STATES, len(CHOICES)):
        errors.append(f"choice table has shape {choice.shape}, expected (18, 3)")
        return errors
    if not np.all(np.isfinite(matrices)) or not np.all(np.isfinite(choice)):
        errors.append("model contains non-finite probabilities")
        return errors

    for action in LEARNABLE_ACTIONS:
        matrix = matrices[action]
        for s in STATES:
            row = matrix[s.index]
            if row.min() < 0.0 or row.max() > 1.0:
                errors.append(f"{action.label} row {s.code()} has entries outside [0, 1]")
            total = float(row.sum())
            if abs(total - 1.0) > tolerance:
                errors.append(f"{action.label} row {s.code()} sums to {total:.10g}")

    for s in STATES:
        row = choice[s.index]
        if row.min() < 0.0 or row.max() > 1.0:
            errors.append(f"choice distribution for {s.code()} has entries outside [0, 1]")
        total = float(row.sum())
        if abs(total - 1.0) > tolerance:
            errors.append(f"choice distribution for {s.code()} sums to {total:.10g}")
    return errors


@dataclass(frozen=True)
class TransitionModel:
    """
    Per-action transition matrices plus the choice-outcome distribution.

    Attributes:
        matrices: (6, 18, 18) probabilities indexed [action, state, next_state]
        choice: (18, 3) probabilities of (stop, continue, change) per current state
        metadata: free-form label and provenance
    """
    matrices: np.ndarray
    choice: np.ndarray
    metadata: Mapping[str, Any] = field(default_factory=dict)
    _transition_cdf: Tuple[Tuple[Tuple[float, ...], ...], ...] = field(
        init=False, repr=False, compare=False
    )
    _choice_cdf: Tuple[Tuple[float, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        matrices = np.array(self.matrices, dtype=float)
        choice = np.array(self.choice, dtype=float)
        if choice.ndim == 1:
            choice = np.tile(choice, (N_STATES, 1))

        errors = structural_errors(matrices, choice)
        if errors:
            raise ModelStructureError(errors)

        matrices.setflags(write=False)
        choice.setflags(write=False)
        object.__setattr__(self, "matrices", matrices)
        object.__setattr__(self, "choice", choice)
        object.__setattr__(self, "metadata", dict(self.metadata))

        # Inverse-CDF tables as plain floats; bisect on these is the hot path
        object.__setattr__(self, "_transition_cdf", tuple(
            tuple(tuple(accumulate(row.tolist())) for row in matrices[a])
            for a in range(N_LEARNABLE)
        ))
        object.__setattr__(self, "_choice_cdf", tuple(
            tuple(accumulate(row.tolist())) for row in choice
        ))

    def __eq__(self, other) -> bool:
        if not isinstance(other, TransitionModel):
            return NotImplemented
        return (
            np.array_equal(self.matrices, other.matrices)
            and np.array_equal(self.choice, other.choice)
            and dict(self.metadata) == dict(other.metadata)
        )

    def __hash__(self) -> int:
        return hash((self.matrices.tobytes(), self.choice.tobytes()))

    def row(self, action: RobotAction, s: PwdState) -> np.ndarray:
        return self.matrices[_learnable(action)][s.index]

    def choice_row(self, s: PwdState) -> Dict[PwdChoice, float]:
        return {c: float(p) for c, p in zip(CHOICES, self.choice[s.index])}

    @property
    def choice_is_state_independent(self) -> bool:
        return bool(np.all(self.choice == self.choice[0]))

    def with_choice(self, distribution: Mapping[PwdChoice, float]) -> "TransitionModel":
        """A copy with a state-independent choice distribution replaced (re-validated)."""
        probs = [float(distribution.get(c, 0.0)) for c in CHOICES]
        metadata = dict(self.metadata)
        metadata["choice_override"] = {c.value: p for c, p in zip(CHOICES, probs)}
        return TransitionModel(self.matrices.copy(), np.array(probs), metadata)

    def to_dict(self) -> Dict[str, Any]:
        """Serialize to the model file schema."""
        if self.choice_is_state_independent:
            choice: Dict[str, Any] = {c.value: float(p) for c, p in zip(CHOICES, self.choice[0])}
        else:
            choice = {"by_state": self.choice.tolist()}
        return {
            "actions": {a.label: self.matrices[a].tolist() for a in LEARNABLE_ACTIONS},
            "choice": choice,
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TransitionModel":
        matrices, choice = raw_arrays(data)
        return cls(matrices, choice, data.get("metadata", {}))


def _learnable(action: RobotAction) -> int:
    if action is RobotAction.GIVE_CHOICES:
        raise ValueError("GiveChoices has no transition matrix; sample a choice instead")
    return int(action)


def raw_arrays(data: Mapping[str, Any]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Pull the matrix stack and choice table out of a parsed model document
    without checking stochasticity.

    Raises:
        ValidationError: if keys are missing or values are not numeric arrays
    """
    actions = data.get("actions")
    if not isinstance(actions, Mapping):
        raise ValidationError("Model file missing 'actions' object")
    missing = [a.label for a in LEARNABLE_ACTIONS if a.label not in actions]
    if missing:
        raise ValidationError(f"Model file missing matrices for: {', '.join(missing)}")
    try:
        matrices = np.array([actions[a.label] for a in LEARNABLE_ACTIONS], dtype=float)
    except (TypeError, ValueError) as e:
        raise ValidationError(f"Transition matrices are not numeric 18x18 arrays: {e}")

    choice_data = data.get("choice")
    if not isinstance(choice_data, Mapping):
        raise ValidationError("Model file missing 'choice' object")
    try:
        if "by_state" in choice_data:
            choice = np.array(choice_data["by_state"], dtype=float)
        else:
            choice = np.array([float(choice_data[c.value]) for c in CHOICES])
            choice = np.tile(choice, (N_STATES, 1))
    except KeyError as e:
        raise ValidationError(f"Choice distribution missing key {e}")
    except (TypeError, ValueError) as e:
        raise ValidationError(f"Choice distribution is not numeric: {e}")
    return matrices, choice


def sample_transition(m: TransitionModel, s: PwdState, a: RobotAction,
                      rng: np.random.Generator) -> PwdState:
    """Draw the next state by inverse CDF over row ``s`` of ``a``'s matrix (one uniform draw)."""
    cdf = m._transition_cdf[_learnable(a)][s.index]
    index = bisect_right(cdf, rng.random())
    # guards the u >= cdf[-1] case when the row sums to 1 - tiny
    return STATES[min(index, N_STATES - 1)]


def sample_choice(m: TransitionModel, s: PwdState, rng: np.random.Generator) -> PwdChoice:
    cdf = m._choice_cdf[s.index]
    index = bisect_right(cdf, rng.random())
    return CHOICES[min(index, len(CHOICES) - 1)]


def load_model(path: str) -> TransitionModel:
    """Load and validate a model JSON file."""
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ValidationError(f"Model file not found: {path}")
    except json.JSONDecodeError as e:
        raise ValidationError(f"Model file is not valid JSON: {e}")
    model = TransitionModel.from_dict(data)
    logger.info(f"Loaded transition model from {path}")
    return model


def save_model(m: TransitionModel, path: str):
    with open(path, "w") as f:
        json.dump(m.to_dict(), f, indent=1)
    logger.info(f"Wrote transition model to {path}")


def choice_distribution_from_dict(data: Optional[Mapping[str, float]]) -> Optional[Dict[PwdChoice, float]]:
    if not data:
        return None
    return {c: float(data.get(c.value, 0.0)) for c in CHOICES}
