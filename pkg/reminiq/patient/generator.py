"""
Default PwD transition model.

The numbers here are artifact defaults, not clinical or published values.
Each next-state distribution is built as the product of three marginals
(response, emotion, confusion) computed from a small profile of base rates:

- prompts (a1-a3): harder prompts lower the relevant-response and positive
  emotion rates and raise the confusion rate; negative emotion or confusion
  in the current state scales the relevant-response rate down;
- repeat/explain (a4, a5): on a confused PwD the prompt is clarified, so
  confusion clears with ``clear_probability`` and the response rates are
  computed as if unconfused; emotion is steadier than under a prompt;
- comfort (a6): lowers the chance of negative emotion and, in a bad moment,
  lifts the relevant-response rate.

A seed jitters every base rate by a bounded multiplicative factor; the
ordered sequences are re-sorted so difficulty orderings survive jitter.
Finally each row is mixed with a small uniform floor and renormalized, so
every entry is strictly positive. This module never calls the validator.
"""

from dataclasses import dataclass, replace
from typing import Dict, Tuple

import numpy as np

from ..domain import (
    N_LEARNABLE,
    N_STATES,
    STATES,
    ConfusionState,
    EmotionLevel,
    PwdChoice,
    PwdState,
    RobotAction,
)
from ..seeding import stream
from .model import DEFAULT_CHOICE_DISTRIBUTION, TransitionModel

GENERATOR_VERSION = 1


@dataclass(frozen=True)
class PatientProfile:
    """Base rates the default model is assembled from."""
    # relevant-response rate per prompt difficulty (a1, a2, a3)
    prompt_rr: Tuple[float, float, float] = (0.55, 0.45, 0.32)
    # P(next emotion Pos) multiplier per prompt difficulty
    prompt_pos_mult: Tuple[float, float, float] = (1.0, 0.8, 0.6)
    # P(next emotion Neg) multiplier per prompt difficulty
    prompt_neg_mult: Tuple[float, float, float] = (1.0, 1.3, 1.7)
    # P(next unconfused) multiplier per prompt difficulty
    prompt_clear_mult: Tuple[float, float, float] = (1.0, 0.93, 0.85)

    # emotion persistence keyed by current emotion (Neg, Neu, Pos)
    neg_base: Tuple[float, float, float] = (0.45, 0.12, 0.06)
    pos_base: Tuple[float, float, float] = (0.1, 0.3, 0.6)
    # P(next unconfused) keyed by current confusion (No, Yes)
    clear_base: Tuple[float, float] = (0.88, 0.3)

    # relevant-response scaling by current state
    emotion_rr_factor: Tuple[float, float, float] = (0.55, 1.0, 1.1)
    confusion_rr_factor: Tuple[float, float] = (1.0, 0.5)
    momentum_rr_factor: Tuple[float, float, float] = (0.9, 1.0, 1.1)

    # share of the non-relevant mass that is no response
    nr_share: float = 0.45
    nr_share_bad_step: float = 0.15

    repair_rr: float = 0.45
    repair_rr_unneeded: float = 0.4
    repair_neg_mult: float = 0.9
    clear_probability: float = 0.6

    comfort_rr_bad: float = 0.4
    comfort_rr: float = 0.2
    comfort_neg_mult: float = 0.4
    comfort_pos_mult_bad: float = 1.4
    comfort_pos_mult: float = 1.2
    comfort_clear: float = 0.35

    uniform_floor: float = 0.002

    def jittered(self, rng: np.random.Generator, jitter: float) -> "PatientProfile":
        """Scale every rate by a factor in [1 - jitter, 1 + jitter], keeping orderings."""
        if jitter <= 0:
            return self

        def scale(value: float) -> float:
            return float(value * rng.uniform(1.0 - jitter, 1.0 + jitter))

        def scale_seq(values, descending: bool):
            out = sorted((scale(v) for v in values), reverse=descending)
            return tuple(out)

        return replace(
            self,
            prompt_rr=scale_seq(self.prompt_rr, descending=True),
            prompt_pos_mult=scale_seq(self.prompt_pos_mult, descending=True),
            prompt_neg_mult=scale_seq(self.prompt_neg_mult, descending=False),
            prompt_clear_mult=scale_seq(self.prompt_clear_mult, descending=True),
            neg_base=tuple(scale(v) for v in self.neg_base),
            pos_base=tuple(scale(v) for v in self.pos_base),
            clear_base=tuple(scale(v) for v in self.clear_base),
            repair_rr=scale(self.repair_rr),
            repair_rr_unneeded=scale(self.repair_rr_unneeded),
            comfort_rr_bad=scale(self.comfort_rr_bad),
            comfort_rr=scale(self.comfort_rr),
            comfort_clear=scale(self.comfort_clear),
        )


def _emotion_key(e: EmotionLevel) -> int:
    return int(e) + 1


def _response_marginal(rr: float, nr_share: float) -> np.ndarray:
    rest = 1.0 - rr
    nr = rest * nr_share
    return np.array([nr, rest - nr, rr])


def _emotion_marginal(neg: float, pos: float) -> np.ndarray:
    return np.array([neg, 1.0 - neg - pos, pos])


def _confusion_marginal(clear: float) -> np.ndarray:
    return np.array([clear, 1.0 - clear])


def _marginals(profile: PatientProfile, s: PwdState,
               action: RobotAction) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    e = _emotion_key(s.emotion)
    confused = s.confusion is ConfusionState.YES
    negative = s.emotion is EmotionLevel.NEG
    momentum = profile.momentum_rr_factor[int(s.response)]
    emotion_factor = profile.emotion_rr_factor[e]
    confusion_factor = profile.confusion_rr_factor[int(s.confusion)]

    def nr_share(treat_confused: bool) -> float:
        share = profile.nr_share
        if negative:
            share += profile.nr_share_bad_step
        if treat_confused:
            share += profile.nr_share_bad_step
        return share

    if action in (RobotAction.EASY_PROMPT, RobotAction.MODERATE_PROMPT, RobotAction.DIFFICULT_PROMPT):
        d = int(action)
        rr = profile.prompt_rr[d] * emotion_factor * confusion_factor * momentum
        response = _response_marginal(rr, nr_share(confused))
        emotion = _emotion_marginal(
            profile.neg_base[e] * profile.prompt_neg_mult[d],
            profile.pos_base[e] * profile.prompt_pos_mult[d],
        )
        confusion = _confusion_marginal(
            profile.clear_base[int(s.confusion)] * profile.prompt_clear_mult[d]
        )
    elif action in (RobotAction.REPEAT, RobotAction.EXPLAIN):
        if confused:
            rr = profile.repair_rr * emotion_factor * momentum
            clear = profile.clear_probability
        else:
            rr = profile.repair_rr_unneeded * emotion_factor * momentum
            clear = profile.clear_base[0]
        response = _response_marginal(rr, nr_share(False))
        emotion = _emotion_marginal(
            profile.neg_base[e] * profile.repair_neg_mult,
            profile.pos_base[e],
        )
        confusion = _confusion_marginal(clear)
    elif action is RobotAction.COMFORT:
        base_rr = profile.comfort_rr_bad if s.is_bad else profile.comfort_rr
        rr = base_rr * confusion_factor * momentum
        response = _response_marginal(rr, nr_share(confused))
        pos_mult = profile.comfort_pos_mult_bad if negative else profile.comfort_pos_mult
        emotion = _emotion_marginal(
            profile.neg_base[e] * profile.comfort_neg_mult,
            profile.pos_base[e] * pos_mult,
        )
        clear = profile.comfort_clear if confused else profile.clear_base[0]
        confusion = _confusion_marginal(clear)
    else:
        raise ValueError(f"No transition model for {action.label}")
    return response, emotion, confusion


def build_matrices(profile: PatientProfile) -> np.ndarray:
    """Assemble the (6, 18, 18) matrix stack for a profile."""
    matrices = np.zeros((N_LEARNABLE, N_STATES, N_STATES))
    for a in range(N_LEARNABLE):
        action = RobotAction(a)
        for s in STATES:
            response, emotion, confusion = _marginals(profile, s, action)
            # canonical order is response-major, then emotion, then confusion
            row = np.einsum("i,j,k->ijk", response, emotion, confusion).reshape(N_STATES)
            row = (1.0 - profile.uniform_floor) * row + profile.uniform_floor / N_STATES
            matrices[a, s.index] = row / row.sum()
    return matrices


def default_model(seed: int = 0, clear_probability: float = 0.6,
                  jitter: float = 0.05,
                  choice: Dict[PwdChoice, float] = None) -> TransitionModel:
    """
    Generate the default PwD model for ``seed``.

    Args:
        seed: jitter seed; the same seed always yields the same model
        clear_probability: chance that repeat/explain clears confusion
        jitter: relative spread of the seeded perturbation of base rates
        choice: state-independent choice distribution (defaults to 0.2/0.4/0.4)

    Returns:
        A TransitionModel whose entries are all strictly positive
    """
    rng = stream(seed, "model")
    profile = replace(PatientProfile(), clear_probability=clear_probability)
    profile = profile.jittered(rng, jitter)
    distribution = choice or DEFAULT_CHOICE_DISTRIBUTION
    probs = np.array([distribution[c] for c in (PwdChoice.STOP, PwdChoice.CONTINUE,
                                                PwdChoice.CHANGE_TRIGGER)])
    metadata = {
        "label": f"default-seed-{seed}",
        "provenance": "reminiq default generator (artifact defaults, not clinical data)",
        "generator_version": GENERATOR_VERSION,
        "seed": seed,
        "clear_probability": clear_probability,
        "jitter": jitter,
    }
    return TransitionModel(build_matrices(profile), probs, metadata)
