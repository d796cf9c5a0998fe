"""Small hand-built patient models with known returns."""

import numpy as np

from reminiq.domain import N_LEARNABLE, N_STATES, STATES, PwdState, RobotAction
from reminiq.patient.model import TransitionModel


def state(r: int, e: int, c: int) -> PwdState:
    return PwdState.from_triple((r, e, c))


def deterministic_model(target, choice=(0.2, 0.4, 0.4)) -> TransitionModel:
    """
    Model whose transitions are certain.

    ``target`` is either one PwdState every (state, action) moves to, or a
    callable (action, state) -> PwdState.
    """
    matrices = np.zeros((N_LEARNABLE, N_STATES, N_STATES))
    for a in range(N_LEARNABLE):
        for s in STATES:
            nxt = target(RobotAction(a), s) if callable(target) else target
            matrices[a, s.index, nxt.index] = 1.0
    return TransitionModel(matrices, np.array(choice, dtype=float), {"label": "deterministic"})


# [RR, Pos, No]: every step a good moment
GOOD = state(2, 1, 0)
# [NR, Neg, Yes]: every step a bad moment, reward -7.5 for any action
WORST = state(0, -1, 1)
# [NR, Neu, No]: reward 1 for any action, never bad
FLAT = state(0, 0, 0)

STOP_ONLY = (1.0, 0.0, 0.0)
CONTINUE_ONLY = (0.0, 1.0, 0.0)
CHANGE_ONLY = (0.0, 0.0, 1.0)
