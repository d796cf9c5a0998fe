"""
Exact expected return of a fixed policy by backward dynamic programming.

The session is Markov in (round, triggers discussed, bad streak, PwD state).
The streak saturates at the forcing threshold; a forced entry takes a7 and
is expanded over the three choice outcomes analytically. Values are
undiscounted, matching the Monte-Carlo returns, and vectorized over the 18
PwD states.
"""

import numpy as np

from ..domain import INITIAL_STATE, N_STATES, STATES, RewardSpec, RobotAction
from ..environment import DEFAULT_ENV, EnvConfig
from ..patient.model import TransitionModel
from ..qlearning import PolicyTable

_BAD = np.array([s.is_bad for s in STATES])
_INIT = INITIAL_STATE.index


def exact_policy_value(p: PolicyTable, model: TransitionModel, spec: RewardSpec,
                       env: EnvConfig = DEFAULT_ENV) -> float:
    """Expected undiscounted return of ``p`` from a fresh session."""
    if env.max_rounds == 0:
        return 0.0

    rows = np.arange(N_STATES)
    actions = np.array([int(a) for a in p.actions])
    # P_pi[s, s'] and the expected immediate reward of following p in s
    p_pi = model.matrices[actions, rows]
    r_next = np.array([[spec.table[a][s] for s in range(N_STATES)] for a in actions])
    r_pi = (p_pi * r_next).sum(axis=1)

    r7 = np.array(spec.table[RobotAction.GIVE_CHOICES])
    stop, cont, change = model.choice[:, 0], model.choice[:, 1], model.choice[:, 2]

    threshold = env.streak_threshold
    triggers = env.max_triggers
    # value[k, b, s] for the round after the current one; index k = triggers - 1
    after = np.zeros((triggers, threshold + 1, N_STATES))

    for _ in range(env.max_rounds):
        value = np.empty_like(after)
        for k in range(triggers):
            for b in range(threshold):
                b_next = min(b + 1, threshold)
                w = np.where(_BAD, after[k, b_next], after[k, 0])
                value[k, b] = r_pi + p_pi @ w

            changed = r7[_INIT]
            if k + 1 < triggers:
                changed = changed + after[k + 1, 0, _INIT]
            value[k, threshold] = (
                stop * r7
                + cont * (r7 + after[k, 0])
                + change * changed
            )
        after = value

    return float(after[0, 0, _INIT])
