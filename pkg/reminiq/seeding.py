"""
Random-stream derivation.

One integer seed per experiment fans out into independent streams, one per
purpose, through ``SeedSequence(entropy=seed, spawn_key=(purpose_id,))``.
Adding evaluation rollouts therefore never shifts the training stream.
Rollout batches spawn one child generator per rollout from their purpose
stream (``Generator.spawn``), so a batch gives the same results in any
execution order.
"""

import numpy as np

PURPOSES = {
    "model": 0,
    "train": 1,
    "evaluation": 2,
    "trace": 3,
}


def seed_sequence(seed: int, purpose: str) -> np.random.SeedSequence:
    if purpose not in PURPOSES:
        raise ValueError(f"Unknown random-stream purpose: {purpose}")
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(PURPOSES[purpose],))


def stream(seed: int, purpose: str) -> np.random.Generator:
    """Generator for one purpose of one experiment seed."""
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, purpose)))
