"""Deterministic seed derivation for replica ensembles.

Replica seeds are a fixed function of (master seed, stream key, replica
index), independent of worker count and scheduling, so ensembles reduce to
byte-identical outputs under any parallelism.
"""

import numpy as np

# stream keys, so distinct consumers of one master seed never collide
WALK_STREAM = 0
ENV_STREAM = 1
DIRECT_STREAM = 2


def replica_seeds(master_seed: int, reps: int, stream: int = WALK_STREAM) -> np.ndarray:
    """int64 array of uint32-valued seeds for numba's per-iteration seeding."""
    ss = np.random.SeedSequence(entropy=[int(master_seed) & (2**64 - 1), int(stream)])
    return ss.generate_state(reps, np.uint32).astype(np.int64)


def replica_env_seeds(master_seed: int, reps: int, stream: int = ENV_STREAM) -> np.ndarray:
    """uint64 environment-realization seeds, one per replica."""
    ss = np.random.SeedSequence(entropy=[int(master_seed) & (2**64 - 1), int(stream)])
    w = ss.generate_state(2 * reps, np.uint32).astype(np.uint64)
    return (w[0::2] << np.uint64(32)) | w[1::2]


def single_seed(master_seed: int, stream: int = WALK_STREAM) -> int:
    return int(replica_seeds(master_seed, 1, stream)[0])
