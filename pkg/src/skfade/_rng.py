"""Counter-based random streams (Philox) for reproducible trials.

Every trial owns an independent stream keyed by master_seed XOR trial_index,
so results do not depend on execution order or on how trials are batched.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def trial_seed(master_seed: int, trial_index: int) -> int:
    """Key of the independent stream owned by one trial."""
    return (int(master_seed) ^ int(trial_index)) & _MASK64


def stream(seed: int) -> np.random.Generator:
    """Fresh counter-based generator for the given key."""
    return np.random.Generator(np.random.Philox(key=int(seed) & _MASK64))
