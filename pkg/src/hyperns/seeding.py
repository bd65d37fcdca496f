"""Order-independent child seeds for trials and ensemble members."""

import numpy as np


def derive_seed(seed: int, index: int) -> int:
    """64-bit seed for member ``index`` of the run seeded with ``seed``."""
    ss = np.random.SeedSequence([int(seed), int(index)])
    return int(ss.generate_state(1, np.uint64)[0])
