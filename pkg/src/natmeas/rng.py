"""Counter-based random streams.

Every stochastic routine in the package takes a 64-bit seed and derives its
generator here.  Per-trial streams are keyed by (seed, trial index) through
Philox, so trials can be fanned out in any order on any number of threads and
still produce identical draws.
"""

from __future__ import annotations

import numpy as np

__all__ = ["rng_for", "MASK64"]

MASK64 = (1 << 64) - 1


def rng_for(seed: int, stream: int = 0) -> np.random.Generator:
    """Generator for logical stream `stream` of experiment seed `seed`.

    (seed, stream) is the Philox key, so distinct pairs give independent
    streams without any coordination between workers.
    """
    key = np.array([int(seed) & MASK64, int(stream) & MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
