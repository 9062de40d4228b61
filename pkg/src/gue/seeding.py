"""Deterministic seed derivation for nested stochastic stages.

Every stage (experiment, replication, quantile level, bootstrap draw) gets
its own integer seed derived from the run seed plus its coordinates, so a
replication is a pure function of its coordinates and results do not depend
on scheduling or on how many replications run before it.
"""

from __future__ import annotations

import numpy as np


def derive_seed(*parts: int) -> int:
    """Collapse an integer path into one 64-bit seed.

    Uses numpy's SeedSequence spawning arithmetic, so distinct paths give
    statistically independent streams.
    """
    if not parts:
        raise ValueError("derive_seed needs at least one integer part")
    coerced = []
    for part in parts:
        value = int(part)
        if value < 0:
            raise ValueError(f"seed parts must be nonnegative, got {value}")
        coerced.append(value)
    state = np.random.SeedSequence(coerced).generate_state(1, np.uint64)[0]
    return int(state)


def rng_for(*parts: int) -> np.random.Generator:
    """Generator seeded from the path ``parts``; see :func:`derive_seed`."""
    return np.random.default_rng(derive_seed(*parts))
