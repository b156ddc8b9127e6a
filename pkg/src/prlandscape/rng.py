"""Deterministic seeding for embarrassingly parallel trials.

Every trial draws its randomness from a 64-bit seed derived as

    derived = splitmix64(base_seed + (trial_index + 1) * GOLDEN)

i.e. the ``trial_index``-th output of a SplitMix64 stream started at
``base_seed``.  Derived seeds key a Philox4x64 counter-based generator;
normal variates come from numpy's ziggurat sampler.  Both algorithms are
frozen so that identical (base_seed, trial_index) reproduce bit-identical
streams on one platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(value: int) -> int:
    """SplitMix64 finalizer: a 64-bit avalanche mix of ``value``."""
    v = value & _MASK64
    v = ((v ^ (v >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    v = ((v ^ (v >> 27)) * 0x94D049BB133111EB) & _MASK64
    return v ^ (v >> 31)


def derive_seed(base_seed: int, trial_index: int) -> int:
    """Pure 64-bit mix of (base_seed, trial_index); equal inputs, equal output."""
    if trial_index < 0:
        raise ValueError("trial_index must be nonnegative")
    return splitmix64((base_seed + (trial_index + 1) * _GOLDEN) & _MASK64)


@dataclass(frozen=True)
class TrialSeed:
    """A (base_seed, trial_index) pair with its derived 64-bit stream seed."""

    base_seed: int
    trial_index: int = 0
    derived: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "derived", derive_seed(self.base_seed, self.trial_index))

    def child(self, offset: int) -> "TrialSeed":
        """A sibling seed for sub-task ``offset`` of the same trial."""
        return TrialSeed(self.derived, offset)


def as_trial_seed(seed) -> TrialSeed:
    """Accept either a raw 64-bit int (trial 0) or a TrialSeed."""
    if isinstance(seed, TrialSeed):
        return seed
    return TrialSeed(int(seed), 0)


def generator(seed) -> np.random.Generator:
    """Philox generator keyed by a raw int seed or a TrialSeed's derived value."""
    key = seed.derived if isinstance(seed, TrialSeed) else int(seed) & _MASK64
    return np.random.Generator(np.random.Philox(key=key))
