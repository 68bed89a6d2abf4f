"""Deterministic seed derivation shared by every stochastic stage."""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seedseq(base_seed: int, *path: int) -> np.random.SeedSequence:
    """Counter-based child seed: (base_seed, path) -> SeedSequence.

    The same (base_seed, path) always yields the same stream, regardless of
    how work is batched or which worker executes it.
    """
    return np.random.SeedSequence(entropy=int(base_seed) & _MASK64,
                                  spawn_key=tuple(int(p) for p in path))


def derive_rng(base_seed: int, *path: int) -> np.random.Generator:
    return np.random.default_rng(derive_seedseq(base_seed, *path))


def derive_child_seed(base_seed: int, *path: int) -> int:
    """Flatten a derived stream back to a plain integer seed.

    Lets nested stages (scan point -> trajectory) chain derivations while
    each layer only ever handles ints.
    """
    return int(derive_seedseq(base_seed, *path).generate_state(1, np.uint64)[0])
