"""Seed plumbing for reproducible, splittable randomness.

Every randomized routine in this package accepts either an integer seed, a
``numpy.random.Generator``, or ``None``.  Mechanisms additionally record the
resolved 64-bit seed in their transcript so a run can be replayed bit-exactly.
Parallel trials must never share a stream: use :func:`derive_seed` to obtain
an independent child seed per trial index.
"""

from __future__ import annotations

import numpy as np

_SEED_MODULUS = 2**63


def as_generator(rng) -> np.random.Generator:
    """Coerce ``rng`` (None | int | Generator) into a Generator."""
    if rng is None:
        return np.random.default_rng()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(int(rng))


def resolve_seed(rng) -> int:
    """Turn ``rng`` into an explicit 64-bit seed.

    Integers pass through (reduced mod 2**63).  ``None`` draws fresh OS
    entropy.  A Generator is consumed for one draw, which yields a recordable
    seed while keeping caller-supplied streams usable.
    """
    if rng is None:
        return int(np.random.SeedSequence().generate_state(1)[0]) % _SEED_MODULUS
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, _SEED_MODULUS))
    return int(rng) % _SEED_MODULUS


def derive_seed(base_seed: int, index: int) -> int:
    """Deterministic per-trial child seed, independent across indices."""
    state = np.random.SeedSequence([int(base_seed), int(index)]).generate_state(1)
    return int(state[0]) % _SEED_MODULUS
