"""Counter-based seed derivation.

A stream is addressed by the master seed plus a tuple of non-negative integer
keys, ``SeedSequence(master, spawn_key=keys)``. String keys are mapped to a
stable 32-bit integer first. Because the derivation depends only on the keys
and never on how many draws were made before, a replication produces the same
numbers whether it runs serially or in a worker process.
"""

from __future__ import annotations

from hashlib import sha256

import numpy as np

from .errors import InvalidArgumentError

MAX_SEED = 2**64 - 1


def stream_key(name: str) -> int:
    return int.from_bytes(sha256(name.encode("utf-8")).digest()[:4], "big")


def _key(part: int | str) -> int:
    if isinstance(part, str):
        return stream_key(part)
    if isinstance(part, bool) or part < 0:
        raise InvalidArgumentError("seed keys must be non-negative integers or names")
    return int(part)


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise InvalidArgumentError("seed must be an integer")
    if not 0 <= seed <= MAX_SEED:
        raise InvalidArgumentError("seed must fit an unsigned 64-bit integer")
    return int(seed)


def derive_seed_sequence(master: int, *keys: int | str) -> np.random.SeedSequence:
    return np.random.SeedSequence(check_seed(master), spawn_key=tuple(_key(k) for k in keys))


def derive_rng(master: int, *keys: int | str) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed_sequence(master, *keys)))


def derive_seed(master: int, *keys: int | str) -> int:
    """A plain 64-bit seed for APIs that take an integer."""

    state = derive_seed_sequence(master, *keys).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 32) | int(state[1])
