"""Seeded random streams.

Every random quantity in the package is drawn from a Philox generator keyed
by ``(seed, *keys)``. Philox is counter based, so a stream depends only on
its key and never on how many other streams were consumed before it.
"""

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _word(key):
    if isinstance(key, (int, np.integer)):
        return int(key) & _MASK64
    digest = hashlib.blake2b(str(key).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stream(seed, *keys):
    """Return an independent ``np.random.Generator`` for ``(seed, *keys)``.

    Integer keys are used verbatim; any other key is hashed from its ``str``.
    """
    words = [int(seed) & _MASK64] + [_word(k) for k in keys]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))


def derive_seed(seed, *keys):
    """Deterministic 64-bit child seed, stable across processes and platforms."""
    h = hashlib.blake2b(digest_size=8)
    h.update(repr(int(seed) & _MASK64).encode())
    for k in keys:
        h.update(b"\x1f")
        h.update(repr(k).encode())
    return int.from_bytes(h.digest(), "little")
