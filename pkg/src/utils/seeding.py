"""
Splittable, order-independent seed derivation.

A seed is a 64-bit hash of the parts that identify a random stream, so any
stream can be recreated without replaying the ones derived before it.
"""

import hashlib

import numpy as np

_SEPARATOR = "\x1f"


def derive_seed(*parts) -> int:
    """
    Hash identifying parts into an unsigned 64-bit seed.

    Args:
        *parts: Values whose string forms identify the stream
            (master seed, dataset id, kind tag, ...).

    Returns:
        Integer in [0, 2**64).
    """
    digest = hashlib.blake2b(
        _SEPARATOR.join(str(part) for part in parts).encode("utf-8"),
        digest_size=8,
    ).digest()
    return int.from_bytes(digest, "big")


def rng_for(*parts) -> np.random.Generator:
    """Seeded numpy generator for the stream identified by ``parts``."""
    return np.random.default_rng(derive_seed(*parts))
