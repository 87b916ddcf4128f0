"""Deterministic seed derivation.

Every random draw in the package flows from a single 64-bit master seed.
Components derive their own streams by hashing the master seed together
with a tuple of string/int tags, so independent pipeline stages (instance
sampling, augmentation, parameter init, batch order, ...) never share or
reuse a stream.  The derivation is stable across platforms and Python
versions because it uses SHA-256 rather than ``hash()``.
"""

from __future__ import annotations

import hashlib

import numpy as np

SEED_ENV_VAR = "HINTRELIC_SEED"

_MASK_64 = (1 << 64) - 1


def derive_seed(master_seed: int, *tags: str | int) -> int:
    """Derive a 64-bit child seed from ``master_seed`` and component tags.

    The same (seed, tags) pair always produces the same child seed, and
    distinct tag tuples produce statistically independent child seeds.
    """
    h = hashlib.sha256()
    h.update(int(master_seed).to_bytes(8, "little", signed=False))
    for tag in tags:
        if isinstance(tag, bool) or not isinstance(tag, (int, str)):
            raise TypeError(f"seed tags must be str or int, got {tag!r}")
        part = str(tag).encode("utf-8")
        h.update(len(part).to_bytes(4, "little"))
        h.update(part)
    return int.from_bytes(h.digest()[:8], "little") & _MASK_64


def rng_for(master_seed: int, *tags: str | int) -> np.random.Generator:
    """A fresh PCG64 generator for the given component tags."""
    return np.random.Generator(np.random.PCG64(derive_seed(master_seed, *tags)))
