"""Per-trial seed derivation by SplitMix64 mixing.

Seeds depend only on (master seed, trial index, purpose tag), never on the
order trials run in.
"""

from __future__ import annotations

import hashlib

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _tag_value(tag: str) -> int:
    return int.from_bytes(hashlib.blake2b(tag.encode(), digest_size=8).digest(), "little")


def derive_seed(master_seed: int, trial: int, tag: str) -> int:
    h = splitmix64(master_seed & _MASK)
    h = splitmix64(h ^ (trial & _MASK))
    return splitmix64(h ^ _tag_value(tag))
