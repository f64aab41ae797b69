"""Deterministic seed streams for parallel replicates.

Replicate r of a run with master seed s draws from a generator seeded with
``derive_seed(s, r)``.  Experiments that need several independent draw phases
derive a phase seed first, ``derive_seed(derive_seed(s, tag), r)``, with small
fixed integer tags.  The mixing function is the SplitMix64 output function:

    z = (s + r * 0x9E3779B97F4A7C15) mod 2^64
    z = (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2^64
    z = (z XOR (z >> 27)) * 0x94D049BB133111EB mod 2^64
    z = z XOR (z >> 31)

It is a bijection of the 64-bit integers for fixed s, so distinct replicate
indices never collide.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def derive_seed(master: int, replicate: int) -> int:
    """64-bit stream seed for the given replicate index."""
    z = (int(master) + int(replicate) * _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for one derived stream."""
    return np.random.Generator(np.random.PCG64(seed))
