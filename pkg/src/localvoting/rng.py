"""Seed derivation.

All randomness flows from one integer master seed. Named streams are derived
with SplitMix64 so that, e.g., enabling packet loss never perturbs the
traffic or topology draws, and sweep seeds are identical on every platform.

    mix(a, b)        = splitmix64(a ^ splitmix64(b))
    label_hash(s)    = FNV-1a 64 over the UTF-8 bytes of s
    derive_seed(m, *parts) folds parts left to right with mix(); strings are
                     hashed with label_hash, numbers via repr().
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

STREAMS = ("topology", "traffic", "loss", "order")


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def label_hash(label: str) -> int:
    h = 0xCBF29CE484222325
    for b in label.encode("utf-8"):
        h ^= b
        h = (h * 0x100000001B3) & MASK64
    return h


def mix(a: int, b: int) -> int:
    return splitmix64((a & MASK64) ^ splitmix64(b & MASK64))


def derive_seed(master: int, *parts) -> int:
    h = master & MASK64
    for part in parts:
        if isinstance(part, str):
            v = label_hash(part)
        elif isinstance(part, int):
            v = part & MASK64
        else:
            v = label_hash(repr(part))
        h = mix(h, v)
    return h


def stream(master: int, name: str) -> np.random.Generator:
    """Independent generator for one named purpose."""
    return np.random.default_rng(derive_seed(master, name))
