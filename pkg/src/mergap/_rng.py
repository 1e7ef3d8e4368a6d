"""Deterministic integer mixing used for splits and segment cropping.

These are kept separate from the numpy RNG so that split assignments and
crop boundaries can be reproduced exactly by external tools (e.g. an
embedding exporter in another language) from the seed alone.  splitmix64
and FNV-1a are standard and trivial to port.
"""

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 step: maps a 64-bit integer to a well-mixed 64-bit integer."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return z ^ (z >> 31)


def fnv1a64(text: str) -> int:
    """FNV-1a hash of the UTF-8 encoding of ``text``."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & MASK64
    return h


def clip_seed(seed: int, clip_id: str) -> int:
    """Per-clip seed derived from a global seed; stable across runs and tools."""
    return splitmix64((seed & MASK64) ^ fnv1a64(clip_id))
