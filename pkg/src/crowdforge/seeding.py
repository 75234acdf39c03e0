"""Deterministic per-clip seed derivation.

Every randomized step in the pipeline (foreground sampling, shadow
parameters, background pairing) draws from a generator seeded through
this module, so a run is a pure function of (corpus, config, master seed)
regardless of worker count or iteration order.
"""

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash of a byte string."""
    h = FNV64_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV64_PRIME) & _MASK64
    return h


def derive_clip_seed(master_seed: int, clip_id: str) -> int:
    """Stable 64-bit seed for one clip: FNV-1a of the id, XOR master seed."""
    return fnv1a64(clip_id.encode("utf-8")) ^ (master_seed & _MASK64)
