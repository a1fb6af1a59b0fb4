"""Stable seed derivation for nested experiment components.

Seeds derive from a hash of their labelled position (master seed, method,
sample size, repeat, role), so adding methods or sizes to an experiment
never perturbs the draws of existing cells, on any platform.
"""

import hashlib


def derive_seed(*parts):
    """64-bit seed from a stable hash of the stringified parts."""
    text = "|".join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")
