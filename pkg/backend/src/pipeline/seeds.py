"""
Per-stage random stream seeds derived from the run's master seed.
"""

from __future__ import annotations

import hashlib

SEED_BYTES = 8


def derive_seed(master_seed: int, stage_label: str) -> int:
    """
    64-bit seed of the stream labelled ``stage_label``.

    The first eight bytes (little-endian) of SHA-256 over ``"<master_seed>:<stage_label>"``.
    """
    digest = hashlib.sha256(f"{master_seed}:{stage_label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:SEED_BYTES], "little")
