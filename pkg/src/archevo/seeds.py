"""Deterministic seed derivation.

Every random stream in a run is derived from the master seed plus a short
label, so adding or reordering consumers never shifts another stream, and
a stream can be reconstructed in isolation (the surrogate refit for a
given training-set size, for example).
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(master: int, *labels) -> int:
    """A 64-bit seed from the master seed and a label path."""
    text = "|".join([str(int(master)), *[str(part) for part in labels]])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_rng(master: int, *labels) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *labels))
