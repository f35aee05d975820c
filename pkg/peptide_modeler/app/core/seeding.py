from __future__ import annotations

import zlib

import numpy as np


def stage_seed(seed: int, stage: str, *keys: int) -> int:
    """Derive a stable 32-bit seed for a named stage (and optional sweep keys)."""
    entropy = [int(seed) & 0xFFFFFFFF, zlib.crc32(stage.encode("utf-8")), *(int(k) & 0xFFFFFFFF for k in keys)]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])
