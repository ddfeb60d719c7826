"""Per-path counter-based random streams.

Path ``j`` under master seed ``s`` always draws from a Philox stream keyed by
``(s, j)``, so results do not depend on chunking or thread count.
"""

from __future__ import annotations

import os

import numpy as np

MASK64 = (1 << 64) - 1
# separates the opponent's streams from the path streams of the same episode
OPPONENT_SALT = 0x9E3779B97F4A7C15


def stream(seed: int, index: int, salt: int = 0) -> np.random.Generator:
    key = (((int(seed) ^ salt) & MASK64) << 64) | (int(index) & MASK64)
    return np.random.Generator(np.random.Philox(key=key))


def path_uniforms(seed: int, first: int, count: int, width: int, salt: int = 0) -> np.ndarray:
    """Uniforms for paths ``first .. first+count-1``, ``width`` draws each."""
    out = np.empty((count, width))
    for j in range(count):
        out[j] = stream(seed, first + j, salt).random(width)
    return out


def thread_count() -> int:
    """Worker threads for chunked sampling; ``ONESIDED_THREADS`` overrides."""
    raw = os.environ.get("ONESIDED_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1
