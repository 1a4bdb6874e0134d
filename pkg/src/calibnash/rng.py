"""Counter-based random substreams.

Every random draw in the package comes from a generator keyed by a tuple
of non-negative integers (run seed, round, player, ...). Results therefore
do not depend on evaluation order or on how work is split across workers.
"""

from __future__ import annotations

import numpy as np

# stream tags, kept distinct so substreams never collide
TAG_BR = 1
TAG_OUTCOME = 2
TAG_FINAL = 3
TAG_FORECASTER = 4
TAG_ADVERSARY = 5


def _flatten(key) -> list[int]:
    if isinstance(key, (tuple, list)):
        out = []
        for k in key:
            out.extend(_flatten(k))
        return out
    k = int(key)
    if k < 0:
        raise ValueError(f"substream keys must be non-negative, got {k}")
    return [k]


def substream(*key) -> np.random.Generator:
    flat = _flatten(key)
    # SeedSequence ignores trailing zeros, so (a, b) and (a, b, 0) would
    # collide; leading with the key length keeps them apart
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([len(flat)] + flat)))
