"""Counter-based random streams for reproducible parallel Monte Carlo."""

from __future__ import annotations

import numpy as np

from .validation import validate_seed

# Sub-stream identifiers within one replication.
STREAM_CALIBRATION = 0
STREAM_NOISE = 1
STREAM_CROSSING = 2


def replication_stream(seed: int, index: int, substream: int = 0) -> np.random.Generator:
    """Create the generator for one replication.

    The Philox key is the master seed and the replication index and sub-stream
    occupy the upper counter words, so every ``(seed, index, substream)`` triple
    addresses a disjoint block of the Philox sequence. Streams are therefore
    independent of the order or thread in which replications are evaluated.

    Args:
        seed: Master seed, ``0 <= seed < 2**128``
        index: Replication index
        substream: Independent stream within the replication

    Returns:
        A numpy Generator positioned at the start of its block

    """
    validate_seed(seed)
    counter = np.array([0, 0, index, substream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=seed))


def chunk_ranges(total: int, chunks: int) -> list[range]:
    """Split ``range(total)`` into at most ``chunks`` contiguous pieces."""
    chunks = max(1, min(chunks, total))
    bounds = np.linspace(0, total, chunks + 1).round().astype(int)
    return [range(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:], strict=True) if b > a]
