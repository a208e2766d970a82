"""Counter-based random streams.

Every random draw in the package flows through a Philox generator keyed by
(seed, domain, index). Philox is counter-based, so a stream is a pure function
of its key: regeneration is bit-identical on any platform, a prefix of a
stream never depends on how much of it is generated, and independent streams
can be filled in any order or in parallel without changing a single bit.
"""

from __future__ import annotations

import numpy as np

# Stream domains. Each (domain, index) pair owns an independent stream.
DOMAIN_BASIS = 0    # projection matrices, index = matrix position
DOMAIN_FREQ = 1     # spectral frequency draws, index = frequency-set position
DOMAIN_KMEANS = 2   # k-means restarts, index = restart number
DOMAIN_DATA = 3     # synthetic data generation
DOMAIN_HARNESS = 4  # concentration-harness inputs

_MAX_U64 = 2**64
_MAX_U32 = 2**32


def validate_seed(seed):
    """Check that seed is an unsigned 64-bit integer and return it as int."""
    try:
        s = int(seed)
    except (TypeError, ValueError):
        raise ValueError(f"seed must be an integer, got {seed!r}") from None
    if s != seed or not 0 <= s < _MAX_U64:
        raise ValueError(f"seed must be an integer in [0, 2^64), got {seed!r}")
    return s


def stream(seed, domain, index=0):
    """Return a numpy Generator for the (seed, domain, index) stream."""
    s = validate_seed(seed)
    if not 0 <= int(domain) < _MAX_U32:
        raise ValueError(f"stream domain must lie in [0, 2^32), got {domain!r}")
    if not 0 <= int(index) < _MAX_U32:
        raise ValueError(f"stream index must lie in [0, 2^32), got {index!r}")
    key = np.array([s, (int(domain) << 32) | int(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
