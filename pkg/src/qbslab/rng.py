"""Counter-based normal streams.

Each (master seed, step, component) triple keys an independent Philox
stream; the draw for path i is the i-th variate of that stream, produced
from exactly one raw 64-bit word through the inverse normal CDF.  The value
for (path, step, component) is therefore a pure function of the master seed
and those indices, so neither thread count nor scheduling order can change
any draw.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_TWO_M53 = 2.0 ** -53


def normal_stream(seed: int, step: int, component: int, n: int) -> np.ndarray:
    """n standard normal draws for the given (seed, step, component) stream."""
    if not (0 <= seed < 2**64):
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    if step < 0 or component < 0:
        raise ValueError("step and component must be non-negative")
    key = np.array([seed, (np.uint64(step) << np.uint64(8)) | np.uint64(component)],
                   dtype=np.uint64)
    raw = np.random.Philox(key=key).random_raw(n)
    # top 53 bits -> uniform strictly inside (0, 1), then invert the CDF
    u = ((raw >> np.uint64(11)) + 0.5) * _TWO_M53
    return ndtri(u)
