"""Shared test helpers.

The brute-force reference here deliberately avoids the packed-bit kernels:
it works on the unpacked 0/1 array with plain numpy indexing, so kernel
bugs cannot cancel out in comparisons against it.
"""

from __future__ import annotations

import numpy as np


def centered_ts(bins: np.ndarray, tau_ps: int, sub_ps: int = 0) -> np.ndarray:
    """Timestamps at bin centers plus an optional sub-bin shift."""
    return np.sort(np.asarray(bins, dtype=np.int64) * tau_ps + tau_ps // 2 + sub_ps)


def brute_force_reference(bits: np.ndarray, bins: np.ndarray, delta_max: int,
                          threshold: int) -> tuple[bool, int, int, int]:
    """Exhaustive sweep reference, first qualifying offset in search order.

    bits is the unpacked 0/1 pattern array.  Returns (accepted, delta,
    corr, tested) with the same conventions as the production sweep: corr
    is the correlation at the accepted offset, or the maximum over the
    whole window when nothing qualifies.
    """
    bins = np.asarray(bins, dtype=np.int64)
    nd = bins.size
    order = []
    for n in range(2 * delta_max + 1):
        order.append((n >> 1) + 1 if n & 1 else -(n >> 1))
    corrs = []
    for delta in order:
        hits = int(bits[bins - delta].sum())
        corrs.append(2 * hits - nd)
    for rank, (delta, corr) in enumerate(zip(order, corrs)):
        if corr > threshold:
            return True, delta, corr, rank + 1
    return False, 0, max(corrs), len(order)
