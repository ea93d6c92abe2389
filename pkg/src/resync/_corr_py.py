"""Numpy implementation of the correlation kernels.

Used when the compiled extension is unavailable (or forced via
RESYNC_BACKEND=python).  Same contract as the compiled module: the
pattern arrives packed LSB-first and detection bins are int64.
"""

from __future__ import annotations

import numpy as np

name = "python"


def _bits_at(packed: np.ndarray, idx: np.ndarray) -> np.ndarray:
    return (packed[idx >> 3] >> (idx & 7).astype(np.uint8)) & np.uint8(1)


def correlate(packed: np.ndarray, n_bins: int, bins: np.ndarray, delta: int) -> int:
    """C(delta) = 2*N - nd where N counts detections landing on pattern pulses."""
    nd = bins.size
    if nd == 0:
        return 0
    idx = bins - np.int64(delta)
    if int(idx.min()) < 0 or int(idx.max()) >= n_bins:
        raise ValueError("detection bin minus offset falls outside the pattern")
    return 2 * int(_bits_at(packed, idx).sum()) - nd


def sweep(
    packed: np.ndarray,
    n_bins: int,
    bins: np.ndarray,
    delta_max: int,
    threshold: int,
) -> tuple[bool, int, int, int]:
    """Try offsets 0, +1, -1, +2, -2, ... and stop at the first C > threshold.

    Returns (accepted, delta, corr, tested).  When nothing qualifies, corr
    is the maximum correlation seen over the full window.
    """
    nd = bins.size
    if nd == 0:
        return False, 0, 0, 0
    if int(bins.min()) < delta_max or int(bins.max()) >= n_bins - delta_max:
        raise ValueError("detection bins violate the margin needed for a full sweep")
    best = -nd - 1
    tested = 0
    for n in range(2 * delta_max + 1):
        delta = -(n >> 1) if n % 2 == 0 else (n >> 1) + 1
        corr = 2 * int(_bits_at(packed, bins - np.int64(delta)).sum()) - nd
        tested += 1
        if corr > best:
            best = corr
        if corr > threshold:
            return True, delta, corr, tested
    return False, 0, best, tested
