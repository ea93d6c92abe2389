"""Clock-offset recovery from timestamped single-photon detections.

Pipeline: estimate the sub-timebin alignment phase, shift and discretize
timestamps into timebin indices, drop margin bins so every candidate
offset stays in range, truncate to the detection budget, then sweep
candidate offsets 0, +1, -1, +2, -2, ... until one clears the correlation
threshold.  The total recovered offset combines the timebin part and the
alignment part.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from . import kernels
from .errors import CorruptFileError, InsufficientDetectionsError
from .pattern import Pattern

_DET_MAGIC = b"RDET"
_DET_VERSION = 1
_DET_HEADER = struct.Struct("<4sHQ")  # magic, version, count


class RecoveryStatus(str, Enum):
    ACCEPTED = "accepted"
    NONE_QUALIFIED = "none_qualified"
    INSUFFICIENT_DETECTIONS = "insufficient_detections"


@dataclass(frozen=True)
class RecoveryParams:
    """Operating parameters for one recovery attempt.

    tau_ps: timebin duration in picoseconds.
    threshold_t: relative correlation threshold, 0 < t < 1.
    delta_max: largest candidate offset magnitude, in timebins.
    nd_max: detection budget; preprocessing keeps at most this many.
    """

    tau_ps: int
    threshold_t: float
    delta_max: int
    nd_max: int

    def __post_init__(self):
        if int(self.tau_ps) <= 0:
            raise ValueError("tau_ps must be a positive integer")
        if not 0.0 < float(self.threshold_t) < 1.0:
            raise ValueError("threshold_t must lie strictly between 0 and 1")
        if int(self.delta_max) < 0:
            raise ValueError("delta_max must be >= 0")
        if int(self.nd_max) < 1:
            raise ValueError("nd_max must be >= 1")
        object.__setattr__(self, "tau_ps", int(self.tau_ps))
        object.__setattr__(self, "threshold_t", float(self.threshold_t))
        object.__setattr__(self, "delta_max", int(self.delta_max))
        object.__setattr__(self, "nd_max", int(self.nd_max))


class DetectionSet:
    """Sorted nonnegative detection timestamps, integer picoseconds."""

    __slots__ = ("timestamps_ps",)

    def __init__(self, timestamps_ps):
        arr = np.asarray(timestamps_ps, dtype=np.int64).reshape(-1).copy()
        if arr.size:
            if int(arr[0]) < 0:
                raise ValueError("timestamps must be nonnegative")
            if np.any(np.diff(arr) < 0):
                raise ValueError("timestamps must be sorted in nondecreasing order")
        self.timestamps_ps = arr

    def __len__(self) -> int:
        return int(self.timestamps_ps.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DetectionSet):
            return NotImplemented
        return bool(np.array_equal(self.timestamps_ps, other.timestamps_ps))

    def __repr__(self) -> str:
        return f"DetectionSet(n={len(self)})"


@dataclass(frozen=True)
class AlignedDetections:
    """Margin-filtered timebin indices after alignment and truncation."""

    bins: np.ndarray
    delta_align_ps: int
    nd: int


@dataclass(frozen=True)
class RecoveryOutcome:
    """Result of one recovery attempt.

    delta_total_ps = delta_bins * tau + delta_align_ps when accepted,
    otherwise 0.  correlation_abs is the correlation at the accepted
    offset, or the maximum seen when nothing qualified.
    """

    status: RecoveryStatus
    delta_bins: int
    delta_align_ps: int
    delta_total_ps: int
    tested_count: int
    correlation_abs: int
    nd: int
    threshold_abs: int


def map_nat_to_int(n: int) -> int:
    """Bijection from search rank to candidate offset: 0, +1, -1, +2, -2, ..."""
    n = int(n)
    if n < 0:
        raise ValueError("rank must be nonnegative")
    return (n >> 1) + 1 if n & 1 else -(n >> 1)


def find_alignment_offset(detections, tau_ps: int) -> int:
    """Sub-timebin alignment offset in (-tau/2, tau/2], integer picoseconds.

    Uses the circular mean of detection phases within the timebin: the
    returned shift moves the mean phase onto the timebin center.  A zero
    phasor sum (no preferred phase) maps to 0.
    """
    ts = detections.timestamps_ps if isinstance(detections, DetectionSet) else np.asarray(detections, dtype=np.int64)
    tau_ps = int(tau_ps)
    if tau_ps <= 0:
        raise ValueError("tau_ps must be a positive integer")
    if ts.size == 0:
        raise InsufficientDetectionsError("cannot estimate alignment from zero detections")
    phases = (ts % tau_ps) * (2.0 * math.pi / tau_ps)
    sx = float(np.cos(phases).sum())
    sy = float(np.sin(phases).sum())
    if math.hypot(sx, sy) < 1e-12 * ts.size:
        return 0
    mean_phase = math.atan2(sy, sx) / (2.0 * math.pi)
    frac = (mean_phase - 0.5) % 1.0
    if frac > 0.5:
        frac -= 1.0
    delta = math.floor(frac * tau_ps + 0.5)
    # integer rounding may step past either end of (-tau/2, tau/2]
    if delta <= -tau_ps / 2:
        delta += tau_ps
    elif delta > tau_ps / 2:
        delta -= tau_ps
    return int(delta)


def align_and_discretize(detections: DetectionSet, params: RecoveryParams, n_r: int) -> AlignedDetections:
    """Shift by the alignment offset, floor-divide into timebins, drop the
    margin bins outside [delta_max, n_r - delta_max), and keep the first
    nd_max detections in time order."""
    n_r = int(n_r)
    delta_align = find_alignment_offset(detections, params.tau_ps)
    shifted = detections.timestamps_ps - np.int64(delta_align)
    bins = shifted // np.int64(params.tau_ps)
    mask = (bins >= params.delta_max) & (bins < n_r - params.delta_max)
    bins = bins[mask][: params.nd_max]
    if bins.size == 0:
        raise InsufficientDetectionsError("no detections survive margin removal")
    return AlignedDetections(bins=bins, delta_align_ps=delta_align, nd=int(bins.size))


def cross_correlation(pattern: Pattern, aligned: AlignedDetections, delta: int) -> int:
    """C(delta) = 2*N - nd, where N counts detections on pattern pulses."""
    return int(
        kernels.active().correlate(
            pattern.packed, pattern.len_timebins, aligned.bins, int(delta)
        )
    )


def _insufficient(delta_align_ps: int = 0, nd: int = 0) -> RecoveryOutcome:
    return RecoveryOutcome(
        status=RecoveryStatus.INSUFFICIENT_DETECTIONS,
        delta_bins=0,
        delta_align_ps=int(delta_align_ps),
        delta_total_ps=0,
        tested_count=0,
        correlation_abs=0,
        nd=int(nd),
        threshold_abs=0,
    )


def find_offset(
    pattern: Pattern,
    detections: DetectionSet,
    params: RecoveryParams,
    min_detections: int = 8,
) -> RecoveryOutcome:
    """Run the full recovery pipeline for one detection block.

    Offsets are tried in the order 0, +1, -1, +2, -2, ... and the first one
    whose correlation strictly exceeds ceil(t * nd) is accepted.  With no
    qualifying offset the whole window of 2*delta_max + 1 candidates is
    reported as tested and the total offset is 0.
    """
    try:
        aligned = align_and_discretize(detections, params, pattern.len_timebins)
    except InsufficientDetectionsError:
        return _insufficient()
    if aligned.nd < int(min_detections):
        return _insufficient(aligned.delta_align_ps, aligned.nd)

    threshold = math.ceil(params.threshold_t * aligned.nd)
    accepted, delta, corr, tested = kernels.active().sweep(
        pattern.packed,
        pattern.len_timebins,
        aligned.bins,
        params.delta_max,
        threshold,
    )
    if accepted:
        total = int(delta) * params.tau_ps + aligned.delta_align_ps
        return RecoveryOutcome(
            status=RecoveryStatus.ACCEPTED,
            delta_bins=int(delta),
            delta_align_ps=aligned.delta_align_ps,
            delta_total_ps=total,
            tested_count=int(tested),
            correlation_abs=int(corr),
            nd=aligned.nd,
            threshold_abs=int(threshold),
        )
    return RecoveryOutcome(
        status=RecoveryStatus.NONE_QUALIFIED,
        delta_bins=0,
        delta_align_ps=aligned.delta_align_ps,
        delta_total_ps=0,
        tested_count=int(tested),
        correlation_abs=int(corr),
        nd=aligned.nd,
        threshold_abs=int(threshold),
    )


def write_detections(detections: DetectionSet, path: str | Path, fmt: str = "binary") -> None:
    """Write timestamps as the binary record format or one integer per line."""
    if fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(_DET_HEADER.pack(_DET_MAGIC, _DET_VERSION, len(detections)))
            fh.write(detections.timestamps_ps.astype("<i8").tobytes())
    elif fmt == "text":
        with open(path, "w") as fh:
            for ts in detections.timestamps_ps:
                fh.write(f"{int(ts)}\n")
    else:
        raise ValueError("fmt must be 'binary' or 'text'")


def read_detections(path: str | Path) -> DetectionSet:
    """Read either detections format, sniffing the binary magic."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] == _DET_MAGIC:
        if len(raw) < _DET_HEADER.size:
            raise CorruptFileError("detections file shorter than header")
        _, version, count = _DET_HEADER.unpack_from(raw)
        if version != _DET_VERSION:
            raise CorruptFileError(f"unsupported detections file version {version}")
        payload = raw[_DET_HEADER.size:]
        if len(payload) != 8 * count:
            raise CorruptFileError(
                f"detections payload is {len(payload)} bytes, header implies {8 * count}"
            )
        ts = np.frombuffer(payload, dtype="<i8").astype(np.int64)
    else:
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorruptFileError("not a detections file") from exc
        values = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(int(line))
            except ValueError as exc:
                raise CorruptFileError(f"line {lineno} is not an integer timestamp") from exc
        ts = np.asarray(values, dtype=np.int64)
    try:
        return DetectionSet(ts)
    except ValueError as exc:
        raise CorruptFileError(str(exc)) from exc
