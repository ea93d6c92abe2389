"""Pulse pattern generation and storage.

A pattern assigns one optical pulse to every pair of adjacent timebins:
bins (2j, 2j+1) carry exactly one pulse between them, so pulse density is
exactly 1/2 regardless of length.  Which side of the pair fires is decided
by the low bit of the j-th output of a splitmix64 stream seeded by the
pattern seed, which makes regeneration bit-identical across runs and
machines for a given (seed, length).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import CorruptFileError

_MAGIC = b"RSYN"
_VERSION = 1
_HEADER = struct.Struct("<4sHQQ")  # magic, version, seed, length in timebins

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _splitmix64(states: np.ndarray) -> np.ndarray:
    """Apply the splitmix64 output mix to an array of uint64 stream states."""
    z = states.astype(np.uint64, copy=True)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        z ^= z >> np.uint64(31)
    return z


class Pattern:
    """A bit-per-timebin pulse pattern, stored packed (LSB-first per byte)."""

    __slots__ = ("packed", "len_timebins", "seed", "_positions")

    def __init__(self, packed: np.ndarray, len_timebins: int, seed: int):
        len_timebins = int(len_timebins)
        if len_timebins < 2 or len_timebins % 2 != 0:
            raise ValueError("pattern length must be an even number of timebins, >= 2")
        packed = np.ascontiguousarray(packed, dtype=np.uint8)
        if packed.shape != ((len_timebins + 7) // 8,):
            raise ValueError("packed payload size does not match pattern length")
        seed = int(seed)
        if not 0 <= seed < 1 << 64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        self.packed = packed
        self.len_timebins = len_timebins
        self.seed = seed
        self._positions: np.ndarray | None = None

    def bit(self, i: int) -> int:
        """Bit value of timebin i (1 = pulse)."""
        if not 0 <= i < self.len_timebins:
            raise IndexError("timebin index out of range")
        return (int(self.packed[i >> 3]) >> (i & 7)) & 1

    def bits(self) -> np.ndarray:
        """Unpacked 0/1 array of length len_timebins."""
        return np.unpackbits(self.packed, count=self.len_timebins, bitorder="little")

    def pulse_positions(self) -> np.ndarray:
        """Sorted int64 indices of all pulse-carrying timebins (cached)."""
        if self._positions is None:
            self._positions = np.flatnonzero(self.bits()).astype(np.int64)
        return self._positions

    @property
    def popcount(self) -> int:
        """Number of pulses; always len_timebins / 2 for a valid pattern."""
        return len(self.pulse_positions())

    def validate_pairs(self) -> None:
        """Check the one-pulse-per-pair invariant, raising CorruptFileError."""
        pairs = self.bits().reshape(-1, 2).sum(axis=1)
        if not np.all(pairs == 1):
            raise CorruptFileError("pattern violates one-pulse-per-pair structure")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Pattern):
            return NotImplemented
        return (
            self.seed == other.seed
            and self.len_timebins == other.len_timebins
            and bool(np.array_equal(self.packed, other.packed))
        )

    def __hash__(self):  # mutable payload; identity hashing is not meaningful
        raise TypeError("Pattern is not hashable")

    def __repr__(self) -> str:
        return f"Pattern(seed={self.seed}, len_timebins={self.len_timebins})"


def generate_pattern(seed: int, n_timebins: int) -> Pattern:
    """Generate the deterministic pattern for (seed, n_timebins).

    n_timebins must be even and >= 2.  Pair j places its pulse at timebin
    2j + b where b is the low bit of the j-th splitmix64 output.
    """
    n_timebins = int(n_timebins)
    if n_timebins < 2 or n_timebins % 2 != 0:
        raise ValueError("n_timebins must be an even integer >= 2")
    seed = int(seed) & ((1 << 64) - 1)
    n_pairs = n_timebins // 2
    with np.errstate(over="ignore"):
        states = np.uint64(seed) + (np.arange(1, n_pairs + 1, dtype=np.uint64)) * _GOLDEN
    low_bits = (_splitmix64(states) & np.uint64(1)).astype(np.uint8)
    bits = np.zeros(n_timebins, dtype=np.uint8)
    bits[2 * np.arange(n_pairs, dtype=np.int64) + low_bits] = 1
    packed = np.packbits(bits, bitorder="little")
    return Pattern(packed, n_timebins, seed)


def write_pattern(pattern: Pattern, path: str | Path) -> None:
    """Write a pattern file: 22-byte header plus packed bit payload."""
    header = _HEADER.pack(_MAGIC, _VERSION, pattern.seed, pattern.len_timebins)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(pattern.packed.tobytes())


def read_pattern(path: str | Path) -> Pattern:
    """Read and validate a pattern file written by write_pattern."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise CorruptFileError("pattern file shorter than header")
    magic, version, seed, length = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise CorruptFileError("bad pattern file magic")
    if version != _VERSION:
        raise CorruptFileError(f"unsupported pattern file version {version}")
    if length < 2 or length % 2 != 0:
        raise CorruptFileError("pattern file declares an invalid length")
    payload = raw[_HEADER.size:]
    expected = (length + 7) // 8
    if len(payload) != expected:
        raise CorruptFileError(
            f"pattern payload is {len(payload)} bytes, header implies {expected}"
        )
    packed = np.frombuffer(payload, dtype=np.uint8)
    if length % 8:
        # unused high bits of the final byte must be zero
        if int(packed[-1]) >> (length % 8):
            raise CorruptFileError("pattern payload has stray bits past the declared length")
    pattern = Pattern(packed.copy(), length, seed)
    pattern.validate_pairs()
    return pattern
