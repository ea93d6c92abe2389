"""Pattern generation and file format tests."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resync import CorruptFileError, Pattern, generate_pattern, read_pattern, write_pattern

HEADER_BYTES = 22


def test_known_positions_seed42():
    pat = generate_pattern(42, 16)
    assert pat.pulse_positions().tolist() == [1, 3, 4, 6, 8, 10, 13, 14]


def test_deterministic_regeneration():
    a = generate_pattern(123456789, 2048)
    b = generate_pattern(123456789, 2048)
    assert a == b
    assert np.array_equal(a.packed, b.packed)


def test_different_seeds_differ():
    a = generate_pattern(1, 4096)
    b = generate_pattern(2, 4096)
    assert not np.array_equal(a.packed, b.packed)


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=2**64 - 1),
    n_pairs=st.integers(min_value=1, max_value=2000),
)
def test_pair_structure_invariant(seed, n_pairs):
    pat = generate_pattern(seed, 2 * n_pairs)
    bits = pat.bits()
    pairs = bits.reshape(-1, 2).sum(axis=1)
    assert np.all(pairs == 1)
    assert pat.popcount == n_pairs


def test_bit_accessor_matches_bits():
    pat = generate_pattern(9, 64)
    bits = pat.bits()
    for i in range(64):
        assert pat.bit(i) == bits[i]
    with pytest.raises(IndexError):
        pat.bit(64)
    with pytest.raises(IndexError):
        pat.bit(-1)


def test_odd_or_tiny_length_rejected():
    with pytest.raises(ValueError):
        generate_pattern(0, 15)
    with pytest.raises(ValueError):
        generate_pattern(0, 0)


def test_seed_range_validation():
    with pytest.raises(ValueError):
        Pattern(np.zeros(1, dtype=np.uint8), 2, -1)
    with pytest.raises(ValueError):
        Pattern(np.zeros(1, dtype=np.uint8), 2, 1 << 64)


def test_negative_seed_wraps_in_generator():
    # the generator masks into uint64 space rather than erroring
    a = generate_pattern(-1, 32)
    b = generate_pattern(2**64 - 1, 32)
    assert a == b


def test_roundtrip(tmp_path):
    pat = generate_pattern(77, 1000)
    path = tmp_path / "p.rsyn"
    write_pattern(pat, path)
    back = read_pattern(path)
    assert back == pat
    assert back.seed == 77
    assert path.stat().st_size == HEADER_BYTES + (1000 + 7) // 8


def test_file_size_at_scale(tmp_path):
    n = 1 << 25
    pat = generate_pattern(3, n)
    path = tmp_path / "big.rsyn"
    write_pattern(pat, path)
    assert path.stat().st_size == HEADER_BYTES + n // 8
    assert pat.popcount == n // 2


def test_corrupt_magic(tmp_path):
    pat = generate_pattern(5, 64)
    path = tmp_path / "p.rsyn"
    write_pattern(pat, path)
    raw = bytearray(path.read_bytes())
    raw[0] = ord("X")
    path.write_bytes(bytes(raw))
    with pytest.raises(CorruptFileError):
        read_pattern(path)


def test_corrupt_version(tmp_path):
    pat = generate_pattern(5, 64)
    path = tmp_path / "p.rsyn"
    write_pattern(pat, path)
    raw = bytearray(path.read_bytes())
    raw[4] = 99
    path.write_bytes(bytes(raw))
    with pytest.raises(CorruptFileError):
        read_pattern(path)


def test_truncated_payload(tmp_path):
    pat = generate_pattern(5, 640)
    path = tmp_path / "p.rsyn"
    write_pattern(pat, path)
    raw = path.read_bytes()
    path.write_bytes(raw[:-3])
    with pytest.raises(CorruptFileError):
        read_pattern(path)


def test_trailing_garbage(tmp_path):
    pat = generate_pattern(5, 640)
    path = tmp_path / "p.rsyn"
    write_pattern(pat, path)
    path.write_bytes(path.read_bytes() + b"xx")
    with pytest.raises(CorruptFileError):
        read_pattern(path)


def test_short_header(tmp_path):
    path = tmp_path / "p.rsyn"
    path.write_bytes(b"RSYN\x01")
    with pytest.raises(CorruptFileError):
        read_pattern(path)


def test_pair_violation_in_file(tmp_path):
    # craft a structurally valid file whose payload breaks the pair rule
    pat = generate_pattern(5, 64)
    path = tmp_path / "p.rsyn"
    write_pattern(pat, path)
    raw = bytearray(path.read_bytes())
    raw[HEADER_BYTES] = 0xFF  # both bins of the first pairs set
    path.write_bytes(bytes(raw))
    with pytest.raises(CorruptFileError):
        read_pattern(path)


def test_stray_bits_past_length(tmp_path):
    pat = generate_pattern(5, 10)  # 10 bins -> 2 payload bytes, 6 spare bits
    path = tmp_path / "p.rsyn"
    write_pattern(pat, path)
    raw = bytearray(path.read_bytes())
    raw[-1] |= 0x80
    path.write_bytes(bytes(raw))
    with pytest.raises(CorruptFileError):
        read_pattern(path)
