import pytest

from delaytail.errors import InvalidArgument
from delaytail.seedstream import (
    SeedStream,
    draw_uniform,
    fork_cycle,
    from_seed_bits,
    golden_vector,
    load_golden,
    save_golden,
)

GOLDEN_FILE = "seedstream_golden_v1.bin"


def test_fresh_streams_repeat():
    a = draw_uniform(fork_cycle(7, 0))
    b = draw_uniform(fork_cycle(7, 0))
    assert a == b


def test_draws_lie_in_unit_interval():
    stream = fork_cycle(0, 3)
    for _ in range(1000):
        u = draw_uniform(stream)
        assert 0.0 <= u.value < 1.0


def test_fork_starts_at_call_zero():
    assert fork_cycle(42, 0).call_index == 0
    stream = fork_cycle(42, 0)
    draw_uniform(stream)
    assert stream.call_index == 1


def test_cycles_get_distinct_tapes():
    first = [draw_uniform(fork_cycle(1, c)).value for c in range(32)]
    assert len(set(first)) == 32


def test_random_access_matches_sequential_draws():
    stream = fork_cycle(9, 5)
    sequential = [draw_uniform(stream).value for _ in range(40)]
    resumed = SeedStream(9, 5, call_index=33)
    assert draw_uniform(resumed).value == sequential[33]


def test_bit_width_quantizes_numerators():
    stream = fork_cycle(0, 0, bit_width=8)
    for _ in range(64):
        u = draw_uniform(stream)
        assert (u.value * 256).is_integer()
        assert u.bit_width == 8


def test_narrow_width_is_prefix_of_wide():
    wide = fork_cycle(4, 4, bit_width=53)
    narrow = fork_cycle(4, 4, bit_width=20)
    for position in range(20):
        assert narrow.numerator(position) == wide.numerator(position) >> 33


def test_seed_bits_enumerate_distinct_streams():
    values = {draw_uniform(from_seed_bits(omega, 6)).value for omega in range(64)}
    assert len(values) == 64


def test_seed_must_fit_seed_bits():
    with pytest.raises(InvalidArgument):
        from_seed_bits(64, 6)


def test_rejects_out_of_range_keys():
    with pytest.raises(InvalidArgument):
        SeedStream(1 << 64, 0)
    with pytest.raises(InvalidArgument):
        SeedStream(0, 0, bit_width=54)


def test_golden_vector(data_dir):
    """Seed 0, cycle 0, draws 1..8 as frozen in version 1 of the stream."""
    path = data_dir / GOLDEN_FILE
    assert path.is_file(), f"missing frozen vector {path}"
    bit_width, frozen = load_golden(path)
    assert bit_width == 53
    assert frozen[:2] == [104003916602523, 2175681743263000]
    assert golden_vector(0, 0, len(frozen)) == frozen


def test_golden_file_roundtrip(tmp_path):
    path = tmp_path / "g.bin"
    save_golden(path, [1, 2, 3], bit_width=12)
    assert load_golden(path) == (12, [1, 2, 3])


def test_golden_file_rejects_foreign_bytes(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"XXXX" + bytes(16))
    with pytest.raises(ValueError):
        load_golden(path)
