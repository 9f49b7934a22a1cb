"""Counter-addressed uniform variates.

Every simulator in this package is a pure function of a seed stream. A stream
is keyed by ``(master_seed, cycle_index)`` and hands out the uniform variate
with call index ``j`` for ``j = 1, 2, ...``. The variate for a given
``(master_seed, cycle_index, j)`` comes from the Philox4x64-10 keyed
permutation of the counter block holding output ``j - 1``, so it does not
depend on how the stream was reached, on draw order across cycles, or on
which worker evaluates the cycle.
"""

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from . import config
from .errors import require

_U64 = 1 << 64
_OUTPUTS_PER_COUNTER = 4  # Philox4x64 yields four 64-bit words per counter value
_CHUNK = 16  # raw outputs fetched per buffer refill

GOLDEN_MAGIC = b"DTSG"
GOLDEN_VERSION = 1


@dataclass(frozen=True, slots=True)
class UniformDraw:
    value: float
    bit_width: int


class UniformSource(Protocol):
    """Anything the cycle evaluators can draw from."""

    call_index: int

    def draw(self) -> UniformDraw: ...


class SeedStream:
    """Deterministic stream of uniforms for one regeneration cycle."""

    __slots__ = ("master_seed", "cycle_index", "call_index", "bit_width", "_key", "_chunk_no", "_chunk")

    def __init__(
        self,
        master_seed: int,
        cycle_index: int,
        call_index: int = 0,
        bit_width: int = config.DEFAULT_BIT_WIDTH,
    ):
        require(0 <= master_seed < _U64, "master_seed must be a 64-bit unsigned integer", master_seed=master_seed)
        require(0 <= cycle_index < _U64, "cycle_index must be a 64-bit unsigned integer", cycle_index=cycle_index)
        require(0 <= call_index < _U64, "call_index must be a 64-bit unsigned integer", call_index=call_index)
        require(
            1 <= bit_width <= config.MAX_BIT_WIDTH,
            f"bit_width must lie in [1, {config.MAX_BIT_WIDTH}]",
            bit_width=bit_width,
        )
        self.master_seed = master_seed
        self.cycle_index = cycle_index
        self.call_index = call_index
        self.bit_width = bit_width
        self._key = (cycle_index << 64) | master_seed
        self._chunk_no = -1
        self._chunk: np.ndarray = np.empty(0, dtype=np.uint64)

    def __repr__(self) -> str:
        return (
            f"SeedStream(master_seed={self.master_seed}, cycle_index={self.cycle_index}, "
            f"call_index={self.call_index}, bit_width={self.bit_width})"
        )

    def raw(self, position: int) -> int:
        """Raw 64-bit output at zero-based `position` (output of call position + 1)."""
        chunk_no, offset = divmod(position, _CHUNK)
        if chunk_no != self._chunk_no:
            generator = np.random.Philox(key=self._key, counter=chunk_no * (_CHUNK // _OUTPUTS_PER_COUNTER))
            self._chunk = generator.random_raw(_CHUNK)
            self._chunk_no = chunk_no
        return int(self._chunk[offset])

    def numerator(self, position: int) -> int:
        """Integer numerator of the variate at `position`, in [0, 2**bit_width)."""
        return self.raw(position) >> (64 - self.bit_width)

    def draw(self) -> UniformDraw:
        numerator = self.numerator(self.call_index)
        self.call_index += 1
        return UniformDraw(numerator * 2.0 ** -self.bit_width, self.bit_width)


def draw_uniform(stream: UniformSource) -> UniformDraw:
    """Return the next variate of `stream` and advance its call index by one."""
    return stream.draw()


def fork_cycle(
    master_seed: int,
    cycle_index: int,
    bit_width: int = config.DEFAULT_BIT_WIDTH,
) -> SeedStream:
    """Fresh stream (call_index 0) for one regeneration cycle."""
    return SeedStream(master_seed, cycle_index, 0, bit_width)


def from_seed_bits(
    omega: int,
    seed_bits: int,
    master_seed: int = config.DEFAULT_MASTER_SEED,
    bit_width: int = config.DEFAULT_BIT_WIDTH,
) -> SeedStream:
    """Stream whose whole randomness tape is determined by an m-bit seed.

    The seed is run through the same keyed permutation as a cycle index, so
    enumerating omega over range(2**m) enumerates exactly 2**m distinct tapes.
    """
    require(1 <= seed_bits <= 64, "seed_bits must lie in [1, 64]", seed_bits=seed_bits)
    require(0 <= omega < (1 << seed_bits), "omega does not fit in seed_bits", omega=omega, seed_bits=seed_bits)
    return SeedStream(master_seed, omega, 0, bit_width)


def golden_vector(
    master_seed: int = 0,
    cycle_index: int = 0,
    count: int = 8,
    bit_width: int = config.DEFAULT_BIT_WIDTH,
) -> list[int]:
    """Numerators of the first `count` draws (j = 1..count) of a fresh stream."""
    stream = fork_cycle(master_seed, cycle_index, bit_width)
    return [stream.numerator(j) for j in range(count)]


def save_golden(path: Path, numerators: list[int], bit_width: int = config.DEFAULT_BIT_WIDTH) -> None:
    """Write a versioned little-endian golden file."""
    header = GOLDEN_MAGIC + struct.pack("<HHI", GOLDEN_VERSION, bit_width, len(numerators))
    body = struct.pack(f"<{len(numerators)}Q", *numerators)
    path.write_bytes(header + body)


def load_golden(path: Path) -> tuple[int, list[int]]:
    """Read a golden file; returns (bit_width, numerators)."""
    data = path.read_bytes()
    if data[:4] != GOLDEN_MAGIC:
        raise ValueError(f"{path} is not a seed-stream golden file")
    version, bit_width, count = struct.unpack_from("<HHI", data, 4)
    if version != GOLDEN_VERSION:
        raise ValueError(f"unsupported golden file version {version}")
    numerators = list(struct.unpack_from(f"<{count}Q", data, 12))
    return bit_width, numerators
