"""Batch evaluation of regeneration cycles over consecutive cycle indices."""

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, TypeVar

from . import config
from .errors import require
from .seedstream import UniformSource, fork_cycle

T = TypeVar("T")


def _run_chunk(
    fn: Callable[[UniformSource], T],
    master_seed: int,
    start: int,
    stop: int,
    bit_width: int,
) -> list[T]:
    return [fn(fork_cycle(master_seed, index, bit_width)) for index in range(start, stop)]


def map_cycles(
    fn: Callable[[UniformSource], T],
    master_seed: int,
    first: int,
    count: int,
    threads: int = config.DEFAULT_THREADS,
    bit_width: int = config.DEFAULT_BIT_WIDTH,
    chunk: int = config.CHUNK_CYCLES,
) -> list[T]:
    """Evaluate `fn` on cycles first .. first + count - 1, results in cycle order.

    Each cycle gets its own fresh stream, so the result list does not depend
    on `threads`. With threads > 1 the chunks run in worker processes and
    `fn` must be picklable (a module-level function or a functools.partial
    of one).
    """
    require(count >= 0, "count must be nonnegative", count=count)
    require(threads >= 1, "threads must be at least 1", threads=threads)
    if threads == 1 or count <= chunk:
        return _run_chunk(fn, master_seed, first, first + count, bit_width)

    starts = list(range(first, first + count, chunk))
    stops = [min(start + chunk, first + count) for start in starts]
    results: list[T] = []
    with ProcessPoolExecutor(max_workers=threads) as executor:
        for part in executor.map(
            _run_chunk,
            [fn] * len(starts),
            [master_seed] * len(starts),
            starts,
            stops,
            [bit_width] * len(starts),
        ):
            results.extend(part)
    return results
