from functools import partial

import pytest

from delaytail import batch
from delaytail.distributions import DistSpec
from delaytail.errors import InvalidArgument
from delaytail.gg1 import Gg1Params, evaluate_truncated_cycle

PARAMS = Gg1Params(DistSpec.exponential(1.0), DistSpec.exponential(1.5), threshold_d=0.5, horizon_M=50)


def test_results_follow_cycle_order():
    fn = partial(evaluate_truncated_cycle, params=PARAMS)
    whole = batch.map_cycles(fn, 4, 0, 40)
    tail = batch.map_cycles(fn, 4, 25, 15)
    assert whole[25:] == tail


@pytest.mark.parametrize("threads", [4, 16])
def test_thread_count_does_not_change_results(threads):
    fn = partial(evaluate_truncated_cycle, params=PARAMS)
    serial = batch.map_cycles(fn, 9, 0, 200, threads=1, chunk=8)
    parallel = batch.map_cycles(fn, 9, 0, 200, threads=threads, chunk=8)
    assert serial == parallel


def test_bit_width_is_passed_through():
    fn = partial(evaluate_truncated_cycle, params=PARAMS)
    wide = batch.map_cycles(fn, 1, 0, 20)
    narrow = batch.map_cycles(fn, 1, 0, 20, bit_width=12)
    assert wide != narrow


def test_empty_batch():
    assert batch.map_cycles(len, 0, 0, 0) == []


def test_rejects_bad_arguments():
    fn = partial(evaluate_truncated_cycle, params=PARAMS)
    with pytest.raises(InvalidArgument):
        batch.map_cycles(fn, 0, 0, -1)
    with pytest.raises(InvalidArgument):
        batch.map_cycles(fn, 0, 0, 10, threads=0)
