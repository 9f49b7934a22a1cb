import math

import numpy as np
import pytest

from delaytail import gg1
from delaytail.distributions import ClipSpec, DistSpec
from delaytail.errors import CapExceeded, InvalidArgument
from delaytail.gg1 import Gg1Params, evaluate_full_cycle, evaluate_truncated_cycle, lindley_step
from delaytail.seedstream import fork_cycle

# Arrival table: u < 0.5 -> 1, else 2. Service table: u < 0.5 -> 1, else 3.
ARRIVAL = DistSpec.empirical([1.0, 2.0])
SERVICE = DistSpec.empirical([1.0, 3.0])
# (A, S) = (1, 3), (2, 1), (2, 1): increments +2, -1, -1
TRACE = [0.0, 0.9, 0.9, 0.0, 0.9, 0.0]


def trace_params(M: int, d: float = 2.0, metric: str = "waiting") -> Gg1Params:
    return Gg1Params(ARRIVAL, SERVICE, threshold_d=d, horizon_M=M, metric=metric)


def test_lindley_step():
    assert lindley_step(0.0, 3.0, 1.0) == 2.0
    assert lindley_step(1.0, 1.0, 5.0) == 0.0
    assert lindley_step(2.5, 0.5, 1.0) == 2.0


def test_hand_trace(scripted):
    stats = evaluate_truncated_cycle(scripted(TRACE), trace_params(5))
    assert (stats.tau_M, stats.R_M) == (3, 1)
    assert stats.Y == pytest.approx(0.2)
    assert not stats.truncated
    assert stats.calls_used == 6


def test_hand_trace_truncated(scripted):
    stats = evaluate_truncated_cycle(scripted(TRACE), trace_params(2))
    assert (stats.tau_M, stats.R_M) == (2, 1)
    assert stats.truncated
    assert stats.Y == pytest.approx(0.5)


def test_full_cycle_hand_trace(scripted):
    stats = evaluate_full_cycle(scripted(TRACE), trace_params(1), safety_cap=10)
    assert (stats.tau_M, stats.R_M) == (3, 1)


def test_response_metric_adds_own_service(scripted):
    # sojourn times W + S: 2+3, 1+1, 0+1 -> all >= 2 except the last
    stats = evaluate_truncated_cycle(scripted(TRACE), trace_params(5, metric="response"))
    assert stats.R_M == 2


def test_zero_service_regenerates_immediately():
    params = Gg1Params(DistSpec.exponential(1.0), DistSpec.deterministic(0.0), threshold_d=0.5, horizon_M=10)
    stats = evaluate_truncated_cycle(fork_cycle(0, 0), params)
    assert (stats.tau_M, stats.R_M, stats.Y) == (1, 0, 0.0)


def test_zero_threshold_counts_regenerating_arrival():
    params = Gg1Params(DistSpec.exponential(1.0), DistSpec.deterministic(0.0), threshold_d=0.0, horizon_M=10)
    assert evaluate_truncated_cycle(fork_cycle(0, 0), params).R_M == 1


def test_full_and_truncated_agree_below_horizon():
    params = Gg1Params(DistSpec.exponential(1.0), DistSpec.exponential(2.0), threshold_d=0.5, horizon_M=10**6)
    for c in range(200):
        full = evaluate_full_cycle(fork_cycle(1, c), params)
        truncated = evaluate_truncated_cycle(fork_cycle(1, c), params)
        assert (full.tau_M, full.R_M) == (truncated.tau_M, truncated.R_M)


def test_truncation_never_adds_violations():
    params = Gg1Params(DistSpec.exponential(1.0), DistSpec.exponential(1.25), threshold_d=1.0, horizon_M=5)
    for c in range(300):
        full = evaluate_full_cycle(fork_cycle(2, c), params)
        truncated = evaluate_truncated_cycle(fork_cycle(2, c), params)
        assert full.R_M >= truncated.R_M
        assert truncated.tau_M == min(full.tau_M, 5)


def test_full_cycle_cap(scripted):
    with pytest.raises(CapExceeded):
        evaluate_full_cycle(scripted(TRACE), trace_params(1), safety_cap=2)


def test_params_validation():
    with pytest.raises(InvalidArgument):
        Gg1Params(ARRIVAL, SERVICE, horizon_M=0)
    with pytest.raises(InvalidArgument):
        Gg1Params(ARRIVAL, SERVICE, metric="sojourn")


def test_mm1_tail_formula():
    assert gg1.mm1_waiting_tail(0.5, 1.0, 4.0) == pytest.approx(0.5 * math.exp(-2.0))
    assert gg1.mm1_waiting_tail(0.5, 1.0, 0.0) == 1.0


def test_batch_means_of_constant():
    result = gg1.batch_means(np.ones(1000))
    assert result.estimate == 1.0
    assert result.std_error == 0.0


@pytest.mark.slow
def test_time_average_matches_mm1():
    params = Gg1Params(DistSpec.exponential(0.5), DistSpec.exponential(1.0), threshold_d=2.0)
    result = gg1.simulate_time_average(params, 400_000, fork_cycle(8, 0))
    assert abs(result.estimate - gg1.mm1_waiting_tail(0.5, 1.0, 2.0)) <= 4 * result.std_error + 1e-3


def test_clipping_applies_to_both_streams(scripted):
    params = Gg1Params(DistSpec.exponential(1.0), DistSpec.exponential(1.0), clip=ClipSpec.at(0.5), horizon_M=3)
    # S1 and A2 are cut to 0.5, so W2 = max(0.5 - A1 + S2 - 0.5, 0) = 0 when S2 < A1
    stats = evaluate_truncated_cycle(scripted([0.1, 0.99, 0.99, 0.05]), params)
    assert stats.tau_M == 2
