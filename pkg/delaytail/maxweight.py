"""MaxWeight wireless downlink: K queues, one served per slot.

Slots are integers. In slot t the arrivals A_1..A_K are drawn first, then the
channel rates mu_1..mu_K, the queue with the largest Q_i * mu_i (lowest index
on ties) is served from the start-of-slot backlog, and only then are the new
packets stamped with t and enqueued. A packet therefore waits at least one
slot. The cycle regenerates when every queue is empty at the end of a slot.
"""

from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import config
from .distributions import ClipSpec, DistSpec, sample
from .errors import BufferOverflow, CapExceeded, InvalidConfig, require
from .gg1 import TimeAverage, batch_means
from .seedstream import UniformSource

_NO_CLIP = ClipSpec.off()


def _support_top(pmf: DistSpec) -> int:
    """Top of the table, zero-probability tail entries included."""
    return len(pmf.pmf) - 1


@dataclass(frozen=True)
class WirelessParams:
    """Queue indices are zero-based throughout."""

    K: int
    arrival_pmfs: tuple[DistSpec, ...]
    channel_pmfs: tuple[DistSpec, ...]
    subset_I: frozenset[int]
    threshold_d: int = 0
    horizon_M: int = 1
    buffer_capacity: Optional[int] = None

    def __post_init__(self):
        if self.K < 1:
            raise InvalidConfig("K must be at least 1", {"K": self.K})
        if len(self.arrival_pmfs) != self.K or len(self.channel_pmfs) != self.K:
            raise InvalidConfig(
                "need one arrival pmf and one channel pmf per queue",
                {"K": self.K, "arrival_pmfs": len(self.arrival_pmfs), "channel_pmfs": len(self.channel_pmfs)},
            )
        if any(p.kind != "discrete" for p in self.arrival_pmfs + self.channel_pmfs):
            raise InvalidConfig("wireless arrivals and channel rates must be discrete pmfs")
        subset = frozenset(int(i) for i in self.subset_I)
        if not subset or any(i < 0 or i >= self.K for i in subset):
            raise InvalidConfig("subset_I must be a nonempty set of queue indices", {"subset_I": sorted(subset)})
        object.__setattr__(self, "subset_I", subset)
        if self.mu_max < 1:
            raise InvalidConfig("channel pmfs must allow a rate of at least 1", {"mu_max": self.mu_max})
        require(self.horizon_M >= 1, "horizon_M must be at least 1", horizon_M=self.horizon_M)
        require(self.threshold_d >= 0, "threshold_d must be nonnegative", threshold_d=self.threshold_d)

    @property
    def A_max(self) -> int:
        """Largest arrival count the pmf tables can express; at least 1 so payoffs stay scaled."""
        return max(1, max(_support_top(p) for p in self.arrival_pmfs))

    @property
    def mu_max(self) -> int:
        return max(_support_top(p) for p in self.channel_pmfs)

    def capacity_for(self, horizon: int) -> int:
        if self.buffer_capacity is not None:
            return self.buffer_capacity
        return horizon * self.A_max


@dataclass(frozen=True)
class WirelessCycleStats:
    N_M: int
    J_M: int
    T_M: int
    truncated: bool


def maxweight_schedule(Q: Sequence[int], mu: Sequence[int]) -> int:
    """Index maximizing Q_i * mu_i; the lowest index wins ties."""
    weights = np.asarray(Q, dtype=np.int64) * np.asarray(mu, dtype=np.int64)
    return int(np.argmax(weights))


def weighted_queue_sum(Q: Sequence[int], weights: Optional[Sequence[float]] = None) -> float:
    """Lyapunov function L(q) = sum_i w_i q_i (unit weights by default)."""
    if weights is None:
        return float(sum(Q))
    require(len(weights) == len(Q), "one weight per queue is required", K=len(Q), weights=len(weights))
    return float(np.dot(np.asarray(weights, dtype=np.float64), np.asarray(Q, dtype=np.float64)))


@dataclass
class WirelessChain:
    """Mutable slot-by-slot state: one FIFO of arrival slots per queue."""

    params: WirelessParams
    capacity: int
    t: int = 0
    buffers: list[deque] = field(default_factory=list)

    def __post_init__(self):
        if not self.buffers:
            self.buffers = [deque() for _ in range(self.params.K)]

    @property
    def queues(self) -> list[int]:
        return [len(b) for b in self.buffers]

    def is_empty(self) -> bool:
        return not any(self.buffers)

    def step(self, stream: UniformSource) -> tuple[list[int], int]:
        """Advance one slot.

        Returns:
            (delays of departing I-packets, number of new I-arrivals).
        """
        params = self.params
        K = params.K
        arrivals = [int(sample(params.arrival_pmfs[i], _NO_CLIP, stream.draw())) for i in range(K)]
        rates = [int(sample(params.channel_pmfs[i], _NO_CLIP, stream.draw())) for i in range(K)]

        served = maxweight_schedule(self.queues, rates)
        buffer = self.buffers[served]
        delays = []
        for _ in range(min(len(buffer), rates[served])):
            stamp = buffer.popleft()
            if served in params.subset_I:
                delays.append(self.t - stamp)

        new_in_I = 0
        for i, count in enumerate(arrivals):
            if len(self.buffers[i]) + count > self.capacity:
                raise BufferOverflow(
                    f"timestamp buffer of queue {i} exceeds capacity {self.capacity}",
                    {"queue": i, "capacity": self.capacity, "slot": self.t},
                )
            self.buffers[i].extend([self.t] * count)
            if i in params.subset_I:
                new_in_I += count
        self.t += 1
        return delays, new_in_I


def _run_cycle(stream: UniformSource, params: WirelessParams, horizon: int) -> tuple[WirelessCycleStats, bool]:
    chain = WirelessChain(params, params.capacity_for(horizon))
    d = params.threshold_d
    N = 0
    J = 0
    while chain.t < horizon:
        delays, new_in_I = chain.step(stream)
        J += sum(1 for delay in delays if delay >= d)
        N += new_in_I
        if chain.is_empty():
            return WirelessCycleStats(N_M=N, J_M=J, T_M=chain.t, truncated=False), True
    return WirelessCycleStats(N_M=N, J_M=J, T_M=horizon, truncated=True), False


def evaluate_wireless_cycle(stream: UniformSource, params: WirelessParams) -> WirelessCycleStats:
    """One regeneration cycle from the empty state, truncated at M slots.

    Packets still queued at truncation count towards N_M but not J_M.

    Raises:
        BufferOverflow: A timestamp buffer outgrew its configured capacity.
    """
    stats, _ = _run_cycle(stream, params, params.horizon_M)
    return stats


def evaluate_full_wireless_cycle(
    stream: UniformSource,
    params: WirelessParams,
    safety_cap: int = config.DEFAULT_SAFETY_CAP,
) -> WirelessCycleStats:
    """Untruncated cycle; raises CapExceeded when the cap binds."""
    require(safety_cap >= 1, "safety_cap must be at least 1", safety_cap=safety_cap)
    stats, regenerated = _run_cycle(stream, params, safety_cap)
    if not regenerated:
        raise CapExceeded(
            f"wireless cycle still busy after {safety_cap} slots",
            {"safety_cap": safety_cap, "cycle_index": getattr(stream, "cycle_index", None)},
        )
    return stats


def simulate_time_average(params: WirelessParams, n_slots: int, stream: UniformSource) -> TimeAverage:
    """Fraction of departing I-packets with delay >= d along one long trajectory."""
    chain = WirelessChain(params, n_slots * params.A_max)
    d = params.threshold_d
    hits: list[float] = []
    for _ in range(n_slots):
        delays, _ = chain.step(stream)
        hits.extend(1.0 if delay >= d else 0.0 for delay in delays)
    return batch_means(np.asarray(hits, dtype=np.float64))


def simulate_queue_path(params: WirelessParams, n_slots: int, stream: UniformSource) -> np.ndarray:
    """End-of-slot queue vectors, shape (n_slots + 1, K); row 0 is the empty start."""
    chain = WirelessChain(params, n_slots * params.A_max)
    path = np.zeros((n_slots + 1, params.K), dtype=np.int64)
    for t in range(1, n_slots + 1):
        chain.step(stream)
        path[t] = chain.queues
    return path
