"""Truncated GI/GI/1 regeneration cycles driven by the Lindley recursion."""

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import config
from .distributions import ClipSpec, DistSpec, sample
from .errors import CapExceeded, require
from .seedstream import UniformSource

Metric = Literal["waiting", "response"]


@dataclass(frozen=True)
class Gg1Params:
    arrival: DistSpec
    service: DistSpec
    clip: ClipSpec = ClipSpec()
    threshold_d: float = 0.0
    horizon_M: int = 1
    metric: Metric = "waiting"

    def __post_init__(self):
        require(self.horizon_M >= 1, "horizon_M must be at least 1", horizon_M=self.horizon_M)
        require(self.threshold_d >= 0, "threshold_d must be nonnegative", threshold_d=self.threshold_d)
        require(self.metric in ("waiting", "response"), "metric must be 'waiting' or 'response'", metric=self.metric)


@dataclass(frozen=True)
class CycleStats:
    tau_M: int
    R_M: int
    Y: float
    truncated: bool
    calls_used: int


def lindley_step(W: float, S: float, A: float) -> float:
    """Waiting time of the next arrival: max(W + S - A, 0)."""
    return max(W + S - A, 0.0)


def _run_cycle(stream: UniformSource, params: Gg1Params, horizon: int) -> tuple[int, int, float]:
    """Run the recursion for at most `horizon` arrivals; returns (tau, R, final W)."""
    d = params.threshold_d
    response = params.metric == "response"
    W = 0.0
    R = 0
    tau = 0
    while tau < horizon:
        tau += 1
        A = sample(params.arrival, params.clip, stream.draw())
        S = sample(params.service, params.clip, stream.draw())
        W = lindley_step(W, S, A)
        # W is the waiting time of arrival n; its sojourn adds that arrival's own service
        if (W + S if response else W) >= d:
            R += 1
        if W == 0.0:
            break
    return tau, R, W


def evaluate_truncated_cycle(stream: UniformSource, params: Gg1Params) -> CycleStats:
    """Evaluate one cycle truncated at M arrivals.

    Each iteration consumes two draws (A, then S). The indicator is taken
    before the regeneration check, so the arrival that empties the system
    contributes 1{0 >= d}.
    """
    start = stream.call_index
    tau, R, W = _run_cycle(stream, params, params.horizon_M)
    M = params.horizon_M
    return CycleStats(
        tau_M=tau,
        R_M=R,
        Y=R / M,
        truncated=tau == M and W > 0.0,
        calls_used=stream.call_index - start,
    )


def evaluate_full_cycle(
    stream: UniformSource,
    params: Gg1Params,
    safety_cap: int = config.DEFAULT_SAFETY_CAP,
) -> CycleStats:
    """Evaluate the untruncated cycle; Y is normalised by the safety cap.

    Raises:
        CapExceeded: The cycle had not regenerated after `safety_cap` arrivals.
    """
    require(safety_cap >= 1, "safety_cap must be at least 1", safety_cap=safety_cap)
    start = stream.call_index
    tau, R, W = _run_cycle(stream, params, safety_cap)
    if W > 0.0:
        raise CapExceeded(
            f"cycle still busy after {safety_cap} arrivals",
            {"safety_cap": safety_cap, "cycle_index": getattr(stream, "cycle_index", None)},
        )
    return CycleStats(tau_M=tau, R_M=R, Y=R / safety_cap, truncated=False, calls_used=stream.call_index - start)


@dataclass(frozen=True)
class TimeAverage:
    """Long-run fraction of arrivals meeting the delay event."""

    estimate: float
    std_error: float
    n: int


def batch_means(indicators: np.ndarray, n_batches: int = 50) -> TimeAverage:
    """Mean of a correlated 0/1 series with a batch-means standard error."""
    n = len(indicators)
    require(n >= n_batches, "series shorter than the number of batches", n=n, n_batches=n_batches)
    size = n // n_batches
    means = indicators[: size * n_batches].reshape(n_batches, size).mean(axis=1)
    return TimeAverage(
        estimate=float(indicators.mean()),
        std_error=float(means.std(ddof=1) / math.sqrt(n_batches)),
        n=n,
    )


def simulate_time_average(params: Gg1Params, n_arrivals: int, stream: UniformSource) -> TimeAverage:
    """Fraction of arrivals with W >= d (or W + S >= d) along one long trajectory."""
    d = params.threshold_d
    response = params.metric == "response"
    hits = np.zeros(n_arrivals, dtype=np.float64)
    W = 0.0
    for n in range(n_arrivals):
        A = sample(params.arrival, params.clip, stream.draw())
        S = sample(params.service, params.clip, stream.draw())
        W = lindley_step(W, S, A)
        if (W + S if response else W) >= d:
            hits[n] = 1.0
    return batch_means(hits)


def mm1_waiting_tail(lam: float, mu: float, d: float) -> float:
    """Stationary M/M/1 P(W >= d) = rho * exp(-mu (1 - rho) d) for d > 0."""
    require(0 < lam < mu, "M/M/1 needs 0 < lambda < mu", lam=lam, mu=mu)
    if d <= 0:
        return 1.0
    rho = lam / mu
    return rho * math.exp(-mu * (1.0 - rho) * d)
