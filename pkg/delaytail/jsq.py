"""Join-the-Shortest-Queue with K servers in continuous time.

Arrivals are Poisson with rate lambda, inter-arrival and service draws are
clipped at B. The event chain is not regenerative on its own; cycles are cut
with Nummelin splitting at empty-system visits. While the arrival age u0 is
at most B - eps, the clipped residual inter-arrival law dominates
delta * Uniform[0, eps], with delta = eps * lambda * exp(-lambda * eps). A
Bernoulli(delta) success declares a regeneration; a failure draws the next
inter-arrival from the residual kernel (P - delta * phi) / (1 - delta).

Within one event, departures are resolved by ascending server index before
the arrival. Q_i counts every job at server i, the one in service included.
"""

import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import optimize

from . import config
from .distributions import ClipSpec, DistSpec, quantile
from .errors import CapExceeded, InvalidConfig, require
from .gg1 import TimeAverage, batch_means
from .seedstream import UniformSource

INF = math.inf


@dataclass(frozen=True)
class JsqParams:
    K: int
    lam: float
    clip_B: float
    service: DistSpec
    split_eps: float
    threshold_d: float = 0.0
    arrival_cap_R_A: int = 1
    clipping: bool = True

    def __post_init__(self):
        if self.K < 1:
            raise InvalidConfig("K must be at least 1", {"K": self.K})
        if not self.lam > 0:
            raise InvalidConfig("arrival rate must be strictly positive", {"lam": self.lam})
        if not 0 < self.split_eps < self.clip_B:
            raise InvalidConfig(
                "split_eps must lie in (0, clip_B)", {"split_eps": self.split_eps, "clip_B": self.clip_B}
            )
        if self.threshold_d < 0:
            raise InvalidConfig("threshold_d must be nonnegative", {"threshold_d": self.threshold_d})
        if self.arrival_cap_R_A < 1:
            raise InvalidConfig("arrival_cap_R_A must be at least 1", {"arrival_cap_R_A": self.arrival_cap_R_A})

    @property
    def delta(self) -> float:
        return minorization_delta(self.lam, self.split_eps)

    @property
    def clip(self) -> ClipSpec:
        return ClipSpec.at(self.clip_B) if self.clipping else ClipSpec.off()


@dataclass(frozen=True)
class SplitOutcome:
    regenerated: bool
    next_interarrival: float
    tested: bool = True
    clip_bound: bool = False  # the residual draw reached B - u0


@dataclass
class JsqState:
    T_sys: float = 0.0
    U_arr: float = INF
    U: list[float] = field(default_factory=list)
    buffers: list[deque] = field(default_factory=list)
    n_arr: int = 0
    last_arrival: float = 0.0
    clipping_mattered: bool = False

    @classmethod
    def empty(cls, K: int) -> "JsqState":
        return cls(U=[INF] * K, buffers=[deque() for _ in range(K)])

    @property
    def Q(self) -> list[int]:
        return [len(b) for b in self.buffers]

    @property
    def arrival_age_U0(self) -> float:
        return self.T_sys - self.last_arrival

    def jobs_in_system(self) -> int:
        return sum(len(b) for b in self.buffers)


@dataclass(frozen=True)
class EventRecord:
    dt: float
    departures: tuple[tuple[int, float], ...]  # (server, response time)
    arrival_server: Optional[int]
    violations: int
    emptied: bool  # departures left the system empty and no arrival joined


@dataclass(frozen=True)
class JsqCycleStats:
    J_RA: int
    N_A_cycle: int
    regen_completed: bool
    events_simulated: int
    cycle_time: float = 0.0  # start to regeneration (or drain)
    tests_performed: int = 0
    tests_succeeded: int = 0
    clipping_mattered: bool = False


def minorization_delta(lam: float, split_eps: float) -> float:
    """delta = eps * lambda * exp(-lambda * eps)."""
    require(lam > 0, "lambda must be positive", lam=lam)
    require(split_eps > 0, "split_eps must be positive", split_eps=split_eps)
    return split_eps * lam * math.exp(-lam * split_eps)


def _residual_cap(u0: float, params: JsqParams) -> float:
    return max(params.clip_B - u0, 0.0) if params.clipping else INF


def _draw_interarrival(state: JsqState, params: JsqParams, stream: UniformSource) -> float:
    raw = -math.log1p(-stream.draw().value) / params.lam
    if raw > params.clip_B:
        state.clipping_mattered = True
        if params.clipping:
            return params.clip_B
    return raw


def _draw_service(state: JsqState, params: JsqParams, stream: UniformSource) -> float:
    raw = quantile(params.service, stream.draw().value)
    if raw > params.clip_B:
        state.clipping_mattered = True
        if params.clipping:
            return params.clip_B
    return raw


def _cap_residual(y: float, u0: float, params: JsqParams) -> tuple[float, bool]:
    """Apply the atom at B - u0; the flag reports whether the clipped chain would bind."""
    exceeded = y >= params.clip_B - u0
    if exceeded and params.clipping:
        return max(params.clip_B - u0, 0.0), True
    return y, exceeded


def residual_kernel_quantile(v: float, u0: float, params: JsqParams) -> tuple[float, bool]:
    """Inverse CDF of q_A(. | u0) at v; returns (value, reached B - u0)."""
    lam = params.lam
    eps = params.split_eps
    delta = params.delta
    t = v * (1.0 - delta)
    t_eps = -math.expm1(-lam * eps) - delta
    if t <= 0.0:
        y = 0.0
    elif t <= t_eps:
        slope = delta / eps
        y = optimize.brentq(lambda x: -math.expm1(-lam * x) - slope * x - t, 0.0, eps, xtol=1e-14)
    else:
        y = -math.log(1.0 - delta - t) / lam
    return _cap_residual(y, u0, params)


def nummelin_test(u0: float, params: JsqParams, stream: UniformSource) -> SplitOutcome:
    """Splitting decision at an empty-system visit with arrival age u0.

    Always consumes two draws: the Bernoulli variate, then the variate that
    sets the next inter-arrival time.
    """
    u = stream.draw().value
    v = stream.draw().value
    if u0 > params.clip_B - params.split_eps:
        y, at_cap = _cap_residual(-math.log1p(-v) / params.lam, u0, params)
        return SplitOutcome(False, y, tested=False, clip_bound=at_cap)
    if u < params.delta:
        return SplitOutcome(True, v * params.split_eps)
    y, at_cap = residual_kernel_quantile(v, u0, params)
    return SplitOutcome(False, y, clip_bound=at_cap)


def arrival_residual_density(y: float, u0: float, params: JsqParams) -> float:
    """Continuous part of P_A(. | u0): lambda * exp(-lambda * y) below B - u0."""
    if y < 0 or y >= _residual_cap(u0, params):
        return 0.0
    return params.lam * math.exp(-params.lam * y)


def residual_kernel_density(y: float, u0: float, params: JsqParams) -> float:
    """Continuous part of q_A(. | u0) for u0 <= B - eps."""
    delta = params.delta
    base = arrival_residual_density(y, u0, params)
    if 0 <= y <= params.split_eps:
        base -= delta / params.split_eps
    return base / (1.0 - delta)


def residual_atom(u0: float, params: JsqParams) -> tuple[float, float]:
    """Atom of P_A(. | u0) at B - u0 as (location, mass); mass 0 when unclipped."""
    if not params.clipping:
        return INF, 0.0
    L = _residual_cap(u0, params)
    return L, math.exp(-params.lam * L)


def advance_event(state: JsqState, params: JsqParams, stream: UniformSource) -> tuple[JsqState, EventRecord]:
    """Advance the chain to its next event epoch and resolve every event due there."""
    dt = min(state.U_arr, *state.U)
    require(dt < INF, "no pending event: all residuals are infinite")
    state.T_sys += dt
    if state.U_arr < INF:
        state.U_arr -= dt
    for i in range(params.K):
        if state.U[i] < INF:
            state.U[i] -= dt

    departures = []
    violations = 0
    for i in range(params.K):
        if state.U[i] <= 0.0:
            stamp = state.buffers[i].popleft()
            response = state.T_sys - stamp
            departures.append((i, response))
            if response > params.threshold_d:
                violations += 1
            state.U[i] = _draw_service(state, params, stream) if state.buffers[i] else INF

    arrival_server = None
    if state.U_arr <= 0.0 and state.n_arr < params.arrival_cap_R_A:
        Q = state.Q
        arrival_server = Q.index(min(Q))
        state.n_arr += 1
        state.buffers[arrival_server].append(state.T_sys)
        state.last_arrival = state.T_sys
        if state.U[arrival_server] == INF:
            state.U[arrival_server] = _draw_service(state, params, stream)
        # drawn even past the cap so capped and uncapped cycles share a tape
        gap = _draw_interarrival(state, params, stream)
        state.U_arr = gap if state.n_arr < params.arrival_cap_R_A else INF

    emptied = bool(departures) and arrival_server is None and state.jobs_in_system() == 0
    return state, EventRecord(dt, tuple(departures), arrival_server, violations, emptied)


def _run_cycle(stream: UniformSource, params: JsqParams) -> JsqCycleStats:
    state = JsqState.empty(params.K)
    state.U_arr = stream.draw().value * params.split_eps
    J = 0
    events = 0
    tests = 0
    successes = 0
    regenerated = False
    while True:
        state, record = advance_event(state, params, stream)
        events += len(record.departures) + (record.arrival_server is not None)
        J += record.violations
        if not record.emptied:
            continue
        if state.n_arr >= params.arrival_cap_R_A:
            break
        outcome = nummelin_test(state.arrival_age_U0, params, stream)
        if outcome.clip_bound and not outcome.regenerated:
            state.clipping_mattered = True
        if outcome.tested:
            tests += 1
        if outcome.regenerated:
            successes += 1
            regenerated = True
            # the phi-distributed gap opens the next cycle
            break
        state.U_arr = outcome.next_interarrival
    return JsqCycleStats(
        J_RA=J,
        N_A_cycle=state.n_arr,
        regen_completed=regenerated,
        events_simulated=events,
        cycle_time=state.T_sys,
        tests_performed=tests,
        tests_succeeded=successes,
        clipping_mattered=state.clipping_mattered,
    )


def evaluate_jsq_cycle(stream: UniformSource, params: JsqParams) -> JsqCycleStats:
    """One Nummelin cycle, with arrivals suppressed after the R_A-th.

    The cycle starts empty with the first inter-arrival drawn from
    Uniform[0, eps] and ends either at the next splitting success or when the
    system drains after the R_A-th arrival. Every injected job departs within
    the cycle, so J_RA counts violations among all of them.
    """
    return _run_cycle(stream, params)


def evaluate_full_jsq_cycle(
    stream: UniformSource,
    params: JsqParams,
    safety_cap: int = config.DEFAULT_SAFETY_CAP,
) -> JsqCycleStats:
    """Untruncated Nummelin cycle; raises CapExceeded if `safety_cap` arrivals do not suffice."""
    stats = _run_cycle(stream, replace(params, arrival_cap_R_A=safety_cap))
    if not stats.regen_completed:
        raise CapExceeded(
            f"no regeneration within {safety_cap} arrivals",
            {"safety_cap": safety_cap, "cycle_index": getattr(stream, "cycle_index", None)},
        )
    return stats


def simulate_time_average(params: JsqParams, n_arrivals: int, stream: UniformSource) -> TimeAverage:
    """Fraction of jobs with response time > d along one long unsplit trajectory."""
    long_run = replace(params, arrival_cap_R_A=n_arrivals)
    state = JsqState.empty(params.K)
    state.U_arr = _draw_interarrival(state, long_run, stream)
    hits: list[float] = []
    while state.n_arr < n_arrivals or state.jobs_in_system() > 0:
        state, record = advance_event(state, long_run, stream)
        hits.extend(1.0 if response > params.threshold_d else 0.0 for _, response in record.departures)
    return batch_means(np.asarray(hits, dtype=np.float64))
