"""Classical emulation of amplitude estimation.

A cycle evaluator f maps an m-bit seed to Y in [0, 1]; the amplitude is
a = 2^-m * sum_omega f(omega). Iterative amplitude estimation is emulated at
the level of measurement statistics: a round of N shots at Grover power k
is a single Binomial(N, sin^2((2k+1) arcsin sqrt(a))) draw. Each shot costs
2k + 1 oracle invocations.
"""

import math
from dataclasses import asdict, dataclass
from typing import Any, Callable, Literal, Optional, Sequence

import numpy as np
from scipy import stats

from . import config
from .errors import SeedSpaceTooLarge, require
from .seedstream import SeedStream, UniformSource, fork_cycle, from_seed_bits

CycleEvaluator = Callable[[UniformSource], float]
AmplitudeSource = Literal["exact", "mc"]

MIN_RATIO = 2.0  # minimum growth of the Grover scaling 4k + 2 between rounds
OVERSHOOT_DIVISOR = 10


@dataclass(frozen=True)
class OracleSpec:
    evaluator: CycleEvaluator
    seed_bits_m: int = config.DEFAULT_SEED_BITS
    amplitude_source: AmplitudeSource = "exact"
    n_samples: Optional[int] = None
    master_seed: int = config.DEFAULT_MASTER_SEED

    def __post_init__(self):
        require(self.seed_bits_m >= 1, "seed_bits_m must be at least 1", seed_bits_m=self.seed_bits_m)
        require(
            self.amplitude_source in ("exact", "mc"),
            "amplitude_source must be 'exact' or 'mc'",
            amplitude_source=self.amplitude_source,
        )
        if self.amplitude_source == "exact" and self.seed_bits_m > config.MAX_EXACT_SEED_BITS:
            raise SeedSpaceTooLarge(
                f"exact enumeration is limited to {config.MAX_EXACT_SEED_BITS} seed bits",
                {"seed_bits_m": self.seed_bits_m},
            )


@dataclass(frozen=True)
class AmplitudeEstimate:
    a_hat: float
    ci_lo: float
    ci_hi: float
    eps_target: float
    delta_target: float
    oracle_queries: int
    shots: int
    rounds: int = 0
    method: str = "iqae"

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def seed_stream(oracle: OracleSpec, omega: int) -> SeedStream:
    return from_seed_bits(omega, oracle.seed_bits_m, oracle.master_seed)


def random_seed(master_seed: int, index: int, seed_bits_m: int) -> int:
    """Uniform m-bit seed number `index` of a sampling run."""
    stream = fork_cycle(master_seed, index, bit_width=config.MAX_BIT_WIDTH)
    return stream.raw(0) >> (64 - seed_bits_m)


def exact_amplitude(oracle: OracleSpec) -> float:
    """2^-m * sum over every m-bit seed of f(omega).

    Raises:
        SeedSpaceTooLarge: m exceeds the brute-force limit.
    """
    m = oracle.seed_bits_m
    if m > config.MAX_EXACT_SEED_BITS:
        raise SeedSpaceTooLarge(
            f"exact enumeration is limited to {config.MAX_EXACT_SEED_BITS} seed bits",
            {"seed_bits_m": m},
        )
    values = (oracle.evaluator(seed_stream(oracle, omega)) for omega in range(1 << m))
    return math.fsum(values) / (1 << m)


def mc_sample_size(eps: float, delta: float) -> int:
    """Hoeffding sample size N = ceil(ln(2 / delta) / (2 eps^2))."""
    require(0 < eps < 1, "eps must lie in (0, 1)", eps=eps)
    require(0 < delta < 1, "delta must lie in (0, 1)", delta=delta)
    return math.ceil(math.log(2.0 / delta) / (2.0 * eps * eps))


def mc_amplitude(oracle: OracleSpec, n_samples: int) -> float:
    """Mean of f over `n_samples` uniformly drawn m-bit seeds."""
    values = (
        oracle.evaluator(seed_stream(oracle, random_seed(oracle.master_seed, i, oracle.seed_bits_m)))
        for i in range(n_samples)
    )
    return math.fsum(values) / n_samples


def oracle_amplitude(oracle: OracleSpec, eps_Q: float, delta_Q: float) -> float:
    """Ground-truth amplitude for the emulator.

    The sampled source is sized so its own error stays within a tenth of
    eps_Q at confidence 1 - delta_Q.
    """
    if oracle.amplitude_source == "exact":
        return exact_amplitude(oracle)
    n = oracle.n_samples or mc_sample_size(config.MC_SOURCE_ERROR_FRACTION * eps_Q, delta_Q)
    return mc_amplitude(oracle, n)


def grover_shot_probability(a: float, k: int) -> float:
    """sin^2((2k + 1) arcsin sqrt(a))."""
    require(0.0 <= a <= 1.0, "a must lie in [0, 1]", a=a)
    require(k >= 0, "k must be nonnegative", k=k)
    return math.sin((2 * k + 1) * math.asin(math.sqrt(a))) ** 2


def binomial_draw(n: int, p: float, stream: UniformSource) -> int:
    """Binomial(n, p) by inversion of a single uniform."""
    p = min(max(p, 0.0), 1.0)
    return max(int(stats.binom.ppf(stream.draw().value, n, p)), 0)


def _find_next_k(k: int, upper_half: bool, theta_l: float, theta_u: float) -> tuple[int, bool]:
    """Largest admissible power whose scaled interval sits inside one half-circle.

    Angles are in turns: theta in [0, 1/4] with a = sin^2(2 pi theta).
    """
    old_scaling = 4 * k + 2
    width = theta_u - theta_l
    if width <= 0:
        return k, upper_half
    max_scaling = int(1.0 / (2.0 * width))
    scaling = max_scaling - (max_scaling - 2) % 4
    while scaling >= MIN_RATIO * old_scaling:
        lo = scaling * theta_l - int(scaling * theta_l)
        hi = scaling * theta_u - int(scaling * theta_u)
        if lo <= hi <= 0.5:
            return (scaling - 2) // 4, True
        if 0.5 <= lo <= hi:
            return (scaling - 2) // 4, False
        scaling -= 4
    return k, upper_half


def _max_rounds(eps: float) -> int:
    return int(math.log(MIN_RATIO * math.pi / 8.0 / eps) / math.log(MIN_RATIO)) + 1


def iqae_from_amplitude(
    a_true: float,
    eps: float,
    delta: float,
    stream: UniformSource,
    shots: int = config.IQAE_SHOTS,
) -> AmplitudeEstimate:
    """Iterative amplitude estimation with Chernoff intervals at a known amplitude.

    Rounds at the same power pool their counts. Once the scaling 4k + 2
    passes L_max / eps, shots per round drop to N * L_max / (10 eps (4k + 2))
    so the last rounds do not overshoot the query budget.
    """
    require(0.0 <= a_true <= 1.0, "a_true must lie in [0, 1]", a_true=a_true)
    require(0 < eps < 0.5, "eps must lie in (0, 0.5)", eps=eps)
    require(0 < delta < 1, "delta must lie in (0, 1)", delta=delta)
    require(shots >= 1, "shots must be at least 1", shots=shots)

    rounds_bound = _max_rounds(eps)
    log_term = math.log(2.0 * rounds_bound / delta)
    L_max = math.asin(min(1.0, (2.0 / shots * log_term) ** 0.25))
    overshoot_scaling = math.ceil(L_max / eps)

    theta_l, theta_u = 0.0, 0.25
    a_l, a_u = 0.0, 1.0
    k = 0
    upper_half = True
    pooled_k = -1
    pooled_ones = 0
    pooled_shots = 0
    queries = 0
    total_shots = 0
    rounds = 0
    while (theta_u - theta_l) * 2.0 * math.pi > 2.0 * eps:
        rounds += 1
        k, upper_half = _find_next_k(k, upper_half, theta_l, theta_u)
        scaling = 4 * k + 2
        n_shots = shots
        if scaling > overshoot_scaling:
            n_shots = max(1, math.ceil(shots * L_max / eps / scaling / OVERSHOOT_DIVISOR))
        ones = binomial_draw(n_shots, grover_shot_probability(a_true, k), stream)
        queries += n_shots * (2 * k + 1)
        total_shots += n_shots
        if k != pooled_k:
            pooled_k, pooled_ones, pooled_shots = k, 0, 0
        pooled_ones += ones
        pooled_shots += n_shots

        p_hat = pooled_ones / pooled_shots
        half_width = math.sqrt(log_term / (2.0 * pooled_shots))
        p_min = max(0.0, p_hat - half_width)
        p_max = min(1.0, p_hat + half_width)
        if upper_half:
            frac_min = math.acos(1.0 - 2.0 * p_min) / (2.0 * math.pi)
            frac_max = math.acos(1.0 - 2.0 * p_max) / (2.0 * math.pi)
        else:
            frac_min = 1.0 - math.acos(1.0 - 2.0 * p_max) / (2.0 * math.pi)
            frac_max = 1.0 - math.acos(1.0 - 2.0 * p_min) / (2.0 * math.pi)
        theta_u = (int(scaling * theta_u) + frac_max) / scaling
        theta_l = (int(scaling * theta_l) + frac_min) / scaling
        a_l = max(0.0, math.sin(2.0 * math.pi * theta_l) ** 2)
        a_u = min(1.0, math.sin(2.0 * math.pi * theta_u) ** 2)

    a_lo, a_hi = min(a_l, a_u), max(a_l, a_u)
    return AmplitudeEstimate(
        a_hat=(a_lo + a_hi) / 2.0,
        ci_lo=a_lo,
        ci_hi=a_hi,
        eps_target=eps,
        delta_target=delta,
        oracle_queries=queries,
        shots=total_shots,
        rounds=rounds,
        method="iqae",
    )


def iqae_estimate(oracle: OracleSpec, eps_Q: float, delta_Q: float, stream: UniformSource) -> AmplitudeEstimate:
    """Emulated iterative amplitude estimation of E[f(omega)]."""
    return iqae_from_amplitude(oracle_amplitude(oracle, eps_Q, delta_Q), eps_Q, delta_Q, stream)


def _hoeffding_estimate(mean: float, n: int, eps: float, delta: float) -> AmplitudeEstimate:
    half_width = math.sqrt(math.log(2.0 / delta) / (2.0 * n))
    return AmplitudeEstimate(
        a_hat=mean,
        ci_lo=max(0.0, mean - half_width),
        ci_hi=min(1.0, mean + half_width),
        eps_target=eps,
        delta_target=delta,
        oracle_queries=n,
        shots=n,
        rounds=1,
        method="mc",
    )


def mc_baseline_estimate(oracle: OracleSpec, eps: float, delta: float) -> AmplitudeEstimate:
    """Plain Monte Carlo over N = ceil(ln(2/delta) / (2 eps^2)) random seeds."""
    n = mc_sample_size(eps, delta)
    return _hoeffding_estimate(mc_amplitude(oracle, n), n, eps, delta)


def mc_baseline_from_amplitude(a_true: float, eps: float, delta: float, stream: UniformSource) -> AmplitudeEstimate:
    """Monte Carlo baseline at a known amplitude: one Binomial(N, a) draw."""
    n = mc_sample_size(eps, delta)
    return _hoeffding_estimate(binomial_draw(n, a_true, stream) / n, n, eps, delta)


@dataclass(frozen=True)
class ScalingRow:
    eps: float
    method: str
    median_queries: float
    success_rate: float
    runs: int


def fit_query_slope(eps_grid: Sequence[float], queries: Sequence[float]) -> float:
    """Slope of log(queries) against log(1 / eps)."""
    x = np.log(1.0 / np.asarray(eps_grid, dtype=np.float64))
    y = np.log(np.asarray(queries, dtype=np.float64))
    return float(np.polyfit(x, y, 1)[0])


def qae_scaling_study(
    a_true: float,
    eps_grid: Sequence[float],
    delta: float,
    runs: int,
    master_seed: int = config.DEFAULT_MASTER_SEED,
) -> tuple[list[ScalingRow], dict[str, float]]:
    """Median query counts of IQAE and the MC baseline over an accuracy grid.

    Returns:
        (rows, {"iqae": slope, "mc": slope}) with slopes from log-log fits.
    """
    require(runs >= 1, "runs must be at least 1", runs=runs)
    rows: list[ScalingRow] = []
    medians: dict[str, list[float]] = {"iqae": [], "mc": []}
    for g, eps in enumerate(eps_grid):
        for method, run in (("iqae", iqae_from_amplitude), ("mc", mc_baseline_from_amplitude)):
            estimates = [
                run(a_true, eps, delta, fork_cycle(master_seed, (g << 32) | r)) for r in range(runs)
            ]
            median = float(np.median([e.oracle_queries for e in estimates]))
            hits = sum(1 for e in estimates if abs(e.a_hat - a_true) <= eps)
            rows.append(ScalingRow(eps, method, median, hits / runs, runs))
            medians[method].append(median)
    slopes = {method: fit_query_slope(eps_grid, values) for method, values in medians.items()}
    return rows, slopes
