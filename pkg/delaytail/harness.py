"""End-to-end workflows: ratio estimation, certification and bound checks.

p_d = E[R] / E[tau] is estimated with a truncated numerator (classical
Monte Carlo or emulated amplitude estimation) and an untruncated classical
denominator. The verification functions simulate the same cycles again and
compare empirical quantities against the planner's bounds with explicit
one-sided confidence slack, Bonferroni-corrected over each grid.
"""

import math
import sys
from collections import defaultdict
from dataclasses import asdict, dataclass, field, replace
from functools import partial
from typing import Any, Optional, Sequence

import numpy as np
from scipy import stats

from . import config, gg1, jsq, maxweight, planner
from .amplitude import AmplitudeEstimate, OracleSpec, iqae_estimate
from .batch import map_cycles
from .distributions import ClipSpec, clipping_bias_bound, survival
from .errors import InsufficientVisits, InvalidArgument, InvalidConfig, require
from .planner import HorizonPlan
from .runconfig import ModelParams, RunConfig
from .seedstream import SeedStream, UniformSource, fork_cycle


@dataclass(frozen=True)
class ErrorBudget:
    trunc_term: float
    clip_term: float
    statistical_term: float
    total: float
    target: float

    @property
    def ok(self) -> bool:
        return self.total <= self.target

    def to_dict(self) -> dict[str, Any]:
        return {**asdict(self), "ok": self.ok}


@dataclass(frozen=True)
class CertificationReport:
    """Ratio estimate of p_d with its decomposed error budget.

    p_upper = (E_R_hat + budget.total) / E_tau_lower is the conservative
    upper value certification compares against 10^-k.
    """

    model_id: str
    p_hat: float
    p_upper: float
    E_R_hat: float
    E_tau_hat: float
    E_tau_lower: float
    budget: ErrorBudget
    certified: bool
    k_target: Optional[int]
    alpha_Q: float
    mode: str
    cycles_numerator: int
    cycles_denominator: int
    queries_numerator: int
    plan: dict[str, Any] = field(default_factory=dict)
    numerator_estimate: Optional[dict[str, Any]] = None

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["budget"] = self.budget.to_dict()
        return data


@dataclass(frozen=True)
class BoundPoint:
    t: float
    empirical: float
    bound: float
    slack: float


@dataclass(frozen=True)
class BoundCheckReport:
    bound_name: str
    points: list[BoundPoint]
    violated: bool
    details: dict[str, Any] = field(default_factory=dict)

    def rows(self) -> list[dict[str, Any]]:
        return [asdict(p) for p in self.points]


@dataclass(frozen=True)
class EmptyingEstimate:
    p_hat_lower: float
    visits: int
    states: int
    slots: int
    level: float


@dataclass(frozen=True)
class NummelinReport:
    tests: int
    successes: int
    frequency: float
    delta: float
    sigma: float
    within_band: bool


@dataclass(frozen=True)
class ConsistencyReport:
    model_id: str
    cycle_estimate: float
    cycle_se: float
    long_run_estimate: float
    long_run_se: float
    overlap: bool


def _progress(message: str, quiet: bool) -> None:
    if not quiet:
        print(message, file=sys.stderr)


# ---------------------------------------------------------------------------
# Per-cycle evaluators. Module level so worker processes can unpickle them.
# ---------------------------------------------------------------------------


def cycle_counts(
    stream: UniformSource,
    model: str,
    params: ModelParams,
    full: bool = False,
    safety_cap: int = config.DEFAULT_SAFETY_CAP,
) -> tuple[int, int, int]:
    """(violations, ratio denominator count, regeneration length) of one cycle.

    The denominator count is tau_M for GI/GI/1, N_M (I-arrivals) for
    MaxWeight and N_A for JSQ. The regeneration length is measured in
    arrivals, slots and arrivals respectively.
    """
    if model == "gg1":
        s = gg1.evaluate_full_cycle(stream, params, safety_cap) if full else gg1.evaluate_truncated_cycle(stream, params)
        return s.R_M, s.tau_M, s.tau_M
    if model == "maxweight":
        if full:
            w = maxweight.evaluate_full_wireless_cycle(stream, params, safety_cap)
        else:
            w = maxweight.evaluate_wireless_cycle(stream, params)
        return w.J_M, w.N_M, w.T_M
    j = jsq.evaluate_full_jsq_cycle(stream, params, safety_cap) if full else jsq.evaluate_jsq_cycle(stream, params)
    return j.J_RA, j.N_A_cycle, j.N_A_cycle


def numerator_scale(model: str, params: ModelParams) -> float:
    """Upper bound on the per-cycle violation count; Y = count / scale lies in [0, 1]."""
    if model == "gg1":
        return float(params.horizon_M)
    if model == "maxweight":
        return float(len(params.subset_I) * params.A_max * params.horizon_M)
    return float(params.arrival_cap_R_A)


def cycle_y(stream: UniformSource, model: str, params: ModelParams) -> float:
    """The amplitude-estimation payoff f(omega) of a truncated cycle."""
    violations, _, _ = cycle_counts(stream, model, params)
    return violations / numerator_scale(model, params)


def _replay(stream: SeedStream) -> SeedStream:
    return SeedStream(stream.master_seed, stream.cycle_index, 0, stream.bit_width)


def _coupled_truncation(stream: SeedStream, model: str, params: ModelParams, safety_cap: int) -> tuple[int, int]:
    full, _, _ = cycle_counts(stream, model, params, full=True, safety_cap=safety_cap)
    truncated, _, _ = cycle_counts(_replay(stream), model, params)
    return full, truncated


def _coupled_clipping(stream: SeedStream, clipped: gg1.Gg1Params, unclipped: gg1.Gg1Params) -> tuple[int, int]:
    raw = gg1.evaluate_truncated_cycle(stream, unclipped).R_M
    clip = gg1.evaluate_truncated_cycle(_replay(stream), clipped).R_M
    return raw, clip


def _jsq_cap_triple(
    stream: SeedStream, params: jsq.JsqParams, safety_cap: int
) -> tuple[int, int, int, float]:
    full = jsq.evaluate_full_jsq_cycle(stream, params, safety_cap)
    capped = jsq.evaluate_jsq_cycle(_replay(stream), params)
    return full.J_RA, full.N_A_cycle, capped.J_RA, full.cycle_time


def _jsq_pilot(stream: UniformSource, params: jsq.JsqParams, safety_cap: int) -> tuple[int, float]:
    s = jsq.evaluate_full_jsq_cycle(stream, params, safety_cap)
    return s.N_A_cycle, s.cycle_time


def _jsq_clip_pair(stream: SeedStream, params: jsq.JsqParams, safety_cap: int) -> tuple[int, int, int, int, bool]:
    clipped = jsq.evaluate_full_jsq_cycle(stream, params, safety_cap)
    raw = jsq.evaluate_full_jsq_cycle(_replay(stream), replace(params, clipping=False), safety_cap)
    mattered = clipped.clipping_mattered or raw.clipping_mattered
    return clipped.J_RA, clipped.N_A_cycle, raw.J_RA, raw.N_A_cycle, mattered


def _jsq_split_counts(stream: UniformSource, params: jsq.JsqParams, safety_cap: int) -> tuple[int, int]:
    s = jsq.evaluate_full_jsq_cycle(stream, params, safety_cap)
    return s.tests_performed, s.tests_succeeded


def _ratio_pair(stream: UniformSource, model: str, params: ModelParams, safety_cap: int) -> tuple[int, int]:
    violations, length, _ = cycle_counts(stream, model, params, full=True, safety_cap=safety_cap)
    return violations, length


# ---------------------------------------------------------------------------
# Confidence helpers
# ---------------------------------------------------------------------------


def cp_lower(successes: int, n: int, level: float) -> float:
    """One-sided Clopper-Pearson lower confidence limit at error `level`."""
    if successes <= 0:
        return 0.0
    return float(stats.beta.ppf(level, successes, n - successes + 1))


def cp_upper(successes: int, n: int, level: float) -> float:
    if successes >= n:
        return 1.0
    return float(stats.beta.ppf(1.0 - level, successes + 1, n - successes))


def _one_sided_slack(values: np.ndarray, level: float) -> float:
    if values.size < 2:
        return 0.0
    return float(stats.norm.ppf(1.0 - level) * values.std(ddof=1) / math.sqrt(values.size))


# ---------------------------------------------------------------------------
# Planning
# ---------------------------------------------------------------------------


def _fixed_horizon(run: RunConfig) -> int:
    params = run.params
    return params.arrival_cap_R_A if run.model == "jsq" else params.horizon_M


def _refit_gg1(plan: HorizonPlan, params: gg1.Gg1Params, M: int) -> HorizonPlan:
    trunc = planner.truncation_bias_bound(plan.drift["beta"], M)
    clip = None
    if plan.clip_level_B is not None:
        B = plan.clip_level_B
        clip = clipping_bias_bound(M, survival(params.arrival, B), survival(params.service, B))
    return planner.plan_at_horizon(plan, M, trunc, clip)


def plan_model(
    run: RunConfig,
    eps_tot: Optional[float] = None,
    alpha_Q: Optional[float] = None,
    quiet: bool = True,
) -> HorizonPlan:
    """Build the model's HorizonPlan, honouring a horizon fixed in the config.

    Raises:
        InvalidConfig: MaxWeight without a drift certificate.
        UnstableModel: The (clipped) model has no positive stability slack.
    """
    eps = run.eps_tot if eps_tot is None else eps_tot
    alpha = run.alpha_Q if alpha_Q is None else alpha_Q
    params = run.params

    if run.model == "gg1":
        plan = planner.plan_gg1(params, run.tails, eps, alpha, beta=run.beta)
        if run.horizon_fixed:
            plan = _refit_gg1(plan, params, params.horizon_M)
        return plan

    if run.model == "maxweight":
        cert = run.certificate
        if cert is None:
            raise InvalidConfig(
                "maxweight planning needs a drift certificate",
                {"violations": [{"path": "/maxweight/drift", "message": "required for planning"}]},
            )
        p_empty = cert.p_empty
        if p_empty is None:
            _progress(f"  estimating emptying probability (m={cert.m_attempt})...", quiet)
            p_empty = estimate_emptying_probability(
                run, cert.m_attempt, config.DEFAULT_EMPTYING_VISITS, cert.drift_set_level, cert.weights
            ).p_hat_lower
        spec = planner.solve_eta(planner.MaxWeightDriftSpec.certify(cert.eps_drift, cert.nu, cert.m_attempt, p_empty))
        scale = len(params.subset_I) * params.A_max
        plan = planner.plan_maxweight(spec, eps, alpha, arrival_scale=scale)
        if run.horizon_fixed:
            M = params.horizon_M
            trunc = planner.maxweight_truncation_bound(spec.eta_rate, spec.prefactor, M, scale)
            plan = planner.plan_at_horizon(plan, M, trunc)
        return plan

    tail = run.jsq_tail
    cycle_tail = run.jsq_cycle_tail
    if tail is None and cycle_tail is None:
        _progress(f"  fitting arrival-count and cycle-time tails from {config.PILOT_CYCLES} pilot cycles...", quiet)
        pilots = map_cycles(
            partial(_jsq_pilot, params=params, safety_cap=run.safety_cap),
            run.master_seed,
            config.PILOT_CYCLE_OFFSET,
            config.PILOT_CYCLES,
            run.threads,
            run.bit_width,
        )
        tail = fit_exponential_tail([p[0] for p in pilots])
        cycle_tail = _try_fit_tail([p[1] for p in pilots])
    plan = planner.plan_jsq(params, eps, alpha, tail, cycle_tail)
    if run.horizon_fixed:
        R_A = params.arrival_cap_R_A
        bias = planner.arrival_cap_bias_bound(R_A, plan.drift["tail_C"], plan.drift["tail_c"])
        plan = planner.plan_at_horizon(plan, R_A, bias)
    return plan


def _try_fit_tail(samples: Sequence[float]) -> Optional[tuple[float, float]]:
    """Tail fit, or None when the sample has too few populated survival points to fit."""
    try:
        return fit_exponential_tail(samples)
    except InvalidArgument:
        return None


def with_horizon(run: RunConfig, plan: HorizonPlan) -> ModelParams:
    """The run's model parameters at the planned horizon (and clip level)."""
    params = run.params
    if run.model == "gg1":
        clip = ClipSpec.at(plan.clip_level_B) if plan.clip_level_B is not None else params.clip
        return replace(params, horizon_M=plan.M, clip=clip)
    if run.model == "maxweight":
        return replace(params, horizon_M=plan.M)
    return replace(params, arrival_cap_R_A=plan.M)


# ---------------------------------------------------------------------------
# Estimation and certification
# ---------------------------------------------------------------------------


def estimate_tail_probability(
    run: RunConfig,
    eps_tot: Optional[float] = None,
    alpha_Q: Optional[float] = None,
    mode: Optional[str] = None,
    quiet: bool = True,
) -> CertificationReport:
    """Estimate p_d = E[R] / E[tau] with a full error budget.

    The numerator is E[R_M] from truncated cycles: a sample mean with a
    two-sided normal interval in classical-mc mode, or scale * a_hat from
    emulated iterative amplitude estimation in emulated-qae mode. The
    denominator always comes from untruncated cycles on a disjoint range of
    cycle indices.

    Raises:
        UnstableModel: From the planner.
        SeedSpaceTooLarge: Emulated QAE with exact amplitudes over too many seed bits.
        CapExceeded: A denominator cycle outran the safety cap.
    """
    eps = run.eps_tot if eps_tot is None else eps_tot
    alpha = run.alpha_Q if alpha_Q is None else alpha_Q
    mode = mode or run.mode
    require(mode in ("classical-mc", "emulated-qae"), "unknown estimation mode", mode=mode)

    plan = plan_model(run, eps, alpha, quiet=quiet)
    params = with_horizon(run, plan)
    z = float(stats.norm.ppf(1.0 - alpha / 2.0))
    scale = numerator_scale(run.model, params)
    _progress(f"  horizon M={plan.M}, eps_Q={plan.eps_Q:.3e}", quiet)

    numerator: Optional[AmplitudeEstimate] = None
    if mode == "classical-mc":
        _progress(f"  numerator: {run.numerator_cycles} truncated cycles...", quiet)
        counts = map_cycles(
            partial(cycle_counts, model=run.model, params=params),
            run.master_seed,
            0,
            run.numerator_cycles,
            run.threads,
            run.bit_width,
        )
        violations = np.array([c[0] for c in counts], dtype=np.float64)
        E_R = float(violations.mean())
        statistical = z * float(violations.std(ddof=1)) / math.sqrt(violations.size)
        cycles_num = run.numerator_cycles
        queries = run.numerator_cycles
    else:
        eps_Y = plan.eps_Q * plan.M / scale
        exact = run.seed_bits <= config.MAX_EXACT_SEED_BITS
        source = "exact" if exact else "mc"
        _progress(f"  numerator: emulated QAE over {run.seed_bits} seed bits ({source} amplitude)...", quiet)
        oracle = OracleSpec(
            evaluator=partial(cycle_y, model=run.model, params=params),
            seed_bits_m=run.seed_bits,
            amplitude_source=source,
            n_samples=None if exact else run.numerator_cycles,
            master_seed=run.master_seed,
        )
        numerator = iqae_estimate(oracle, eps_Y, alpha, fork_cycle(run.master_seed, config.QAE_STREAM_OFFSET))
        E_R = scale * numerator.a_hat
        statistical = scale * eps_Y
        if not exact:
            # the sampled ground truth carries its own Hoeffding error
            statistical += scale * math.sqrt(math.log(2.0 / alpha) / (2.0 * run.numerator_cycles))
        cycles_num = (1 << run.seed_bits) if exact else run.numerator_cycles
        queries = numerator.oracle_queries

    _progress(f"  denominator: {run.denominator_cycles} full cycles...", quiet)
    counts = map_cycles(
        partial(cycle_counts, model=run.model, params=params, full=True, safety_cap=run.safety_cap),
        run.master_seed,
        config.DENOMINATOR_CYCLE_OFFSET,
        run.denominator_cycles,
        run.threads,
        run.bit_width,
    )
    lengths = np.array([c[1] for c in counts], dtype=np.float64)
    E_tau = float(lengths.mean())
    floor = 0.0 if run.model == "maxweight" else 1.0
    E_tau_lower = max(E_tau - z * float(lengths.std(ddof=1)) / math.sqrt(lengths.size), floor)

    total = plan.trunc_bound + plan.clip_bound + statistical
    budget = ErrorBudget(
        trunc_term=plan.trunc_bound,
        clip_term=plan.clip_bound,
        statistical_term=statistical,
        total=total,
        target=eps,
    )
    p_hat = E_R / E_tau if E_tau > 0 else 0.0
    p_upper = (E_R + total) / E_tau_lower if E_tau_lower > 0 else math.inf
    return CertificationReport(
        model_id=run.model,
        p_hat=p_hat,
        p_upper=p_upper,
        E_R_hat=E_R,
        E_tau_hat=E_tau,
        E_tau_lower=E_tau_lower,
        budget=budget,
        certified=False,
        k_target=None,
        alpha_Q=alpha,
        mode=mode,
        cycles_numerator=cycles_num,
        cycles_denominator=run.denominator_cycles,
        queries_numerator=queries,
        plan=plan.to_dict(),
        numerator_estimate=numerator.to_dict() if numerator is not None else None,
    )


def certify(
    run: RunConfig,
    k: int,
    alpha_Q: Optional[float] = None,
    mode: Optional[str] = None,
    quiet: bool = True,
) -> CertificationReport:
    """Certify p_d <= 10^-k at accuracy eps_tot = 10^(-k-2)."""
    require(k >= 1, "k must be at least 1", k=k)
    report = estimate_tail_probability(run, 10.0 ** (-k - 2), alpha_Q, mode, quiet=quiet)
    return replace(report, certified=report.p_upper <= 10.0**-k, k_target=k)


# ---------------------------------------------------------------------------
# Bound verification
# ---------------------------------------------------------------------------


def _planned_params(run: RunConfig) -> tuple[HorizonPlan, ModelParams]:
    plan = plan_model(run)
    return plan, with_horizon(run, plan)


def _tail_rate(run: RunConfig, plan: HorizonPlan) -> tuple[float, float]:
    if run.model == "gg1":
        return 1.0, plan.drift["beta"]
    if run.model == "maxweight":
        return plan.drift["prefactor"], plan.drift["eta_rate"]
    return plan.drift["tail_C"], plan.drift["tail_c"]


def _survival_grid(max_value: int, grid_points: int) -> list[int]:
    if max_value < 1:
        return [1]
    return sorted({int(t) for t in np.linspace(1, max_value, num=min(grid_points, max_value))})


def verify_regeneration_tail(
    run: RunConfig,
    rate: Optional[tuple[float, float]] = None,
    n_cycles: int = config.DEFAULT_VERIFY_CYCLES,
    grid_points: int = config.TAIL_GRID_POINTS,
) -> BoundCheckReport:
    """Check P(tau > t) <= C e^{-r t} on a grid of t.

    A point is violated when the Clopper-Pearson lower limit of the empirical
    survival (level BOUND_CHECK_LEVEL / grid size) lies above the bound; the
    reported slack is empirical minus that limit.
    """
    plan, params = _planned_params(run)
    C, r = rate if rate is not None else _tail_rate(run, plan)
    counts = map_cycles(
        partial(cycle_counts, model=run.model, params=params, full=True, safety_cap=run.safety_cap),
        run.master_seed,
        0,
        n_cycles,
        run.threads,
        run.bit_width,
    )
    taus = np.array([c[2] for c in counts], dtype=np.int64)
    grid = _survival_grid(int(taus.max()), grid_points)
    level = config.BOUND_CHECK_LEVEL / len(grid)
    points = []
    for t in grid:
        exceed = int(np.count_nonzero(taus > t))
        empirical = exceed / n_cycles
        points.append(BoundPoint(t, empirical, min(1.0, C * math.exp(-r * t)), empirical - cp_lower(exceed, n_cycles, level)))
    violated = any(p.empirical - p.slack > p.bound for p in points)
    return BoundCheckReport(
        "regeneration_tail",
        points,
        violated,
        {"prefactor": C, "rate": r, "n_cycles": n_cycles, "max_tau": int(taus.max())},
    )


def verify_truncation_bias(
    run: RunConfig,
    M: Optional[int] = None,
    n_cycles: int = config.DEFAULT_VERIFY_CYCLES,
) -> BoundCheckReport:
    """Coupled full vs truncated cycles: 0 <= mean(R - R_M) <= bound + slack, and R >= R_M pointwise.

    GI/GI/1 and MaxWeight only; JSQ uses jsq_truncation_bias_estimate.
    """
    require(run.model in ("gg1", "maxweight"), "truncation bias check covers gg1 and maxweight", model=run.model)
    plan, params = _planned_params(run)
    M = plan.M if M is None else M
    params = replace(params, horizon_M=M)
    pairs = map_cycles(
        partial(_coupled_truncation, model=run.model, params=params, safety_cap=run.safety_cap),
        run.master_seed,
        0,
        n_cycles,
        run.threads,
        run.bit_width,
    )
    diff = np.array([full - truncated for full, truncated in pairs], dtype=np.float64)
    if run.model == "gg1":
        bound = planner.truncation_bias_bound(plan.drift["beta"], M)
    else:
        bound = planner.maxweight_truncation_bound(
            plan.drift["eta_rate"], plan.drift["prefactor"], M, len(params.subset_I) * params.A_max
        )
    mean = float(diff.mean())
    slack = _one_sided_slack(diff, config.BOUND_CHECK_LEVEL)
    pointwise = bool(np.all(diff >= 0))
    return BoundCheckReport(
        "truncation_bias",
        [BoundPoint(M, mean, bound, slack)],
        (not pointwise) or mean - slack > bound,
        {"pointwise_ok": pointwise, "n_cycles": n_cycles, "cycles_differing": int(np.count_nonzero(diff))},
    )


def verify_clipping_bias(
    run: RunConfig,
    B: Optional[float] = None,
    M: Optional[int] = None,
    n_cycles: int = config.DEFAULT_VERIFY_CYCLES,
) -> BoundCheckReport:
    """Clipped vs unclipped GI/GI/1 on shared draws: |mean(R_M - R_M^(B))| <= M^2 (P(A>B) + P(S>B)) + slack."""
    require(run.model == "gg1", "clipping bias check covers gg1", model=run.model)
    plan, params = _planned_params(run)
    B = plan.clip_level_B if B is None else B
    require(B is not None, "no clip level configured or planned")
    M = plan.M if M is None else M
    clipped = replace(params, clip=ClipSpec.at(B), horizon_M=M)
    unclipped = replace(params, clip=ClipSpec.off(), horizon_M=M)
    pairs = map_cycles(
        partial(_coupled_clipping, clipped=clipped, unclipped=unclipped),
        run.master_seed,
        0,
        n_cycles,
        run.threads,
        run.bit_width,
    )
    diff = np.array([raw - clip for raw, clip in pairs], dtype=np.float64)
    bound = clipping_bias_bound(M, survival(params.arrival, B), survival(params.service, B))
    gap = abs(float(diff.mean()))
    slack = _one_sided_slack(diff, config.BOUND_CHECK_LEVEL / 2.0)
    return BoundCheckReport(
        "clipping_bias",
        [BoundPoint(M, gap, bound, slack)],
        gap - slack > bound,
        {"clip_level_B": B, "n_cycles": n_cycles, "cycles_differing": int(np.count_nonzero(diff))},
    )


def jsq_truncation_bias_estimate(
    run: RunConfig,
    R_A: Optional[int] = None,
    n_cycles: int = config.DEFAULT_VERIFY_CYCLES,
) -> BoundCheckReport:
    """Arrival-cap bias: direct E[N_A 1{N_A > R_A}] against its Cauchy-Schwarz surrogate.

    Two points are reported. The first compares the coupled full/capped
    violation gap with the direct estimate; the second compares the direct
    estimate with sqrt(E[N_A^2] P(N_A > R_A)).
    """
    require(run.model == "jsq", "arrival-cap bias check covers jsq", model=run.model)
    plan, params = _planned_params(run)
    R_A = plan.M if R_A is None else R_A
    params = replace(params, arrival_cap_R_A=R_A)
    triples = map_cycles(
        partial(_jsq_cap_triple, params=params, safety_cap=run.safety_cap),
        run.master_seed,
        0,
        n_cycles,
        run.threads,
        run.bit_width,
    )
    J_full = np.array([t[0] for t in triples], dtype=np.float64)
    N = np.array([t[1] for t in triples], dtype=np.float64)
    J_cap = np.array([t[2] for t in triples], dtype=np.float64)
    over = N > R_A
    excess = N * over
    direct = float(excess.mean())
    surrogate = math.sqrt(float(np.mean(N * N)) * float(over.mean()))
    gap_values = J_full - J_cap
    gap = abs(float(gap_values.mean()))
    gap_slack = _one_sided_slack(gap_values, config.BOUND_CHECK_LEVEL / 2.0)
    direct_slack = _one_sided_slack(excess, config.BOUND_CHECK_LEVEL)
    pointwise = bool(np.all(np.abs(gap_values) <= excess))
    points = [
        BoundPoint(R_A, gap, direct, gap_slack + direct_slack),
        BoundPoint(R_A, direct, surrogate, 0.0),
    ]
    ordering_ok = direct <= surrogate * (1.0 + 1e-12)
    decay = count_decay_check(run, plan, N, np.array([t[3] for t in triples], dtype=np.float64))
    return BoundCheckReport(
        "arrival_cap_bias",
        points,
        (not ordering_ok) or (not pointwise) or gap - points[0].slack > direct or decay.get("decay_ok") is False,
        {
            "cauchy_schwarz_ok": ordering_ok,
            "pointwise_ok": pointwise,
            "n_cycles": n_cycles,
            "max_N_A": int(N.max()),
            "planned_bound": planner.arrival_cap_bias_bound(R_A, plan.drift["tail_C"], plan.drift["tail_c"]),
            **decay,
        },
    )


def count_decay_check(
    run: RunConfig,
    plan: HorizonPlan,
    counts: Sequence[float],
    cycle_times: Sequence[float],
) -> dict[str, Any]:
    """Empirical decay of P(N_A > m) against the Chernoff rate min(gamma alpha, I(alpha)).

    The cycle-time tail (c0, gamma) comes from the config or is fitted to
    `cycle_times`; alpha is the planner's when it chose one. Since the Chernoff
    rate is a lower bound on the decay, the fitted count slope must not fall
    below it by more than DECAY_TOLERANCE. Returns empty when either tail has
    too few populated points to fit.
    """
    count_fit = _try_fit_tail(counts)
    cycle_tail = run.jsq_cycle_tail or _try_fit_tail(cycle_times)
    if count_fit is None or cycle_tail is None:
        return {}
    c0, gamma = cycle_tail
    alpha = plan.drift.get("chernoff_alpha") or planner.choose_chernoff_alpha(run.params.lam, gamma)
    rate = min(gamma * alpha, planner.poisson_chernoff_rate(run.params.lam, alpha))
    return {
        "count_decay": count_fit[1],
        "chernoff_alpha": alpha,
        "chernoff_rate": rate,
        "cycle_tail": [c0, gamma],
        "decay_ok": count_fit[1] >= rate * (1.0 - config.DECAY_TOLERANCE),
    }


def verify_jsq_clipping_bias(run: RunConfig, n_cycles: int = config.DEFAULT_VERIFY_CYCLES) -> BoundCheckReport:
    """Clipped vs unclipped Nummelin cycles on shared draws.

    Checks |mean(J - J^(B))| <= mean((N_A + N_A^(B)) 1{clipping mattered}) + slack,
    and that cycles where clipping never mattered agree exactly.
    """
    require(run.model == "jsq", "JSQ clipping bias check covers jsq", model=run.model)
    _, params = _planned_params(run)
    rows = map_cycles(
        partial(_jsq_clip_pair, params=params, safety_cap=run.safety_cap),
        run.master_seed,
        0,
        n_cycles,
        run.threads,
        run.bit_width,
    )
    J_B = np.array([r[0] for r in rows], dtype=np.float64)
    N_B = np.array([r[1] for r in rows], dtype=np.float64)
    J = np.array([r[2] for r in rows], dtype=np.float64)
    N = np.array([r[3] for r in rows], dtype=np.float64)
    mattered = np.array([r[4] for r in rows], dtype=bool)
    coupled = bool(np.all((J == J_B)[~mattered]) and np.all((N == N_B)[~mattered]))
    gap_values = J - J_B
    envelope = (N + N_B) * mattered
    gap = abs(float(gap_values.mean()))
    bound = float(envelope.mean())
    slack = _one_sided_slack(gap_values, config.BOUND_CHECK_LEVEL / 2.0) + _one_sided_slack(
        envelope, config.BOUND_CHECK_LEVEL
    )
    return BoundCheckReport(
        "jsq_clipping_bias",
        [BoundPoint(params.clip_B, gap, bound, slack)],
        (not coupled) or gap - slack > bound,
        {"coupling_ok": coupled, "n_cycles": n_cycles, "cycles_clipped": int(mattered.sum())},
    )


def fit_exponential_tail(
    samples: Sequence[float],
    grid: Optional[Sequence[int]] = None,
    min_count: int = config.MIN_TAIL_COUNT,
) -> tuple[float, float]:
    """Envelope fit P(X > m) <= C e^{-c m}, evaluated on an integer grid.

    The rate c is the negated least-squares slope of log survival over grid
    points where at least `min_count` samples exceed m; C is then the
    smallest prefactor covering every empirical survival value on the grid.
    Samples may be counts or continuous times.
    """
    x = np.asarray(samples, dtype=np.float64)
    require(x.size > 0, "no samples to fit")
    if grid is None:
        grid = range(0, int(x.max()) + 1)
    n = x.size
    ms, logs, surv = [], [], []
    for m in grid:
        exceed = int(np.count_nonzero(x > m))
        if exceed >= min_count:
            ms.append(m)
            surv.append(exceed / n)
            logs.append(math.log(exceed / n))
    require(len(ms) >= 2, "too few populated survival points to fit a tail", points=len(ms))
    slope = float(np.polyfit(np.asarray(ms, dtype=np.float64), np.asarray(logs), 1)[0])
    require(slope < 0, "empirical survival does not decay", slope=slope)
    c = -slope
    C = max(s * math.exp(c * m) for m, s in zip(ms, surv))
    return C, c


def nummelin_acceptance(run: RunConfig, n_cycles: int = config.DEFAULT_VERIFY_CYCLES) -> NummelinReport:
    """Splitting success frequency against delta = eps lambda e^{-lambda eps}."""
    require(run.model == "jsq", "Nummelin acceptance covers jsq", model=run.model)
    _, params = _planned_params(run)
    rows = map_cycles(
        partial(_jsq_split_counts, params=params, safety_cap=run.safety_cap),
        run.master_seed,
        0,
        n_cycles,
        run.threads,
        run.bit_width,
    )
    tests = sum(r[0] for r in rows)
    successes = sum(r[1] for r in rows)
    delta = params.delta
    require(tests > 0, "no splitting tests were performed")
    sigma = math.sqrt(delta * (1.0 - delta) / tests)
    frequency = successes / tests
    return NummelinReport(
        tests=tests,
        successes=successes,
        frequency=frequency,
        delta=delta,
        sigma=sigma,
        within_band=abs(frequency - delta) <= config.CONSISTENCY_SIGMAS * sigma,
    )


def ratio_consistency(
    run: RunConfig,
    n_cycles: int = config.DEFAULT_VERIFY_CYCLES,
    n_long: int = config.DEFAULT_LONG_RUN,
) -> ConsistencyReport:
    """Cycle-ratio estimate of p_d against a single long-run time average.

    The cycle estimate is sum(J) / sum(N) over full cycles, with the delta
    method standard error; the long run reports batch means.
    """
    _, params = _planned_params(run)
    rows = map_cycles(
        partial(_ratio_pair, model=run.model, params=params, safety_cap=run.safety_cap),
        run.master_seed,
        0,
        n_cycles,
        run.threads,
        run.bit_width,
    )
    J = np.array([r[0] for r in rows], dtype=np.float64)
    N = np.array([r[1] for r in rows], dtype=np.float64)
    p = float(J.sum() / N.sum())
    residual = J - p * N
    se = float(residual.std(ddof=1) / (math.sqrt(n_cycles) * N.mean()))

    stream = fork_cycle(run.master_seed, config.LONG_RUN_STREAM_OFFSET, run.bit_width)
    simulate = {"gg1": gg1.simulate_time_average, "maxweight": maxweight.simulate_time_average}.get(
        run.model, jsq.simulate_time_average
    )
    long_run = simulate(params, n_long, stream)
    overlap = abs(p - long_run.estimate) <= config.CONSISTENCY_SIGMAS * (se + long_run.std_error)
    return ConsistencyReport(run.model, p, se, long_run.estimate, long_run.std_error, overlap)


def estimate_emptying_probability(
    run: RunConfig,
    m_attempt: int,
    n_visits: int,
    level: Optional[float] = None,
    weights: Optional[Sequence[float]] = None,
) -> EmptyingEstimate:
    """Lower confidence bound on P(empty within m slots) from states in C = {q : L(q) <= level}.

    One trajectory is run from the empty state until `n_visits` slots have
    been spent in C, then extended by m_attempt slots so every visit has a
    full look-ahead window. Visits are grouped by entry state; the estimate
    is the smallest Clopper-Pearson lower limit over states seen at least
    MIN_GROUP_VISITS times, Bonferroni-corrected over those states. Because
    the visit set does not depend on m_attempt, the estimate is
    nondecreasing in m_attempt.

    Raises:
        InsufficientVisits: Fewer than MIN_EMPTYING_VISITS visits to C, or
            no state visited often enough to form a group.
    """
    require(run.model == "maxweight", "emptying probability covers maxweight", model=run.model)
    require(m_attempt >= 1, "m_attempt must be at least 1", m_attempt=m_attempt)
    require(n_visits >= 1, "n_visits must be at least 1", n_visits=n_visits)
    params = run.params
    if level is None:
        level = run.certificate.drift_set_level if run.certificate else 0.0
    if weights is None and run.certificate is not None:
        weights = run.certificate.weights

    max_slots = n_visits * config.MAX_SLOTS_PER_VISIT
    chain = maxweight.WirelessChain(params, (max_slots + m_attempt) * params.A_max)
    stream = fork_cycle(run.master_seed, config.EMPTYING_STREAM_OFFSET, run.bit_width)
    states: list[tuple[int, ...]] = [tuple(chain.queues)]
    visits: list[int] = []
    while len(visits) < n_visits and chain.t < max_slots:
        if maxweight.weighted_queue_sum(states[-1], weights) <= level:
            visits.append(chain.t)
        chain.step(stream)
        states.append(tuple(chain.queues))
    if len(visits) < config.MIN_EMPTYING_VISITS:
        raise InsufficientVisits(
            f"only {len(visits)} visits to the drift set in {chain.t} slots",
            {"visits": len(visits), "slots": chain.t, "level": level},
        )
    for _ in range(m_attempt):
        chain.step(stream)
        states.append(tuple(chain.queues))

    # next_empty[t]: first slot s > t at which every queue is empty
    next_empty = [math.inf] * len(states)
    upcoming = math.inf
    for t in range(len(states) - 1, -1, -1):
        next_empty[t] = upcoming
        if not any(states[t]):
            upcoming = t

    groups: dict[tuple[int, ...], list[int]] = defaultdict(lambda: [0, 0])
    for t in visits:
        group = groups[states[t]]
        group[0] += 1
        group[1] += next_empty[t] <= t + m_attempt
    populated = {state: g for state, g in groups.items() if g[0] >= config.MIN_GROUP_VISITS}
    if not populated:
        raise InsufficientVisits(
            "no drift-set state was visited often enough",
            {"visits": len(visits), "states": len(groups), "min_group": config.MIN_GROUP_VISITS},
        )
    alpha = config.BOUND_CHECK_LEVEL / len(populated)
    p_lower = min(cp_lower(s, n, alpha) for n, s in populated.values())
    return EmptyingEstimate(
        p_hat_lower=p_lower,
        visits=len(visits),
        states=len(populated),
        slots=chain.t,
        level=level,
    )
