"""Drift constants, truncation horizons and error-budget planning.

Everything here is a pure function of its inputs. A plan fixes the
truncation horizon (M slots/arrivals, or the JSQ arrival cap R_A), the
accuracy eps_Q asked of amplitude estimation, and the bound values that make
up the error budget: truncation + clipping + M * eps_Q <= eps_tot.
"""

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, Literal, Optional

from scipy import optimize

from . import distributions
from .distributions import ClipSpec, TailClass
from .errors import InvalidAlpha, PlanningError, RateDegenerate, UnstableModel, require
from .gg1 import Gg1Params
from .jsq import JsqParams

MAX_PLAN_ITERATIONS = 64
MAX_HORIZON = 1 << 40


@dataclass(frozen=True)
class DriftConstants:
    delta: float
    beta: float
    source: Literal["bounded", "clipped", "configured"] = "bounded"


@dataclass(frozen=True)
class MaxWeightDriftSpec:
    """Drift certificate for MaxWeight plus the derived exponential-tail rate.

    eps_drift, nu, m_attempt and p_empty are user-supplied. kappa and theta
    follow from eps_drift and nu; eta_star, eta_rate and prefactor are filled
    in by solve_eta.
    """

    eps_drift: float
    nu: float
    m_attempt: int
    p_empty: float
    kappa: float = 0.0
    theta: float = 0.0
    eta_star: float = 0.0
    eta_rate: float = 0.0
    prefactor: float = 0.0

    @classmethod
    def certify(cls, eps_drift: float, nu: float, m_attempt: int, p_empty: float) -> "MaxWeightDriftSpec":
        theta, kappa = hajek_constants(eps_drift, nu)
        return cls(eps_drift, nu, m_attempt, p_empty, kappa=kappa, theta=theta)


@dataclass(frozen=True)
class HorizonPlan:
    M: int
    eps_tot: float
    eps_Q: float
    delta_Q: float
    trunc_bound: float
    clip_bound: float
    budget_ok: bool
    model: str = "gg1"
    clip_level_B: Optional[float] = None
    drift: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def beta_bounded(A_max: float, S_max: float, mean_A: float, mean_S: float) -> DriftConstants:
    """Hoeffding rate beta = 2 * Delta^2 / (A_max + S_max)^2 for Delta = E[A] - E[S].

    Raises:
        UnstableModel: Delta <= 0.
    """
    require(A_max > 0 and S_max > 0, "A_max and S_max must be positive", A_max=A_max, S_max=S_max)
    require(0 <= mean_A <= A_max, "mean_A must lie in [0, A_max]", mean_A=mean_A, A_max=A_max)
    require(0 <= mean_S <= S_max, "mean_S must lie in [0, S_max]", mean_S=mean_S, S_max=S_max)
    delta = mean_A - mean_S
    if delta <= 0:
        raise UnstableModel(
            "stability slack E[A] - E[S] is not positive",
            {"mean_A": mean_A, "mean_S": mean_S, "delta": delta},
        )
    return DriftConstants(delta=delta, beta=2.0 * delta * delta / (A_max + S_max) ** 2)


def beta_clipped(clip_level: float, mean_A: float, mean_S: float) -> DriftConstants:
    """beta_B = 2 * (Delta^(B))^2 / (2B)^2 from clipped means."""
    constants = beta_bounded(clip_level, clip_level, mean_A, mean_S)
    return replace(constants, source="clipped")


def truncation_bias_bound(beta: float, M: int) -> float:
    """e^{-beta M} / (1 - e^{-beta})."""
    require(beta > 0, "beta must be positive", beta=beta)
    require(M >= 1, "M must be at least 1", M=M)
    return math.exp(-beta * M) / -math.expm1(-beta)


def choose_horizon(beta: float, eps_tot: float) -> int:
    """Smallest M of the form ceil((1/beta) ln(4 / (beta eps_tot))) with e^{-beta M} <= beta eps_tot / 4."""
    require(beta > 0, "beta must be positive", beta=beta)
    require(0 < eps_tot < 4, "eps_tot must be positive and below 4", eps_tot=eps_tot)
    target = beta * eps_tot / 4.0
    M = max(1, math.ceil(math.log(4.0 / (beta * eps_tot)) / beta - 1e-9))
    # rounding guard; never moves M past the closed form by more than a step
    while math.exp(-beta * M) > target * (1.0 + 1e-12):
        M += 1
    # only binds for beta above ~1.59, where 1 - e^{-beta} < beta / 2
    while truncation_bias_bound(beta, M) > eps_tot / 2.0:
        M += 1
    return M


def allocate_qae_accuracy(eps_tot: float, M: int) -> float:
    require(M >= 1, "M must be at least 1", M=M)
    return eps_tot / (2.0 * M)


def hajek_constants(eps_drift: float, nu: float) -> tuple[float, float]:
    """Return (theta, kappa) = (eps / nu^2, eps^2 / (2 nu^2))."""
    require(eps_drift > 0, "eps_drift must be positive", eps_drift=eps_drift)
    require(nu > 0, "nu must be positive", nu=nu)
    return eps_drift / nu**2, eps_drift**2 / (2.0 * nu**2)


def _emptying_denominator(spec: MaxWeightDriftSpec, eta: float) -> float:
    m = spec.m_attempt
    return 1.0 - (1.0 - spec.p_empty) * math.exp(eta * m * (1.0 + spec.theta * spec.nu / spec.kappa))


def solve_eta(spec: MaxWeightDriftSpec) -> MaxWeightDriftSpec:
    """Fill in eta_star, eta_rate = min(kappa, eta_star) / 2 and the tail prefactor.

    eta_star solves (1 - p) e^{eta m} e^{(eta / kappa) theta m nu} = 1, which is
    linear in eta after taking logs. The prefactor is
    e^{eta m} / (1 - (1 - p) e^{eta m (1 + theta nu / kappa)}) at eta_rate.

    Raises:
        RateDegenerate: The prefactor's denominator is not positive.
    """
    require(0 < spec.p_empty <= 1, "p_empty must lie in (0, 1]", p_empty=spec.p_empty)
    require(spec.m_attempt >= 1, "m_attempt must be at least 1", m_attempt=spec.m_attempt)
    require(spec.kappa > 0 and spec.theta > 0 and spec.nu > 0, "kappa, theta and nu must be set")
    growth = spec.m_attempt * (1.0 + spec.theta * spec.nu / spec.kappa)
    if spec.p_empty >= 1.0:
        eta_star = math.inf
    else:
        eta_star = -math.log1p(-spec.p_empty) / growth
    eta_rate = min(spec.kappa, eta_star) / 2.0
    denominator = _emptying_denominator(spec, eta_rate)
    if denominator <= 0:
        raise RateDegenerate(
            "exponential-moment denominator is not positive at eta_rate",
            {"eta_rate": eta_rate, "denominator": denominator},
        )
    prefactor = math.exp(eta_rate * spec.m_attempt) / denominator
    return replace(spec, eta_star=eta_star, eta_rate=eta_rate, prefactor=prefactor)


def poisson_chernoff_rate(lam: float, alpha: float) -> float:
    """I(alpha) = ln(1 / (lambda alpha)) - (1 - lambda alpha).

    Raises:
        InvalidAlpha: lambda * alpha is not in (0, 1).
    """
    x = lam * alpha
    if not 0 < x < 1:
        raise InvalidAlpha("Chernoff rate needs 0 < lambda * alpha < 1", {"lam": lam, "alpha": alpha})
    return -math.log(x) - (1.0 - x)


def choose_chernoff_alpha(lam: float, gamma: float) -> float:
    """The alpha in (0, 1/lambda) maximizing min(gamma * alpha, I(alpha)).

    gamma * alpha increases and I(alpha) decreases on that interval, so the
    optimum is where they cross.
    """
    require(lam > 0 and gamma > 0, "lambda and gamma must be positive", lam=lam, gamma=gamma)
    hi = 1.0 / lam
    lo = hi * 1e-12
    return optimize.brentq(lambda a: gamma * a - poisson_chernoff_rate(lam, a), lo, hi * (1.0 - 1e-12), xtol=1e-15)


def arrival_count_tail_bound(m: int, c0: float, gamma: float, lam: float, alpha: float) -> float:
    """P(N_A > m) <= c0 e^{-gamma alpha m} + e^{-I(alpha) m}."""
    return c0 * math.exp(-gamma * alpha * m) + math.exp(-poisson_chernoff_rate(lam, alpha) * m)


def clipping_event_bound(m: int, p_A: float, p_S: float, count_tail: float) -> float:
    """P(clipping ever matters) <= m (P(A > B) + P(S > B)) + P(N_A > m), capped at 1."""
    return min(1.0, m * (p_A + p_S) + count_tail)


def arrival_cap_bias_bound(R_A: int, C: float, c: float) -> float:
    """E[N 1{N > R_A}] for an integer N with P(N > m) <= C e^{-c m}."""
    require(R_A >= 0, "R_A must be nonnegative", R_A=R_A)
    require(C > 0 and c > 0, "tail constants must be positive", C=C, c=c)
    tail = C * math.exp(-c * R_A)
    return (R_A + 1) * tail + C * math.exp(-c * (R_A + 1)) / -math.expm1(-c)


def maxweight_truncation_bound(eta: float, prefactor: float, M: int, arrival_scale: float = 1.0) -> float:
    """scale * C e^{-eta M} (M + 1 / (1 - e^{-eta})), bounding E[N 1{tau > M}]."""
    require(eta > 0, "eta must be positive", eta=eta)
    return arrival_scale * prefactor * math.exp(-eta * M) * (M + 1.0 / -math.expm1(-eta))


def _smallest_passing(bound, target: float) -> int:
    """Smallest integer n >= 1 with bound(n) <= target, for bound nonincreasing past its peak."""
    hi = 1
    while bound(hi) > target:
        hi *= 2
        if hi > MAX_HORIZON:
            raise PlanningError("no horizon meets the truncation budget", {"target": target})
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if bound(mid) <= target:
            hi = mid
        else:
            lo = mid
    return hi


def _clip_level_for(tails: tuple[TailClass, TailClass], M: int, eps_clip: float) -> float:
    return max(distributions.clip_level(tail, M, eps_clip) for tail in tails)


def plan_gg1(
    params: Gg1Params,
    tails: Optional[tuple[TailClass, TailClass]],
    eps_tot: float,
    alpha_Q: float,
    beta: Optional[float] = None,
) -> HorizonPlan:
    """Plan the GI/GI/1 horizon.

    With bounded inputs and no clipping the budget is split in two:
    truncation <= eps_tot / 2 and QAE <= eps_tot / 2. When clipping is needed
    it is split as truncation eps_tot / 4, clipping eps_tot / 4 and QAE
    eps_tot / 4, so eps_Q = eps_tot / (4M). A clip level fixed in `params`
    is used as given; otherwise B is chosen per tail class and M and B are
    iterated to a fixed point.

    Args:
        beta: A known drift rate. Replaces the Hoeffding rate; the stability
            slack is still checked.
    """
    require(0 < eps_tot < 1, "eps_tot must lie in (0, 1)", eps_tot=eps_tot)
    require(0 < alpha_Q < 1, "alpha_Q must lie in (0, 1)", alpha_Q=alpha_Q)
    require(beta is None or beta > 0, "beta must be positive", beta=beta)
    if tails is None:
        tails = (distributions.default_tail(params.arrival), distributions.default_tail(params.service))
    tail_A, tail_S = tails

    def configured_drift(mean_A: float, mean_S: float) -> DriftConstants:
        delta = mean_A - mean_S
        if delta <= 0:
            raise UnstableModel(
                "stability slack E[A] - E[S] is not positive",
                {"mean_A": mean_A, "mean_S": mean_S, "delta": delta},
            )
        return DriftConstants(delta=delta, beta=beta, source="configured")

    if not params.clip.enabled and tail_A.kind == "bounded" and tail_S.kind == "bounded":
        mean_A = distributions.mean(params.arrival)
        mean_S = distributions.mean(params.service)
        if beta is not None:
            drift = configured_drift(mean_A, mean_S)
        else:
            drift = beta_bounded(tail_A.max_value, tail_S.max_value, mean_A, mean_S)
        M = choose_horizon(drift.beta, eps_tot)
        eps_Q = allocate_qae_accuracy(eps_tot, M)
        trunc = truncation_bias_bound(drift.beta, M)
        return HorizonPlan(
            M=M,
            eps_tot=eps_tot,
            eps_Q=eps_Q,
            delta_Q=alpha_Q,
            trunc_bound=trunc,
            clip_bound=0.0,
            budget_ok=trunc + M * eps_Q <= eps_tot,
            model="gg1",
            drift=asdict(drift),
        )

    def clipped_drift(B: float) -> DriftConstants:
        clip = ClipSpec.at(B)
        mean_A = distributions.mean(params.arrival, clip)
        mean_S = distributions.mean(params.service, clip)
        if beta is not None:
            return configured_drift(mean_A, mean_S)
        return beta_clipped(B, mean_A, mean_S)

    if params.clip.enabled:
        B = params.clip.level_B
        drift = clipped_drift(B)
        M = choose_horizon(drift.beta, eps_tot / 2.0)
    else:
        M = 1
        for _ in range(MAX_PLAN_ITERATIONS):
            B = _clip_level_for(tails, M, eps_tot / 4.0)
            drift = clipped_drift(B)
            M_next = choose_horizon(drift.beta, eps_tot / 2.0)
            if M_next <= M:
                break
            M = M_next
        else:
            raise PlanningError("clip level and horizon did not settle", {"M": M, "eps_tot": eps_tot})

    clip_bound = distributions.clipping_bias_bound(
        M,
        distributions.survival(params.arrival, B),
        distributions.survival(params.service, B),
    )
    eps_Q = eps_tot / (4.0 * M)
    trunc = truncation_bias_bound(drift.beta, M)
    return HorizonPlan(
        M=M,
        eps_tot=eps_tot,
        eps_Q=eps_Q,
        delta_Q=alpha_Q,
        trunc_bound=trunc,
        clip_bound=clip_bound,
        budget_ok=trunc + clip_bound + M * eps_Q <= eps_tot,
        model="gg1",
        clip_level_B=B,
        drift=asdict(drift),
    )


def plan_at_horizon(
    plan: HorizonPlan,
    M: int,
    trunc_bound: float,
    clip_bound: Optional[float] = None,
) -> HorizonPlan:
    """Re-express a plan at a configured horizon, keeping the QAE share of the budget."""
    require(M >= 1, "M must be at least 1", M=M)
    eps_Q = plan.eps_Q * plan.M / M
    clip = plan.clip_bound if clip_bound is None else clip_bound
    return replace(
        plan,
        M=M,
        eps_Q=eps_Q,
        trunc_bound=trunc_bound,
        clip_bound=clip,
        budget_ok=trunc_bound + clip + M * eps_Q <= plan.eps_tot,
    )


def plan_maxweight(
    drift: MaxWeightDriftSpec,
    eps_tot: float,
    alpha_Q: float,
    arrival_scale: float = 1.0,
) -> HorizonPlan:
    """Horizon M with maxweight_truncation_bound(M) <= eps_tot / 2 and eps_Q = eps_tot / (2M)."""
    require(0 < eps_tot < 1, "eps_tot must lie in (0, 1)", eps_tot=eps_tot)
    require(0 < alpha_Q < 1, "alpha_Q must lie in (0, 1)", alpha_Q=alpha_Q)
    if drift.eta_rate <= 0:
        drift = solve_eta(drift)

    def bound(M: int) -> float:
        return maxweight_truncation_bound(drift.eta_rate, drift.prefactor, M, arrival_scale)

    M = _smallest_passing(bound, eps_tot / 2.0)
    eps_Q = allocate_qae_accuracy(eps_tot, M)
    trunc = bound(M)
    return HorizonPlan(
        M=M,
        eps_tot=eps_tot,
        eps_Q=eps_Q,
        delta_Q=alpha_Q,
        trunc_bound=trunc,
        clip_bound=0.0,
        budget_ok=trunc + M * eps_Q <= eps_tot,
        model="maxweight",
        drift=asdict(drift),
    )


def check_jsq_stability(params: JsqParams) -> tuple[float, float]:
    """Return the clipped rates (lambda_B, mu_B) after checking lambda_B < K mu_B.

    Raises:
        UnstableModel: The clipped system is overloaded.
    """
    clip = params.clip
    arrival = distributions.DistSpec.exponential(params.lam)
    lam_B = 1.0 / distributions.mean(arrival, clip)
    mean_S = distributions.mean(params.service, clip)
    mu_B = math.inf if mean_S == 0 else 1.0 / mean_S
    if not lam_B < params.K * mu_B:
        raise UnstableModel(
            "clipped arrival rate is not below total clipped service rate",
            {"lambda_B": lam_B, "mu_B": mu_B, "K": params.K},
        )
    return lam_B, mu_B


@dataclass(frozen=True)
class ChernoffCountTail:
    """P(N_A > m) <= c0 e^{-gamma alpha m} + e^{-I(alpha) m} <= (c0 + 1) e^{-rate m}."""

    c0: float
    gamma: float
    lam: float
    alpha: float
    rate: float

    @classmethod
    def from_cycle_tail(cls, lam: float, cycle_tail: tuple[float, float]) -> "ChernoffCountTail":
        """Build from a regeneration-time tail P(tau > t) <= c0 e^{-gamma t}."""
        c0, gamma = cycle_tail
        alpha = choose_chernoff_alpha(lam, gamma)
        rate = min(gamma * alpha, poisson_chernoff_rate(lam, alpha))
        return cls(c0=c0, gamma=gamma, lam=lam, alpha=alpha, rate=rate)

    def bound(self, m: int) -> float:
        return arrival_count_tail_bound(m, self.c0, self.gamma, self.lam, self.alpha)

    def envelope(self) -> tuple[float, float]:
        return self.c0 + 1.0, self.rate


def jsq_clipping_event_bound(params: JsqParams, count_tail: Callable[[int], float], max_m: int) -> tuple[float, int]:
    """Smallest clipping_event_bound over m = 1..max_m, with the m attaining it."""
    p_A = math.exp(-params.lam * params.clip_B)
    p_S = distributions.survival(params.service, params.clip_B)
    best, best_m = 1.0, 1
    for m in range(1, max_m + 1):
        value = clipping_event_bound(m, p_A, p_S, min(1.0, count_tail(m)))
        if value < best:
            best, best_m = value, m
    return best, best_m


def plan_jsq(
    params: JsqParams,
    eps_tot: float,
    alpha_Q: float,
    tail: Optional[tuple[float, float]] = None,
    cycle_tail: Optional[tuple[float, float]] = None,
) -> HorizonPlan:
    """Arrival cap R_A from a tail P(N_A > m) <= C e^{-c m}.

    The arrival-count tail is either given directly or derived from a
    regeneration-time tail P(tau > t) <= c0 e^{-gamma t}: alpha is chosen by
    choose_chernoff_alpha and the count decays at min(gamma alpha, I(alpha)).
    The cap takes eps_tot / 2 and QAE the rest, with eps_Q = eps_tot / (2 R_A).
    The clipping bias has no closed form here and is measured by the harness;
    the plan reports the bound on the probability that clipping binds.
    """
    require(0 < eps_tot < 1, "eps_tot must lie in (0, 1)", eps_tot=eps_tot)
    require(0 < alpha_Q < 1, "alpha_Q must lie in (0, 1)", alpha_Q=alpha_Q)
    require(tail is not None or cycle_tail is not None, "need an arrival-count tail or a cycle-time tail")
    lam_B, mu_B = check_jsq_stability(params)
    chernoff = ChernoffCountTail.from_cycle_tail(params.lam, cycle_tail) if cycle_tail is not None else None
    C, c = tail if tail is not None else chernoff.envelope()
    R_A = _smallest_passing(lambda r: arrival_cap_bias_bound(r, C, c), eps_tot / 2.0)
    eps_Q = allocate_qae_accuracy(eps_tot, R_A)
    trunc = arrival_cap_bias_bound(R_A, C, c)
    drift: dict[str, Any] = {
        "lambda_B": lam_B,
        "mu_B": mu_B,
        "delta": params.delta,
        "tail_C": C,
        "tail_c": c,
    }
    if chernoff is not None:
        drift.update(chernoff_alpha=chernoff.alpha, count_rate=chernoff.rate, cycle_tail_C=chernoff.c0)
        drift["cycle_tail_c"] = chernoff.gamma
    if params.clipping:
        count_tail = chernoff.bound if chernoff is not None else (lambda m: C * math.exp(-c * m))
        drift["clip_event_bound"], drift["clip_event_m"] = jsq_clipping_event_bound(params, count_tail, 4 * R_A)
    return HorizonPlan(
        M=R_A,
        eps_tot=eps_tot,
        eps_Q=eps_Q,
        delta_Q=alpha_Q,
        trunc_bound=trunc,
        clip_bound=0.0,
        budget_ok=trunc + R_A * eps_Q <= eps_tot,
        model="jsq",
        clip_level_B=params.clip_B if params.clipping else None,
        drift=drift,
    )
