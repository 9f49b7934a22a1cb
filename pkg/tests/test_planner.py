import math

import numpy as np
import pytest

from delaytail import planner
from delaytail.distributions import ClipSpec, DistSpec, TailClass
from delaytail.errors import InvalidAlpha, InvalidArgument, UnstableModel
from delaytail.gg1 import Gg1Params
from delaytail.jsq import JsqParams
from delaytail.planner import MaxWeightDriftSpec


def test_hoeffding_rate():
    drift = planner.beta_bounded(2.0, 1.0, 1.0, 0.6)
    assert drift.delta == pytest.approx(0.4)
    assert drift.beta == pytest.approx(0.03556, abs=1e-5)
    assert drift.source == "bounded"


def test_clipped_rate():
    drift = planner.beta_clipped(5.0, 1.3, 1.0)
    assert drift.beta == pytest.approx(0.0018)
    assert drift.source == "clipped"


def test_unstable_slack_rejected():
    with pytest.raises(UnstableModel) as excinfo:
        planner.beta_bounded(2.0, 2.0, 1.0, 1.0)
    assert excinfo.value.code == "UNSTABLE_MODEL"


def test_truncation_bias_bound():
    assert planner.truncation_bias_bound(math.log(2.0), 1) == pytest.approx(1.0)


def test_choose_horizon_closed_form():
    assert planner.choose_horizon(0.1, 1e-4) == 129


def test_choose_horizon_large_rate():
    assert planner.choose_horizon(1.0, 4.0 / math.e) == 1


@pytest.mark.parametrize("seed", range(5))
def test_choose_horizon_is_smallest_passing(seed):
    rng = np.random.default_rng(seed)
    for _ in range(40):
        beta = float(rng.uniform(1e-3, 3.0))
        eps = float(10 ** rng.uniform(-8, -1))
        M = planner.choose_horizon(beta, eps)
        assert math.exp(-beta * M) <= beta * eps / 4.0 * (1 + 1e-9)
        assert planner.truncation_bias_bound(beta, M) <= eps / 2.0
        if M > 1:
            shorter_fails = math.exp(-beta * (M - 1)) > beta * eps / 4.0
            assert shorter_fails or planner.truncation_bias_bound(beta, M - 1) > eps / 2.0


def test_qae_accuracy_share():
    assert planner.allocate_qae_accuracy(1e-4, 129) == pytest.approx(3.876e-7, rel=1e-3)


def test_plan_with_configured_beta():
    params = Gg1Params(DistSpec.deterministic(2.0), DistSpec.deterministic(1.0), threshold_d=1)
    plan = planner.plan_gg1(params, None, 1e-4, 0.05, beta=0.1)
    assert plan.M == 129
    assert plan.clip_bound == 0.0
    assert plan.budget_ok
    assert plan.drift["source"] == "configured"
    assert plan.trunc_bound <= 5e-5


def test_plan_bounded_budget():
    params = Gg1Params(DistSpec.discrete([0.0, 0.3, 0.4, 0.3]), DistSpec.discrete([0.2, 0.6, 0.2]), threshold_d=3)
    plan = planner.plan_gg1(params, None, 1e-3, 0.05)
    assert plan.drift["beta"] == pytest.approx(0.08)
    assert plan.trunc_bound <= plan.eps_tot / 2
    assert plan.eps_Q == pytest.approx(plan.eps_tot / (2 * plan.M))
    assert plan.budget_ok


def test_plan_clipped_budget():
    params = Gg1Params(DistSpec.exponential(0.5), DistSpec.exponential(1.0), threshold_d=4)
    tails = (TailClass.sub_exponential(1.0, 0.5), TailClass.sub_exponential(1.0, 1.0))
    plan = planner.plan_gg1(params, tails, 1e-2, 0.05)
    assert plan.clip_level_B is not None
    assert plan.trunc_bound <= plan.eps_tot / 4
    assert plan.clip_bound <= plan.eps_tot / 4
    assert plan.eps_Q == pytest.approx(plan.eps_tot / (4 * plan.M))
    assert plan.budget_ok


def test_plan_with_fixed_clip_level():
    params = Gg1Params(DistSpec.exponential(0.5), DistSpec.exponential(1.0), clip=ClipSpec.at(30.0))
    plan = planner.plan_gg1(params, None, 1e-2, 0.05)
    assert plan.clip_level_B == 30.0


def test_plan_rejects_unstable_queue():
    params = Gg1Params(DistSpec.deterministic(1.0), DistSpec.deterministic(2.0))
    with pytest.raises(UnstableModel):
        planner.plan_gg1(params, None, 1e-3, 0.05)
    with pytest.raises(UnstableModel):
        planner.plan_gg1(params, None, 1e-3, 0.05, beta=0.5)


def test_plan_at_horizon_keeps_qae_share():
    params = Gg1Params(DistSpec.deterministic(2.0), DistSpec.deterministic(1.0))
    plan = planner.plan_gg1(params, None, 1e-4, 0.05, beta=0.1)
    refit = planner.plan_at_horizon(plan, 200, planner.truncation_bias_bound(0.1, 200))
    assert refit.M * refit.eps_Q == pytest.approx(plan.M * plan.eps_Q)
    assert refit.budget_ok
    short = planner.plan_at_horizon(plan, 10, planner.truncation_bias_bound(0.1, 10))
    assert not short.budget_ok


def test_hajek_constants():
    assert planner.hajek_constants(0.2, 1.0) == pytest.approx((0.2, 0.02))


def test_eta_solution():
    spec = planner.solve_eta(MaxWeightDriftSpec.certify(0.2, 1.0, 1, 0.5))
    assert spec.eta_star == pytest.approx(math.log(2.0) / 11.0)
    assert spec.eta_rate == pytest.approx(0.01)
    expected = math.exp(0.01) / (1.0 - 0.5 * math.exp(0.11))
    assert spec.prefactor == pytest.approx(expected)


def test_certain_emptying_leaves_kappa_binding():
    spec = planner.solve_eta(MaxWeightDriftSpec.certify(0.2, 1.0, 1, 1.0))
    assert spec.eta_star == math.inf
    assert spec.eta_rate == pytest.approx(0.01)


def test_maxweight_plan_meets_budget():
    drift = MaxWeightDriftSpec.certify(0.2, 1.0, 1, 0.5)
    plan = planner.plan_maxweight(drift, 1e-2, 0.05, arrival_scale=2.0)
    assert plan.trunc_bound <= 5e-3
    spec = planner.solve_eta(drift)
    smaller = planner.maxweight_truncation_bound(spec.eta_rate, spec.prefactor, plan.M - 1, 2.0)
    assert smaller > 5e-3
    assert plan.budget_ok


def test_poisson_chernoff_rate():
    assert planner.poisson_chernoff_rate(1.0, 0.5) == pytest.approx(math.log(2.0) - 0.5)


@pytest.mark.parametrize("alpha", [0.0, 1.0, 2.0])
def test_chernoff_rate_rejects_alpha(alpha):
    with pytest.raises(InvalidAlpha):
        planner.poisson_chernoff_rate(1.0, alpha)


def test_chernoff_alpha_balances_rates():
    alpha = planner.choose_chernoff_alpha(0.5, 0.3)
    assert 0 < alpha < 2.0
    assert 0.3 * alpha == pytest.approx(planner.poisson_chernoff_rate(0.5, alpha), rel=1e-9)


def test_clipping_event_bound_saturates():
    assert planner.clipping_event_bound(10, 0.01, 0.02, 0.1) == pytest.approx(0.4)
    assert planner.clipping_event_bound(100, 0.01, 0.02, 0.1) == 1.0


def test_arrival_cap_bias_bound_decreases():
    values = [planner.arrival_cap_bias_bound(r, 2.0, 0.1) for r in range(50, 500, 50)]
    assert values == sorted(values, reverse=True)
    with pytest.raises(InvalidArgument):
        planner.arrival_cap_bias_bound(10, 0.0, 0.1)


def test_jsq_plan():
    params = JsqParams(K=2, lam=0.5, clip_B=12.0, service=DistSpec.exponential(1.0), split_eps=0.5)
    plan = planner.plan_jsq(params, 1e-2, 0.05, (2.0, 0.1))
    assert plan.model == "jsq"
    assert plan.trunc_bound <= 5e-3
    assert planner.arrival_cap_bias_bound(plan.M - 1, 2.0, 0.1) > 5e-3
    assert plan.drift["delta"] == pytest.approx(params.delta)
    assert plan.budget_ok


def test_arrival_count_tail_bound():
    alpha = planner.choose_chernoff_alpha(0.5, 0.3)
    rate = planner.poisson_chernoff_rate(0.5, alpha)
    assert planner.arrival_count_tail_bound(0, 2.0, 0.3, 0.5, alpha) == pytest.approx(3.0)
    assert planner.arrival_count_tail_bound(10, 2.0, 0.3, 0.5, alpha) == pytest.approx(
        2.0 * math.exp(-3.0 * alpha) + math.exp(-10.0 * rate)
    )
    values = [planner.arrival_count_tail_bound(m, 2.0, 0.3, 0.5, alpha) for m in range(0, 100, 5)]
    assert values == sorted(values, reverse=True)


def test_chernoff_count_tail_envelope():
    tail = planner.ChernoffCountTail.from_cycle_tail(0.5, (2.0, 0.3))
    assert tail.alpha == pytest.approx(planner.choose_chernoff_alpha(0.5, 0.3))
    assert tail.rate == pytest.approx(0.3 * tail.alpha)
    C, c = tail.envelope()
    assert C == 3.0
    for m in range(1, 200):
        assert tail.bound(m) <= C * math.exp(-c * m) * (1.0 + 1e-12)


def test_jsq_plan_from_cycle_tail():
    params = JsqParams(K=2, lam=0.5, clip_B=12.0, service=DistSpec.exponential(1.0), split_eps=0.5)
    plan = planner.plan_jsq(params, 1e-2, 0.05, cycle_tail=(2.0, 0.3))
    rate = plan.drift["count_rate"]
    assert plan.drift["chernoff_alpha"] == pytest.approx(planner.choose_chernoff_alpha(0.5, 0.3))
    assert (plan.drift["tail_C"], plan.drift["tail_c"]) == (3.0, rate)
    assert plan.trunc_bound == pytest.approx(planner.arrival_cap_bias_bound(plan.M, 3.0, rate))
    assert plan.budget_ok


def test_jsq_plan_bounds_clipping_event():
    params = JsqParams(K=2, lam=0.5, clip_B=12.0, service=DistSpec.exponential(1.0), split_eps=0.5)
    plan = planner.plan_jsq(params, 1e-2, 0.05, cycle_tail=(2.0, 0.3))
    alpha = plan.drift["chernoff_alpha"]
    m = plan.drift["clip_event_m"]
    expected = planner.clipping_event_bound(
        m, math.exp(-6.0), math.exp(-12.0), planner.arrival_count_tail_bound(m, 2.0, 0.3, 0.5, alpha)
    )
    assert plan.drift["clip_event_bound"] == pytest.approx(expected)
    assert 0.0 < expected < 1.0
    assert planner.clipping_event_bound(
        m + 1, math.exp(-6.0), math.exp(-12.0), planner.arrival_count_tail_bound(m + 1, 2.0, 0.3, 0.5, alpha)
    ) >= expected


def test_unclipped_jsq_plan_has_no_clipping_event():
    params = JsqParams(
        K=2, lam=0.5, clip_B=12.0, service=DistSpec.exponential(1.0), split_eps=0.5, clipping=False
    )
    plan = planner.plan_jsq(params, 1e-2, 0.05, (2.0, 0.1))
    assert "clip_event_bound" not in plan.drift
    assert plan.clip_level_B is None


def test_jsq_plan_needs_a_tail():
    params = JsqParams(K=2, lam=0.5, clip_B=12.0, service=DistSpec.exponential(1.0), split_eps=0.5)
    with pytest.raises(InvalidArgument):
        planner.plan_jsq(params, 1e-2, 0.05)


def test_jsq_overload_rejected():
    params = JsqParams(K=1, lam=2.0, clip_B=12.0, service=DistSpec.exponential(1.0), split_eps=0.5)
    with pytest.raises(UnstableModel):
        planner.check_jsq_stability(params)


@pytest.mark.parametrize("eps_tot", [0.0, 1.0, -1e-3])
def test_budget_range(eps_tot):
    params = Gg1Params(DistSpec.deterministic(2.0), DistSpec.deterministic(1.0))
    with pytest.raises(InvalidArgument):
        planner.plan_gg1(params, None, eps_tot, 0.05)
