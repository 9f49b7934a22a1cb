import math

import pytest

from delaytail import distributions
from delaytail.distributions import ClipSpec, DistSpec, TailClass, sample
from delaytail.errors import InvalidArgument, InvalidConfig
from delaytail.seedstream import UniformDraw

CLIP5 = ClipSpec.at(5.0)


def test_exponential_quantile_at_zero():
    assert sample(DistSpec.exponential(1.0), CLIP5, UniformDraw(0.0, 53)) == 0.0


def test_exponential_quantile_inverts():
    u = 1.0 - math.exp(-2.0)
    assert sample(DistSpec.exponential(1.0), CLIP5, u) == pytest.approx(2.0, rel=1e-12)


def test_exponential_clipped_at_level():
    assert sample(DistSpec.exponential(1.0), CLIP5, 0.999999) == 5.0
    assert sample(DistSpec.exponential(1.0), ClipSpec.off(), 0.999999) == pytest.approx(13.8155, rel=1e-4)


def test_discrete_lower_quantile():
    dist = DistSpec.discrete([0.2, 0.0, 0.5, 0.3])
    assert sample(dist, ClipSpec.off(), 0.0) == 0.0
    assert sample(dist, ClipSpec.off(), 0.2) == 0.0  # F(0) = 0.2 >= u
    assert sample(dist, ClipSpec.off(), 0.2000001) == 2.0  # skips the zero-mass point
    assert sample(dist, ClipSpec.off(), 0.95) == 3.0


def test_empirical_table_lookup():
    dist = DistSpec.empirical([1.0, 2.0, 3.0, 4.0])
    assert sample(dist, ClipSpec.off(), 0.0) == 1.0
    assert sample(dist, ClipSpec.off(), 0.26) == 2.0
    assert sample(dist, ClipSpec.off(), 0.999) == 4.0


def test_deterministic_ignores_u():
    dist = DistSpec.deterministic(1.5)
    assert sample(dist, ClipSpec.off(), 0.1) == sample(dist, ClipSpec.off(), 0.9) == 1.5


def test_clipping_is_monotone_coupling():
    dist = DistSpec.exponential(0.3)
    for i in range(100):
        u = i / 100
        assert sample(dist, CLIP5, u) == min(sample(dist, ClipSpec.off(), u), 5.0)


@pytest.mark.parametrize(
    "data",
    [
        {"kind": "exponential", "rate": -1.0},
        {"kind": "discrete", "pmf": [0.5, 0.4]},
        {"kind": "discrete", "pmf": [1.2, -0.2]},
        {"kind": "empirical", "table": [3.0, 1.0]},
        {"kind": "gamma"},
    ],
)
def test_malformed_specs_rejected(data):
    with pytest.raises(InvalidConfig):
        DistSpec.from_dict(data)


def test_clip_level_must_be_positive():
    with pytest.raises(InvalidConfig):
        ClipSpec.at(0.0)


def test_dict_form_roundtrips():
    for dist in (DistSpec.exponential(2.0), DistSpec.bernoulli(0.25), DistSpec.empirical([0.5, 1.0])):
        assert DistSpec.from_dict(dist.to_dict()) == dist


def test_clipped_exponential_mean():
    assert distributions.mean(DistSpec.exponential(1.0)) == 1.0
    clipped = distributions.mean(DistSpec.exponential(1.0), ClipSpec.at(2.0))
    assert clipped == pytest.approx(1.0 - math.exp(-2.0))


def test_discrete_mean_and_survival():
    dist = DistSpec.discrete([0.2, 0.6, 0.2])
    assert distributions.mean(dist) == pytest.approx(1.0)
    assert distributions.mean(dist, ClipSpec.at(1.0)) == pytest.approx(0.8)
    assert distributions.survival(dist, 1.0) == pytest.approx(0.2)
    assert distributions.survival(dist, -1.0) == 1.0


def test_default_tails():
    assert distributions.default_tail(DistSpec.exponential(2.0)) == TailClass.sub_exponential(1.0, 2.0)
    assert distributions.default_tail(DistSpec.discrete([0.5, 0.0, 0.5])) == TailClass.bounded(2.0)


def test_subgaussian_clip_level():
    tail = TailClass.sub_gaussian(1.0, 1.0)
    B = distributions.clip_level_subgaussian(tail, 100, 1e-3)
    assert B == pytest.approx(1.0 + math.sqrt(2.0 * math.log(2e7)))
    assert B == pytest.approx(6.799, abs=1e-3)


def test_subgaussian_degenerate_concentration():
    tail = TailClass.sub_gaussian(1.0, 1e-24)
    assert distributions.clip_level_subgaussian(tail, 100, 1e-3) == pytest.approx(1.0, abs=1e-9)


def test_subexponential_clip_level():
    tail = TailClass.sub_exponential(1.0, 1.0)
    assert distributions.clip_level_subexp(tail, 100, 1e-3) == pytest.approx(16.811, abs=1e-3)


def test_subexponential_rejects_large_eps():
    with pytest.raises(InvalidArgument):
        distributions.clip_level_subexp(TailClass.sub_exponential(1.0, 1.0), 1, 2.0)


def test_bounded_clip_level_is_max():
    assert distributions.clip_level(TailClass.bounded(3.0), 1000, 1e-6) == 3.0


def test_clipping_bias_bound():
    assert distributions.clipping_bias_bound(10, 1e-4, 0.0) == pytest.approx(0.01)
    assert distributions.clipping_bias_bound(10, 0.0, 0.0) == 0.0
    assert distributions.clipping_bias_bound(1, 0.3, 0.2) == pytest.approx(0.5)


def test_chosen_clip_level_meets_budget():
    """Clip level chosen for a sub-exponential stream keeps M^2 P(X > B) at eps_clip / 2."""
    M, eps_clip = 100, 1e-3
    B = distributions.clip_level_subexp(TailClass.sub_exponential(1.0, 1.0), M, eps_clip)
    p = distributions.survival(DistSpec.exponential(1.0), B)
    assert distributions.clipping_bias_bound(M, p, 0.0) == pytest.approx(eps_clip / 2.0)
