"""Distribution specs, inverse-CDF sampling, clipping and tail classes.

Sampling is by inverse transform: the lower (left-continuous) quantile of the
distribution at a uniform variate, optionally clipped at level B. The clipped
variate is min{X, B} for the same uniform, which gives the pathwise coupling
between a clipped and an unclipped run sharing one seed.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Literal, Optional, Union

import numpy as np

from .errors import InvalidConfig, require
from .seedstream import UniformDraw

DistKind = Literal["discrete", "exponential", "deterministic", "empirical"]
TailKind = Literal["bounded", "sub-gaussian", "sub-exponential"]

PMF_TOLERANCE = 1e-12


@dataclass(frozen=True)
class DistSpec:
    """A sampleable distribution on [0, inf).

    kinds:
      discrete       pmf over {0, 1, ..., len(pmf) - 1}
      exponential    rate lambda
      deterministic  the constant `value`
      empirical      equal-probability inverse-CDF table: u in [i/n, (i+1)/n) maps to table[i]
    """

    kind: DistKind
    rate: float = 0.0
    value: float = 0.0
    pmf: tuple[float, ...] = ()
    table: tuple[float, ...] = ()
    _cdf: tuple[float, ...] = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind == "exponential":
            if not (self.rate > 0 and math.isfinite(self.rate)):
                raise InvalidConfig("exponential rate must be strictly positive", {"rate": self.rate})
        elif self.kind == "deterministic":
            if not (self.value >= 0 and math.isfinite(self.value)):
                raise InvalidConfig("deterministic value must be finite and nonnegative", {"value": self.value})
        elif self.kind == "discrete":
            pmf = tuple(float(p) for p in self.pmf)
            if not pmf or any(p < 0 for p in pmf):
                raise InvalidConfig("pmf must be a nonempty table of nonnegative masses", {"pmf": list(pmf)})
            if abs(math.fsum(pmf) - 1.0) > PMF_TOLERANCE:
                raise InvalidConfig("pmf must sum to 1", {"sum": math.fsum(pmf)})
            cdf = np.cumsum(pmf)
            cdf[-1] = 1.0
            object.__setattr__(self, "pmf", pmf)
            object.__setattr__(self, "_cdf", tuple(float(c) for c in cdf))
        elif self.kind == "empirical":
            table = tuple(float(q) for q in self.table)
            if not table or table[0] < 0:
                raise InvalidConfig("empirical table must be nonempty and nonnegative", {"table": list(table)})
            if any(b < a for a, b in zip(table, table[1:])):
                raise InvalidConfig("empirical inverse-CDF table must be nondecreasing", {"table": list(table)})
            object.__setattr__(self, "table", table)
        else:
            raise InvalidConfig(f"unknown distribution kind '{self.kind}'", {"kind": self.kind})

    @classmethod
    def exponential(cls, rate: float) -> "DistSpec":
        return cls("exponential", rate=rate)

    @classmethod
    def deterministic(cls, value: float) -> "DistSpec":
        return cls("deterministic", value=value)

    @classmethod
    def discrete(cls, pmf: Union[list[float], tuple[float, ...]]) -> "DistSpec":
        return cls("discrete", pmf=tuple(pmf))

    @classmethod
    def empirical(cls, table: Union[list[float], tuple[float, ...]]) -> "DistSpec":
        return cls("empirical", table=tuple(table))

    @classmethod
    def bernoulli(cls, p: float) -> "DistSpec":
        return cls.discrete([1.0 - p, p])

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "exponential":
            return {"kind": "exponential", "rate": self.rate}
        if self.kind == "deterministic":
            return {"kind": "deterministic", "value": self.value}
        if self.kind == "discrete":
            return {"kind": "discrete", "pmf": list(self.pmf)}
        return {"kind": "empirical", "table": list(self.table)}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "DistSpec":
        kind = data.get("kind")
        if kind == "exponential":
            return cls.exponential(float(data["rate"]))
        if kind == "deterministic":
            return cls.deterministic(float(data["value"]))
        if kind == "discrete":
            return cls.discrete(data["pmf"])
        if kind == "empirical":
            return cls.empirical(data["table"])
        raise InvalidConfig(f"unknown distribution kind '{kind}'", {"kind": kind})


@dataclass(frozen=True)
class ClipSpec:
    level_B: float = 0.0
    enabled: bool = False

    def __post_init__(self):
        if self.enabled and not (self.level_B > 0 and math.isfinite(self.level_B)):
            raise InvalidConfig("clip level B must be positive when clipping is enabled", {"level_B": self.level_B})

    @classmethod
    def at(cls, level_B: float) -> "ClipSpec":
        return cls(level_B=level_B, enabled=True)

    @classmethod
    def off(cls) -> "ClipSpec":
        return cls()


@dataclass(frozen=True)
class TailClass:
    """Tail certificate of one input stream (arrival or service)."""

    kind: TailKind
    max_value: float = 0.0
    mean: float = 0.0
    variance: float = 0.0
    K: float = 1.0
    rate: float = 0.0

    def __post_init__(self):
        if self.kind == "bounded":
            if not (self.max_value > 0 and math.isfinite(self.max_value)):
                raise InvalidConfig("bounded tail needs a positive finite max", {"max_value": self.max_value})
        elif self.kind == "sub-gaussian":
            if not self.variance > 0:
                raise InvalidConfig("sub-Gaussian variance proxy must be positive", {"variance": self.variance})
        elif self.kind == "sub-exponential":
            if not (self.K >= 1 and self.rate > 0):
                raise InvalidConfig("sub-exponential tails need K >= 1 and rate > 0", {"K": self.K, "rate": self.rate})
        else:
            raise InvalidConfig(f"unknown tail class '{self.kind}'", {"kind": self.kind})

    @classmethod
    def bounded(cls, max_value: float) -> "TailClass":
        return cls("bounded", max_value=max_value)

    @classmethod
    def sub_gaussian(cls, mean: float, variance: float) -> "TailClass":
        return cls("sub-gaussian", mean=mean, variance=variance)

    @classmethod
    def sub_exponential(cls, K: float, rate: float) -> "TailClass":
        return cls("sub-exponential", K=K, rate=rate)


def quantile(dist: DistSpec, u: float) -> float:
    """Lower quantile inf{x : F(x) >= u}; ties go to the lower support point."""
    if dist.kind == "exponential":
        return -math.log1p(-u) / dist.rate
    if dist.kind == "deterministic":
        return dist.value
    if dist.kind == "discrete":
        cdf = dist._cdf
        k = int(np.searchsorted(cdf, u, side="left"))
        k = min(k, len(cdf) - 1)
        while dist.pmf[k] == 0.0 and k < len(cdf) - 1:
            k += 1
        return float(k)
    table = dist.table
    return table[min(int(u * len(table)), len(table) - 1)]


def sample(dist: DistSpec, clip: ClipSpec, u: Union[UniformDraw, float]) -> float:
    """Inverse-transform sample, clipped at B when clipping is enabled."""
    value = u.value if isinstance(u, UniformDraw) else u
    x = quantile(dist, value)
    if clip.enabled and x > clip.level_B:
        return clip.level_B
    return x


def mean(dist: DistSpec, clip: Optional[ClipSpec] = None) -> float:
    """Analytic E[X], or E[min(X, B)] under an enabled clip."""
    B = clip.level_B if clip is not None and clip.enabled else math.inf
    if dist.kind == "exponential":
        if math.isinf(B):
            return 1.0 / dist.rate
        return -math.expm1(-dist.rate * B) / dist.rate
    if dist.kind == "deterministic":
        return min(dist.value, B)
    if dist.kind == "discrete":
        return math.fsum(p * min(k, B) for k, p in enumerate(dist.pmf))
    return math.fsum(min(q, B) for q in dist.table) / len(dist.table)


def survival(dist: DistSpec, b: float) -> float:
    """Analytic P(X > b)."""
    if b < 0:
        return 1.0
    if dist.kind == "exponential":
        return math.exp(-dist.rate * b)
    if dist.kind == "deterministic":
        return 1.0 if dist.value > b else 0.0
    if dist.kind == "discrete":
        return math.fsum(p for k, p in enumerate(dist.pmf) if k > b)
    return sum(1 for q in dist.table if q > b) / len(dist.table)


def upper_bound(dist: DistSpec) -> float:
    """Essential supremum of the support (inf for exponential)."""
    if dist.kind == "exponential":
        return math.inf
    if dist.kind == "deterministic":
        return dist.value
    if dist.kind == "discrete":
        return float(max(k for k, p in enumerate(dist.pmf) if p > 0))
    return dist.table[-1]


def default_tail(dist: DistSpec) -> TailClass:
    """Tightest tail certificate derivable from the distribution alone."""
    if dist.kind == "exponential":
        return TailClass.sub_exponential(K=1.0, rate=dist.rate)
    top = upper_bound(dist)
    return TailClass.bounded(top if top > 0 else 1.0)


def clip_level_subgaussian(tail: TailClass, M: int, eps_clip: float) -> float:
    """Per-stream clip level B = mean + sigma * sqrt(2 ln(2 M^2 / eps_clip))."""
    require(tail.kind == "sub-gaussian", "tail class must be sub-Gaussian", kind=tail.kind)
    require(M >= 1, "M must be at least 1", M=M)
    require(0 < eps_clip < 1, "eps_clip must lie in (0, 1)", eps_clip=eps_clip)
    sigma = math.sqrt(tail.variance)
    return tail.mean + sigma * math.sqrt(2.0 * math.log(2.0 * M * M / eps_clip))


def clip_level_subexp(tail: TailClass, M: int, eps_clip: float) -> float:
    """Per-stream clip level B = ln(2 M^2 K / eps_clip) / rate."""
    require(tail.kind == "sub-exponential", "tail class must be sub-exponential", kind=tail.kind)
    require(M >= 1, "M must be at least 1", M=M)
    require(0 < eps_clip < 1, "eps_clip must lie in (0, 1)", eps_clip=eps_clip)
    return math.log(2.0 * M * M * tail.K / eps_clip) / tail.rate


def clip_level(tail: TailClass, M: int, eps_clip: float) -> float:
    """Clip level for any tail class; a bounded stream needs no more than its max."""
    if tail.kind == "bounded":
        return tail.max_value
    if tail.kind == "sub-gaussian":
        return clip_level_subgaussian(tail, M, eps_clip)
    return clip_level_subexp(tail, M, eps_clip)


def clipping_bias_bound(M: int, p_A_exceed: float, p_S_exceed: float) -> float:
    """Bound M^2 (P(A > B) + P(S > B)) on |E[R_M] - E[R_M^(B)]|."""
    require(0.0 <= p_A_exceed <= 1.0, "p_A_exceed must be a probability", p_A_exceed=p_A_exceed)
    require(0.0 <= p_S_exceed <= 1.0, "p_S_exceed must be a probability", p_S_exceed=p_S_exceed)
    return M * M * (p_A_exceed + p_S_exceed)
