"""Run configuration: JSON ingestion, schema validation and model construction."""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

from jsonschema import Draft7Validator

from . import config
from .distributions import ClipSpec, DistSpec, TailClass
from .errors import InvalidConfig
from .gg1 import Gg1Params
from .jsq import JsqParams
from .maxweight import WirelessParams

ModelParams = Union[Gg1Params, WirelessParams, JsqParams]

DEFAULT_EPS_TOT = 1e-3
DEFAULT_ALPHA_Q = 0.05


@dataclass(frozen=True)
class MaxWeightCertificate:
    eps_drift: float
    nu: float
    m_attempt: int
    p_empty: Optional[float] = None
    drift_set_level: float = 0.0
    weights: Optional[tuple[float, ...]] = None


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration.

    `params` carries horizon_M / arrival_cap_R_A as configured (or 1 when
    absent); the planner sets the working horizon.
    """

    model: str
    params: ModelParams
    raw: dict[str, Any] = field(repr=False, compare=False)
    eps_tot: float = DEFAULT_EPS_TOT
    k: Optional[int] = None
    alpha_Q: float = DEFAULT_ALPHA_Q
    mode: str = "classical-mc"
    master_seed: int = config.DEFAULT_MASTER_SEED
    threads: int = config.DEFAULT_THREADS
    numerator_cycles: int = config.DEFAULT_NUMERATOR_CYCLES
    denominator_cycles: int = config.DEFAULT_DENOMINATOR_CYCLES
    safety_cap: int = config.DEFAULT_SAFETY_CAP
    seed_bits: int = config.DEFAULT_SEED_BITS
    bit_width: int = config.DEFAULT_BIT_WIDTH
    horizon_fixed: bool = False
    beta: Optional[float] = None
    tails: Optional[tuple[TailClass, TailClass]] = None
    certificate: Optional[MaxWeightCertificate] = None
    jsq_tail: Optional[tuple[float, float]] = None
    jsq_cycle_tail: Optional[tuple[float, float]] = None  # P(tau > t) <= C e^{-c t}
    output_dir: Optional[str] = None
    output_format: str = "json"


def _load_schema() -> dict[str, Any]:
    with open(config.get_schema_path(), "r", encoding="utf-8") as f:
        return json.load(f)


def _pointer(path) -> str:
    return "/" + "/".join(str(part) for part in path) if path else "/"


def validate_config(data: Any) -> None:
    """Raise InvalidConfig listing every schema violation by JSON pointer."""
    validator = Draft7Validator(_load_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: (list(e.absolute_path), e.message))
    if errors:
        violations = [{"path": _pointer(e.absolute_path), "message": e.message} for e in errors]
        raise InvalidConfig(
            f"run config has {len(violations)} schema violation(s)",
            {"violations": violations},
        )


def _tail_from_dict(data: dict[str, Any]) -> TailClass:
    kind = data["kind"]
    if kind == "bounded":
        return TailClass.bounded(data.get("max", 0.0))
    if kind == "sub-gaussian":
        return TailClass.sub_gaussian(data.get("mean", 0.0), data.get("variance", 0.0))
    return TailClass.sub_exponential(data.get("K", 1.0), data.get("rate", 0.0))


def _build_gg1(block: dict[str, Any]) -> tuple[Gg1Params, dict[str, Any]]:
    clip = ClipSpec.at(block["clip_B"]) if "clip_B" in block else ClipSpec.off()
    params = Gg1Params(
        arrival=DistSpec.from_dict(block["arrival"]),
        service=DistSpec.from_dict(block["service"]),
        clip=clip,
        threshold_d=float(block["threshold_d"]),
        horizon_M=int(block.get("horizon_M", 1)),
        metric=block.get("metric", "waiting"),
    )
    extras: dict[str, Any] = {"beta": block.get("beta")}
    if "tails" in block:
        extras["tails"] = (_tail_from_dict(block["tails"]["arrival"]), _tail_from_dict(block["tails"]["service"]))
    return params, extras


def _build_maxweight(block: dict[str, Any]) -> tuple[WirelessParams, dict[str, Any]]:
    arrivals = tuple(DistSpec.discrete(p) for p in block["arrival_pmfs"])
    channels = tuple(DistSpec.discrete(p) for p in block["channel_pmfs"])
    params = WirelessParams(
        K=len(arrivals),
        arrival_pmfs=arrivals,
        channel_pmfs=channels,
        subset_I=frozenset(block["subset_I"]),
        threshold_d=int(block["threshold_d"]),
        horizon_M=int(block.get("horizon_M", 1)),
    )
    extras: dict[str, Any] = {}
    if "drift" in block:
        drift = block["drift"]
        weights = drift.get("weights")
        if weights is not None and len(weights) != params.K:
            raise InvalidConfig(
                "drift weights need one entry per queue",
                {"violations": [{"path": "/maxweight/drift/weights", "message": f"expected {params.K} weights"}]},
            )
        extras["certificate"] = MaxWeightCertificate(
            eps_drift=float(drift["eps_drift"]),
            nu=float(drift["nu"]),
            m_attempt=int(drift["m_attempt"]),
            p_empty=drift.get("p_empty"),
            drift_set_level=float(drift.get("drift_set_level", 0.0)),
            weights=tuple(weights) if weights is not None else None,
        )
    return params, extras


def _build_jsq(block: dict[str, Any]) -> tuple[JsqParams, dict[str, Any]]:
    params = JsqParams(
        K=int(block["K"]),
        lam=float(block["lambda"]),
        clip_B=float(block["clip_B"]),
        service=DistSpec.from_dict(block["service"]),
        split_eps=float(block["split_eps"]),
        threshold_d=float(block["threshold_d"]),
        arrival_cap_R_A=int(block.get("arrival_cap_R_A", 1)),
    )
    extras: dict[str, Any] = {}
    if "tail" in block:
        extras["jsq_tail"] = (float(block["tail"]["C"]), float(block["tail"]["c"]))
    if "cycle_tail" in block:
        extras["jsq_cycle_tail"] = (float(block["cycle_tail"]["C"]), float(block["cycle_tail"]["c"]))
    return params, extras


_BUILDERS = {"gg1": _build_gg1, "maxweight": _build_maxweight, "jsq": _build_jsq}
_HORIZON_KEYS = {"gg1": "horizon_M", "maxweight": "horizon_M", "jsq": "arrival_cap_R_A"}


def parse_config(data: Any) -> RunConfig:
    """Validate `data` against the shipped schema and build a RunConfig.

    Raises:
        InvalidConfig: Schema violations, or model parameters the schema
            cannot catch (pmfs that do not sum to one, split_eps >= clip_B, ...).
    """
    validate_config(data)
    model = data["model"]
    if model not in data:
        raise InvalidConfig(
            f"model is '{model}' but no '{model}' block is present",
            {"violations": [{"path": f"/{model}", "message": "missing model block"}]},
        )
    block = data[model]
    params, extras = _BUILDERS[model](block)

    plan = data.get("plan", {})
    run = data.get("run", {})
    output = data.get("output", {})
    k = plan.get("k")
    eps_tot = plan.get("eps_tot", 10.0 ** (-k - 2) if k is not None else DEFAULT_EPS_TOT)
    return RunConfig(
        model=model,
        params=params,
        raw=data,
        eps_tot=float(eps_tot),
        k=k,
        alpha_Q=float(plan.get("alpha_Q", DEFAULT_ALPHA_Q)),
        mode=data.get("mode", "classical-mc"),
        master_seed=int(run.get("master_seed", config.DEFAULT_MASTER_SEED)),
        threads=int(run.get("threads", config.DEFAULT_THREADS)),
        numerator_cycles=int(run.get("numerator_cycles", config.DEFAULT_NUMERATOR_CYCLES)),
        denominator_cycles=int(run.get("denominator_cycles", config.DEFAULT_DENOMINATOR_CYCLES)),
        safety_cap=int(run.get("safety_cap", config.DEFAULT_SAFETY_CAP)),
        seed_bits=int(run.get("seed_bits", config.DEFAULT_SEED_BITS)),
        bit_width=int(run.get("bit_width", config.DEFAULT_BIT_WIDTH)),
        horizon_fixed=_HORIZON_KEYS[model] in block,
        beta=extras.get("beta"),
        tails=extras.get("tails"),
        certificate=extras.get("certificate"),
        jsq_tail=extras.get("jsq_tail"),
        jsq_cycle_tail=extras.get("jsq_cycle_tail"),
        output_dir=output.get("dir"),
        output_format=output.get("format", "json"),
    )


def load_config(path: Union[str, Path]) -> RunConfig:
    """Read and parse a JSON run config file."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise InvalidConfig(f"config file not found: {path}", {"path": str(path)})
    except json.JSONDecodeError as e:
        raise InvalidConfig(
            f"config file is not valid JSON: {e.msg}",
            {"path": str(path), "line": e.lineno, "column": e.colno},
        )
    return parse_config(data)
