"""Configuration constants for delaytail runs."""

import os
from pathlib import Path
from typing import Optional

from .errors import InvalidConfig

# Randomness
DEFAULT_MASTER_SEED = 0
DEFAULT_BIT_WIDTH = 53  # mantissa bits of a uniform variate (double precision)
MAX_BIT_WIDTH = 53  # wider numerators no longer map exactly onto [0, 1)
MAX_EXACT_SEED_BITS = 24  # largest seed space enumerated by brute force
DEFAULT_SEED_BITS = 16

# Cycle budgets
DEFAULT_SAFETY_CAP = 1_000_000
DEFAULT_NUMERATOR_CYCLES = 100_000
DEFAULT_DENOMINATOR_CYCLES = 100_000
# Denominator cycles use their own index range so they never share seeds
# with the numerator batch. The other offsets do the same for the remaining
# consumers of randomness.
DENOMINATOR_CYCLE_OFFSET = 1 << 40
QAE_STREAM_OFFSET = 1 << 41
LONG_RUN_STREAM_OFFSET = 1 << 42
EMPTYING_STREAM_OFFSET = 1 << 43
PILOT_CYCLE_OFFSET = 1 << 44
PILOT_CYCLES = 10_000  # full JSQ cycles used to fit the arrival-count tail
DEFAULT_VERIFY_CYCLES = 100_000
DEFAULT_LONG_RUN = 10_000_000  # arrivals / slots of the time-average trajectory

# Parallelism
DEFAULT_THREADS = 1
CHUNK_CYCLES = 4096  # cycles per worker task

# Bound checks
BOUND_CHECK_LEVEL = 1e-3  # one-sided level per grid point, before Bonferroni
CONSISTENCY_SIGMAS = 3.0
TAIL_GRID_POINTS = 50
MIN_TAIL_COUNT = 10  # survival points fitted only where at least this many samples exceed t
DECAY_TOLERANCE = 0.25  # relative shortfall of a fitted decay below its Chernoff rate

# Emptying-probability estimation
DEFAULT_EMPTYING_VISITS = 10_000
MIN_EMPTYING_VISITS = 100
MIN_GROUP_VISITS = 20
MAX_SLOTS_PER_VISIT = 1000

# Emulated amplitude estimation
IQAE_SHOTS = 100  # shots per round before the no-overshooting rule applies
MC_SOURCE_ERROR_FRACTION = 0.1  # ground-truth error allowed, relative to eps_Q

# Resource accounting
GUARD_BITS = 2  # O(1) slack in the waiting-time register width
DEFAULT_VALUE_BITS = 16  # fixed-point width of sampled times
DEFAULT_OUTPUT_BITS = 16

# QAE scaling study
DEFAULT_SCALING_AMPLITUDE = 0.01
DEFAULT_SCALING_EPS = (1e-2, 3e-3, 1e-3, 3e-4)
DEFAULT_SCALING_DELTA = 0.05
DEFAULT_SCALING_RUNS = 200

# Environment overrides
ENV_SEED = "DELAYTAIL_SEED"
ENV_THREADS = "DELAYTAIL_THREADS"


def get_schema_path() -> Path:
    """Get the path of the shipped run-config JSON schema."""
    return Path(__file__).parent / "schema" / "run_config.schema.json"


def get_output_dir(out: Optional[str] = None) -> Path:
    """Get the directory reports are written to (created on demand)."""
    path = Path(out) if out else Path.cwd() / "delaytail-out"
    path.mkdir(parents=True, exist_ok=True)
    return path


def get_report_path(out: str, command: str, fmt: str = "json") -> Path:
    """Get the report file path for a command."""
    return get_output_dir(out) / f"{command}.{fmt}"


def _env_int(name: str, base: int = 10) -> Optional[int]:
    value = os.environ.get(name)
    if value is None or value.strip() == "":
        return None
    try:
        return int(value, base)
    except ValueError:
        raise InvalidConfig(f"${name} is not an integer: {value!r}", {"variable": name, "value": value})


def get_env_seed() -> Optional[int]:
    """Get the master seed from the environment, if set (decimal or 0x-hex)."""
    return _env_int(ENV_SEED, 0)


def get_env_threads() -> Optional[int]:
    """Get the worker count from the environment, if set."""
    return _env_int(ENV_THREADS)
