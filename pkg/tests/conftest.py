"""Shared fixtures for the delaytail test suite."""

import copy
from pathlib import Path

import pytest

from delaytail.seedstream import UniformDraw

DATA_DIR = Path(__file__).parent / "data"


class ScriptedStream:
    """Uniform source replaying a fixed list of variates, for hand traces."""

    def __init__(self, values, bit_width: int = 53):
        self.values = list(values)
        self.bit_width = bit_width
        self.call_index = 0

    def draw(self) -> UniformDraw:
        if self.call_index >= len(self.values):
            raise IndexError(f"script exhausted after {len(self.values)} draws")
        value = self.values[self.call_index]
        self.call_index += 1
        return UniformDraw(value, self.bit_width)

    @property
    def remaining(self) -> int:
        return len(self.values) - self.call_index


@pytest.fixture
def scripted():
    return ScriptedStream


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


BOUNDED_GG1 = {
    "model": "gg1",
    "gg1": {
        "arrival": {"kind": "discrete", "pmf": [0.0, 0.3, 0.4, 0.3]},
        "service": {"kind": "discrete", "pmf": [0.2, 0.6, 0.2]},
        "threshold_d": 3,
    },
    "plan": {"eps_tot": 1e-3, "alpha_Q": 0.05},
    "run": {"master_seed": 11, "numerator_cycles": 2000, "denominator_cycles": 2000, "safety_cap": 100000},
}

BETA_GG1 = {
    "model": "gg1",
    "gg1": {
        "arrival": {"kind": "discrete", "pmf": [0.0, 0.0, 1.0]},
        "service": {"kind": "discrete", "pmf": [0.0, 1.0]},
        "threshold_d": 1,
        "beta": 0.1,
    },
    "plan": {"eps_tot": 1e-4},
    "run": {"master_seed": 3, "numerator_cycles": 200, "denominator_cycles": 200},
}

MM1_CLIPPED = {
    "model": "gg1",
    "gg1": {
        "arrival": {"kind": "exponential", "rate": 0.5},
        "service": {"kind": "exponential", "rate": 1.0},
        "threshold_d": 4,
        "tails": {
            "arrival": {"kind": "sub-exponential", "K": 1, "rate": 0.5},
            "service": {"kind": "sub-exponential", "K": 1, "rate": 1.0},
        },
    },
    "plan": {"eps_tot": 1e-2, "alpha_Q": 0.05},
    "run": {"master_seed": 5, "numerator_cycles": 100000, "denominator_cycles": 100000},
}

LIGHT_MAXWEIGHT = {
    "model": "maxweight",
    "maxweight": {
        "arrival_pmfs": [[0.8, 0.2], [0.8, 0.2]],
        "channel_pmfs": [[0.0, 1.0], [0.0, 1.0]],
        "subset_I": [0],
        "threshold_d": 2,
        "drift": {"eps_drift": 0.2, "nu": 1.0, "m_attempt": 1, "p_empty": 0.5},
    },
    "plan": {"eps_tot": 1e-2},
    "run": {"master_seed": 17, "numerator_cycles": 2000, "denominator_cycles": 2000},
}

SMALL_JSQ = {
    "model": "jsq",
    "jsq": {
        "K": 2,
        "lambda": 0.5,
        "clip_B": 12.0,
        "service": {"kind": "exponential", "rate": 1.0},
        "split_eps": 0.5,
        "threshold_d": 3.0,
        "tail": {"C": 2.0, "c": 0.1},
    },
    "plan": {"eps_tot": 1e-2},
    "run": {"master_seed": 23, "numerator_cycles": 2000, "denominator_cycles": 2000},
}


@pytest.fixture
def bounded_gg1() -> dict:
    return copy.deepcopy(BOUNDED_GG1)


@pytest.fixture
def beta_gg1() -> dict:
    return copy.deepcopy(BETA_GG1)


@pytest.fixture
def mm1_clipped() -> dict:
    return copy.deepcopy(MM1_CLIPPED)


@pytest.fixture
def light_maxweight() -> dict:
    return copy.deepcopy(LIGHT_MAXWEIGHT)


@pytest.fixture
def small_jsq() -> dict:
    return copy.deepcopy(SMALL_JSQ)
