import json

import pytest

from delaytail import runconfig
from delaytail.errors import InvalidConfig
from delaytail.gg1 import Gg1Params
from delaytail.jsq import JsqParams
from delaytail.maxweight import WirelessParams


def violation_paths(excinfo) -> list[str]:
    return [v["path"] for v in excinfo.value.details["violations"]]


def test_parses_gg1(bounded_gg1):
    run = runconfig.parse_config(bounded_gg1)
    assert run.model == "gg1"
    assert isinstance(run.params, Gg1Params)
    assert run.params.threshold_d == 3.0
    assert run.master_seed == 11
    assert run.numerator_cycles == 2000
    assert not run.horizon_fixed
    assert run.mode == "classical-mc"


def test_parses_maxweight(light_maxweight):
    run = runconfig.parse_config(light_maxweight)
    assert isinstance(run.params, WirelessParams)
    assert run.params.subset_I == frozenset({0})
    assert run.certificate.p_empty == 0.5


def test_parses_jsq(small_jsq):
    run = runconfig.parse_config(small_jsq)
    assert isinstance(run.params, JsqParams)
    assert run.params.lam == 0.5
    assert run.jsq_tail == (2.0, 0.1)


def test_k_sets_budget(bounded_gg1):
    bounded_gg1["plan"] = {"k": 3}
    run = runconfig.parse_config(bounded_gg1)
    assert run.k == 3
    assert run.eps_tot == pytest.approx(1e-5)


def test_fixed_horizon_is_flagged(bounded_gg1):
    bounded_gg1["gg1"]["horizon_M"] = 40
    run = runconfig.parse_config(bounded_gg1)
    assert run.horizon_fixed
    assert run.params.horizon_M == 40


def test_negative_rate_reported_by_pointer(mm1_clipped):
    mm1_clipped["gg1"]["arrival"]["rate"] = -0.5
    with pytest.raises(InvalidConfig) as excinfo:
        runconfig.parse_config(mm1_clipped)
    assert "/gg1/arrival/rate" in violation_paths(excinfo)
    assert excinfo.value.code == "INVALID_CONFIG"


def test_every_violation_is_listed(bounded_gg1):
    bounded_gg1["gg1"]["threshold_d"] = -1
    bounded_gg1["run"]["numerator_cycles"] = "many"
    with pytest.raises(InvalidConfig) as excinfo:
        runconfig.parse_config(bounded_gg1)
    paths = violation_paths(excinfo)
    assert "/gg1/threshold_d" in paths
    assert "/run/numerator_cycles" in paths


def test_unknown_key_rejected(bounded_gg1):
    bounded_gg1["gg1"]["horizon"] = 10
    with pytest.raises(InvalidConfig):
        runconfig.parse_config(bounded_gg1)


def test_two_model_blocks_rejected(bounded_gg1, small_jsq):
    bounded_gg1["jsq"] = small_jsq["jsq"]
    with pytest.raises(InvalidConfig):
        runconfig.parse_config(bounded_gg1)


def test_model_block_must_match(bounded_gg1):
    bounded_gg1["model"] = "jsq"
    with pytest.raises(InvalidConfig):
        runconfig.parse_config(bounded_gg1)


def test_pmf_must_sum_to_one(bounded_gg1):
    bounded_gg1["gg1"]["service"]["pmf"] = [0.2, 0.2]
    with pytest.raises(InvalidConfig):
        runconfig.parse_config(bounded_gg1)


def test_weights_need_one_entry_per_queue(light_maxweight):
    light_maxweight["maxweight"]["drift"]["weights"] = [1.0]
    with pytest.raises(InvalidConfig) as excinfo:
        runconfig.parse_config(light_maxweight)
    assert violation_paths(excinfo) == ["/maxweight/drift/weights"]


def test_load_config_from_file(tmp_path, small_jsq):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(small_jsq), encoding="utf-8")
    assert runconfig.load_config(path).model == "jsq"


def test_missing_file(tmp_path):
    with pytest.raises(InvalidConfig) as excinfo:
        runconfig.load_config(tmp_path / "absent.json")
    assert "absent.json" in excinfo.value.details["path"]


def test_malformed_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{\"model\": ", encoding="utf-8")
    with pytest.raises(InvalidConfig) as excinfo:
        runconfig.load_config(path)
    assert excinfo.value.details["line"] == 1
