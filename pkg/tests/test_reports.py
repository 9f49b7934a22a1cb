import json
import math
from dataclasses import dataclass

import numpy as np

from delaytail import __version__, reports


@dataclass
class Point:
    t: int
    value: float


def test_plain_converts_nested_values():
    data = {"p": Point(1, math.inf), "s": frozenset({3, 1}), "n": np.float64(0.5), "t": (1, 2)}
    assert reports.plain(data) == {"p": {"t": 1, "value": "inf"}, "s": [1, 3], "n": 0.5, "t": [1, 2]}
    assert reports.plain(math.nan) is None


def test_canonical_json_is_stable():
    a = reports.canonical_json({"b": 1, "a": [1.5, 2]})
    b = reports.canonical_json({"a": [1.5, 2], "b": 1})
    assert a == b
    assert a.endswith("\n")
    assert json.loads(a) == {"a": [1.5, 2], "b": 1}


def test_config_hash_ignores_key_order():
    assert reports.config_hash({"x": 1, "y": {"z": 2}}) == reports.config_hash({"y": {"z": 2}, "x": 1})
    assert reports.config_hash({"x": 1}) != reports.config_hash({"x": 2})
    assert len(reports.config_hash({})) == 64


def test_provenance_fields():
    body = reports.with_provenance({"p_hat": 0.1}, {"model": "gg1"}, "estimate")
    assert body["command"] == "estimate"
    assert body["tool_version"] == __version__
    assert body["config_hash"] == reports.config_hash({"model": "gg1"})
    assert body["p_hat"] == 0.1


def test_provenance_wraps_non_dict_results():
    body = reports.with_provenance([1, 2], {}, "verify")
    assert body["result"] == [1, 2]


def test_rows_to_csv():
    text = reports.rows_to_csv([{"t": 1, "bound": 0.5, "extra": "x"}, {"t": 2, "bound": math.inf}], ["t", "bound"])
    assert text.splitlines() == ["t,bound", "1,0.5", "2,inf"]


def test_write_text_creates_parents(tmp_path):
    path = reports.write_text(tmp_path / "a" / "b" / "r.json", "{}\n")
    assert path.read_text(encoding="utf-8") == "{}\n"
