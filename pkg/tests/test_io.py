from __future__ import annotations

import json
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from contractlab import INF, InstanceError, Rewards, load, save
from contractlab.io import dumps, from_dict, from_distribution, from_types, loads, to_dict
from contractlab.constructions import d1_linear, theta2

from strategies import typed_with_rewards


def theta2_dict(**extra):
    return {"rewards": [0, 1], "types": [{"f": [[1, 0], ["1/2", "1/2"]], "c": [0, "1/4"]}], **extra}


def test_parses_mixed_number_forms():
    inst = from_dict(theta2_dict())
    assert inst.types == (theta2(),)
    assert inst.rewards == Rewards((0, 1))
    assert inst.distribution.weights == (1,)
    floats = from_dict({"rewards": [0, 1.0], "types": [{"f": [[1, 0], [0.5, 0.5]], "c": [0, 0.25]}]})
    assert floats.types == (theta2(),)


def test_inf_cost():
    data = {"rewards": [0, 1], "types": [{"f": [[1, 0], [0, 1]], "c": [0, "inf"]}]}
    assert from_dict(data).types[0].c[1] == INF
    data["rewards"] = [0, "inf"]
    with pytest.raises(InstanceError):
        from_dict(data)


def test_float_rows_are_rescaled_within_tolerance():
    third = 1 / 3
    data = {"rewards": [0, 1, 1], "types": [{"f": [[third, third, third]], "c": [0]}]}
    row = from_dict(data).types[0].f[0]
    assert sum(row) == 1
    data["types"][0]["f"][0] = [0.3, 0.3, 0.3]
    with pytest.raises(InstanceError):
        from_dict(data)
    # exact strings get no tolerance
    data["types"][0]["f"][0] = ["1/3", "1/3", "333333333333/1000000000000"]
    with pytest.raises(InstanceError):
        from_dict(data)


def test_weights_thresholds_contracts():
    inst = from_dict(theta2_dict(weights=["1"], thresholds=["1/8"], contracts=[[0, "1/2"]]))
    assert inst.thresholds == (F(1, 8),)
    assert inst.contracts[0] == (0, F(1, 2))
    with pytest.raises(InstanceError):
        from_dict(theta2_dict(thresholds=[0, 0]))
    with pytest.raises(InstanceError):
        from_dict(theta2_dict(contracts=[[0, 0, 0]]))
    with pytest.raises(InstanceError):
        from_dict(theta2_dict(weights=["1/2"]))


@pytest.mark.parametrize(
    "data",
    [
        [],
        {"types": []},
        {"rewards": [0, 1]},
        {"rewards": [0, 1], "types": [{"f": [[1, 0]]}]},
        {"rewards": [0, 1], "types": [{"f": [[1, 0, 0]], "c": [0]}]},
        {"rewards": [0, 1], "types": [{"f": [[1, 0]], "c": [1]}]},
        {"rewards": [0, 1], "types": [{"f": [[1, 0]], "c": [True]}]},
        {"rewards": [0, 1], "types": [{"f": [[1, 0]], "c": ["x"]}]},
        {"rewards": [1, 1], "types": [{"f": [[1, 0]], "c": [0]}]},
        {"rewards": [0, 1], "types": [{"f": [[1, 0]], "c": [0]}], "meta": []},
    ],
)
def test_invalid_instances(data):
    with pytest.raises(InstanceError):
        from_dict(data)


def test_invalid_json():
    with pytest.raises(InstanceError):
        loads("{not json")


def test_file_round_trip(tmp_path):
    inst = from_distribution(d1_linear(F(1, 20)), (0, 1), meta={"construction": "d1-linear"})
    path = tmp_path / "d1.json"
    save(inst, path)
    assert load(path) == inst
    assert json.loads(path.read_text())["weights"] == ["3/10", "7/10"]


@given(st.lists(typed_with_rewards(max_m=3), min_size=1, max_size=3))
def test_round_trip_is_exact(pairs):
    r = pairs[0][1]
    types = [th for th, rr in pairs if th.m == r.m] or [pairs[0][0]]
    inst = from_types(types, r)
    assert loads(dumps(inst)) == inst
    assert all(isinstance(x, str) for x in to_dict(inst)["rewards"])
