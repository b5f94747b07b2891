import json

import pytest

from imc_pack.errors import WorkloadParseError, WorkloadValidationError
from imc_pack.workload import (
    Lpf,
    LpfSet,
    dump_workload,
    load_workload,
    lpf_decompose,
    parse_workload,
    prime_factors,
    serialize_workload,
)
from oracles import make_layer, make_workload


def test_prime_factors():
    assert prime_factors(1) == []
    assert prime_factors(12) == [2, 2, 3]
    assert prime_factors(97) == [97]
    assert prime_factors(640) == [2] * 7 + [5]


def test_lpf_decompose_orders_by_loop_then_prime():
    layer = make_layer("conv", K=12, C=10, FX=3, FY=1)
    lpfs = lpf_decompose(layer)
    assert lpfs.factors == (
        Lpf("K", 2),
        Lpf("K", 2),
        Lpf("K", 3),
        Lpf("C", 2),
        Lpf("C", 5),
        Lpf("FX", 3),
    )
    assert lpfs.product() == layer.weight_volume
    assert lpfs.product("C", "FX", "FY") == 30
    assert Lpf("FX", 3).input_relevant and not Lpf("K", 3).input_relevant


def test_lpf_set_is_sorted_multiset():
    a = LpfSet((Lpf("C", 3), Lpf("K", 2), Lpf("K", 2)))
    b = LpfSet((Lpf("K", 2), Lpf("C", 3), Lpf("K", 2)))
    assert a == b
    assert a.counts()[Lpf("K", 2)] == 2
    assert len(a) == 3


def test_layer_derived_sizes():
    layer = make_layer("c", K=32, C=16, FX=3, FY=3, OX=8, OY=8)
    assert layer.weight_volume == 32 * 16 * 9
    assert layer.mac_count == 32 * 16 * 9 * 64
    assert layer.input_relevant_size == 144
    assert layer.weight_bits_total == layer.weight_volume * 4
    assert layer.activation_bits() == (16 * 10 * 10 + 32 * 64) * 4


@pytest.mark.parametrize("field", ["K", "C", "OX", "weight_bits"])
def test_layer_rejects_non_positive_dims(field):
    values = dict(K=4, C=4, FX=1, FY=1, OX=1, OY=1, weight_bits=4, act_bits=4)
    values[field] = 0
    with pytest.raises(WorkloadValidationError):
        parse_workload({"name": "w", "layers": [{"id": "l", **values}]})


def test_duplicate_layer_ids_rejected():
    with pytest.raises(WorkloadValidationError, match="duplicate"):
        make_workload(make_layer("a", 4, 4), make_layer("a", 8, 8))


def test_empty_workload_rejected():
    with pytest.raises(WorkloadValidationError):
        parse_workload({"name": "w", "layers": []})


def test_parse_error_names_layer_and_field():
    doc = {"name": "w", "layers": [{"id": "conv1", "K": 4, "C": 4, "FX": 1, "FY": 1, "OX": 1, "weight_bits": 4, "act_bits": 4}]}
    with pytest.raises(WorkloadParseError) as info:
        parse_workload(doc)
    assert info.value.layer == "conv1"
    assert info.value.field == "OY"
    assert "conv1" in str(info.value) and "OY" in str(info.value)


def test_parse_error_on_non_integer_and_unknown_fields():
    base = {"id": "l", "K": 4, "C": 4, "FX": 1, "FY": 1, "OX": 1, "OY": 1, "weight_bits": 4, "act_bits": 4}
    with pytest.raises(WorkloadParseError, match="expected integer"):
        parse_workload({"name": "w", "layers": [{**base, "K": 4.5}]})
    with pytest.raises(WorkloadParseError, match="unknown fields"):
        parse_workload({"name": "w", "layers": [{**base, "stride": 2}]})


def test_parse_error_on_bad_json_text():
    with pytest.raises(WorkloadParseError):
        parse_workload('{"name": "w", "layers": [')


def test_missing_file_lists_bundled_workloads(tmp_path):
    with pytest.raises(WorkloadParseError, match="ds_cnn"):
        load_workload(str(tmp_path / "nope.json"))


@pytest.mark.parametrize("name", ["resnet8", "ds_cnn", "mobilenet_v1_025", "autoencoder"])
def test_bundled_workloads_load(name):
    workload = load_workload(name)
    assert workload.name == name
    assert len(workload) >= 10
    assert workload.weight_volume > 0


def test_dump_and_load_from_path(tmp_path):
    workload = make_workload(make_layer("a", 8, 3, 3, 3, 4, 4), make_layer("b", 10, 8))
    path = tmp_path / "w.json"
    dump_workload(workload, path)
    assert load_workload(str(path)) == workload
    assert load_workload(json.dumps(serialize_workload(workload))) == workload
