from imc_pack.allocation import validate_allocation
from imc_pack.baselines import flattened_slices, map_flattened, map_stacked
from oracles import make_arch, make_layer, make_workload


def _two_layers():
    return make_workload(make_layer("a", K=32, C=256), make_layer("b", K=48, C=256))


def test_stacked_offsets():
    workload = _two_layers()
    outcome = map_stacked(workload, make_arch(Dm=5))
    assert outcome.success
    entries = outcome.allocation.entries
    assert [(e.layer_id, e.dm_offset, e.Tm, e.di_offset, e.do_offset) for e in entries] == [
        ("a", 0, 2, 0, 0),
        ("b", 2, 3, 0, 0),
    ]
    assert validate_allocation(outcome.allocation, workload) == []


def test_stacked_fails_when_too_tall():
    outcome = map_stacked(_two_layers(), make_arch(Dm=4))
    assert not outcome.success
    assert "stack height 5" in outcome.failure.reason
    assert outcome.as_allocation().fit_on_chip is False


def test_stacked_spreads_th_tiles_over_macros():
    # 각 레이어는 T_h = 2, 회전 커서로 매크로 0/1 을 번갈아 채운다
    workload = make_workload(make_layer("a", K=32, C=512), make_layer("b", K=32, C=512), make_layer("c", K=16, C=512))
    outcome = map_stacked(workload, make_arch(Dh=2, Dm=5))
    assert outcome.success
    per_macro = {}
    for e in outcome.allocation.entries:
        per_macro.setdefault(e.macro, []).append(e.layer_id)
    assert per_macro == {0: ["a", "b", "c"], 1: ["a", "b", "c"]}
    assert validate_allocation(outcome.allocation, workload) == []


def test_flattened_splits_partial_plane():
    workload = make_workload(make_layer("fc", K=40, C=256))
    arch = make_arch(Dm=3)
    assert flattened_slices(workload.layers[0], arch) == 3
    outcome = map_flattened(workload, arch)
    assert outcome.success
    shapes = [(e.dm_offset, e.Ti, e.To) for e in outcome.allocation.entries]
    assert shapes == [(0, 16, 256), (1, 16, 256), (2, 8, 256)]
    assert validate_allocation(outcome.allocation, workload) == []
    assert not map_flattened(workload, make_arch(Dm=2)).success


def test_flattened_row_and_tail():
    workload = make_workload(make_layer("odd", K=3, C=100), make_layer("next", K=2, C=8))
    outcome = map_flattened(workload, make_arch(Di=4, Do=64, Dh=2, Dm=2))
    entries = [(e.layer_id, e.macro, e.dm_offset, e.di_offset, e.Ti, e.To) for e in outcome.allocation.entries]
    # 300 = 4x64 + 44 -> 두 번째 조각은 0 행 + 44 꼬리
    assert entries == [
        ("odd", 0, 0, 0, 4, 64),
        ("odd", 1, 0, 0, 1, 44),
        ("next", 0, 1, 0, 1, 16),
    ]
    assert validate_allocation(outcome.allocation, workload) == []


def test_flattened_round_robin_over_macros():
    workload = make_workload(*(make_layer(f"l{i}", K=16, C=256) for i in range(5)))
    outcome = map_flattened(workload, make_arch(Dh=2, Dm=3))
    assert [(e.macro, e.dm_offset) for e in outcome.allocation.entries] == [(0, 0), (1, 0), (0, 1), (1, 1), (0, 2)]
    assert not map_flattened(workload, make_arch(Dh=2, Dm=2)).success
