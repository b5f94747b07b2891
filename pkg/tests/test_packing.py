import random

import pytest

from imc_pack.allocation import FoldFailure, FoldStep, validate_allocation
from imc_pack.baselines import stack_tiles
from imc_pack.config import PackingOptions
from imc_pack.errors import SearchCeilingExceeded
from imc_pack.packing import (
    Column,
    Placement,
    allocate_columns,
    fold_layer,
    generate_columns,
    map_workload,
    min_dh_for_fit,
    min_dm_for_fit,
    pack_network,
    pack_rect_2d,
)
from imc_pack.tiling import SuperTile, Tile, generate_supertiles, generate_tiles
from imc_pack.workload import Lpf
from oracles import make_arch, make_layer, make_workload, rect_feasible


def _overlaps(a, b):
    (ax, ay, aw, ah), (bx, by, bw, bh) = a, b
    return ax < bx + bw and bx < ax + aw and ay < by + bh and by < ay + ah


def _column_of(*tms):
    """T_i = 16, T_o = 256, 주어진 T_m 의 단일 타일 컬럼들"""
    columns = []
    for i, tm in enumerate(tms):
        temporal = tuple(Lpf("K", p) for p in _factor(tm))
        tile = Tile(
            layer_id=f"l{i}",
            ti_lpfs=(Lpf("K", 2),) * 4,
            to_lpfs=(Lpf("C", 2),) * 8,
            th_lpfs=(),
            temporal_lpfs=temporal,
        )
        columns.append(Column((Placement(SuperTile((tile,)), 0, 0),), 4096))
    return columns


def _factor(n):
    result, d = [], 2
    while n > 1:
        while n % d == 0:
            result.append(d)
            n //= d
        d += 1
    return result


def test_pack_rect_2d_places_without_overlap():
    items = [(8, 128), (8, 128), (16, 64), (4, 32)]
    positions = pack_rect_2d(items, 16, 256)
    assert positions is not None
    rects = [(x, y, w, h) for (x, y), (w, h) in zip(positions, items)]
    for i, a in enumerate(rects):
        assert a[0] + a[2] <= 16 and a[1] + a[3] <= 256
        for b in rects[i + 1:]:
            assert not _overlaps(a, b)


def test_pack_rect_2d_rejects_and_is_deterministic():
    assert pack_rect_2d([(16, 200), (16, 100)], 16, 256) is None
    assert pack_rect_2d([(17, 1)], 16, 256) is None
    assert pack_rect_2d([(8, 256), (16, 128)], 16, 256) is None
    items = [(5, 100), (11, 30), (3, 200), (8, 8)]
    assert pack_rect_2d(items, 16, 256) == pack_rect_2d(items, 16, 256)
    with pytest.raises(ValueError):
        pack_rect_2d([(0, 4)], 16, 256)


def test_pack_rect_2d_against_exhaustive_oracle():
    rng = random.Random(11)
    for _ in range(150):
        items = [(rng.randint(1, 5), rng.randint(1, 6)) for _ in range(rng.randint(1, 3))]
        positions = pack_rect_2d(items, 6, 8)
        if positions is None:
            continue
        assert rect_feasible(items, 6, 8)
        rects = [(x, y, w, h) for (x, y), (w, h) in zip(positions, items)]
        for i, a in enumerate(rects):
            assert a[0] >= 0 and a[1] >= 0 and a[0] + a[2] <= 6 and a[1] + a[3] <= 8
            assert not any(_overlaps(a, b) for b in rects[i + 1:])


def test_column_density_example():
    arch = make_arch(Dm=4)
    tiles = [
        generate_tiles(make_layer("a", K=32, C=16, FX=3, FY=3), arch),
        generate_tiles(make_layer("b", K=32, C=100), arch),
    ]
    assert [(t.To, t.Tm) for t in tiles] == [(144, 2), (100, 2)]
    columns = generate_columns(generate_supertiles(tiles, arch), {"a": 1, "b": 1}, arch)
    assert len(columns) == 1
    assert columns[0].height == 2
    assert columns[0].density == pytest.approx(7808 / 8192)
    assert columns[0].layers == frozenset("ab")


def test_columns_cover_each_layer_th_times():
    arch = make_arch(Dh=2, Dm=8)
    workload = make_workload(
        make_layer("a", K=32, C=16, FX=3, FY=3),
        make_layer("b", K=64, C=64),
        make_layer("c", K=8, C=8, FX=3, FY=3),
    )
    tiles = {layer.id: generate_tiles(layer, arch) for layer in workload}
    multiplicities = {layer: t.Th for layer, t in tiles.items()}
    columns = generate_columns(generate_supertiles(list(tiles.values()), arch), multiplicities, arch)
    for layer, th in multiplicities.items():
        assert sum(1 for column in columns if layer in column.layers) == th
    for column in columns:
        rects = [(p.di_offset, p.do_offset, p.supertile.STi, p.supertile.STo) for p in column.placements]
        for i, a in enumerate(rects):
            assert a[0] + a[2] <= arch.Di and a[1] + a[3] <= arch.Do
            assert not any(_overlaps(a, b) for b in rects[i + 1:])


def test_greedy_columns_for_large_pools():
    arch = make_arch(Dm=16)
    layers = [make_layer(f"l{i}", K=16 * (1 + i % 3), C=8 * (1 + i % 5)) for i in range(12)]
    tiles = [generate_tiles(layer, arch) for layer in layers]
    options = PackingOptions(exhaustive_limit=4, greedy_seeds=4)
    columns = generate_columns(generate_supertiles(tiles, arch, options), {t.layer_id: 1 for t in tiles}, arch, options)
    covered = [layer for column in columns for layer in column.layers]
    assert sorted(covered) == sorted(t.layer_id for t in tiles)
    assert sum(column.height for column in columns) < sum(t.Tm for t in tiles)


def test_first_fit_decreasing_example():
    arch = make_arch(Dh=2, Dm=8)
    allocation = allocate_columns(_column_of(5, 4, 3), arch)
    assert allocation is not None
    placed = {e.layer_id: (e.macro, e.dm_offset) for e in allocation.entries}
    assert placed == {"l0": (0, 0), "l1": (1, 0), "l2": (0, 5)}
    assert allocation.macro_heights() == [8, 4]


def test_first_fit_decreasing_fails_when_too_tall():
    assert allocate_columns(_column_of(5, 4, 3), make_arch(Dh=2, Dm=6)) is None
    assert allocate_columns(_column_of(9), make_arch(Dh=4, Dm=8)) is None


def test_one_tile_per_layer_per_macro():
    arch = make_arch(Dh=2, Dm=8)
    columns = _column_of(1, 1)
    # 같은 레이어 id 를 가진 두 컬럼은 서로 다른 매크로로 간다
    twin = Tile(layer_id="l0", ti_lpfs=(Lpf("K", 2),) * 4, to_lpfs=(Lpf("C", 2),) * 8, th_lpfs=(), temporal_lpfs=())
    columns[1] = Column((Placement(SuperTile((twin,)), 0, 0),), 4096)
    allocation = allocate_columns(columns, arch)
    assert sorted(e.macro for e in allocation.entries) == [0, 1]
    assert allocate_columns(columns, make_arch(Dh=1, Dm=8)) is None


def _fold_instance():
    workload = make_workload(
        make_layer("a", K=8, C=512, OX=8, OY=8),
        make_layer("b", K=16, C=256, OX=4, OY=4),
        make_layer("c", K=16, C=128),
    )
    return workload, make_arch(Dh=1, Dm=3)


def test_fold_once_then_fit():
    workload, arch = _fold_instance()
    outcome = pack_network(workload, arch)
    assert outcome.success
    assert outcome.fold_trace == (FoldStep("c", "K", 2, 1, 8, 128, 2),)
    assert outcome.allocation.folds == {"c": (Lpf("K", 2),)}
    assert outcome.allocation.used_dm == 3
    assert validate_allocation(outcome.allocation, workload, arch) == []


def test_fold_layer_prefers_lowest_latency_and_skips_tall_layers():
    arch = make_arch(Dm=2)
    tiles = {
        "fast": generate_tiles(make_layer("fast", K=16, C=64), arch).fold(Lpf("K", 2)),
        "slow": generate_tiles(make_layer("slow", K=16, C=64), arch),
    }
    updated, step = fold_layer(tiles, {"fast": 1, "slow": 10}, arch)
    # fast 는 T_m 2 -> 4 가 D_m 을 넘으므로 건너뛴다
    assert isinstance(step, FoldStep) and step.layer_id == "slow"
    assert updated["slow"].Tm == 2
    assert updated["fast"] is tiles["fast"]

    updated, step = fold_layer(updated, {"fast": 1, "slow": 20}, arch)
    assert updated is None
    assert isinstance(step, FoldFailure)
    assert step.tried == ("fast", "slow")


def _tall_macro_instance():
    workload = make_workload(
        make_layer("a", K=256, C=4, FX=3, FY=3),
        make_layer("b", K=384, C=96),
        make_layer("c", K=512, C=8, FX=3, FY=3),
        make_layer("d", K=64, C=384, FX=3, FY=3),
        make_layer("e", K=16, C=3, FX=3, FY=3),
    )
    return workload, make_arch(Di=8, Do=32, Dh=4)


def test_packed_falls_back_to_stacked_layout_before_folding():
    workload, arch = _tall_macro_instance()
    point = arch.with_dims(Dm=min_dm_for_fit(workload, arch, "stacked"))
    outcome = pack_network(workload, point)
    assert outcome.success
    assert outcome.strategy == "packed"
    assert outcome.fold_trace == ()
    stacked, height = stack_tiles([generate_tiles(layer, point) for layer in workload], point, strategy="packed")
    assert height == point.Dm
    assert outcome.allocation == stacked
    assert validate_allocation(outcome.allocation, workload, point) == []


@pytest.mark.slow
def test_packed_min_dm_not_above_stacked_with_several_macros():
    workload, arch = _tall_macro_instance()
    assert min_dm_for_fit(workload, arch, "packed") <= min_dm_for_fit(workload, arch, "stacked")


def test_packing_failure_records_every_layer():
    # 부피는 딱 맞지만 8x256 과 16x128 은 한 평면에 같이 못 놓고, D_m = 1 이라 접을 수도 없다
    workload = make_workload(make_layer("x", K=8, C=256), make_layer("y", K=16, C=128))
    outcome = pack_network(workload, make_arch(Dh=1, Dm=1))
    assert not outcome.success
    assert outcome.fold_steps == []
    assert "no layer can be folded" in outcome.failure.reason
    assert set(outcome.failure.tried) == {"x", "y"}


def test_capacity_short_circuit():
    workload = make_workload(make_layer("big", K=64, C=256))
    outcome = pack_network(workload, make_arch(Dm=3))
    assert not outcome.success
    assert outcome.fold_steps == []
    assert "capacity" in outcome.failure.reason


def test_unknown_strategy():
    with pytest.raises(ValueError, match="unknown strategy"):
        map_workload(make_workload(make_layer("a", 4, 4)), make_arch(), "scattered")


def test_min_dm_search(ds_cnn, dimc):
    arch, _ = dimc
    assert min_dm_for_fit(ds_cnn, arch, "stacked") == 37
    flattened = min_dm_for_fit(ds_cnn, arch, "flattened")
    assert not map_workload(ds_cnn, arch.with_dims(Dm=flattened - 1), "flattened").success
    assert map_workload(ds_cnn, arch.with_dims(Dm=flattened), "flattened").success


def test_min_dh_search(ds_cnn, dimc):
    arch, _ = dimc
    dh = min_dh_for_fit(ds_cnn, arch.with_dims(Dm=8), "stacked")
    assert map_workload(ds_cnn, arch.with_dims(Dh=dh, Dm=8), "stacked").success
    assert not map_workload(ds_cnn, arch.with_dims(Dh=dh - 1, Dm=8), "stacked").success


@pytest.mark.parametrize("K, C, kernel", [(64, 512, 1), (32, 256, 3), (16, 256, 1), (128, 1024, 1)])
@pytest.mark.parametrize("Dh", [1, 2, 4])
def test_single_plane_filling_layer_min_dm(K, C, kernel, Dh):
    layer = make_layer("l", K=K, C=C, FX=kernel, FY=kernel)
    arch = make_arch(Dh=Dh)
    tile = generate_tiles(layer, arch)
    assert (tile.Ti, tile.To) == (arch.Di, arch.Do)
    expected = -(-layer.weight_volume // (arch.plane * tile.Th))
    for strategy in ("packed", "stacked"):
        assert min_dm_for_fit(make_workload(layer), arch, strategy) == expected


def test_search_ceiling():
    workload = make_workload(make_layer("a", K=16, C=256 * 9))
    with pytest.raises(SearchCeilingExceeded):
        min_dm_for_fit(workload, make_arch(), "stacked", PackingOptions(dm_ceiling=4))
