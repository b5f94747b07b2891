"""
기준 매핑 - stacked (타일을 D_m 으로 쌓기만 함), flattened (D_i x D_o 평면을 가득 채워 펼침)
"""
import logging
from math import ceil
from typing import List, Optional, Sequence, Tuple

from .allocation import Allocation, AllocationEntry, FoldFailure, PackOutcome
from .architecture import ImcArchitecture
from .config import PackingOptions
from .tiling import LayerFootprint, Tile, generate_tiles
from .workload import Layer, Workload

logger = logging.getLogger(__name__)


def stack_tiles(
    tiles: Sequence[Tile], arch: ImcArchitecture, strategy: str = "stacked"
) -> Tuple[Optional[Allocation], int]:
    """레이어 순서대로 (0, 0) 위치에 타일을 쌓는다 -> (할당 또는 None, 가장 높은 매크로 높이)

    레이어의 T_h 개 타일은 회전 커서로 서로 다른 매크로에 놓인다.
    """
    heights = [0] * arch.Dh
    cursor = 0
    entries = []
    for tile in tiles:
        for j in range(tile.Th):
            macro = (cursor + j) % arch.Dh
            entries.append(AllocationEntry(tile.layer_id, macro, heights[macro], 0, 0, tile.Ti, tile.To, tile.Tm))
            heights[macro] += tile.Tm
        cursor = (cursor + tile.Th) % arch.Dh

    height = max(heights)
    if height > arch.Dm:
        return None, height
    allocation = Allocation(
        strategy=strategy,
        Di=arch.Di,
        Do=arch.Do,
        Dh=arch.Dh,
        Dm=arch.Dm,
        entries=tuple(entries),
        footprints=tuple(t.footprint for t in tiles),
        folds={t.layer_id: t.folded_lpfs for t in tiles if t.folded_lpfs},
    )
    return allocation, height


def map_stacked(
    workload: Workload, arch: ImcArchitecture, options: Optional[PackingOptions] = None
) -> PackOutcome:
    """타일을 D_m 으로 쌓기만 하는 기준 매핑 (폴딩 없음)"""
    tiles = [generate_tiles(layer, arch) for layer in workload]
    allocation, height = stack_tiles(tiles, arch)
    trace = ()
    if allocation is None:
        logger.info("stacked %s: height %d exceeds Dm=%d", workload.name, height, arch.Dm)
        trace = (FoldFailure(tried=(), reason=f"stack height {height} exceeds Dm={arch.Dm}"),)
    return PackOutcome(
        strategy="stacked",
        Di=arch.Di,
        Do=arch.Do,
        Dh=arch.Dh,
        Dm=arch.Dm,
        allocation=allocation,
        footprints=tuple(t.footprint for t in tiles),
        tiles=tuple(tiles),
        fold_trace=trace,
    )


def _flattened_footprint(layer: Layer, arch: ImcArchitecture, slots: List[int]) -> LayerFootprint:
    per_macro = [0] * arch.Dh
    for slot in slots:
        per_macro[slot % arch.Dh] += 1
    macros = sum(1 for n in per_macro if n)
    return LayerFootprint(
        layer_id=layer.id,
        Ti=min(layer.K, arch.Di),
        To=min(layer.input_relevant_size, arch.Do),
        Tm=max(per_macro),
        Th=macros,
    )


def flattened_slices(layer: Layer, arch: ImcArchitecture) -> int:
    return ceil(layer.weight_volume / arch.plane)


def map_flattened(
    workload: Workload, arch: ImcArchitecture, options: Optional[PackingOptions] = None
) -> PackOutcome:
    """레이어마다 가중치를 D_i x D_o 조각으로 잘라 (매크로, D_m) 슬롯을 차례로 채운다

    슬롯 t 는 매크로 t % D_h, 높이 t // D_h. 조각 순서는 K 우선, C/FX/FY 다음이며
    마지막 조각은 q 행 전체 + 한 행 일부의 두 엔트리로 나뉠 수 있다.
    """
    entries = []
    footprints = []
    slot = 0
    for layer in workload:
        full, rest = divmod(layer.weight_volume, arch.plane)
        slots = list(range(slot, slot + full + (1 if rest else 0)))
        for t in slots[:full]:
            entries.append(AllocationEntry(layer.id, t % arch.Dh, t // arch.Dh, 0, 0, arch.Di, arch.Do, 1))
        if rest:
            t = slots[-1]
            rows, tail = divmod(rest, arch.Do)
            if rows:
                entries.append(AllocationEntry(layer.id, t % arch.Dh, t // arch.Dh, 0, 0, rows, arch.Do, 1))
            if tail:
                entries.append(AllocationEntry(layer.id, t % arch.Dh, t // arch.Dh, rows, 0, 1, tail, 1))
        footprints.append(_flattened_footprint(layer, arch, slots))
        slot += len(slots)

    footprints = tuple(footprints)
    if slot > arch.Dh * arch.Dm:
        logger.info("flattened %s: %d slices exceed %d slots", workload.name, slot, arch.Dh * arch.Dm)
        allocation = None
        trace = (FoldFailure(tried=(), reason=f"{slot} slices exceed Dh*Dm={arch.Dh * arch.Dm}"),)
    else:
        allocation = Allocation(
            strategy="flattened",
            Di=arch.Di,
            Do=arch.Do,
            Dh=arch.Dh,
            Dm=arch.Dm,
            entries=tuple(entries),
            footprints=footprints,
        )
        trace = ()
    return PackOutcome(
        strategy="flattened",
        Di=arch.Di,
        Do=arch.Do,
        Dh=arch.Dh,
        Dm=arch.Dm,
        allocation=allocation,
        footprints=footprints,
        fold_trace=trace,
    )
