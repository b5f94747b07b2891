"""
패킹 모듈 - 컬럼 생성, 컬럼의 매크로 할당, 폴딩 재시도 루프

흐름: 타일 -> 슈퍼타일 -> 컬럼(2D 패킹) -> 매크로 할당(1D bin packing)
할당이 실패하면 지연이 가장 작은 레이어의 공간 LPF 하나를 T_m 으로 접고
타일부터 다시 만든다.
"""
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from math import ceil
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

from rectpack import SORT_NONE, MaxRectsBssf, PackingMode, newPacker

from .allocation import Allocation, AllocationEntry, FoldFailure, FoldStep, PackOutcome
from .architecture import ImcArchitecture
from .baselines import flattened_slices, map_flattened, map_stacked, stack_tiles
from .config import STRATEGIES, PackingOptions
from .costmodel import layer_cycles
from .errors import SearchCeilingExceeded
from .tiling import SuperTile, Tile, generate_supertiles, generate_tiles
from .workload import Workload

logger = logging.getLogger(__name__)


@lru_cache(maxsize=65536)
def _pack_rect_cached(
    items: Tuple[Tuple[int, int], ...], width: int, height: int
) -> Optional[Tuple[Tuple[int, int], ...]]:
    # 한 변을 꽉 채우는 띠들은 그대로 이어 붙인다
    if all(w == width for w, _ in items):
        offsets = [sum(h for _, h in items[:i]) for i in range(len(items))]
        return tuple((0, y) for y in offsets) if sum(h for _, h in items) <= height else None
    if all(h == height for _, h in items):
        offsets = [sum(w for w, _ in items[:i]) for i in range(len(items))]
        return tuple((x, 0) for x in offsets) if sum(w for w, _ in items) <= width else None

    packer = newPacker(mode=PackingMode.Offline, pack_algo=MaxRectsBssf, sort_algo=SORT_NONE, rotation=False)
    packer.add_bin(width, height)
    for rid, (w, h) in enumerate(items):
        packer.add_rect(w, h, rid=rid)
    packer.pack()

    rects = packer.rect_list()
    if len(rects) != len(items):
        return None
    positions: List[Tuple[int, int]] = [(0, 0)] * len(items)
    for _, x, y, _, _, rid in rects:
        positions[rid] = (x, y)
    return tuple(positions)


def pack_rect_2d(
    items: Sequence[Tuple[int, int]], width: int, height: int
) -> Optional[List[Tuple[int, int]]]:
    """(w, h) 직사각형들을 width x height 평면에 배치 (MaxRects best-short-side-fit)

    실패하면 None. 입력 순서가 같으면 결과도 같다.
    """
    items = tuple((int(w), int(h)) for w, h in items)
    if any(w < 1 or h < 1 for w, h in items):
        raise ValueError("rectangle sides must be positive")
    if any(w > width or h > height for w, h in items):
        return None
    if sum(w * h for w, h in items) > width * height:
        return None
    positions = _pack_rect_cached(items, width, height)
    return list(positions) if positions is not None else None


class Placement(NamedTuple):
    supertile: SuperTile
    di_offset: int
    do_offset: int


@dataclass(frozen=True)
class Column:
    """D_i x D_o 평면에 2D 패킹된 슈퍼타일 묶음"""

    placements: Tuple[Placement, ...]
    plane: int
    height: int = field(init=False)
    volume: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "placements", tuple(self.placements))
        object.__setattr__(self, "height", max(p.supertile.STm for p in self.placements))
        object.__setattr__(self, "volume", sum(p.supertile.volume for p in self.placements))

    @property
    def density(self) -> float:
        return self.volume / (self.plane * self.height)

    @property
    def layers(self) -> frozenset:
        return frozenset().union(*(p.supertile.layers for p in self.placements))


def _try_pack(supertiles: Sequence[SuperTile], arch: ImcArchitecture) -> Optional[Tuple[Placement, ...]]:
    """슈퍼타일 묶음을 면적 내림차순으로 2D 패킹"""
    ordered = sorted(supertiles, key=lambda st: -st.area)
    positions = pack_rect_2d([(st.STi, st.STo) for st in ordered], arch.Di, arch.Do)
    if positions is None:
        return None
    return tuple(Placement(st, x, y) for st, (x, y) in zip(ordered, positions))


def _disjoint(supertiles: Sequence[SuperTile]) -> bool:
    seen = set()
    for st in supertiles:
        if not seen.isdisjoint(st.layers):
            return False
        seen |= st.layers
    return True


def _denser(volume: int, height: int, best_volume: int, best_height: int) -> bool:
    """volume/height > best_volume/best_height (정수 비교)"""
    return volume * best_height > best_volume * height


def _best_exhaustive(live: Sequence[SuperTile], arch: ImcArchitecture) -> Tuple[Placement, ...]:
    best: Optional[Tuple[Placement, ...]] = None
    best_volume, best_height = 0, 1
    for size in range(1, len(live) + 1):
        for subset in combinations(live, size):
            if sum(st.area for st in subset) > arch.plane or not _disjoint(subset):
                continue
            volume = sum(st.volume for st in subset)
            height = max(st.STm for st in subset)
            if best is not None and not _denser(volume, height, best_volume, best_height):
                continue
            placements = _try_pack(subset, arch)
            if placements is not None:
                best, best_volume, best_height = placements, volume, height
    return best


def _best_greedy(live: Sequence[SuperTile], arch: ImcArchitecture, options: PackingOptions) -> Tuple[Placement, ...]:
    candidates: List[Tuple[Placement, ...]] = []
    for seed in live[: options.greedy_seeds]:
        members = [seed]
        used = set(seed.layers)
        placements = _try_pack(members, arch)
        area = seed.area
        for st in live:
            if st is seed or st.STm > seed.STm or area + st.area > arch.plane:
                continue
            if not used.isdisjoint(st.layers):
                continue
            packed = _try_pack(members + [st], arch)
            if packed is not None:
                members.append(st)
                used |= st.layers
                placements = packed
                area += st.area
        candidates.append(placements)
    # 단일 슈퍼타일 컬럼도 후보로 둔다
    candidates.extend(_try_pack([st], arch) for st in live if len(st.tiles) == 1)

    best = None
    best_volume, best_height = 0, 1
    for placements in candidates:
        volume = sum(p.supertile.volume for p in placements)
        height = max(p.supertile.STm for p in placements)
        if best is None or _denser(volume, height, best_volume, best_height) or (
            volume * best_height == best_volume * height and len(placements) < len(best)
        ):
            best, best_volume, best_height = placements, volume, height
    return best


def generate_columns(
    supertiles: Sequence[SuperTile],
    multiplicities: Dict[str, int],
    arch: ImcArchitecture,
    options: Optional[PackingOptions] = None,
) -> List[Column]:
    """밀도가 가장 높은 컬럼을 하나씩 만들어 풀이 빌 때까지 반복

    multiplicities: 레이어별 남은 타일 개수 (보통 T_h).
    소진된 레이어를 포함한 슈퍼타일은 풀에서 빠진다.
    """
    options = options or PackingOptions()
    remaining = dict(multiplicities)
    columns: List[Column] = []
    while any(n > 0 for n in remaining.values()):
        live = [st for st in supertiles if all(remaining.get(layer, 0) > 0 for layer in st.layers)]
        if not live:
            missing = sorted(layer for layer, n in remaining.items() if n > 0)
            raise ValueError(f"no supertile left for layers {missing}")
        if len(live) <= options.exhaustive_limit:
            placements = _best_exhaustive(live, arch)
        else:
            placements = _best_greedy(live, arch, options)
        column = Column(placements, arch.plane)
        for layer in column.layers:
            remaining[layer] -= 1
        columns.append(column)
        logger.debug(
            "column %d: %s height=%d density=%.3f",
            len(columns),
            [p.supertile.layer_ids for p in placements],
            column.height,
            column.density,
        )
    return columns


def allocate_columns(
    columns: Sequence[Column],
    arch: ImcArchitecture,
    layer_order: Optional[Sequence[str]] = None,
    strategy: str = "packed",
) -> Optional[Allocation]:
    """컬럼을 매크로에 배치 (높이 내림차순 first-fit, 매크로당 레이어 하나 제약)

    컬럼은 쪼개지 않는다. 하나라도 못 놓으면 None.
    """
    heights = [0] * arch.Dh
    macro_layers = [set() for _ in range(arch.Dh)]
    slots: Dict[int, Tuple[int, int]] = {}
    for index in sorted(range(len(columns)), key=lambda i: -columns[i].height):
        column = columns[index]
        layers = column.layers
        for macro in range(arch.Dh):
            if heights[macro] + column.height <= arch.Dm and macro_layers[macro].isdisjoint(layers):
                slots[index] = (macro, heights[macro])
                heights[macro] += column.height
                macro_layers[macro] |= layers
                break
        else:
            logger.debug("column %d (height %d) does not fit, macro heights %s", index, column.height, heights)
            return None

    entries = []
    tiles: Dict[str, Tile] = {}
    for index, column in enumerate(columns):
        macro, base = slots[index]
        for placement in column.placements:
            for tile, offset in placement.supertile.offsets():
                tiles.setdefault(tile.layer_id, tile)
                entries.append(
                    AllocationEntry(
                        layer_id=tile.layer_id,
                        macro=macro,
                        dm_offset=base + offset,
                        di_offset=placement.di_offset,
                        do_offset=placement.do_offset,
                        Ti=tile.Ti,
                        To=tile.To,
                        Tm=tile.Tm,
                    )
                )
    order = list(layer_order) if layer_order is not None else list(tiles)
    ordered = [tiles[layer] for layer in order if layer in tiles]
    return Allocation(
        strategy=strategy,
        Di=arch.Di,
        Do=arch.Do,
        Dh=arch.Dh,
        Dm=arch.Dm,
        entries=tuple(entries),
        footprints=tuple(t.footprint for t in ordered),
        folds={t.layer_id: t.folded_lpfs for t in ordered if t.folded_lpfs},
        fit_on_chip=True,
    )


def fold_layer(
    tiles: Dict[str, Tile], latencies: Dict[str, int], arch: ImcArchitecture
) -> Tuple[Optional[Dict[str, Tile]], Union[FoldStep, FoldFailure]]:
    """지연이 가장 작은 레이어의 공간 LPF 하나를 T_m 으로 접는다

    반환: (새 타일 맵, FoldStep) 또는 (None, FoldFailure).
    K 소인수(T_i)를 먼저 접고, 접은 T_m 이 D_m 을 넘으면 다음 레이어로 넘어간다.
    """
    position = {layer: i for i, layer in enumerate(tiles)}
    order = sorted(tiles, key=lambda layer: (latencies[layer], position[layer]))
    for layer_id in order:
        tile = tiles[layer_id]
        lpf = tile.fold_candidate()
        if lpf is None or tile.Tm * lpf.prime > arch.Dm:
            continue
        folded = tile.fold(lpf)
        updated = dict(tiles)
        updated[layer_id] = folded
        step = FoldStep(
            layer_id=layer_id,
            tag=lpf.tag,
            prime=lpf.prime,
            latency=latencies[layer_id],
            Ti=folded.Ti,
            To=folded.To,
            Tm=folded.Tm,
        )
        logger.info("fold %s: %s%d -> Ti=%d To=%d Tm=%d", layer_id, lpf.tag, lpf.prime, folded.Ti, folded.To, folded.Tm)
        return updated, step
    return None, FoldFailure(tried=tuple(order), reason=f"no layer can be folded within Dm={arch.Dm}")


def _outcome(
    strategy: str,
    arch: ImcArchitecture,
    allocation: Optional[Allocation],
    tiles: Sequence[Tile],
    columns: Sequence[Column],
    trace: Sequence,
) -> PackOutcome:
    return PackOutcome(
        strategy=strategy,
        Di=arch.Di,
        Do=arch.Do,
        Dh=arch.Dh,
        Dm=arch.Dm,
        allocation=allocation,
        footprints=tuple(t.footprint for t in tiles),
        tiles=tuple(tiles),
        columns=tuple(columns),
        fold_trace=tuple(trace),
    )


def _singleton_columns(tiles: Dict[str, Tile], arch: ImcArchitecture) -> List[Column]:
    return [Column((Placement(SuperTile((t,)), 0, 0),), arch.plane) for t in tiles.values() for _ in range(t.Th)]


def pack_network(
    workload: Workload, arch: ImcArchitecture, options: Optional[PackingOptions] = None
) -> PackOutcome:
    """패킹 전체 흐름

    컬럼 할당이 실패하면 접지 않은 타일의 쌓기 배치를 먼저 시도하고,
    그것도 안 되면 할당이 될 때까지 폴딩하며 재시도한다.
    """
    options = options or PackingOptions()
    tiles = {layer.id: generate_tiles(layer, arch) for layer in workload}
    order = workload.layer_ids
    trace: List = []

    # 폴딩은 부피를 보존하고 T_m 을 늘리기만 하므로 이 두 경우는 바로 실패
    if workload.weight_volume > arch.capacity:
        trace.append(
            FoldFailure(tried=order, reason=f"{workload.weight_volume} weights exceed capacity {arch.capacity}")
        )
        return _outcome("packed", arch, None, list(tiles.values()), (), trace)
    tall = [t for t in tiles.values() if t.Tm > arch.Dm]
    if tall:
        trace.append(FoldFailure(tried=order, reason=f"layer {tall[0].layer_id} needs Tm={tall[0].Tm} > Dm={arch.Dm}"))
        return _outcome("packed", arch, None, list(tiles.values()), (), trace)

    while True:
        pool = generate_supertiles(list(tiles.values()), arch, options)
        columns = generate_columns(pool, {layer: t.Th for layer, t in tiles.items()}, arch, options)
        allocation = allocate_columns(columns, arch, order)
        if allocation is not None:
            logger.info(
                "packed %s: %d columns, %d folds, used Dm %d/%d",
                workload.name,
                len(columns),
                len(trace),
                allocation.used_dm,
                arch.Dm,
            )
            return _outcome("packed", arch, allocation, list(tiles.values()), columns, trace)
        if not trace:
            # 접지 않은 타일의 쌓기 배치가 들어가면 폴딩하지 않는다
            stacked, _ = stack_tiles(list(tiles.values()), arch, strategy="packed")
            if stacked is not None:
                logger.info("packed %s: columns do not fit at Dm=%d, using the stacked layout", workload.name, arch.Dm)
                return _outcome("packed", arch, stacked, list(tiles.values()), _singleton_columns(tiles, arch), trace)

        latencies = {layer.id: layer_cycles(layer, tiles[layer.id]) for layer in workload}
        updated, step = fold_layer(tiles, latencies, arch)
        trace.append(step)
        if updated is None:
            logger.info("packing %s failed at Dm=%d after %d folds", workload.name, arch.Dm, len(trace) - 1)
            return _outcome("packed", arch, None, list(tiles.values()), columns, trace)
        tiles = updated


def map_workload(
    workload: Workload, arch: ImcArchitecture, strategy: str = "packed", options: Optional[PackingOptions] = None
) -> PackOutcome:
    """전략별 매핑"""
    mappers: Dict[str, Callable[..., PackOutcome]] = {
        "packed": pack_network,
        "stacked": map_stacked,
        "flattened": map_flattened,
    }
    if strategy not in mappers:
        raise ValueError(f"unknown strategy {strategy!r} (choose from {', '.join(STRATEGIES)})")
    return mappers[strategy](workload, arch, options)


def _lower_bound(workload: Workload, arch: ImcArchitecture, strategy: str, other: int) -> int:
    """탐색 시작점 - other 는 고정된 나머지 차원(D_h 또는 D_m)"""
    if strategy == "flattened":
        slices = sum(flattened_slices(layer, arch) for layer in workload)
        return max(1, ceil(slices / other))
    return max(1, ceil(workload.weight_volume / (arch.plane * other)))


def _search_min(fits: Callable[[int], bool], lower: int, ceiling: int, label: str) -> int:
    """fits(v) 가 참인 가장 작은 v 탐색 (배증 후 이분 탐색)"""
    lower = min(max(1, lower), ceiling)
    if fits(lower):
        return lower
    if lower >= ceiling:
        raise SearchCeilingExceeded(f"no fit for {label} up to ceiling {ceiling}")
    failing, candidate = lower, lower
    while True:
        candidate = min(candidate * 2, ceiling)
        if fits(candidate):
            break
        if candidate >= ceiling:
            raise SearchCeilingExceeded(f"no fit for {label} up to ceiling {ceiling}")
        failing = candidate
    fitting = candidate
    while fitting - failing > 1:
        mid = (failing + fitting) // 2
        if fits(mid):
            fitting = mid
        else:
            failing = mid
    return fitting


def min_dm_for_fit(
    workload: Workload, arch: ImcArchitecture, strategy: str = "packed", options: Optional[PackingOptions] = None
) -> int:
    """전략이 칩에 다 들어가는 최소 D_m (D_h 는 arch 값 고정)"""
    options = options or PackingOptions()
    lower = _lower_bound(workload, arch, strategy, arch.Dh)
    if strategy != "flattened":
        lower = max(lower, max(generate_tiles(layer, arch).Tm for layer in workload))

    def fits(dm: int) -> bool:
        ok = map_workload(workload, arch.with_dims(Dm=dm), strategy, options).success
        logger.debug("min-Dm check %s/%s Dm=%d: %s", workload.name, strategy, dm, ok)
        return ok

    result = _search_min(fits, lower, options.dm_ceiling, f"{workload.name}/{strategy} (Dm)")
    logger.info("min Dm %s/%s at Dh=%d: %d", workload.name, strategy, arch.Dh, result)
    return result


def min_dh_for_fit(
    workload: Workload, arch: ImcArchitecture, strategy: str = "packed", options: Optional[PackingOptions] = None
) -> int:
    """전략이 칩에 다 들어가는 최소 D_h (D_m 은 arch 값 고정)"""
    options = options or PackingOptions()
    lower = _lower_bound(workload, arch, strategy, arch.Dm)

    def fits(dh: int) -> bool:
        ok = map_workload(workload, arch.with_dims(Dh=dh), strategy, options).success
        logger.debug("min-Dh check %s/%s Dh=%d: %s", workload.name, strategy, dh, ok)
        return ok

    result = _search_min(fits, lower, options.dm_ceiling, f"{workload.name}/{strategy} (Dh)")
    logger.info("min Dh %s/%s at Dm=%d: %d", workload.name, strategy, arch.Dm, result)
    return result
