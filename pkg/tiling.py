"""
타일링 모듈 - 레이어별 균일 타일 생성과 슈퍼타일 풀 생성

타일은 T_h 개의 동일한 T_i x T_o x T_m 블록이다.
  - T_i: K 소인수만 (D_i 방향)
  - T_o: C, FX, FY 소인수만 (D_o 방향)
  - T_h: 남은 소인수 중 D_h 에 펼칠 것 (입력 관련 소인수 우선)
  - T_m: 나머지 전부 (시간 다중화)
"""
import logging
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .architecture import ImcArchitecture
from .config import PackingOptions
from .workload import INPUT_RELEVANT_LOOPS, Layer, Lpf, lpf_decompose, lpf_sort_key, prime_factors, product

logger = logging.getLogger(__name__)


def max_subset_product(factors: Iterable[int], cap: int) -> Tuple[Tuple[int, ...], int]:
    """곱이 cap 이하인 부분 멀티셋 중 곱이 최대인 것을 반환

    소인수분해가 유일하므로 최대 곱을 주는 부분 멀티셋은 하나뿐이다.
    """
    if cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap}")
    counts = sorted(Counter(p for p in factors if p > 1).items())
    primes = [p for p, _ in counts]
    limits = [n for _, n in counts]

    @lru_cache(maxsize=None)
    def best(i: int, budget: int) -> int:
        if i == len(primes):
            return 1
        result = 1
        power = 1
        for _ in range(limits[i] + 1):
            if power > budget:
                break
            result = max(result, power * best(i + 1, budget // power))
            power *= primes[i]
        return result

    value = best(0, cap)
    return tuple(prime_factors(value)), value


def _select(pool: Sequence[Lpf], cap: int) -> Tuple[Tuple[Lpf, ...], List[Lpf]]:
    """pool 에서 곱이 최대인 LPF 조합을 골라 (선택, 나머지) 반환"""
    chosen, _ = max_subset_product((f.prime for f in pool), cap)
    rest = sorted(pool, key=lpf_sort_key)
    taken = []
    for prime in chosen:
        for i, f in enumerate(rest):
            if f.prime == prime:
                taken.append(rest.pop(i))
                break
    return tuple(taken), rest


@dataclass(frozen=True)
class LayerFootprint:
    """비용 모델이 보는 레이어 매핑 요약"""

    layer_id: str
    Ti: int
    To: int
    Tm: int
    Th: int
    th_gather: int = 0  # D_h 로 펼친 K 소인수 곱 (0 이면 Th)
    th_accumulate: int = 1  # D_h 로 펼친 입력 관련 소인수 곱
    k_temporal: int = 1
    ir_temporal: int = 1

    def __post_init__(self):
        if self.th_gather == 0:
            object.__setattr__(self, "th_gather", self.Th)

    @property
    def spatial(self) -> int:
        return self.Ti * self.To * self.Th

    def to_dict(self) -> Dict[str, int]:
        return {
            "Ti": self.Ti,
            "To": self.To,
            "Tm": self.Tm,
            "Th": self.Th,
            "th_gather": self.th_gather,
            "th_accumulate": self.th_accumulate,
            "k_temporal": self.k_temporal,
            "ir_temporal": self.ir_temporal,
        }


@dataclass(frozen=True)
class Tile:
    """레이어 하나의 균일 타일"""

    layer_id: str
    ti_lpfs: Tuple[Lpf, ...]
    to_lpfs: Tuple[Lpf, ...]
    th_lpfs: Tuple[Lpf, ...]
    temporal_lpfs: Tuple[Lpf, ...]
    folded_lpfs: Tuple[Lpf, ...] = ()
    Ti: int = field(init=False)
    To: int = field(init=False)
    Th: int = field(init=False)
    Tm: int = field(init=False)

    def __post_init__(self):
        for name in ("ti_lpfs", "to_lpfs", "th_lpfs", "temporal_lpfs"):
            object.__setattr__(self, name, tuple(sorted(getattr(self, name), key=lpf_sort_key)))
        object.__setattr__(self, "Ti", product(f.prime for f in self.ti_lpfs))
        object.__setattr__(self, "To", product(f.prime for f in self.to_lpfs))
        object.__setattr__(self, "Th", product(f.prime for f in self.th_lpfs))
        object.__setattr__(self, "Tm", product(f.prime for f in self.temporal_lpfs))

    @property
    def spatial_lpfs(self) -> Dict[str, Tuple[Lpf, ...]]:
        return {"ti": self.ti_lpfs, "to": self.to_lpfs, "th": self.th_lpfs}

    @property
    def area(self) -> int:
        return self.Ti * self.To

    @property
    def volume(self) -> int:
        """타일 하나의 가중치 개수"""
        return self.Ti * self.To * self.Tm

    def fold_candidate(self) -> Optional[Lpf]:
        """접을 LPF - T_i 의 K 소인수 우선, 그 다음 T_o, 각각 가장 작은 것"""
        if self.ti_lpfs:
            return min(self.ti_lpfs, key=lambda f: (f.prime, lpf_sort_key(f)))
        if self.to_lpfs:
            return min(self.to_lpfs, key=lambda f: (f.prime, lpf_sort_key(f)))
        return None

    def fold(self, lpf: Lpf) -> "Tile":
        """공간 LPF 하나를 T_m 으로 옮긴 타일"""
        ti, to = list(self.ti_lpfs), list(self.to_lpfs)
        if lpf in ti:
            ti.remove(lpf)
        elif lpf in to:
            to.remove(lpf)
        else:
            raise ValueError(f"{lpf} is not spatially unrolled in tile of {self.layer_id}")
        return Tile(
            layer_id=self.layer_id,
            ti_lpfs=tuple(ti),
            to_lpfs=tuple(to),
            th_lpfs=self.th_lpfs,
            temporal_lpfs=self.temporal_lpfs + (lpf,),
            folded_lpfs=self.folded_lpfs + (lpf,),
        )

    @property
    def footprint(self) -> LayerFootprint:
        return LayerFootprint(
            layer_id=self.layer_id,
            Ti=self.Ti,
            To=self.To,
            Tm=self.Tm,
            Th=self.Th,
            th_gather=product(f.prime for f in self.th_lpfs if f.tag == "K"),
            th_accumulate=product(f.prime for f in self.th_lpfs if f.input_relevant),
            k_temporal=product(f.prime for f in self.temporal_lpfs if f.tag == "K"),
            ir_temporal=product(f.prime for f in self.temporal_lpfs if f.input_relevant),
        )


def generate_tiles(layer: Layer, arch: ImcArchitecture) -> Tile:
    """레이어의 균일 타일 생성

    T_m 이 D_m 을 넘는지는 여기서 검사하지 않는다 (할당 단계에서 판단).
    """
    lpfs = lpf_decompose(layer)
    ti_lpfs, k_left = _select(lpfs.of("K"), arch.Di)
    to_lpfs, ir_left = _select(lpfs.of(*INPUT_RELEVANT_LOOPS), arch.Do)

    # D_h: 입력 관련 소인수 먼저, 남는 용량에 K 소인수
    th_ir, ir_left = _select(ir_left, arch.Dh)
    th_k, k_left = _select(k_left, arch.Dh // product(f.prime for f in th_ir))

    tile = Tile(
        layer_id=layer.id,
        ti_lpfs=ti_lpfs,
        to_lpfs=to_lpfs,
        th_lpfs=th_ir + th_k,
        temporal_lpfs=tuple(ir_left + k_left),
    )
    logger.debug(
        "tile %s: Ti=%d To=%d Th=%d Tm=%d", layer.id, tile.Ti, tile.To, tile.Th, tile.Tm
    )
    return tile


@dataclass(frozen=True)
class SuperTile:
    """D_m 방향으로 쌓은 타일 묶음 (아래에서 위로)"""

    tiles: Tuple[Tile, ...]
    STi: int = field(init=False)
    STo: int = field(init=False)
    STm: int = field(init=False)
    layers: FrozenSet[str] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "tiles", tuple(self.tiles))
        object.__setattr__(self, "STi", max(t.Ti for t in self.tiles))
        object.__setattr__(self, "STo", max(t.To for t in self.tiles))
        object.__setattr__(self, "STm", sum(t.Tm for t in self.tiles))
        object.__setattr__(self, "layers", frozenset(t.layer_id for t in self.tiles))
        if len(self.layers) != len(self.tiles):
            raise ValueError("a supertile holds at most one tile per layer")

    @property
    def layer_ids(self) -> Tuple[str, ...]:
        return tuple(t.layer_id for t in self.tiles)

    @property
    def area(self) -> int:
        return self.STi * self.STo

    @property
    def volume(self) -> int:
        """실제 가중치 개수 (타일 부피 합)"""
        return sum(t.volume for t in self.tiles)

    @property
    def box(self) -> int:
        return self.STi * self.STo * self.STm

    def offsets(self) -> List[Tuple[Tile, int]]:
        """(타일, 슈퍼타일 안의 D_m 오프셋)"""
        result = []
        height = 0
        for tile in self.tiles:
            result.append((tile, height))
            height += tile.Tm
        return result


def _supertile_key(st: SuperTile):
    return -st.box, st.layer_ids


def generate_supertiles(
    pool: Sequence[Tile], arch: ImcArchitecture, options: Optional[PackingOptions] = None
) -> List[SuperTile]:
    """슈퍼타일 풀 생성

    제약: 레이어당 타일 하나, 높이 합 <= min(풀의 최대 T_m, D_m).
    여러 레이어 스택은 크기 순(2개, 3개, ...)으로 max_supertiles 까지만 만든다.
    """
    options = options or PackingOptions()
    seen = set()
    tiles = []
    for tile in pool:
        if tile.layer_id not in seen:
            seen.add(tile.layer_id)
            tiles.append(tile)
    if not tiles:
        return []

    singles = [SuperTile((t,)) for t in tiles]
    limit = min(max(t.Tm for t in tiles), arch.Dm)
    budget = options.max_supertiles - len(singles)

    position = {t.layer_id: i for i, t in enumerate(tiles)}
    order = sorted(tiles, key=lambda t: (-t.volume, position[t.layer_id]))
    stacks: List[Tuple[int, ...]] = []
    frontier = [((i,), t.Tm) for i, t in enumerate(order)]
    for _ in range(2, options.max_stack_layers + 1):
        if budget <= len(stacks) or not frontier:
            break
        grown = []
        for members, height in frontier:
            for j in range(members[-1] + 1, len(order)):
                if height + order[j].Tm <= limit:
                    grown.append((members + (j,), height + order[j].Tm))
                    if len(stacks) + len(grown) >= budget:
                        break
            if len(stacks) + len(grown) >= budget:
                break
        stacks.extend(members for members, _ in grown)
        frontier = grown

    multi = [
        SuperTile(tuple(sorted((order[i] for i in members), key=lambda t: position[t.layer_id])))
        for members in stacks
    ]
    result = sorted(singles + multi, key=_supertile_key)
    logger.debug("supertiles: %d singles, %d stacks (limit %d)", len(singles), len(multi), limit)
    return result
