"""
할당 모듈 - 매크로 배치 결과, 폴딩 기록, 내보내기 스키마, 독립 검증기

내보내기 스키마 (imc-pack/allocation, version 1):
  {
    "schema": "imc-pack/allocation", "version": 1,
    "workload": str, "strategy": str, "fit_on_chip": bool,
    "geometry": {"Di", "Do", "Dh", "Dm"},
    "layers": [{"id", "Ti", "To", "Tm", "Th", "th_gather", "th_accumulate",
                "k_temporal", "ir_temporal", "folded_lpfs": [[tag, prime], ...]}],
    "entries": [{"layer", "macro", "dm_offset", "di_offset", "do_offset", "Ti", "To", "Tm"}],
    "fold_trace": [{"layer", "tag", "prime", "latency", "Ti", "To", "Tm"}
                   | {"failure", "tried"}]
  }
"""
import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from .architecture import ImcArchitecture
from .documents import Source, read_document
from .errors import AllocationError
from .tiling import LayerFootprint, Tile
from .workload import Lpf, Workload

logger = logging.getLogger(__name__)

SCHEMA = "imc-pack/allocation"
SCHEMA_VERSION = 1
FOOTPRINT_FIELDS = ("Ti", "To", "Tm", "Th", "th_gather", "th_accumulate", "k_temporal", "ir_temporal")
ENTRY_INT_FIELDS = ("macro", "dm_offset", "di_offset", "do_offset", "Ti", "To", "Tm")


@dataclass(frozen=True)
class AllocationEntry:
    """매크로 안에 놓인 직육면체 하나"""

    layer_id: str
    macro: int
    dm_offset: int
    di_offset: int
    do_offset: int
    Ti: int
    To: int
    Tm: int

    @property
    def volume(self) -> int:
        return self.Ti * self.To * self.Tm

    def to_dict(self) -> Dict[str, Any]:
        return {
            "layer": self.layer_id,
            "macro": self.macro,
            "dm_offset": self.dm_offset,
            "di_offset": self.di_offset,
            "do_offset": self.do_offset,
            "Ti": self.Ti,
            "To": self.To,
            "Tm": self.Tm,
        }


@dataclass(frozen=True)
class FoldStep:
    """폴딩 한 번 - 어떤 레이어의 어떤 LPF 가 T_m 으로 옮겨졌는지"""

    layer_id: str
    tag: str
    prime: int
    latency: int
    Ti: int
    To: int
    Tm: int

    @property
    def lpf(self) -> Lpf:
        return Lpf(self.tag, self.prime)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "layer": self.layer_id,
            "tag": self.tag,
            "prime": self.prime,
            "latency": self.latency,
            "Ti": self.Ti,
            "To": self.To,
            "Tm": self.Tm,
        }


@dataclass(frozen=True)
class FoldFailure:
    """더 접을 수 있는 레이어가 없음"""

    tried: Tuple[str, ...]
    reason: str

    def to_dict(self) -> Dict[str, Any]:
        return {"failure": self.reason, "tried": list(self.tried)}


FoldTrace = Tuple[Union[FoldStep, FoldFailure], ...]


@dataclass(frozen=True)
class Allocation:
    """D_h 개 매크로에 대한 배치 결과"""

    strategy: str
    Di: int
    Do: int
    Dh: int
    Dm: int
    entries: Tuple[AllocationEntry, ...]
    footprints: Tuple[LayerFootprint, ...]
    folds: Dict[str, Tuple[Lpf, ...]] = field(default_factory=dict)
    fit_on_chip: bool = True

    def footprint(self, layer_id: str) -> LayerFootprint:
        for fp in self.footprints:
            if fp.layer_id == layer_id:
                return fp
        raise KeyError(layer_id)

    def entries_of(self, layer_id: str) -> List[AllocationEntry]:
        return [e for e in self.entries if e.layer_id == layer_id]

    def macro_heights(self) -> List[int]:
        """매크로별 사용된 D_m 높이"""
        heights = [0] * self.Dh
        for e in self.entries:
            if 0 <= e.macro < self.Dh:
                heights[e.macro] = max(heights[e.macro], e.dm_offset + e.Tm)
        return heights

    @property
    def used_dm(self) -> int:
        return max(self.macro_heights(), default=0)


@dataclass(frozen=True)
class PackOutcome:
    """매핑 한 번의 결과 - 성공하면 allocation, 실패하면 fold_trace 마지막이 FoldFailure"""

    strategy: str
    Di: int
    Do: int
    Dh: int
    Dm: int
    allocation: Optional[Allocation]
    footprints: Tuple[LayerFootprint, ...]
    tiles: Tuple[Tile, ...] = ()
    columns: Tuple[Any, ...] = ()
    fold_trace: FoldTrace = ()

    @property
    def success(self) -> bool:
        return self.allocation is not None

    @property
    def failure(self) -> Optional[FoldFailure]:
        if self.fold_trace and isinstance(self.fold_trace[-1], FoldFailure):
            return self.fold_trace[-1]
        return None

    @property
    def fold_steps(self) -> List[FoldStep]:
        return [s for s in self.fold_trace if isinstance(s, FoldStep)]

    def as_allocation(self) -> Allocation:
        """비용 모델 입력 - 실패한 매핑은 배치 없는 fit_on_chip=False 할당"""
        if self.allocation is not None:
            return self.allocation
        return Allocation(
            strategy=self.strategy,
            Di=self.Di,
            Do=self.Do,
            Dh=self.Dh,
            Dm=self.Dm,
            entries=(),
            footprints=self.footprints,
            folds={t.layer_id: t.folded_lpfs for t in self.tiles if t.folded_lpfs},
            fit_on_chip=False,
        )


def export_allocation(
    allocation: Allocation, workload_name: str, fold_trace: FoldTrace = ()
) -> Dict[str, Any]:
    """할당을 스키마 문서로 변환"""
    layers = []
    for fp in allocation.footprints:
        data: Dict[str, Any] = {"id": fp.layer_id}
        data.update(fp.to_dict())
        data["folded_lpfs"] = [[f.tag, f.prime] for f in allocation.folds.get(fp.layer_id, ())]
        layers.append(data)
    return {
        "schema": SCHEMA,
        "version": SCHEMA_VERSION,
        "workload": workload_name,
        "strategy": allocation.strategy,
        "fit_on_chip": allocation.fit_on_chip,
        "geometry": {"Di": allocation.Di, "Do": allocation.Do, "Dh": allocation.Dh, "Dm": allocation.Dm},
        "layers": layers,
        "entries": [e.to_dict() for e in allocation.entries],
        "fold_trace": [step.to_dict() for step in fold_trace],
    }


def write_allocation(
    path: Union[str, Path], allocation: Allocation, workload_name: str, fold_trace: FoldTrace = ()
) -> Path:
    """할당 파일 저장 (키 정렬, 타임스탬프 없음)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(export_allocation(allocation, workload_name, fold_trace), f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def _require(data: Mapping[str, Any], key: str, where: str) -> Any:
    if key not in data:
        raise AllocationError(f"{where}: missing field {key!r}")
    return data[key]


def _integer(data: Mapping[str, Any], key: str, where: str) -> int:
    value = _require(data, key, where)
    if isinstance(value, bool) or not isinstance(value, int):
        raise AllocationError(f"{where}: field {key!r} must be an integer, got {value!r}")
    return value


def load_allocation(source: Source) -> Tuple[Allocation, str, FoldTrace]:
    """할당 문서 로드 -> (할당, 워크로드 이름, 폴딩 기록)"""
    doc, origin = read_document(source, "allocations", AllocationError)
    if doc.get("schema") != SCHEMA:
        raise AllocationError(f"{origin}: not an {SCHEMA} document")
    if doc.get("version") != SCHEMA_VERSION:
        raise AllocationError(f"{origin}: unsupported version {doc.get('version')!r}")

    try:
        geometry = _require(doc, "geometry", origin)
        footprints = []
        folds = {}
        for raw in _require(doc, "layers", origin):
            layer_id = _require(raw, "id", origin)
            where = f"{origin} layer {layer_id}"
            footprints.append(
                LayerFootprint(layer_id=layer_id, **{k: _integer(raw, k, where) for k in FOOTPRINT_FIELDS if k in raw})
            )
            lpfs = tuple(Lpf(tag, prime) for tag, prime in raw.get("folded_lpfs", []))
            if lpfs:
                folds[layer_id] = lpfs
        entries = tuple(
            AllocationEntry(
                layer_id=_require(raw, "layer", f"{origin} entry {i}"),
                **{key: _integer(raw, key, f"{origin} entry {i}") for key in ENTRY_INT_FIELDS},
            )
            for i, raw in enumerate(_require(doc, "entries", origin))
        )
        trace = []
        for raw in doc.get("fold_trace", []):
            if "failure" in raw:
                trace.append(FoldFailure(tried=tuple(raw.get("tried", [])), reason=raw["failure"]))
            else:
                trace.append(
                    FoldStep(raw["layer"], raw["tag"], raw["prime"], raw["latency"], raw["Ti"], raw["To"], raw["Tm"])
                )
        allocation = Allocation(
            strategy=_require(doc, "strategy", origin),
            **{dim: _integer(geometry, dim, f"{origin} geometry") for dim in ("Di", "Do", "Dh", "Dm")},
            entries=entries,
            footprints=tuple(footprints),
            folds=folds,
            fit_on_chip=bool(doc.get("fit_on_chip", True)),
        )
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, AllocationError):
            raise
        raise AllocationError(f"{origin}: malformed allocation ({e!r})") from e
    return allocation, doc.get("workload", ""), tuple(trace)


def validate_allocation(
    allocation: Allocation, workload: Workload, arch: Optional[ImcArchitecture] = None
) -> List[str]:
    """점유 격자를 직접 채워 할당 불변식을 검사하고 위반 목록을 반환 (빈 목록이면 통과)"""
    problems: List[str] = []
    if arch is not None and (arch.Di, arch.Do) != (allocation.Di, allocation.Do):
        problems.append(
            f"allocation plane {allocation.Di}x{allocation.Do} does not match architecture {arch.Di}x{arch.Do}"
        )

    known = set(workload.layer_ids)
    owners: Dict[int, np.ndarray] = {}
    per_macro: Counter = Counter()
    per_layer: Counter = Counter()
    covered: Dict[str, int] = defaultdict(int)

    for i, e in enumerate(allocation.entries):
        if e.layer_id not in known:
            problems.append(f"entry {i} references unknown layer {e.layer_id}")
            continue
        extents = (e.Ti, e.To, e.Tm)
        offsets = (e.di_offset, e.do_offset, e.dm_offset)
        if (
            min(extents) < 1
            or min(offsets) < 0
            or not 0 <= e.macro < allocation.Dh
            or e.di_offset + e.Ti > allocation.Di
            or e.do_offset + e.To > allocation.Do
            or e.dm_offset + e.Tm > allocation.Dm
        ):
            problems.append(
                f"entry {i} (layer {e.layer_id}) out of bounds: macro {e.macro}, "
                f"di {e.di_offset}+{e.Ti}, do {e.do_offset}+{e.To}, dm {e.dm_offset}+{e.Tm}"
            )
            continue

        grid = owners.get(e.macro)
        if grid is None:
            grid = owners[e.macro] = np.full((allocation.Dm, allocation.Di, allocation.Do), -1, dtype=np.int32)
        region = grid[e.dm_offset:e.dm_offset + e.Tm, e.di_offset:e.di_offset + e.Ti, e.do_offset:e.do_offset + e.To]
        for j in np.unique(region[region >= 0]):
            other = allocation.entries[int(j)]
            problems.append(
                f"entries {int(j)} (layer {other.layer_id}) and {i} (layer {e.layer_id}) overlap in macro {e.macro}"
            )
        region[...] = i

        per_macro[(e.layer_id, e.macro)] += 1
        per_layer[e.layer_id] += 1
        covered[e.layer_id] += e.volume

    # flattened 는 비균일 조각을 쓰므로 레이어/매크로 제약을 적용하지 않는다
    uniform = allocation.strategy != "flattened"
    if uniform:
        for (layer_id, macro), n in sorted(per_macro.items()):
            if n > 1:
                problems.append(f"layer {layer_id} has {n} tiles in macro {macro}")
        expected = {fp.layer_id: fp.Th for fp in allocation.footprints}
        for layer_id in workload.layer_ids:
            if layer_id in expected and per_layer[layer_id] != expected[layer_id]:
                problems.append(f"layer {layer_id} has {per_layer[layer_id]} entries, expected {expected[layer_id]}")

    for layer in workload:
        if covered[layer.id] != layer.weight_volume:
            problems.append(f"layer {layer.id} covers {covered[layer.id]} of {layer.weight_volume} weights")

    if problems:
        logger.info("allocation has %d violations", len(problems))
    return problems
