"""
워크로드 모듈 - 6중 루프 레이어 표현과 루프 소인수(LPF) 분해

Layer 하나는 K, C, FX, FY, OX, OY 루프로 표현된다. 완전연결 레이어는
FX = FY = OX = OY = 1, depthwise 레이어는 C = 1, K = 채널 수로 적는다.
"""
import json
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, NamedTuple, Tuple, Union

from .documents import Source, read_document
from .errors import WorkloadParseError, WorkloadValidationError

logger = logging.getLogger(__name__)

# 가중치 루프 (OX, OY 는 분해하지 않는다)
WEIGHT_LOOPS = ("K", "C", "FX", "FY")
INPUT_RELEVANT_LOOPS = ("C", "FX", "FY")
LAYER_FIELDS = ("K", "C", "FX", "FY", "OX", "OY", "weight_bits", "act_bits")


class Lpf(NamedTuple):
    """루프 소인수 (tag, prime)"""

    tag: str
    prime: int

    @property
    def input_relevant(self) -> bool:
        return self.tag in INPUT_RELEVANT_LOOPS


def lpf_sort_key(lpf: Lpf) -> Tuple[int, int]:
    return WEIGHT_LOOPS.index(lpf.tag), lpf.prime


def prime_factors(n: int) -> List[int]:
    """소인수분해 (오름차순)"""
    factors = []
    d = 2
    while d * d <= n:
        while n % d == 0:
            factors.append(d)
            n //= d
        d += 1
    if n > 1:
        factors.append(n)
    return factors


def product(values) -> int:
    result = 1
    for v in values:
        result *= v
    return result


@dataclass(frozen=True)
class LpfSet:
    """LPF 멀티셋 - (tag, prime) 순으로 정렬되어 저장된다"""

    factors: Tuple[Lpf, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(sorted(self.factors, key=lpf_sort_key)))

    def __iter__(self) -> Iterator[Lpf]:
        return iter(self.factors)

    def __len__(self) -> int:
        return len(self.factors)

    def product(self, *tags: str) -> int:
        tags = tags or WEIGHT_LOOPS
        return product(f.prime for f in self.factors if f.tag in tags)

    def of(self, *tags: str) -> Tuple[Lpf, ...]:
        return tuple(f for f in self.factors if f.tag in tags)

    def counts(self) -> Counter:
        return Counter(self.factors)


@dataclass(frozen=True)
class Layer:
    """6중 루프 레이어"""

    id: str
    K: int
    C: int
    FX: int
    FY: int
    OX: int
    OY: int
    weight_bits: int
    act_bits: int

    def __post_init__(self):
        if not self.id:
            raise WorkloadValidationError("layer id must be a non-empty string")
        for name in LAYER_FIELDS:
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise WorkloadValidationError(f"layer '{self.id}': {name} must be an integer, got {value!r}")
            if value < 1:
                raise WorkloadValidationError(f"layer '{self.id}': {name} must be >= 1, got {value}")

    def dim(self, tag: str) -> int:
        return getattr(self, tag)

    @property
    def input_relevant_size(self) -> int:
        """C·FX·FY (D_o 방향으로 펼쳐지는 크기)"""
        return self.C * self.FX * self.FY

    @property
    def weight_volume(self) -> int:
        return self.K * self.C * self.FX * self.FY

    @property
    def weight_bits_total(self) -> int:
        return self.weight_volume * self.weight_bits

    @property
    def mac_count(self) -> int:
        return self.weight_volume * self.output_pixels

    @property
    def output_pixels(self) -> int:
        return self.OX * self.OY

    def activation_bits(self) -> int:
        """입력 + 출력 활성화 크기 (stride 1 가정으로 입력 크기 근사)"""
        ix = self.OX + self.FX - 1
        iy = self.OY + self.FY - 1
        return (self.C * ix * iy + self.K * self.OX * self.OY) * self.act_bits

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"id": self.id}
        data.update({name: getattr(self, name) for name in LAYER_FIELDS})
        return data


@dataclass(frozen=True)
class Workload:
    """레이어 목록 (순서 유지)"""

    name: str
    layers: Tuple[Layer, ...]

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise WorkloadValidationError(f"workload '{self.name}' has no layers")
        ids = [layer.id for layer in self.layers]
        duplicates = sorted(i for i, n in Counter(ids).items() if n > 1)
        if duplicates:
            raise WorkloadValidationError(f"workload '{self.name}': duplicate layer ids {duplicates}")

    def __iter__(self) -> Iterator[Layer]:
        return iter(self.layers)

    def __len__(self) -> int:
        return len(self.layers)

    @property
    def layer_ids(self) -> Tuple[str, ...]:
        return tuple(layer.id for layer in self.layers)

    @property
    def weight_volume(self) -> int:
        return sum(layer.weight_volume for layer in self.layers)

    @property
    def weight_bits_total(self) -> int:
        return sum(layer.weight_bits_total for layer in self.layers)

    @property
    def mac_count(self) -> int:
        return sum(layer.mac_count for layer in self.layers)


def lpf_decompose(layer: Layer) -> LpfSet:
    """레이어의 K, C, FX, FY 를 LPF 멀티셋으로 분해"""
    factors = []
    for tag in WEIGHT_LOOPS:
        factors.extend(Lpf(tag, p) for p in prime_factors(layer.dim(tag)))
    return LpfSet(tuple(factors))


def parse_workload(source: Union[Source, Mapping[str, Any]]) -> Workload:
    """워크로드 문서 파싱 (번들 이름, 경로, 매핑)"""
    data, origin = read_document(source, "workloads", WorkloadParseError)

    name = data.get("name")
    if not isinstance(name, str) or not name:
        raise WorkloadParseError(f"{origin}: missing or empty workload name", field="name")
    raw_layers = data.get("layers")
    if not isinstance(raw_layers, list):
        raise WorkloadParseError(f"{origin}: 'layers' must be a list", field="layers")

    layers = []
    for index, raw in enumerate(raw_layers):
        if not isinstance(raw, Mapping):
            raise WorkloadParseError("layer entry must be an object", layer=f"#{index}")
        layer_id = raw.get("id")
        if not isinstance(layer_id, str) or not layer_id:
            raise WorkloadParseError("missing or empty id", field="id", layer=f"#{index}")
        values = {}
        for field in LAYER_FIELDS:
            if field not in raw:
                raise WorkloadParseError("missing field", field=field, layer=layer_id)
            value = raw[field]
            if isinstance(value, bool) or not isinstance(value, int):
                raise WorkloadParseError(f"expected integer, got {value!r}", field=field, layer=layer_id)
            values[field] = value
        unknown = sorted(set(raw) - set(LAYER_FIELDS) - {"id"})
        if unknown:
            raise WorkloadParseError(f"unknown fields {unknown}", layer=layer_id)
        layers.append(Layer(id=layer_id, **values))

    workload = Workload(name=name, layers=tuple(layers))
    logger.debug("workload %s 로드: %d layers, %d weights", workload.name, len(workload), workload.weight_volume)
    return workload


load_workload = parse_workload


def serialize_workload(workload: Workload) -> Dict[str, Any]:
    return {"name": workload.name, "layers": [layer.to_dict() for layer in workload.layers]}


def dump_workload(workload: Workload, path: Union[str, Path]):
    """워크로드 저장"""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(serialize_workload(workload), f, indent=2)
        f.write("\n")
