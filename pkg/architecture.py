"""
IMC 아키텍처 모듈 - 어레이 형상(D_i, D_o, D_h, D_m), 단위 비용, 면적 모델

번들 설정:
  - dimc22: 22nm 디지털 IMC (256 x 16, 4bW/4bI, 0.9V@200MHz)
  - aimc28: 28nm 아날로그 IMC (256 x 16, 4bW/4bI, 0.9V@200MHz)
  - 메모리: lpddr4 (DRAM), sram256k (활성화 버퍼)
"""
import logging
from dataclasses import asdict, dataclass, replace
from enum import Enum
from typing import Any, Dict, Mapping, Optional, Tuple

from .documents import Source, read_document
from .errors import ArchitectureError

logger = logging.getLogger(__name__)

DIMENSIONS = ("Di", "Do", "Dh", "Dm")
DEFAULT_BASELINE = {"digital": "dimc22", "analog": "aimc28"}

UM2_PER_MM2 = 1e6


class ImcKind(str, Enum):
    DIGITAL = "digital"
    ANALOG = "analog"


@dataclass(frozen=True)
class ImcArchitecture:
    """IMC 설계점 - D_i x D_o x D_h x D_m"""

    Di: int
    Do: int
    Dh: int
    Dm: int
    weight_bits: int
    input_bits: int
    clock_hz: float
    imc_kind: ImcKind
    vdd: float = 0.9
    name: str = "custom"
    reported_macro_area_mm2: Optional[float] = None

    def __post_init__(self):
        for dim in DIMENSIONS + ("weight_bits", "input_bits"):
            value = getattr(self, dim)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ArchitectureError(f"{self.name}: {dim} must be a positive integer, got {value!r}")
        if not self.clock_hz > 0:
            raise ArchitectureError(f"{self.name}: clock_hz must be positive, got {self.clock_hz!r}")
        try:
            object.__setattr__(self, "imc_kind", ImcKind(self.imc_kind))
        except ValueError:
            raise ArchitectureError(f"{self.name}: unknown imc_kind {self.imc_kind!r}") from None

    @property
    def plane(self) -> int:
        """D_i x D_o"""
        return self.Di * self.Do

    @property
    def capacity(self) -> int:
        """저장 가능한 가중치 개수"""
        return self.Di * self.Do * self.Dh * self.Dm

    @property
    def is_analog(self) -> bool:
        return self.imc_kind is ImcKind.ANALOG

    def with_dims(self, Dh: Optional[int] = None, Dm: Optional[int] = None) -> "ImcArchitecture":
        return replace(self, Dh=self.Dh if Dh is None else Dh, Dm=self.Dm if Dm is None else Dm)

    def geometry(self) -> Dict[str, int]:
        return {dim: getattr(self, dim) for dim in DIMENSIONS}

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["imc_kind"] = self.imc_kind.value
        return data


@dataclass(frozen=True)
class CostParams:
    """단위 비용 (SI 단위)"""

    e_mac_J: float
    e_adc_J: float
    e_periph_J: float
    e_buf_J_per_bit: float
    e_dram_J_per_bit: float
    dram_bw_bits_per_s: float
    cell_area_um2: float
    periph_area_um2: float
    buf_bytes: int

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value is None or value < 0:
                raise ArchitectureError(f"cost parameter {name} must be >= 0, got {value!r}")
        if not self.dram_bw_bits_per_s > 0:
            raise ArchitectureError("dram_bw_bits_per_s must be > 0")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class AreaReport:
    macro_area_mm2: float
    total_imc_area_mm2: float
    density_bits_per_mm2: float
    reported_macro_area_mm2: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _load_memory(name: str, kind: str) -> Mapping[str, Any]:
    data, _ = read_document(name, "memories", ArchitectureError)
    if data.get("kind") != kind:
        raise ArchitectureError(f"memory '{name}' is a {data.get('kind')!r}, expected {kind!r}")
    return data


def _resolve_costs(doc: Mapping[str, Any], vdd: float) -> CostParams:
    costs = dict(doc.get("costs", {}))
    memories = doc.get("memories", {})

    if "dram" in memories:
        dram = _load_memory(memories["dram"], "dram")
        costs.setdefault("e_dram_J_per_bit", dram["e_J_per_bit"])
        costs.setdefault("dram_bw_bits_per_s", dram["bandwidth_bits_per_s"])
    if "buffer" in memories:
        buf = _load_memory(memories["buffer"], "buffer")
        costs.setdefault("e_buf_J_per_bit", buf["e_J_per_bit"])
        costs.setdefault("buf_bytes", buf["capacity_bytes"])

    # 디지털 MAC: ND2 게이트 등가 개수 x 게이트 용량 x V^2
    if "e_mac_J" not in costs:
        if "nd2_cap_F" in costs and "n_nd2_per_mac" in costs:
            costs["e_mac_J"] = costs["n_nd2_per_mac"] * costs["nd2_cap_F"] * vdd ** 2
        else:
            costs["e_mac_J"] = 0.0
    costs.setdefault("e_adc_J", 0.0)
    costs.pop("nd2_cap_F", None)
    costs.pop("n_nd2_per_mac", None)

    fields = CostParams.__dataclass_fields__
    missing = sorted(set(fields) - set(costs))
    if missing:
        raise ArchitectureError(f"missing cost fields {missing}")
    unknown = sorted(set(costs) - set(fields))
    if unknown:
        raise ArchitectureError(f"unknown cost fields {unknown}")
    return CostParams(**costs)


def load_architecture(source: Source) -> Tuple[ImcArchitecture, CostParams]:
    """아키텍처 문서 로드

    누락된 필드는 baseline (명시하지 않으면 imc_kind 별 번들 설정)에서 채운다.
    """
    doc, origin = read_document(source, "architectures", ArchitectureError)

    baseline_name = doc.get("baseline")
    kind = doc.get("imc_kind")
    if baseline_name is None and doc.get("name") not in DEFAULT_BASELINE.values():
        if kind is not None and kind not in DEFAULT_BASELINE:
            raise ArchitectureError(f"{origin}: unknown imc_kind {kind!r}")
        baseline_name = DEFAULT_BASELINE.get(kind or "digital")
    if baseline_name is not None:
        baseline, _ = read_document(baseline_name, "architectures", ArchitectureError)
        # baseline 의 메모리는 문서가 메모리를 지정하면 대체된다
        if "memories" in doc:
            baseline = {k: v for k, v in baseline.items() if k != "memories"}
        doc = _merge(baseline, {k: v for k, v in doc.items() if k != "baseline"})

    try:
        arch = ImcArchitecture(
            Di=doc["Di"],
            Do=doc["Do"],
            Dh=doc.get("Dh", 1),
            Dm=doc.get("Dm", 1),
            weight_bits=doc["weight_bits"],
            input_bits=doc["input_bits"],
            clock_hz=float(doc["clock_hz"]),
            imc_kind=doc["imc_kind"],
            vdd=float(doc.get("vdd", 0.9)),
            name=doc.get("name", "custom"),
            reported_macro_area_mm2=doc.get("reported_macro_area_mm2"),
        )
    except KeyError as e:
        raise ArchitectureError(f"{origin}: missing field {e.args[0]!r}") from None
    cost = _resolve_costs(doc, arch.vdd)
    logger.debug("architecture %s 로드: %s", arch.name, arch.geometry())
    return arch, cost


def compute_area(arch: ImcArchitecture, cost: CostParams) -> AreaReport:
    """매크로 면적 = 주변회로 + 셀 면적 x D_i x D_o x D_m x weight_bits"""
    cells_per_macro = arch.Di * arch.Do * arch.Dm * arch.weight_bits
    macro_um2 = cost.periph_area_um2 + cost.cell_area_um2 * cells_per_macro
    macro_mm2 = macro_um2 / UM2_PER_MM2
    total_mm2 = arch.Dh * macro_mm2
    stored_bits = cells_per_macro * arch.Dh
    density = stored_bits / total_mm2 if total_mm2 > 0 else 0.0
    return AreaReport(
        macro_area_mm2=macro_mm2,
        total_imc_area_mm2=total_mm2,
        density_bits_per_mm2=density,
        reported_macro_area_mm2=arch.reported_macro_area_mm2,
    )
