"""
비용 모델 - 할당에 대한 에너지, 지연, EDP, 활용도, 면적

에너지 = MAC(또는 ADC) + 주변회로 + 활성화 버퍼 + 가중치 로딩(DRAM)
지연   = 연산 사이클 / 클럭 + 가중치 로딩 시간 (겹치지 않음)
EDP    = 에너지 x 지연
"""
import logging
from dataclasses import asdict, dataclass
from functools import partial
from multiprocessing import Pool
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .allocation import Allocation, PackOutcome
from .architecture import AreaReport, CostParams, ImcArchitecture, compute_area
from .config import MODES, STRATEGIES, PackingOptions
from .errors import ActivationBufferOverflow, AllocationError, ImcPackError
from .tiling import LayerFootprint, Tile
from .workload import Layer, Workload

logger = logging.getLogger(__name__)

BREAKDOWN_KEYS = ("mac", "periph", "act", "weight_load")
SWEEP_COLUMNS = (
    "Dh",
    "Dm",
    "strategy",
    "area_mm2",
    "energy_J",
    "delay_s",
    "edp_Js",
    "weight_load_energy_J",
    "weight_load_delay_s",
    "fit",
    "error",
)


def layer_cycles(layer: Layer, tile: Union[Tile, LayerFootprint]) -> int:
    """연산 사이클 = T_m x OX x OY"""
    return tile.Tm * layer.output_pixels


@dataclass(frozen=True)
class LayerCost:
    layer_id: str
    compute_cycles: int
    compute_seconds: float
    mac_energy_J: float
    periph_energy_J: float
    act_buffer_energy_J: float
    weight_load_bits: int
    weight_load_energy_J: float
    weight_load_seconds: float
    spatial_utilization: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class CostReport:
    """할당 하나의 비용 보고서"""

    workload: str
    strategy: str
    mode: str
    Dh: int
    Dm: int
    fit_on_chip: bool
    per_layer: Tuple[LayerCost, ...]
    energy_breakdown: Dict[str, float]
    delay_breakdown: Dict[str, float]
    energy_total_J: float
    delay_total_s: float
    edp_Js: float
    edp_additive_Js: float
    utilization: float
    area: AreaReport

    @property
    def steady_state(self) -> bool:
        """가중치가 상주하고 로딩이 없음"""
        return self.mode == "steady" and self.fit_on_chip

    @property
    def compute_cycles(self) -> int:
        return sum(c.compute_cycles for c in self.per_layer)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "workload": self.workload,
            "strategy": self.strategy,
            "mode": self.mode,
            "geometry": {"Dh": self.Dh, "Dm": self.Dm},
            "fit_on_chip": self.fit_on_chip,
            "steady_state": self.steady_state,
            "energy_total_J": self.energy_total_J,
            "delay_total_s": self.delay_total_s,
            "edp_Js": self.edp_Js,
            "edp_additive_Js": self.edp_additive_Js,
            "utilization": self.utilization,
            "energy_breakdown_J": dict(self.energy_breakdown),
            "delay_breakdown_s": dict(self.delay_breakdown),
            "area": self.area.to_dict(),
            "per_layer": [c.to_dict() for c in self.per_layer],
        }


def _check_buffer(workload: Workload, cost: CostParams):
    limit = cost.buf_bytes * 8
    for layer in workload:
        if layer.activation_bits() > limit:
            raise ActivationBufferOverflow(
                f"layer {layer.id}: activations need {layer.activation_bits()} bits, buffer holds {limit}"
            )


def estimate_cost(
    workload: Workload,
    allocation: Allocation,
    arch: ImcArchitecture,
    cost: CostParams,
    mode: str = "cold",
) -> CostReport:
    """할당의 에너지/지연/EDP 추정"""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r} (choose from {', '.join(MODES)})")
    if (allocation.Di, allocation.Do) != (arch.Di, arch.Do):
        raise AllocationError(
            f"allocation plane {allocation.Di}x{allocation.Do} does not match architecture {arch.Di}x{arch.Do}"
        )
    mapped = {fp.layer_id for fp in allocation.footprints}
    missing = [layer.id for layer in workload if layer.id not in mapped]
    if missing:
        raise AllocationError(f"allocation has no mapping for layers {missing}")
    _check_buffer(workload, cost)

    geometry = arch.with_dims(Dh=allocation.Dh, Dm=allocation.Dm)
    loads = 0 if allocation.fit_on_chip and mode == "steady" else 1
    per_layer = []
    for layer in workload:
        fp = allocation.footprint(layer.id)
        cycles = layer_cycles(layer, fp)
        if geometry.is_analog:
            mac = cycles * fp.Ti * fp.Th * cost.e_adc_J
        else:
            mac = layer.mac_count * cost.e_mac_J
        periph = cycles * fp.Th * cost.e_periph_J

        # 입력은 K 시간 루프 동안 재사용, 출력 부분합은 입력 관련 시간 루프 동안 로컬 누적
        reads = cycles * fp.To * fp.th_accumulate / fp.k_temporal
        writes = cycles * fp.Ti * fp.th_gather / fp.ir_temporal
        partial_sums = 2 * (cycles / fp.ir_temporal) * fp.Ti * fp.th_gather * (fp.th_accumulate - 1)
        act = (reads + writes + partial_sums) * layer.act_bits * cost.e_buf_J_per_bit

        wl_bits = layer.weight_bits_total * loads
        per_layer.append(
            LayerCost(
                layer_id=layer.id,
                compute_cycles=cycles,
                compute_seconds=cycles / geometry.clock_hz,
                mac_energy_J=mac,
                periph_energy_J=periph,
                act_buffer_energy_J=act,
                weight_load_bits=wl_bits,
                weight_load_energy_J=wl_bits * cost.e_dram_J_per_bit,
                weight_load_seconds=wl_bits / cost.dram_bw_bits_per_s,
                spatial_utilization=min(1.0, fp.spatial / (geometry.plane * geometry.Dh)),
            )
        )

    energy = {
        "mac": sum(c.mac_energy_J for c in per_layer),
        "periph": sum(c.periph_energy_J for c in per_layer),
        "act": sum(c.act_buffer_energy_J for c in per_layer),
        "weight_load": sum(c.weight_load_energy_J for c in per_layer),
    }
    delay = {
        "mac": sum(c.compute_seconds for c in per_layer),
        "periph": 0.0,
        "act": 0.0,
        "weight_load": sum(c.weight_load_seconds for c in per_layer),
    }
    energy_total = sum(energy[k] for k in BREAKDOWN_KEYS)
    delay_total = sum(delay[k] for k in BREAKDOWN_KEYS)
    compute_energy = energy["mac"] + energy["periph"] + energy["act"]
    compute_delay = delay["mac"] + delay["periph"] + delay["act"]
    cycles_total = sum(c.compute_cycles for c in per_layer)

    report = CostReport(
        workload=workload.name,
        strategy=allocation.strategy,
        mode=mode,
        Dh=allocation.Dh,
        Dm=allocation.Dm,
        fit_on_chip=allocation.fit_on_chip,
        per_layer=tuple(per_layer),
        energy_breakdown=energy,
        delay_breakdown=delay,
        energy_total_J=energy_total,
        delay_total_s=delay_total,
        edp_Js=energy_total * delay_total,
        edp_additive_Js=compute_energy * compute_delay + energy["weight_load"] * delay["weight_load"],
        utilization=workload.mac_count / (cycles_total * geometry.plane * geometry.Dh),
        area=compute_area(geometry, cost),
    )
    logger.debug(
        "cost %s/%s Dh=%d Dm=%d %s: E=%.3e J D=%.3e s EDP=%.3e",
        workload.name,
        allocation.strategy,
        allocation.Dh,
        allocation.Dm,
        mode,
        report.energy_total_J,
        report.delay_total_s,
        report.edp_Js,
    )
    return report


def evaluate(
    workload: Workload,
    arch: ImcArchitecture,
    cost: CostParams,
    strategy: str = "packed",
    mode: str = "cold",
    options: Optional[PackingOptions] = None,
) -> Tuple[PackOutcome, CostReport]:
    """매핑 + 비용 추정"""
    from .packing import map_workload

    outcome = map_workload(workload, arch, strategy, options)
    return outcome, estimate_cost(workload, outcome.as_allocation(), arch, cost, mode)


def comparison_row(report: CostReport, min_dm: Optional[int], folds: int) -> Dict[str, Any]:
    return {
        "strategy": report.strategy,
        "Dh": report.Dh,
        "Dm": report.Dm,
        "fit": report.fit_on_chip,
        "min_dm": min_dm,
        "folds": folds,
        "cycles": report.compute_cycles,
        "energy_J": report.energy_total_J,
        "delay_s": report.delay_total_s,
        "edp_Js": report.edp_Js,
        "edp_additive_Js": report.edp_additive_Js,
        "utilization": report.utilization,
        "area_mm2": report.area.total_imc_area_mm2,
    }


def compare_mappings(
    workload: Workload,
    arch: ImcArchitecture,
    cost: CostParams,
    mode: str = "cold",
    options: Optional[PackingOptions] = None,
    at_min_dm: bool = False,
    strategies: Sequence[str] = STRATEGIES,
    min_dms: Optional[Dict[str, Optional[int]]] = None,
) -> List[Dict[str, Any]]:
    """전략별 비교 표 - 칩에 안 들어가는 전략은 처음 들어가는 D_m 을 함께 표시

    at_min_dm 이면 각 전략을 자기 최소 D_m 에서 평가한다.
    min_dms 로 이미 구한 최소 D_m 을 넘길 수 있다.
    """
    from .packing import min_dm_for_fit

    options = options or PackingOptions()
    rows = []
    for strategy in strategies:
        if min_dms is not None and strategy in min_dms:
            min_dm = min_dms[strategy]
        else:
            try:
                min_dm = min_dm_for_fit(workload, arch, strategy, options)
            except ImcPackError as e:
                logger.warning("min Dm search for %s failed: %s", strategy, e)
                min_dm = None
        point = arch.with_dims(Dm=min_dm) if at_min_dm and min_dm is not None else arch
        outcome, report = evaluate(workload, point, cost, strategy, mode, options)
        rows.append(comparison_row(report, min_dm, len(outcome.fold_steps)))
    return rows


def _sweep_point(
    point: Tuple[int, int, str],
    workload: Workload,
    arch: ImcArchitecture,
    cost: CostParams,
    mode: str,
    options: PackingOptions,
) -> Dict[str, Any]:
    dh, dm, strategy = point
    row: Dict[str, Any] = {"Dh": dh, "Dm": dm, "strategy": strategy}
    try:
        _, report = evaluate(workload, arch.with_dims(Dh=dh, Dm=dm), cost, strategy, mode, options)
    except ImcPackError as e:
        logger.warning("sweep point Dh=%d Dm=%d %s failed: %s", dh, dm, strategy, e)
        row.update({k: float("nan") for k in SWEEP_COLUMNS if k not in row})
        row.update({"fit": False, "error": str(e)})
        return row
    row.update(
        {
            "area_mm2": report.area.total_imc_area_mm2,
            "energy_J": report.energy_total_J,
            "delay_s": report.delay_total_s,
            "edp_Js": report.edp_Js,
            "weight_load_energy_J": report.energy_breakdown["weight_load"],
            "weight_load_delay_s": report.delay_breakdown["weight_load"],
            "fit": report.fit_on_chip,
            "error": "",
        }
    )
    return row


def sweep(
    workload: Workload,
    arch: ImcArchitecture,
    cost: CostParams,
    dh_values: Iterable[int],
    dm_values: Iterable[int],
    strategies: Sequence[str] = STRATEGIES,
    mode: str = "cold",
    options: Optional[PackingOptions] = None,
    workers: int = 1,
) -> List[Dict[str, Any]]:
    """D_h x D_m x 전략 교차 평가 - 행 순서는 D_h, D_m, 전략 순"""
    dh_values, dm_values = list(dh_values), list(dm_values)
    if not dh_values or not dm_values:
        raise ValueError("sweep needs at least one Dh and one Dm value")
    options = options or PackingOptions()
    points = [(dh, dm, s) for dh in dh_values for dm in dm_values for s in strategies]
    evaluate_point = partial(_sweep_point, workload=workload, arch=arch, cost=cost, mode=mode, options=options)

    if workers > 1:
        with Pool(processes=workers) as pool:
            rows = pool.map(evaluate_point, points)
    else:
        rows = [evaluate_point(p) for p in points]
    logger.info("sweep %s: %d points", workload.name, len(rows))
    return [{k: row[k] for k in SWEEP_COLUMNS} for row in rows]


def pareto_front(rows: Union[pd.DataFrame, Sequence[Dict[str, Any]]]) -> pd.DataFrame:
    """(area, EDP) 에서 지배당하지 않는 행만 남긴다 (원래 순서 유지)"""
    frame = rows.copy() if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows))
    frame = frame.dropna(subset=["area_mm2", "edp_Js"])
    area = frame["area_mm2"].to_numpy()
    edp = frame["edp_Js"].to_numpy()
    no_worse = (area[None, :] <= area[:, None]) & (edp[None, :] <= edp[:, None])
    better = (area[None, :] < area[:, None]) | (edp[None, :] < edp[:, None])
    dominated = np.any(no_worse & better, axis=1)
    return frame[~dominated]
