"""
매핑 핸들러 - 전략 실행, 최소 차원 탐색(캐시), 비교, 스윕
"""
import logging
from typing import Any, Dict, List, Optional, Sequence

from ..architecture import CostParams, ImcArchitecture
from ..cache import MinDmCache
from ..config import STRATEGIES, Config
from ..costmodel import compare_mappings, evaluate, sweep
from ..errors import ImcPackError
from ..packing import min_dh_for_fit, min_dm_for_fit
from ..workload import Workload

logger = logging.getLogger(__name__)


class MappingHandler:
    """매핑 처리 핸들러"""

    def __init__(self, config: Config, use_cache: bool = True, dm_ceiling: Optional[int] = None):
        self.config = config
        self.options = config.packing_options(dm_ceiling=dm_ceiling)
        self.cache = MinDmCache(config.cache_dir) if use_cache else None

    def min_dm(self, workload: Workload, arch: ImcArchitecture, strategy: str) -> int:
        """최소 D_m (캐시 우선)"""
        return self._search("dm", min_dm_for_fit, workload, arch, strategy)

    def min_dh(self, workload: Workload, arch: ImcArchitecture, strategy: str) -> int:
        """최소 D_h (캐시 우선)"""
        return self._search("dh", min_dh_for_fit, workload, arch, strategy)

    def _search(self, kind, search, workload: Workload, arch: ImcArchitecture, strategy: str) -> int:
        if self.cache is not None:
            cached = self.cache.get(kind, workload, arch, strategy, self.options)
            if cached is not None:
                logger.debug("cache hit: %s %s %s = %d", kind, workload.name, strategy, cached)
                return cached
        value = search(workload, arch, strategy, self.options)
        if self.cache is not None:
            self.cache.save(kind, workload, arch, strategy, self.options, value)
        return value

    def run(
        self,
        workload: Workload,
        arch: ImcArchitecture,
        cost: CostParams,
        strategies: Sequence[str] = STRATEGIES,
        mode: str = "cold",
    ) -> dict:
        """전략별 매핑 + 비용 추정"""
        results = {
            "success": [],
            "failed": [],
        }

        for strategy in strategies:
            outcome, report = evaluate(workload, arch, cost, strategy, mode, self.options)
            entry = {"strategy": strategy, "outcome": outcome, "report": report}
            if outcome.success:
                results["success"].append(entry)
            else:
                results["failed"].append(entry)

        return results

    def min_dms(self, workload: Workload, arch: ImcArchitecture, strategies: Sequence[str]) -> Dict[str, Optional[int]]:
        """전략별 최소 D_m - 탐색 실패는 None"""
        values: Dict[str, Optional[int]] = {}
        for strategy in strategies:
            try:
                values[strategy] = self.min_dm(workload, arch, strategy)
            except ImcPackError as e:
                logger.warning("min Dm search for %s failed: %s", strategy, e)
                values[strategy] = None
        return values

    def compare(
        self,
        workload: Workload,
        arch: ImcArchitecture,
        cost: CostParams,
        mode: str = "cold",
        at_min_dm: bool = False,
        strategies: Sequence[str] = STRATEGIES,
    ) -> List[Dict[str, Any]]:
        """전략 비교 표"""
        return compare_mappings(
            workload,
            arch,
            cost,
            mode=mode,
            options=self.options,
            at_min_dm=at_min_dm,
            strategies=strategies,
            min_dms=self.min_dms(workload, arch, strategies),
        )

    def sweep(
        self,
        workload: Workload,
        arch: ImcArchitecture,
        cost: CostParams,
        dh_values: Sequence[int],
        dm_values: Sequence[int],
        strategies: Sequence[str] = STRATEGIES,
        mode: str = "cold",
        workers: int = 1,
    ) -> List[Dict[str, Any]]:
        """D_h x D_m 스윕"""
        return sweep(
            workload,
            arch,
            cost,
            dh_values,
            dm_values,
            strategies=strategies,
            mode=mode,
            options=self.options,
            workers=workers,
        )
