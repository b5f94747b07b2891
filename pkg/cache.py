"""
최소 D_m / D_h 탐색 결과 캐시
"""
import hashlib
import json
from dataclasses import asdict
from pathlib import Path
from typing import Optional

from .architecture import ImcArchitecture
from .config import PackingOptions
from .workload import Workload, serialize_workload


class MinDmCache:
    """탐색 결과 캐시 (작은 JSON 파일)"""

    def __init__(self, cache_dir: Path):
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)

    def _get_cache_path(
        self, kind: str, workload: Workload, arch: ImcArchitecture, strategy: str, options: PackingOptions
    ) -> Path:
        """캐시 파일 경로 생성"""
        # 워크로드, 어레이 형상, 전략, 패킹 옵션의 해시로 고유 이름 생성
        # 탐색하는 차원(kind: "dm" 또는 "dh")은 키에서 뺀다
        geometry = arch.geometry()
        geometry.pop("Dm" if kind == "dm" else "Dh", None)
        key = {
            "kind": kind,
            "workload": serialize_workload(workload),
            "geometry": geometry,
            "strategy": strategy,
            "options": asdict(options),
        }
        hash_obj = hashlib.md5(json.dumps(key, sort_keys=True).encode())
        return self.cache_dir / f"{workload.name}_{strategy}_{kind}_{hash_obj.hexdigest()[:12]}.json"

    def get(
        self, kind: str, workload: Workload, arch: ImcArchitecture, strategy: str, options: PackingOptions
    ) -> Optional[int]:
        """캐시된 값 (없으면 None)"""
        path = self._get_cache_path(kind, workload, arch, strategy, options)
        if not path.exists():
            return None
        try:
            with open(path, "r", encoding="utf-8") as f:
                return int(json.load(f)["value"])
        except (OSError, ValueError, KeyError):
            return None

    def save(
        self, kind: str, workload: Workload, arch: ImcArchitecture, strategy: str, options: PackingOptions, value: int
    ):
        """값 저장"""
        path = self._get_cache_path(kind, workload, arch, strategy, options)
        with open(path, "w", encoding="utf-8") as f:
            json.dump({"kind": kind, "workload": workload.name, "strategy": strategy, "value": value}, f)
