"""
설정 관리 모듈
"""
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Tuple, Union

from dotenv import load_dotenv

STRATEGIES = ("packed", "stacked", "flattened")
MODES = ("cold", "steady")

DEFAULTS = {
    "dm_ceiling": 4096,
    "max_stack_layers": 6,
    "max_supertiles": 64,
    "exhaustive_limit": 8,
    "greedy_seeds": 16,
    "mode": "cold",
    "output_dir": "imc_pack_out",
    "workers": 1,
}


@dataclass(frozen=True)
class PackingOptions:
    """패킹 탐색 한도"""

    max_stack_layers: int = 6  # 슈퍼타일 하나에 쌓는 최대 레이어 수
    max_supertiles: int = 64  # 슈퍼타일 풀 크기 (단일 타일은 항상 포함)
    exhaustive_limit: int = 8  # 이 개수 이하의 풀은 컬럼 후보를 전수 탐색
    greedy_seeds: int = 16  # 그리디 컬럼 생성의 시드 개수
    dm_ceiling: int = 4096  # 최소 D_m / D_h 탐색 상한

    def __post_init__(self):
        for name in ("max_stack_layers", "max_supertiles", "exhaustive_limit", "greedy_seeds", "dm_ceiling"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


class Config:
    """설정 관리 클래스"""

    def __init__(self, config_dir: Optional[Union[str, Path]] = None):
        if config_dir is None:
            load_dotenv()
            config_dir = os.getenv("IMC_PACK_HOME") or Path.home() / ".imc_pack"
        self.config_dir = Path(config_dir)
        self.config_file = self.config_dir / "config.json"
        self.ensure_dirs()
        self.load()

    def ensure_dirs(self):
        """필요한 디렉토리 생성"""
        self.config_dir.mkdir(parents=True, exist_ok=True)
        (self.config_dir / "search_cache").mkdir(exist_ok=True)

    def load(self):
        """설정 로드"""
        if self.config_file.exists():
            with open(self.config_file, "r") as f:
                self.data = {**DEFAULTS, **json.load(f)}
        else:
            self.data = dict(DEFAULTS)
            self.save()

    def save(self):
        """설정 저장"""
        with open(self.config_file, "w") as f:
            json.dump(self.data, f, indent=2)

    def get(self, key: str, default: Any = None) -> Any:
        """설정 값 가져오기"""
        return self.data.get(key, default)

    def set(self, key: str, value: Any):
        """설정 값 설정"""
        self.data[key] = value
        self.save()

    @property
    def cache_dir(self) -> Path:
        return self.config_dir / "search_cache"

    def packing_options(self, **overrides) -> PackingOptions:
        values = {name: self.get(name) for name in PackingOptions.__dataclass_fields__}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return PackingOptions(**values)


@dataclass(frozen=True)
class RunConfig:
    """CLI 실행 요청"""

    workload_path: str
    arch_path: str
    strategy: str = "packed"
    mode: str = "cold"
    dh: Optional[int] = None
    dm: Optional[int] = None
    dh_values: Tuple[int, ...] = ()
    dm_values: Tuple[int, ...] = ()
    output: Optional[Path] = None
    dm_ceiling: Optional[int] = None
    pareto: bool = False
    workers: int = 1
    verbosity: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES + ("all",):
            raise ValueError(f"unknown strategy {self.strategy!r} (choose from {', '.join(STRATEGIES)}, all)")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r} (choose from {', '.join(MODES)})")
        for name in ("dh", "dm"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ValueError(f"--{name} must be >= 1")
        if any(v < 1 for v in self.dh_values + self.dm_values):
            raise ValueError("sweep values must be >= 1")

    @property
    def strategies(self) -> Tuple[str, ...]:
        return STRATEGIES if self.strategy == "all" else (self.strategy,)
