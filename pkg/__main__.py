#!/usr/bin/env python
"""
imc-pack: IMC 어레이용 DNN 가중치 패킹 컴파일러와 비용 모델 CLI
"""
import logging
from pathlib import Path
from typing import Callable, Optional, Tuple

import typer
from rich.console import Console
from rich.logging import RichHandler

from .app import EXIT_ERROR, ImcPack
from .config import Config, RunConfig
from .errors import ImcPackError

console = Console()
app = typer.Typer(
    help="IMC 가중치 패킹 / 비용 모델 CLI",
    add_completion=False,
    rich_markup_mode="rich"
)

WORKLOAD = typer.Option(..., "--workload", "-w", help="워크로드 (번들 이름 또는 JSON 경로)")
ARCH = typer.Option("dimc22", "--arch", "-a", help="아키텍처 (번들 이름 또는 JSON 경로)")
MODE = typer.Option(None, "--mode", "-m", help="가중치 로딩 모드: cold | steady")
DH = typer.Option(None, "--dh", help="D_h (매크로 수) 덮어쓰기")
DM = typer.Option(None, "--dm", help="D_m (셀/곱셈기) 덮어쓰기")
OUTPUT = typer.Option(None, "--output", "-o", help="출력 디렉토리 (sweep 은 CSV 경로)")
DM_CEILING = typer.Option(None, "--dm-ceiling", help="최소 차원 탐색 상한")
NO_CACHE = typer.Option(False, "--no-cache", help="탐색 캐시 사용 안 함")
VERBOSE = typer.Option(0, "--verbose", "-v", count=True, help="-v: INFO, -vv: DEBUG")


def _setup_logging(verbose: int):
    level = logging.WARNING if verbose <= 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def _int_list(text: Optional[str], name: str) -> Tuple[int, ...]:
    if not text:
        return ()
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise typer.BadParameter(f"{name} must be a comma-separated list of integers, got {text!r}") from None


def _execute(action: Callable[[], int]):
    """실행 후 종료 코드로 빠져나간다"""
    try:
        code = action()
    except (ImcPackError, ValueError, OSError) as e:
        console.print(f"[red]오류: {e}[/red]")
        raise typer.Exit(EXIT_ERROR)
    raise typer.Exit(code)


def _make(
    workload: str,
    arch: str,
    strategy: str,
    mode: Optional[str],
    verbose: int,
    no_cache: bool,
    dm_ceiling: Optional[int],
    **fields,
) -> Tuple[ImcPack, RunConfig]:
    _setup_logging(verbose)
    config = Config()
    try:
        run = RunConfig(
            workload_path=workload,
            arch_path=arch,
            strategy=strategy,
            mode=mode or config.get("mode"),
            dm_ceiling=dm_ceiling,
            verbosity=verbose,
            **fields,
        )
    except ValueError as e:
        console.print(f"[red]오류: {e}[/red]")
        raise typer.Exit(EXIT_ERROR)
    return ImcPack(config, use_cache=not no_cache, dm_ceiling=dm_ceiling), run


@app.command()
def pack(
    workload: str = WORKLOAD,
    arch: str = ARCH,
    strategy: str = typer.Option("packed", "--strategy", "-s", help="packed | stacked | flattened | all"),
    mode: Optional[str] = MODE,
    dh: Optional[int] = DH,
    dm: Optional[int] = DM,
    output: Optional[Path] = OUTPUT,
    dm_ceiling: Optional[int] = DM_CEILING,
    no_cache: bool = NO_CACHE,
    verbose: int = VERBOSE,
):
    """
    워크로드를 매핑하고 할당 파일과 비용 보고서를 저장

    Examples:
        imc-pack pack -w ds_cnn -a dimc22 --dm 8
        imc-pack pack -w autoencoder --strategy all --dm 64
    """
    imc, run = _make(workload, arch, strategy, mode, verbose, no_cache, dm_ceiling, dh=dh, dm=dm, output=output)
    _execute(lambda: imc.pack(run))


@app.command()
def compare(
    workload: str = WORKLOAD,
    arch: str = ARCH,
    strategy: str = typer.Option("all", "--strategy", "-s", help="packed | stacked | flattened | all"),
    mode: Optional[str] = MODE,
    dh: Optional[int] = DH,
    dm: Optional[int] = DM,
    output: Optional[Path] = OUTPUT,
    at_min_dm: bool = typer.Option(False, "--at-min-dm", help="각 전략을 자기 최소 D_m 에서 평가"),
    dm_ceiling: Optional[int] = DM_CEILING,
    no_cache: bool = NO_CACHE,
    verbose: int = VERBOSE,
):
    """packed / stacked / flattened 비교 표"""
    imc, run = _make(workload, arch, strategy, mode, verbose, no_cache, dm_ceiling, dh=dh, dm=dm, output=output)
    _execute(lambda: imc.compare(run, at_min_dm=at_min_dm))


@app.command()
def sweep(
    workload: str = WORKLOAD,
    arch: str = ARCH,
    strategy: str = typer.Option("all", "--strategy", "-s", help="packed | stacked | flattened | all"),
    mode: Optional[str] = MODE,
    dh_values: str = typer.Option(..., "--dh-values", help="D_h 값 목록 (예: 1,2,4)"),
    dm_values: str = typer.Option(..., "--dm-values", help="D_m 값 목록 (예: 1,4,16)"),
    output: Optional[Path] = OUTPUT,
    pareto: bool = typer.Option(False, "--pareto", help="(area, EDP) Pareto front 만 저장"),
    workers: int = typer.Option(1, "--workers", help="병렬 프로세스 수"),
    dm_ceiling: Optional[int] = DM_CEILING,
    no_cache: bool = NO_CACHE,
    verbose: int = VERBOSE,
):
    """D_h x D_m 교차 스윕 (area vs EDP CSV)"""
    imc, run = _make(
        workload,
        arch,
        strategy,
        mode,
        verbose,
        no_cache,
        dm_ceiling,
        dh_values=_int_list(dh_values, "--dh-values"),
        dm_values=_int_list(dm_values, "--dm-values"),
        output=output,
        pareto=pareto,
        workers=workers,
    )
    _execute(lambda: imc.sweep(run))


@app.command("min-dm")
def min_dm(
    workload: str = WORKLOAD,
    arch: str = ARCH,
    strategy: str = typer.Option("all", "--strategy", "-s", help="packed | stacked | flattened | all"),
    dh: Optional[int] = DH,
    dm_ceiling: Optional[int] = DM_CEILING,
    no_cache: bool = NO_CACHE,
    verbose: int = VERBOSE,
):
    """전략별 최소 D_m 탐색"""
    imc, run = _make(workload, arch, strategy, None, verbose, no_cache, dm_ceiling, dh=dh)
    _execute(lambda: imc.min_dm(run))


@app.command("min-dh")
def min_dh(
    workload: str = WORKLOAD,
    arch: str = ARCH,
    strategy: str = typer.Option("all", "--strategy", "-s", help="packed | stacked | flattened | all"),
    dm: Optional[int] = DM,
    dm_ceiling: Optional[int] = DM_CEILING,
    no_cache: bool = NO_CACHE,
    verbose: int = VERBOSE,
):
    """전략별 최소 D_h 탐색 (D_m 고정)"""
    imc, run = _make(workload, arch, strategy, None, verbose, no_cache, dm_ceiling, dm=dm)
    _execute(lambda: imc.min_dh(run))


@app.command()
def validate(
    allocation: Path = typer.Argument(..., help="할당 JSON 파일"),
    workload: str = WORKLOAD,
    arch: Optional[str] = typer.Option(None, "--arch", "-a", help="D_i x D_o 확인용 아키텍처"),
    verbose: int = VERBOSE,
):
    """할당 파일의 불변식 검사 (겹침, 범위, 매크로당 레이어 하나, 가중치 커버리지)"""
    _setup_logging(verbose)
    imc = ImcPack(Config(), use_cache=False)
    _execute(lambda: imc.validate(allocation, workload, arch))


if __name__ == "__main__":
    app()
