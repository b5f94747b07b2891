"""
메인 애플리케이션 로직 - 명령별 실행 흐름과 종료 코드
"""
import logging
from pathlib import Path
from typing import Optional, Union

from rich.console import Console

from .allocation import load_allocation, validate_allocation
from .architecture import load_architecture
from .config import Config, RunConfig
from .costmodel import comparison_row, pareto_front
from .errors import SearchCeilingExceeded
from .handlers.mapping_handler import MappingHandler
from .handlers.report_handler import ReportHandler
from .workload import load_workload

console = Console()
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_INVALID = 3


class ImcPack:
    """메인 애플리케이션 클래스"""

    def __init__(self, config: Config, use_cache: bool = True, dm_ceiling: Optional[int] = None):
        self.config = config
        self.mapping_handler = MappingHandler(config, use_cache=use_cache, dm_ceiling=dm_ceiling)

    def _reporter(self, output: Optional[Path]) -> ReportHandler:
        return ReportHandler(output or self.config.get("output_dir"))

    def _load(self, run: RunConfig):
        workload = load_workload(run.workload_path)
        arch, cost = load_architecture(run.arch_path)
        arch = arch.with_dims(Dh=run.dh, Dm=run.dm)
        console.print(
            f"[cyan]📦 {workload.name}: {len(workload)} layers, {workload.weight_volume} weights "
            f"-> {arch.name} ({arch.Di}x{arch.Do}, Dh={arch.Dh}, Dm={arch.Dm})[/cyan]"
        )
        return workload, arch, cost

    def pack(self, run: RunConfig) -> int:
        """매핑 실행 후 할당/보고서 저장"""
        workload, arch, cost = self._load(run)
        reporter = self._reporter(run.output)
        results = self.mapping_handler.run(workload, arch, cost, run.strategies, run.mode)
        entries = sorted(results["success"] + results["failed"], key=lambda e: run.strategies.index(e["strategy"]))

        for entry in entries:
            outcome, report = entry["outcome"], entry["report"]
            reporter.show_summary(report)
            reporter.show_fold_trace(outcome)
            reporter.write_report(report)
            reporter.write_layer_csv(report)
            if outcome.success:
                path = reporter.write_allocation(outcome, workload.name)
                console.print(f"[green]✅ {outcome.strategy}: {path}[/green]")

        for entry in results["failed"]:
            outcome = entry["outcome"]
            reason = outcome.failure.reason if outcome.failure else "unknown"
            console.print(f"[red]❌ {outcome.strategy}: 매핑 실패 ({reason})[/red]")

        if len(run.strategies) > 1:
            min_dms = self.mapping_handler.min_dms(workload, arch, run.strategies)
            rows = [
                comparison_row(e["report"], min_dms[e["strategy"]], len(e["outcome"].fold_steps))
                for e in entries
            ]
            reporter.show_comparison(rows)
            reporter.write_comparison(rows, workload.name)

        return EXIT_INFEASIBLE if results["failed"] else EXIT_OK

    def compare(self, run: RunConfig, at_min_dm: bool = False) -> int:
        """전략 비교 표"""
        workload, arch, cost = self._load(run)
        reporter = self._reporter(run.output)
        rows = self.mapping_handler.compare(workload, arch, cost, run.mode, at_min_dm, run.strategies)
        reporter.show_comparison(rows, title="전략 비교 (각 최소 Dm)" if at_min_dm else "전략 비교")
        path = reporter.write_comparison(rows, workload.name)
        console.print(f"[green]✅ 비교 저장: {path}[/green]")
        return EXIT_OK

    def sweep(self, run: RunConfig) -> int:
        """D_h x D_m 스윕"""
        if not run.dh_values or not run.dm_values:
            console.print("[red]--dh-values 와 --dm-values 를 지정하세요.[/red]")
            return EXIT_ERROR
        workload, arch, cost = self._load(run)
        rows = self.mapping_handler.sweep(
            workload, arch, cost, run.dh_values, run.dm_values, run.strategies, run.mode, run.workers
        )
        failed = [row for row in rows if row["error"]]
        for row in failed:
            console.print(f"[yellow]⚠️ Dh={row['Dh']} Dm={row['Dm']} {row['strategy']}: {row['error']}[/yellow]")

        output = run.output or Path(self.config.get("output_dir")) / f"{workload.name}_sweep.csv"
        reporter = ReportHandler(Path(output).parent)
        table = pareto_front(rows) if run.pareto else rows
        reporter.show_sweep(table, title="Pareto front" if run.pareto else "스윕 결과")
        path = reporter.write_sweep(table, output)
        console.print(f"[green]✅ 스윕 저장: {path} ({len(table)} rows)[/green]")
        return EXIT_OK

    def min_dm(self, run: RunConfig) -> int:
        """전략별 최소 D_m"""
        workload, arch, cost = self._load(run)
        status = EXIT_OK
        for strategy in run.strategies:
            try:
                value = self.mapping_handler.min_dm(workload, arch, strategy)
            except SearchCeilingExceeded as e:
                console.print(f"[red]❌ {strategy}: {e}[/red]")
                status = EXIT_INFEASIBLE
                continue
            console.print(f"[green]{strategy}: min Dm = {value} (Dh={arch.Dh})[/green]")
        return status

    def min_dh(self, run: RunConfig) -> int:
        """전략별 최소 D_h (D_m 고정)"""
        workload, arch, _ = self._load(run)
        status = EXIT_OK
        for strategy in run.strategies:
            try:
                value = self.mapping_handler.min_dh(workload, arch, strategy)
            except SearchCeilingExceeded as e:
                console.print(f"[red]❌ {strategy}: {e}[/red]")
                status = EXIT_INFEASIBLE
                continue
            console.print(f"[green]{strategy}: min Dh = {value} (Dm={arch.Dm})[/green]")
        return status

    def validate(
        self, allocation_path: Union[str, Path], workload_path: str, arch_path: Optional[str] = None
    ) -> int:
        """할당 파일 검증"""
        allocation, _, _ = load_allocation(allocation_path)
        workload = load_workload(workload_path)
        arch = load_architecture(arch_path)[0] if arch_path else None
        problems = validate_allocation(allocation, workload, arch)
        if problems:
            self._reporter(None).show_violations(problems)
            console.print(f"[red]{len(problems)}개 위반[/red]")
            return EXIT_INVALID
        console.print(f"[green]✅ 유효한 할당: {len(allocation.entries)} entries[/green]")
        return EXIT_OK
