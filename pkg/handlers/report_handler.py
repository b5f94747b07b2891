"""
보고서 핸들러 - 결과 파일 저장(JSON, CSV)과 터미널 표 출력
"""
import json
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import pandas as pd
from rich.console import Console
from rich.table import Table

from ..allocation import FoldFailure, PackOutcome, write_allocation
from ..costmodel import SWEEP_COLUMNS, CostReport

console = Console()

LAYER_COLUMNS = (
    "layer_id",
    "compute_cycles",
    "compute_seconds",
    "mac_energy_J",
    "periph_energy_J",
    "act_buffer_energy_J",
    "weight_load_bits",
    "weight_load_energy_J",
    "weight_load_seconds",
    "spatial_utilization",
)
COMPARISON_COLUMNS = (
    "strategy",
    "Dh",
    "Dm",
    "fit",
    "min_dm",
    "folds",
    "cycles",
    "energy_J",
    "delay_s",
    "edp_Js",
    "edp_additive_Js",
    "utilization",
    "area_mm2",
)


class ReportHandler:
    """보고서 처리 핸들러"""

    def __init__(self, output_dir: Union[str, Path]):
        self.output_dir = Path(output_dir)

    def _path(self, name: str) -> Path:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self.output_dir / name

    def write_allocation(self, outcome: PackOutcome, workload_name: str) -> Path:
        """할당 파일 저장"""
        path = self._path(f"{workload_name}_{outcome.strategy}_allocation.json")
        return write_allocation(path, outcome.as_allocation(), workload_name, outcome.fold_trace)

    def write_report(self, report: CostReport) -> Path:
        """비용 보고서 저장 (JSON)"""
        path = self._path(f"{report.workload}_{report.strategy}_report.json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump(report.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
        return path

    def write_layer_csv(self, report: CostReport) -> Path:
        """레이어별 비용 CSV"""
        path = self._path(f"{report.workload}_{report.strategy}_layers.csv")
        frame = pd.DataFrame([c.to_dict() for c in report.per_layer], columns=list(LAYER_COLUMNS))
        frame.to_csv(path, index=False)
        return path

    def write_comparison(self, rows: Sequence[Dict[str, Any]], workload_name: str) -> Path:
        """전략 비교 CSV"""
        path = self._path(f"{workload_name}_comparison.csv")
        frame = pd.DataFrame(list(rows), columns=list(COMPARISON_COLUMNS))
        frame["min_dm"] = frame["min_dm"].astype("Int64")
        frame.to_csv(path, index=False)
        return path

    def write_sweep(self, rows: Union[pd.DataFrame, Sequence[Dict[str, Any]]], path: Union[str, Path]) -> Path:
        """스윕 CSV"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows), columns=list(SWEEP_COLUMNS))
        frame.to_csv(path, index=False)
        return path

    def show_summary(self, report: CostReport):
        """비용 요약 표"""
        status = "[green]fit[/green]" if report.fit_on_chip else "[red]not fit[/red]"
        table = Table(title=f"{report.workload} / {report.strategy} (Dh={report.Dh}, Dm={report.Dm}, {report.mode}) {status}")
        table.add_column("항목", style="cyan")
        table.add_column("에너지 [J]", style="green", justify="right")
        table.add_column("지연 [s]", style="yellow", justify="right")

        for key in report.energy_breakdown:
            table.add_row(key, f"{report.energy_breakdown[key]:.4e}", f"{report.delay_breakdown[key]:.4e}")
        table.add_row("[bold]total[/bold]", f"{report.energy_total_J:.4e}", f"{report.delay_total_s:.4e}")

        console.print(table)
        console.print(
            f"EDP {report.edp_Js:.4e} J·s (additive {report.edp_additive_Js:.4e}), "
            f"utilization {report.utilization:.3f}, area {report.area.total_imc_area_mm2:.4f} mm²"
        )

    def show_fold_trace(self, outcome: PackOutcome):
        """폴딩 기록 표시"""
        if not outcome.fold_trace:
            return
        table = Table(title=f"{outcome.strategy} fold trace")
        table.add_column("#", style="dim")
        table.add_column("레이어", style="cyan")
        table.add_column("LPF", style="magenta")
        table.add_column("latency", justify="right")
        table.add_column("Ti x To x Tm", style="green")

        for i, step in enumerate(outcome.fold_trace, 1):
            if isinstance(step, FoldFailure):
                table.add_row(str(i), "[red]failure[/red]", "", "", f"{step.reason} (tried: {', '.join(step.tried)})")
            else:
                table.add_row(
                    str(i), step.layer_id, f"{step.tag}{step.prime}", str(step.latency), f"{step.Ti} x {step.To} x {step.Tm}"
                )
        console.print(table)

    def show_comparison(self, rows: Sequence[Dict[str, Any]], title: str = "전략 비교"):
        """전략 비교 표"""
        table = Table(title=title)
        table.add_column("전략", style="cyan")
        table.add_column("Dm", justify="right")
        table.add_column("fit")
        table.add_column("min Dm", justify="right", style="magenta")
        table.add_column("folds", justify="right")
        table.add_column("energy [J]", justify="right", style="green")
        table.add_column("delay [s]", justify="right", style="yellow")
        table.add_column("EDP [J·s]", justify="right", style="bold")
        table.add_column("util", justify="right")
        table.add_column("area [mm²]", justify="right")

        for row in rows:
            table.add_row(
                row["strategy"],
                str(row["Dm"]),
                "[green]yes[/green]" if row["fit"] else "[red]no[/red]",
                "-" if row["min_dm"] is None else str(row["min_dm"]),
                str(row["folds"]),
                f"{row['energy_J']:.4e}",
                f"{row['delay_s']:.4e}",
                f"{row['edp_Js']:.4e}",
                f"{row['utilization']:.3f}",
                f"{row['area_mm2']:.4f}",
            )
        console.print(table)

    def show_sweep(self, rows: Union[pd.DataFrame, List[Dict[str, Any]]], title: str = "스윕 결과"):
        """스윕 표"""
        frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows))
        table = Table(title=title)
        for column in ("Dh", "Dm", "strategy", "fit", "area_mm2", "edp_Js"):
            table.add_column(column, justify="right" if column not in ("strategy", "fit") else "left")
        for row in frame.itertuples(index=False):
            table.add_row(
                str(row.Dh),
                str(row.Dm),
                row.strategy,
                "[green]yes[/green]" if row.fit else "[red]no[/red]",
                f"{row.area_mm2:.4f}",
                f"{row.edp_Js:.4e}",
            )
        console.print(table)

    def show_violations(self, problems: Sequence[str]):
        """검증 위반 목록"""
        for problem in problems:
            console.print(f"[red]❌ {problem}[/red]")
