"""Balayage reprenable d'une grille (k, l, T, loi).

Chaque cellule écrit son propre CSV dans <out>/cells/ puis est inscrite
au registre DuckDB avec son empreinte ; une cellule inscrite avec la même
empreinte dont le fichier existe n'est pas recalculée.
"""

from dataclasses import dataclass, field
from pathlib import Path

from rich.console import Console
from rich.progress import (
    BarColumn,
    MofNCompleteColumn,
    Progress,
    SpinnerColumn,
    TextColumn,
)

from blockmom.config import SweepCell, SweepConfig
from blockmom.dataio import atomic_write
from blockmom.db import completed_cells, connect, merge_csv, record_cell
from blockmom.harness import study_curves
from blockmom.reporter import sweep_cell_csv


@dataclass
class SweepResult:
    """Bilan d'un balayage : cellules calculées, reprises, fichier fusionné."""

    computed: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    merged_path: Path | None = None
    merged_rows: int = 0


def cell_path(output_dir: Path, cell: SweepCell) -> Path:
    return output_dir / "cells" / f"cell_{cell.cell_id}.csv"


def run_cell(cell: SweepCell, output_dir: Path) -> tuple[Path, int]:
    """Calcule une cellule et écrit son CSV. Retourne (chemin, lignes)."""
    curves = study_curves(cell.study)
    path = atomic_write(
        cell_path(output_dir, cell),
        sweep_cell_csv(cell.distribution, cell.study, curves),
    )
    return path, sum(len(c.points) for c in curves)


def run_sweep(
    config: SweepConfig,
    output_dir: str | Path,
    show_progress: bool = False,
) -> SweepResult:
    """Exécute les cellules manquantes puis fusionne tous les CSV."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    result = SweepResult()
    conn = connect(output_dir / "sweep.duckdb")
    try:
        done = completed_cells(conn, config.seed)
        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            MofNCompleteColumn(),
            console=Console(stderr=True),
            disable=not show_progress,
        ) as progress:
            task = progress.add_task("Cellules", total=len(config.cells))
            for cell in config.cells:
                path = cell_path(output_dir, cell)
                if done.get(cell.cell_id) == cell.digest and path.exists():
                    result.skipped.append(cell.cell_id)
                    progress.advance(task)
                    continue
                progress.update(task, description=cell.cell_id)
                path, rows = run_cell(cell, output_dir)
                s = cell.study
                record_cell(
                    conn, cell.cell_id, cell.index, cell.distribution,
                    s.k, s.l, s.T, config.seed, cell.digest, rows, path,
                )
                result.computed.append(cell.cell_id)
                progress.advance(task)

        paths = [cell_path(output_dir, cell) for cell in config.cells]
        result.merged_path = output_dir / f"sweep_seed{config.seed}.csv"
        result.merged_rows = merge_csv(conn, paths, result.merged_path)
    finally:
        conn.close()
    return result
