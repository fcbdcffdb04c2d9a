"""Interface CLI pour blockmom."""

import sys
from pathlib import Path

import click
from rich.console import Console
from rich.markup import escape

from blockmom import __version__
from blockmom.config import (
    RunConfig,
    diagnose_config,
    diagnose_echo,
    load_config,
    study_config,
    study_echo,
    sweep_config,
    sweep_echo,
)
from blockmom.dataio import atomic_write, fmt_float, read_sample
from blockmom.diagnostics import parameter_plan, run_diagnostics
from blockmom.errors import BlockMomError, ConfigError
from blockmom.estimators import (
    block_umom_exact,
    block_umom_subsampled,
    make_block_plan,
    mom_estimate,
    sample_mean_estimate,
    shuffled,
    umom_full,
)
from blockmom.harness import compare_estimators, study_curves
from blockmom.reporter import (
    curves_table,
    diagnose_json,
    diagnostics_table,
    dump_json,
    estimate_json,
    g_csv,
    hajek_csv,
    simulate_csv,
    simulate_json,
    tail_range,
)
from blockmom.sweep import run_sweep

console = Console(stderr=True)

ESTIMATE_CHOICES = ["block_umom", "mom", "umom_full", "sample_mean"]

SEED = click.IntRange(0, 2**64 - 1)


def _fail(label: str, error: Exception) -> None:
    """Affiche l'erreur et quitte avec le code associé à sa catégorie."""
    console.print(f"[red]Erreur {label} :[/red] {escape(str(error))}")
    code = error.exit_code if isinstance(error, BlockMomError) else 1
    sys.exit(code)


def _threads_option(value: str | None) -> int | str | None:
    if value is None or value == "auto":
        return value
    if not value.isdigit() or int(value) < 1:
        raise ConfigError(
            f"--threads must be a positive integer or 'auto', got {value!r}"
        )
    return int(value)


def _emit(fmt: str | None, payloads: dict[str, str]) -> None:
    """Recopie la charge utile demandée sur stdout."""
    if fmt is not None:
        click.echo(payloads[fmt], nl=False)


@click.group()
@click.version_option(version=__version__)
def cli():
    """Estimation robuste de la moyenne par médiane de moyennes à blocs."""


@cli.command()
@click.option(
    "--input", "input_path", required=True,
    help="Fichier texte : un nombre décimal par ligne.",
)
@click.option("--k", type=int, required=True, help="Nombre de groupes k.")
@click.option("--l", type=int, default=1, show_default=True,
              help="Ordre des sous-ensembles l.")
@click.option(
    "--T", "subsample", default="exact", show_default=True,
    help="Nombre T de sous-ensembles tirés, ou 'exact' pour l'énumération.",
)
@click.option("--seed", type=SEED, default=0, show_default=True,
              help="Graine du tirage des sous-ensembles et du mélange.")
@click.option(
    "--estimator",
    type=click.Choice(ESTIMATE_CHOICES),
    default="block_umom",
    show_default=True,
    help="Estimateur à appliquer.",
)
@click.option("--shuffle", is_flag=True, default=False,
              help="Mélanger l'échantillon avant le découpage en blocs.")
@click.option("--out", "output_dir", default="out", show_default=True,
              help="Répertoire du rapport JSON.")
def estimate(input_path, k, l, subsample, seed, estimator, shuffle, output_dir):
    """Estimer la moyenne d'un échantillon lu dans un fichier."""
    try:
        run = RunConfig(
            command="estimate",
            output_dir=Path(output_dir),
            seed=seed,
            input_path=Path(input_path),
        )
        batch = read_sample(run.input_path)
        if shuffle:
            batch = shuffled(batch, seed)

        if estimator == "mom":
            report = mom_estimate(batch, k)
        elif estimator == "umom_full":
            report = umom_full(batch, k)
        elif estimator == "sample_mean":
            report = sample_mean_estimate(batch)
        else:
            plan = make_block_plan(batch.count, k, l)
            if subsample == "exact":
                report = block_umom_exact(batch, plan)
            elif subsample.isdigit() and int(subsample) > 0:
                report = block_umom_subsampled(batch, plan, int(subsample), seed)
            else:
                raise ConfigError(
                    f"--T must be a positive integer or 'exact', got {subsample!r}"
                )
        if estimator in ("mom", "umom_full", "sample_mean") and l != 1:
            console.print(
                f"[yellow]Attention :[/yellow] --l ignoré par {estimator}."
            )

        path = atomic_write(
            run.output_dir / f"estimate_{report.estimator_id}.json",
            estimate_json(
                report, str(run.input_path), seed if shuffle else None,
            ),
        )
    except Exception as e:
        _fail("estimation", e)

    click.echo(fmt_float(report.value))
    if report.discarded_tail:
        console.print(
            f"[yellow]Attention :[/yellow] {report.discarded_tail}"
            " observations de fin ignorées (N non multiple de n·b)."
        )
    console.print(
        f"[green]{report.estimator_id} :[/green]"
        f" {report.subset_means_evaluated} moyennes évaluées,"
        f" rapport écrit dans {path}"
    )


def _common_options(fn):
    """Options partagées par simulate, diagnose et sweep."""
    options = [
        click.option("--config", "config_path", required=True,
                     help="Fichier de configuration TOML ou JSON."),
        click.option("--out", "output_dir", default="out", show_default=True,
                     help="Répertoire de sortie."),
        click.option("--seed", type=SEED, default=None,
                     help="Graine maître (remplace celle du fichier)."),
        click.option("--threads", default=None,
                     help="Threads de calcul : entier ou 'auto'."),
        click.option(
            "--format", "fmt", type=click.Choice(["csv", "json"]),
            default=None,
            help="Recopier la sortie sur stdout dans ce format.",
        ),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _study_options(fn):
    """Surcharges d'une étude de déviations."""
    options = [
        click.option("--replicates", type=int, default=None,
                     help="Nombre de réplicats R."),
        click.option("--grid", default=None,
                     help="Grille de t, ex. '1,2,4,8'."),
        click.option("--k", type=int, default=None, help="Nombre de groupes k."),
        click.option("--l", type=int, default=None,
                     help="Ordre des sous-ensembles l."),
        click.option("--T", "subsample", default=None,
                     help="Nombre T de sous-ensembles, ou 'auto'."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


@cli.command()
@_common_options
@_study_options
def simulate(config_path, output_dir, seed, threads, fmt,
             replicates, grid, k, l, subsample):
    """Simuler les courbes de queue des estimateurs."""
    try:
        overrides = {
            "seed": seed,
            "threads": _threads_option(threads),
            "replicates": replicates,
            "t_grid": grid,
            "k": k,
            "l": l,
            "T": subsample,
        }
        study = study_config(load_config(config_path), overrides)
        run = RunConfig(
            command="simulate",
            output_dir=Path(output_dir),
            seed=study.master_seed,
            threads=study.threads,
            fmt=fmt,
            config_path=Path(config_path),
        )
        _warn_study(study)

        curves = study_curves(study, show_progress=True)
        comparison = compare_estimators(curves)
        payloads = {
            "csv": simulate_csv(curves),
            "json": simulate_json(
                study, curves, comparison, study_echo(study),
            ),
        }
        stem = run.output_dir / f"simulate_seed{run.seed}"
        atomic_write(stem.with_suffix(".csv"), payloads["csv"])
        atomic_write(stem.with_suffix(".json"), payloads["json"])
    except Exception as e:
        _fail("simulation", e)

    above = sorted({
        c.estimator for c in curves for p in c.points if p.above_envelope
    })
    if above:
        console.print(
            "[yellow]Attention :[/yellow] p̂ au-dessus de 3e^{−t/2} pour "
            + ", ".join(above)
        )
    if fmt is None:
        click.echo(curves_table(curves, comparison), err=True, nl=False)
    _emit(fmt, payloads)
    console.print(
        f"[green]Simulation terminée :[/green] {stem}.csv, {stem}.json"
    )


def _warn_study(study) -> None:
    """Avertissements non bloquants sur le plan et la grille de t."""
    lower, upper, epsilon = tail_range(study)
    outside = [t for t in study.t_grid if not lower <= t <= upper]
    if outside:
        console.print(
            f"[yellow]Attention :[/yellow] t hors de [L, M] ="
            f" [{lower:.4g}, {upper:.4g}] : "
            + ", ".join(f"{t:g}" for t in outside)
        )
    suggested = parameter_plan(study.N, study.k, epsilon)
    if suggested.grid_empty:
        console.print(
            "[yellow]Attention :[/yellow] plage [L, M] vide pour"
            f" N={study.N}, k={study.k}."
        )
    if suggested.growth_flag:
        console.print(
            f"[yellow]Attention :[/yellow] l/m^ε ≥ 1 (l={suggested.l},"
            f" m={suggested.m})."
        )
    if suggested.l != study.l:
        console.print(
            f"[dim]l suggéré (≈ ln m, diviseur de m={suggested.m}) :"
            f" {suggested.l}[/dim]"
        )


@cli.command()
@_common_options
def diagnose(config_path, output_dir, seed, threads, fmt):
    """Calculer g(m) et la variance de la projection de Hájek."""
    try:
        overrides = {"seed": seed, "threads": _threads_option(threads)}
        config = diagnose_config(load_config(config_path), overrides)
        run = RunConfig(
            command="diagnose",
            output_dir=Path(output_dir),
            seed=config.seed,
            threads=config.threads,
            fmt=fmt,
            config_path=Path(config_path),
        )
        report = run_diagnostics(config, show_progress=True)
        report.config = diagnose_echo(config)

        stem = f"diagnose_seed{run.seed}"
        payloads = {
            "csv": g_csv(report),
            "json": diagnose_json(report, run.seed),
        }
        atomic_write(run.output_dir / f"{stem}_g.csv", payloads["csv"])
        if report.hajek is not None:
            atomic_write(
                run.output_dir / f"{stem}_hajek.csv", hajek_csv(report),
            )
        atomic_write(run.output_dir / f"{stem}.json", payloads["json"])
    except Exception as e:
        _fail("diagnostic", e)

    if report.hajek is not None:
        h = report.hajek
        if not h.L <= h.t_used <= h.M:
            console.print(
                f"[yellow]Attention :[/yellow] t = {h.t_used:g} hors de"
                f" [L, M] = [{h.L:.4g}, {h.M:.4g}]"
            )
    if fmt is None:
        click.echo(diagnostics_table(report), err=True, nl=False)
    _emit(fmt, payloads)
    console.print(
        f"[green]Diagnostic terminé :[/green] {run.output_dir / stem}.*"
    )


@cli.command()
@_common_options
@_study_options
def sweep(config_path, output_dir, seed, threads, fmt,
          replicates, grid, k, l, subsample):
    """Balayer une grille (k, l, T, loi), avec reprise."""
    try:
        overrides = {
            "seed": seed,
            "threads": _threads_option(threads),
            "replicates": replicates,
            "t_grid": grid,
            "k": k,
            "l": l,
            "T": subsample,
        }
        raw = load_config(config_path)
        config = sweep_config(raw, overrides)
        run = RunConfig(
            command="sweep",
            output_dir=Path(output_dir),
            seed=config.seed,
            threads=config.threads,
            fmt=fmt,
            config_path=Path(config_path),
        )
        result = run_sweep(config, run.output_dir, show_progress=True)
        summary = dump_json({
            "version": __version__,
            "command": "sweep",
            "seed": run.seed,
            "config": sweep_echo(raw, overrides),
            "cells": [cell.cell_id for cell in config.cells],
            "rows": result.merged_rows,
        })
        atomic_write(run.output_dir / f"sweep_seed{run.seed}.json", summary)
        payloads = {
            "csv": result.merged_path.read_text(encoding="utf-8"),
            "json": summary,
        }
    except Exception as e:
        _fail("balayage", e)

    if result.skipped:
        console.print(
            f"[dim]{len(result.skipped)} cellules déjà calculées,"
            " reprises telles quelles.[/dim]"
        )
    _emit(fmt, payloads)
    console.print(
        f"[green]Balayage terminé :[/green] {len(result.computed)} cellules"
        f" calculées, {result.merged_rows} lignes dans {result.merged_path}"
    )
