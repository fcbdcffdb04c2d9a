"""Reporter — rendu des résultats en CSV, JSON et tableaux rich."""

import json
import math
from io import StringIO

from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from blockmom import __version__
from blockmom.dataio import csv_text, fmt_float
from blockmom.diagnostics import DiagnosticsReport, confidence_range
from blockmom.harness import ComparisonRow, DeviationStudyConfig, TailCurve
from blockmom.models import EstimateReport

SIMULATE_HEADER = (
    "estimator",
    "t",
    "threshold",
    "p_hat",
    "p_stderr",
    "c_hat",
    "censored_flag",
    "var_scaled",
    "var_stderr",
)

# DuckDB ignore la casse des colonnes : T ne peut pas côtoyer t
SWEEP_HEADER = ("distribution", "k", "l", "T_subsets", *SIMULATE_HEADER)

G_HEADER = ("m", "g_m", "g_m_stderr", "kolmogorov_distance")

HAJEK_HEADER = (
    "l",
    "b",
    "k",
    "t_used",
    "L",
    "M",
    "hajek_var",
    "hajek_var_stderr",
    "hajek_reference",
)


def _num(value: float | None) -> float | None:
    """Flottant JSON ; les valeurs non finies deviennent null."""
    if value is None or not math.isfinite(value):
        return None
    return float(value)


def dump_json(data: dict) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def curve_rows(curves: list[TailCurve]) -> list[tuple]:
    """Une ligne par (estimateur, t), dans l'ordre des courbes."""
    return [
        (
            curve.estimator,
            p.t,
            p.threshold,
            p.p_hat,
            p.p_stderr,
            p.c_hat,
            p.censored,
            curve.var_scaled,
            curve.var_stderr,
        )
        for curve in curves
        for p in curve.points
    ]


def simulate_csv(curves: list[TailCurve]) -> str:
    return csv_text(SIMULATE_HEADER, curve_rows(curves))


def sweep_cell_csv(
    distribution: str,
    study: DeviationStudyConfig,
    curves: list[TailCurve],
) -> str:
    """Lignes d'une cellule de balayage, préfixées par ses coordonnées."""
    prefix = (distribution, study.k, study.l, study.T)
    return csv_text(
        SWEEP_HEADER, [(*prefix, *row) for row in curve_rows(curves)],
    )


def tail_range(study: DeviationStudyConfig) -> tuple[float, float, float]:
    """(L, M, ε) de la plage de confiance, avec ε = min(1, ε_max)."""
    plan = study.plan
    epsilon = min(1.0, study.spec.epsilon_max)
    lower, upper = confidence_range(plan.n, plan.l, plan.m, epsilon)
    return lower, upper, epsilon


def simulate_json(
    study: DeviationStudyConfig,
    curves: list[TailCurve],
    comparison: list[ComparisonRow],
    echo: dict,
) -> str:
    """Résumé JSON : courbes, enveloppes, comparaisons et écho de config."""
    lower, upper, epsilon = tail_range(study)
    data = {
        "version": __version__,
        "command": "simulate",
        "seed": study.master_seed,
        "config": echo,
        "plan": study.plan.to_dict(),
        "T_effective": study.subsample_size,
        "range": {"L": _num(lower), "M": _num(upper), "epsilon": epsilon},
        "distribution": {
            "family": study.spec.family,
            "mu": study.spec.mu,
            "sigma": study.spec.sigma,
            "epsilon_max": _num(study.spec.epsilon_max),
        },
        "curves": [
            {
                "estimator": curve.estimator,
                "replicates": curve.replicates,
                "var_scaled": _num(curve.var_scaled),
                "var_stderr": _num(curve.var_stderr),
                "points": [
                    {
                        "t": p.t,
                        "threshold": p.threshold,
                        "p_hat": p.p_hat,
                        "p_stderr": p.p_stderr,
                        "c_hat": p.c_hat,
                        "censored_flag": p.censored,
                        "abs_quantile": p.abs_quantile,
                        "envelope": p.envelope,
                        "mom_envelope": 2.0 * math.exp(-p.t / math.pi),
                        "above_envelope": p.above_envelope,
                        "in_range": lower <= p.t <= upper,
                    }
                    for p in curve.points
                ],
            }
            for curve in curves
        ],
        "comparison": [
            {
                "estimator": row.estimator,
                "reference": row.reference,
                "t": row.t,
                "quantile_ratio": _num(row.quantile_ratio),
                "var_ratio": _num(row.var_ratio),
            }
            for row in comparison
        ],
    }
    return dump_json(data)


def g_csv(report: DiagnosticsReport) -> str:
    return csv_text(G_HEADER, [
        (p.m, p.g_m, p.g_m_stderr, p.kolmogorov_distance)
        for p in report.g_points
    ])


def hajek_csv(report: DiagnosticsReport) -> str:
    rows = []
    if report.hajek is not None:
        h = report.hajek
        rows.append((
            h.l, h.b, h.k, h.t_used, h.L, h.M,
            h.hajek_var, h.hajek_var_stderr, h.hajek_reference,
        ))
    return csv_text(HAJEK_HEADER, rows)


def diagnose_json(report: DiagnosticsReport, seed: int) -> str:
    data = {
        "version": __version__,
        "command": "diagnose",
        "seed": seed,
        "config": report.config,
        "g": [
            {
                "m": p.m,
                "g_m": p.g_m,
                "g_m_stderr": p.g_m_stderr,
                "kolmogorov_distance": _num(p.kolmogorov_distance),
            }
            for p in report.g_points
        ],
        "hajek": None,
    }
    if report.hajek is not None:
        h = report.hajek
        data["hajek"] = {
            "l": h.l,
            "b": h.b,
            "k": h.k,
            "t_used": h.t_used,
            "L": _num(h.L),
            "M": _num(h.M),
            "hajek_var": h.hajek_var,
            "hajek_var_stderr": h.hajek_var_stderr,
            "hajek_reference": h.hajek_reference,
        }
    return dump_json(data)


def estimate_json(
    report: EstimateReport,
    input_path: str,
    shuffle_seed: int | None = None,
) -> str:
    data = {
        "version": __version__,
        "command": "estimate",
        "input": input_path,
        "shuffle_seed": shuffle_seed,
        **report.to_dict(),
    }
    return dump_json(data)


def curves_table(
    curves: list[TailCurve],
    comparison: list[ComparisonRow],
) -> str:
    """Tableau terminal des courbes de queue et des rapports."""
    console = Console(file=StringIO(), force_terminal=True, width=120)

    table = Table(title="Probabilités de dépassement", show_lines=False)
    table.add_column("Estimateur")
    table.add_column("t", justify="right")
    table.add_column("p̂", justify="right")
    table.add_column("± σ", justify="right", style="dim")
    table.add_column("ĉ", justify="right")
    table.add_column("3e^{−t/2}", justify="right", style="dim")
    for curve in curves:
        for p in curve.points:
            p_hat = f"{p.p_hat:.4g}"
            if p.above_envelope:
                p_hat = f"[yellow]{p_hat}[/yellow]"
            c_hat = f"{p.c_hat:.3f}" + ("*" if p.censored else "")
            table.add_row(
                curve.estimator, f"{p.t:g}", p_hat, f"{p.p_stderr:.2g}",
                c_hat, f"{p.envelope:.4g}",
            )
    console.print(table)

    variances = "\n".join(
        f"[bold]{c.estimator:<24}[/bold] Var(√N·err) = {c.var_scaled:.4f}"
        f" ± {c.var_stderr:.4f}"
        for c in curves
    )
    console.print(Panel(variances, title="Variances", border_style="blue"))

    if comparison:
        ts = sorted({row.t for row in comparison})
        table = Table(title=f"Rapports à {comparison[0].reference}")
        table.add_column("Estimateur")
        for t in ts:
            table.add_column(f"q(t={t:g})", justify="right")
        table.add_column("Var", justify="right")
        by_estimator: dict[str, list[ComparisonRow]] = {}
        for row in comparison:
            by_estimator.setdefault(row.estimator, []).append(row)
        for name, rows in by_estimator.items():
            table.add_row(
                name,
                *(f"{r.quantile_ratio:.3f}" for r in rows),
                f"{rows[0].var_ratio:.3f}",
            )
        console.print(table)

    return console.file.getvalue()


def diagnostics_table(report: DiagnosticsReport) -> str:
    """Tableau terminal de g(m) et de la variance de Hájek."""
    console = Console(file=StringIO(), force_terminal=True, width=120)
    table = Table(title="g(m)")
    table.add_column("m", justify="right")
    table.add_column("g(m)", justify="right")
    table.add_column("± σ", justify="right", style="dim")
    table.add_column("Kolmogorov", justify="right")
    for p in report.g_points:
        ks = "" if p.kolmogorov_distance is None else f"{p.kolmogorov_distance:.4g}"
        table.add_row(str(p.m), f"{p.g_m:.6g}", f"{p.g_m_stderr:.2g}", ks)
    console.print(table)

    if report.hajek is not None:
        h = report.hajek
        summary = (
            f"[bold]l, b, k :[/bold] {h.l}, {h.b}, {h.k}\n"
            f"[bold]t       :[/bold] {fmt_float(h.t_used)}"
            f" (plage [{h.L:.4g}, {h.M:.4g}])\n"
            f"[bold]Var h⁽¹⁾ :[/bold] {h.hajek_var:.4f} ± {h.hajek_var_stderr:.4f}\n"
            f"[bold]Référence gaussienne :[/bold] {h.hajek_reference:.4f}"
        )
        console.print(Panel(summary, title="Projection de Hájek", border_style="blue"))
    return console.file.getvalue()
