"""Banc Monte Carlo : réplicats déterministes, courbes de queue, comparaisons.

Chaque réplicat i tire son échantillon avec une graine dérivée de
(master_seed, i) et écrit dans sa propre ligne de la matrice d'erreurs :
le résultat ne dépend ni du nombre de threads ni de l'ordonnancement.
"""

from __future__ import annotations

import math
import os
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field

import numpy as np
from rich.console import Console
from rich.progress import (
    BarColumn,
    MofNCompleteColumn,
    Progress,
    SpinnerColumn,
    TextColumn,
)

from blockmom.combinatorics import default_T, exact_design
from blockmom.distributions import draw, make_rng, seed_sequence
from blockmom.errors import ConfigError
from blockmom.estimators import (
    block_umom_exact,
    block_umom_subsampled,
    make_block_plan,
    mom_estimate,
    sample_mean,
)
from blockmom.models import BlockPlan, DistributionSpec, SampleBatch

# Estimateurs disponibles dans le banc, dans l'ordre des colonnes
STUDY_ESTIMATORS = (
    "mom",
    "block_umom_exact",
    "block_umom_subsampled",
    "sample_mean",
)

# Grille de t par défaut
DEFAULT_T_GRID = (1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0)

# Nombre minimal de réplicats pour une courbe de queue
MIN_TAIL_REPLICATES = 1000

# Réplicats traités par tâche du pool
CHUNK_SIZE = 64


@dataclass(frozen=True)
class DeviationStudyConfig:
    """Configuration d'une étude de déviations."""

    spec: DistributionSpec
    N: int
    estimators: tuple[str, ...]
    k: int
    l: int
    T: int | str = "auto"
    replicates: int = 1000
    t_grid: tuple[float, ...] = DEFAULT_T_GRID
    master_seed: int = 0
    threads: int | str = 1

    @property
    def plan(self) -> BlockPlan:
        return make_block_plan(self.N, self.k, self.l)

    @property
    def subsample_size(self) -> int:
        """T effectif : default_T(n, l) si T vaut "auto"."""
        if self.T == "auto":
            plan = self.plan
            return default_T(plan.n, plan.l)
        return int(self.T)


@dataclass
class ErrorMatrix:
    """Erreurs μ̂ − μ, une ligne par réplicat, une colonne par estimateur."""

    estimators: tuple[str, ...]
    errors: np.ndarray

    def column(self, estimator: str) -> np.ndarray:
        return self.errors[:, self.estimators.index(estimator)]


@dataclass
class TailPoint:
    """Probabilité de dépassement au seuil σ√(t/N)."""

    t: float
    threshold: float
    p_hat: float
    p_stderr: float
    c_hat: float
    censored: bool
    abs_quantile: float

    @property
    def envelope(self) -> float:
        """Enveloppe 3·e^{−t/2}."""
        return 3.0 * math.exp(-self.t / 2)

    @property
    def above_envelope(self) -> bool:
        return self.p_hat > self.envelope


@dataclass
class TailCurve:
    """Courbe de queue et variance normalisée d'un estimateur."""

    estimator: str
    N: int
    sigma: float
    replicates: int
    points: list[TailPoint] = field(default_factory=list)
    var_scaled: float = math.nan
    var_stderr: float = math.nan


@dataclass
class ComparisonRow:
    """Rapports à l'estimateur de référence, pour un t donné."""

    estimator: str
    reference: str
    t: float
    quantile_ratio: float
    var_ratio: float


def validate_study(config: DeviationStudyConfig) -> BlockPlan:
    """Vérifie la configuration avant toute simulation."""
    if not config.estimators:
        raise ConfigError("at least one estimator is required")
    unknown = [e for e in config.estimators if e not in STUDY_ESTIMATORS]
    if unknown:
        raise ConfigError(
            f"unknown estimators: {', '.join(unknown)}"
            f" (known: {', '.join(STUDY_ESTIMATORS)})"
        )
    if len(set(config.estimators)) != len(config.estimators):
        raise ConfigError("estimators must not repeat")
    if config.replicates < 1:
        raise ConfigError("replicates must be positive")
    grid = list(config.t_grid)
    if not grid or any(t <= 0 for t in grid):
        raise ConfigError("t_grid must be a nonempty list of positive reals")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("t_grid must be strictly increasing")
    if not 0 <= config.master_seed < 2**64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    plan = config.plan
    if config.T != "auto":
        if isinstance(config.T, bool) or not isinstance(config.T, int):
            raise ConfigError(f"T must be a positive integer or 'auto', got {config.T!r}")
        if config.T < 1:
            raise ConfigError("T must be positive")
    if "block_umom_exact" in config.estimators:
        exact_design(plan.n, plan.l)
    return plan


def resolve_threads(threads: int | str) -> int:
    """Nombre de threads : "auto" → BLOCKMOM_THREADS ou os.cpu_count()."""
    if threads == "auto":
        env = os.environ.get("BLOCKMOM_THREADS")
        if env:
            try:
                return max(1, int(env))
            except ValueError:
                raise ConfigError(
                    f"BLOCKMOM_THREADS must be an integer, got {env!r}"
                ) from None
        return os.cpu_count() or 1
    try:
        threads = int(threads)
    except ValueError:
        raise ConfigError(f"threads must be an integer, got {threads!r}") from None
    if threads < 1:
        raise ConfigError(f"threads must be positive, got {threads}")
    return threads


def replicate_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Graine du réplicat index : SeedSequence(master, spawn_key=(index,)).

    Ses deux enfants alimentent respectivement l'échantillon et le plan
    de sous-ensembles. Ce mélange est stable d'une version à l'autre.
    """
    return seed_sequence(master_seed, index)


Estimator = Callable[[SampleBatch, BlockPlan, int, int], float]

_ESTIMATOR_FNS: dict[str, Estimator] = {
    "mom": lambda batch, plan, T, seed: mom_estimate(batch, plan.k).value,
    "block_umom_exact": lambda batch, plan, T, seed: (
        block_umom_exact(batch, plan).value
    ),
    "block_umom_subsampled": lambda batch, plan, T, seed: (
        block_umom_subsampled(batch, plan, T, seed).value
    ),
    "sample_mean": lambda batch, plan, T, seed: sample_mean(batch),
}


def _replicate(
    config: DeviationStudyConfig,
    plan: BlockPlan,
    subsample: int,
    index: int,
) -> list[float]:
    """Erreurs de tous les estimateurs sur l'échantillon du réplicat index."""
    data_ss, design_ss = replicate_seed(config.master_seed, index).spawn(2)
    batch = draw(config.spec, make_rng(data_ss), config.N)
    design_seed = int(design_ss.generate_state(1, dtype=np.uint64)[0])
    return [
        _ESTIMATOR_FNS[name](batch, plan, subsample, design_seed)
        - config.spec.mu
        for name in config.estimators
    ]


def run_replicates(
    config: DeviationStudyConfig,
    show_progress: bool = False,
) -> ErrorMatrix:
    """Matrice R × estimateurs des erreurs μ̂ − μ (plan apparié)."""
    plan = validate_study(config)
    subsample = config.subsample_size
    errors = np.empty((config.replicates, len(config.estimators)))

    def work(start: int, stop: int) -> int:
        for i in range(start, stop):
            errors[i] = _replicate(config, plan, subsample, i)
        return stop - start

    chunks = [
        (start, min(start + CHUNK_SIZE, config.replicates))
        for start in range(0, config.replicates, CHUNK_SIZE)
    ]
    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        console=Console(stderr=True),
        disable=not show_progress,
    ) as progress:
        task = progress.add_task("Réplicats", total=config.replicates)
        with ThreadPoolExecutor(
            max_workers=resolve_threads(config.threads),
        ) as pool:
            futures = [pool.submit(work, a, b) for a, b in chunks]
            for future in as_completed(futures):
                progress.advance(task, future.result())

    return ErrorMatrix(estimators=tuple(config.estimators), errors=errors)


def variance_summary(
    errors: Sequence[float] | np.ndarray,
    N: int,
) -> tuple[float, float]:
    """Var(√N·err) et son erreur standard gaussienne √(2/(R−1))·Var."""
    scaled = math.sqrt(N) * np.asarray(errors, dtype=np.float64)
    R = scaled.size
    if R < 100:
        raise ConfigError(f"variance_summary needs R >= 100, got {R}")
    deviations = scaled - scaled[0]
    centered = deviations - np.mean(deviations)
    var = float(np.add.reduce(centered * centered) / (R - 1))
    return var, math.sqrt(2.0 / (R - 1)) * var


def _quantile_level(t: float) -> float:
    return min(max(1.0 - 2.0 * math.exp(-t), 0.0), 1.0)


def tail_curve(
    errors: Sequence[float] | np.ndarray,
    sigma: float,
    N: int,
    t_grid: Sequence[float],
    estimator: str = "",
) -> TailCurve:
    """Probabilités de dépassement et constante implicite c_hat par t.

    c_hat(t) = t / (2·ln(3/p_hat)) résout 3·e^{−t/(2c)} = p_hat ; si
    p_hat = 0, la valeur est censurée et remplacée par t / (2·ln(3R)).
    """
    abs_err = np.abs(np.asarray(errors, dtype=np.float64))
    R = abs_err.size
    if R < MIN_TAIL_REPLICATES:
        raise ConfigError(
            f"tail curves need R >= {MIN_TAIL_REPLICATES}, got {R}"
        )
    curve = TailCurve(estimator=estimator, N=N, sigma=sigma, replicates=R)
    for t in t_grid:
        threshold = sigma * math.sqrt(t / N)
        p_hat = float(np.count_nonzero(abs_err >= threshold)) / R
        if p_hat == 0.0:
            c_hat, censored = t / (2.0 * math.log(3.0 * R)), True
        else:
            c_hat, censored = t / (2.0 * math.log(3.0 / p_hat)), False
        curve.points.append(TailPoint(
            t=float(t),
            threshold=threshold,
            p_hat=p_hat,
            p_stderr=math.sqrt(p_hat * (1.0 - p_hat) / R),
            c_hat=c_hat,
            censored=censored,
            abs_quantile=float(np.quantile(abs_err, _quantile_level(t))),
        ))
    curve.var_scaled, curve.var_stderr = variance_summary(errors, N)
    return curve


def _ratio(numerator: float, denominator: float) -> float:
    if denominator == 0.0:
        return 1.0 if numerator == 0.0 else math.inf
    return numerator / denominator


def compare_estimators(
    curves: Sequence[TailCurve],
    reference: str = "mom",
) -> list[ComparisonRow]:
    """Rapports de quantiles (niveau 1 − 2e^{−t}) et de variances.

    quantile_ratio = q_estimateur / q_référence ; var_ratio =
    Var_référence / Var_estimateur. Vide si la référence est absente.
    """
    by_name = {c.estimator: c for c in curves}
    ref = by_name.get(reference)
    if ref is None:
        return []
    rows = []
    for curve in curves:
        var_ratio = _ratio(ref.var_scaled, curve.var_scaled)
        for point, ref_point in zip(curve.points, ref.points, strict=True):
            rows.append(ComparisonRow(
                estimator=curve.estimator,
                reference=reference,
                t=point.t,
                quantile_ratio=_ratio(
                    point.abs_quantile, ref_point.abs_quantile,
                ),
                var_ratio=var_ratio,
            ))
    return rows


def study_curves(
    config: DeviationStudyConfig,
    show_progress: bool = False,
) -> list[TailCurve]:
    """Réplicats puis courbe de queue de chaque estimateur de l'étude."""
    matrix = run_replicates(config, show_progress=show_progress)
    return [
        tail_curve(
            matrix.column(name),
            config.spec.sigma,
            config.N,
            config.t_grid,
            estimator=name,
        )
        for name in matrix.estimators
    ]
