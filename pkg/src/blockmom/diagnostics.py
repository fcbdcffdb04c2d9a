"""Versions calculables des quantités analytiques de l'estimateur.

g(m) de type Berry–Esseen, variance de la projection de Hájek h⁽¹⁾ par
Monte Carlo imbriqué, et choix de paramètres (l ≈ ln m, plage [L, M]).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from rich.console import Console
from rich.progress import (
    BarColumn,
    MofNCompleteColumn,
    Progress,
    SpinnerColumn,
    TextColumn,
)
from scipy import stats

from blockmom.distributions import (
    make_rng,
    sample_values,
    seed_sequence,
    standardize,
)
from blockmom.errors import ConfigError
from blockmom.estimators import anchored_mean, make_block_plan
from blockmom.harness import resolve_threads
from blockmom.models import BlockPlan, DistributionSpec

if TYPE_CHECKING:
    from blockmom.config import DiagnoseConfig

# Nombre de points de la grille de t proposée par parameter_plan
GRID_POINTS = 8

# Plancher de la grille : en dessous, les probabilités de dépassement ~ 1
GRID_FLOOR = 0.5

# Lots utilisés pour l'erreur standard de la variance de Hájek
STDERR_BATCHES = 20

# Nœuds de quadrature de Gauss–Hermite pour la référence gaussienne
_HERMITE_NODES = 96


@dataclass
class ParameterPlan:
    """Paramètres (k, l, m) et plage [L, M] de la confiance t."""

    N: int
    k: int
    l: int
    m: int
    L: float
    M: float
    epsilon: float
    t_grid: list[float] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.l * self.k

    @property
    def grid_empty(self) -> bool:
        """Avertissement : M ≤ max(L, 0.5), pas de grille exploitable."""
        return not self.t_grid

    @property
    def growth_flag(self) -> bool:
        """Avertissement : l/m^ε ≥ 1 alors que ε ≥ 0.5 et m ≥ 64."""
        if self.epsilon < 0.5 or self.m < 64:
            return False
        return self.l / self.m**self.epsilon >= 1

    @property
    def midpoint(self) -> float:
        """Milieu géométrique √(L·M) de la plage."""
        return math.sqrt(self.L * self.M)

    def block_plan(self) -> BlockPlan:
        return make_block_plan(self.N, self.k, self.l)


@dataclass
class GPoint:
    """g(m) estimé, avec distance de Kolmogorov optionnelle."""

    m: int
    g_m: float
    g_m_stderr: float
    kolmogorov_distance: float | None = None


@dataclass
class HajekPoint:
    """Variance de h⁽¹⁾ au point t, et sa référence gaussienne."""

    l: int
    b: int
    k: int
    t_used: float
    L: float
    M: float
    hajek_var: float
    hajek_var_stderr: float
    hajek_reference: float


@dataclass
class DiagnosticsReport:
    """Résultat complet de la commande diagnose."""

    g_points: list[GPoint] = field(default_factory=list)
    hajek: HajekPoint | None = None
    config: dict = field(default_factory=dict)


def _nearest_divisor(m: int, target: float) -> int:
    """Diviseur de m le plus proche de target (égalité → le plus petit)."""
    divisors = set()
    for d in range(1, math.isqrt(m) + 1):
        if m % d == 0:
            divisors.update((d, m // d))
    return min(divisors, key=lambda d: (abs(d - target), d))


def confidence_range(
    n: int,
    l: int,
    m: int,
    epsilon: float,
) -> tuple[float, float]:
    """L(n,l) = (n/l)·ln(m)/m^ε et M(n,l) = n/(l²·ln(max(l, 2)))."""
    lower = (n / l) * math.log(m) / m**epsilon if m > 1 else 0.0
    upper = n / (l * l * math.log(max(l, 2)))
    return lower, upper


def parameter_plan(N: int, k: int, epsilon: float) -> ParameterPlan:
    """Choix l ≈ ln(m) parmi les diviseurs de m = ⌊N/k⌋, et grille de t."""
    if k < 1 or N < 1 or k > N:
        raise ConfigError(f"need 1 <= k <= N, got k={k}, N={N}")
    if not epsilon > 0:
        raise ConfigError(f"epsilon must be positive, got {epsilon}")
    m = N // k
    l = _nearest_divisor(m, math.log(m))
    lower, upper = confidence_range(l * k, l, m, epsilon)
    floor = max(lower, GRID_FLOOR)
    grid = []
    if upper > floor:
        grid = [float(t) for t in np.geomspace(floor, upper, GRID_POINTS)]
    return ParameterPlan(
        N=N, k=k, l=l, m=m, L=lower, M=upper, epsilon=epsilon, t_grid=grid,
    )


def g_curve(
    spec: DistributionSpec,
    ms: list[int],
    R: int,
    rng: np.random.Generator,
) -> list[GPoint]:
    """g(m) pour chaque m, sur les mêmes R tirages standardisés.

    L'intégrande (6/√m)·Y²·min(|Y|, √m) décroît en m point par point.
    """
    if R < 100:
        raise ConfigError(f"g(m) needs R >= 100 draws, got {R}")
    if not ms or any(m < 1 for m in ms):
        raise ConfigError("m-grid must contain positive integers")
    y = standardize(spec, sample_values(spec, rng, R))
    y2 = y * y
    abs_y = np.abs(y)
    points = []
    for m in ms:
        root = math.sqrt(m)
        values = 6.0 / root * y2 * np.minimum(abs_y, root)
        points.append(GPoint(
            m=int(m),
            g_m=float(anchored_mean(values)),
            g_m_stderr=float(np.std(values - values[0], ddof=1) / math.sqrt(R)),
        ))
    return points


def g_of_m(
    spec: DistributionSpec,
    m: int,
    R: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Estimation Monte Carlo de g(m) et son erreur standard."""
    point = g_curve(spec, [m], R, rng)[0]
    return point.g_m, point.g_m_stderr


def berry_esseen_distance(
    spec: DistributionSpec,
    m: int,
    R: int,
    rng: np.random.Generator,
    chunk: int = 4096,
) -> float:
    """Distance de Kolmogorov entre la somme standardisée de m tirages et N(0,1).

    À comparer à g(m), qui la majore.
    """
    if R < 100 or m < 1:
        raise ConfigError("berry_esseen_distance needs R >= 100 and m >= 1")
    sums = np.empty(R)
    for start in range(0, R, chunk):
        stop = min(start + chunk, R)
        y = standardize(spec, sample_values(spec, rng, (stop - start, m)))
        sums[start:stop] = np.add.reduce(y, axis=1) / math.sqrt(m)
    return float(stats.kstest(sums, "norm").statistic)


def hajek_reference(l: int, k: int, t: float) -> float:
    """Limite gaussienne de Var(h⁽¹⁾) : 4l·Var_W[Φ((√(t/k) − W/√l)/s)].

    s = √((l−1)/l) et W ~ N(0, 1) ; tend vers 2/π quand l → ∞ et t/k → 0.
    """
    c = math.sqrt(t / k)
    if l == 1:
        p = stats.norm.sf(c)
        return float(4 * p * (1 - p))
    nodes, weights = np.polynomial.hermite_e.hermegauss(_HERMITE_NODES)
    weights = weights / math.sqrt(2 * math.pi)
    s = math.sqrt((l - 1) / l)
    f = stats.norm.cdf((c - nodes / math.sqrt(l)) / s)
    mean = np.dot(weights, f)
    var = max(np.dot(weights, f * f) - mean * mean, 0.0)
    return float(4 * l * var)


def _outer_draw(
    spec: DistributionSpec,
    plan: BlockPlan,
    shift: float,
    r_inner: int,
    seed: int,
    index: int,
) -> tuple[float, float]:
    """Moyenne et variance internes des signes pour un tirage de Z_i."""
    rng = make_rng(seed_sequence(seed, index))
    l, b, m = plan.l, plan.b, plan.m
    z_i = anchored_mean(sample_values(spec, rng, b))
    inner = anchored_mean(sample_values(spec, rng, (r_inner, l - 1, b)))
    total = np.add.reduce(inner, axis=1) + z_i
    u = math.sqrt(m) * (total / l - spec.mu) / spec.sigma - shift
    # ρ′₋(u) = −1 pour u ≤ 0, +1 pour u > 0
    signs = np.where(u > 0, 1.0, -1.0)
    return float(np.mean(signs)), float(np.var(signs, ddof=1))


def _nested_variance(
    p: np.ndarray,
    v: np.ndarray,
    l: int,
    r_inner: int,
) -> float:
    """Variance des l·p corrigée du bruit interne, tronquée à 0."""
    raw = np.var(p, ddof=1) - np.mean(v) / r_inner
    return max(float(l * raw), 0.0)


def hajek_variance(
    spec: DistributionSpec,
    plan: BlockPlan,
    t: float,
    R_outer: int,
    R_inner: int,
    seed: int,
    threads: int = 1,
    show_progress: bool = False,
) -> tuple[float, float]:
    """Variance de la projection de Hájek h⁽¹⁾ par Monte Carlo imbriqué.

    Pour chaque tirage externe i (graine dérivée de (seed, i)), Z_i est la
    moyenne de b tirages et l'espérance conditionnelle est estimée sur
    R_inner copies indépendantes de (Z̃₁, …, Z̃_{l−1}). Le biais dû au bruit
    interne (variance interne moyenne / R_inner) est retranché. L'erreur
    standard provient de STDERR_BATCHES lots de tirages externes.
    """
    if not t > 0:
        raise ConfigError(f"t must be positive, got {t}")
    if R_outer < 100 or R_inner < 100:
        raise ConfigError("hajek_variance needs R_outer, R_inner >= 100")

    # Seuil √m·√(t/N_used)/… en unités standardisées : √(t/k)
    shift = math.sqrt(plan.m * t / plan.n_used)
    p = np.empty(R_outer)
    v = np.empty(R_outer)

    def work(index: int) -> int:
        p[index], v[index] = _outer_draw(
            spec, plan, shift, R_inner, seed, index,
        )
        return index

    workers = max(1, min(threads, os.cpu_count() or 1))
    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        console=Console(stderr=True),
        disable=not show_progress,
    ) as progress:
        task = progress.add_task("Projection de Hájek", total=R_outer)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(work, i) for i in range(R_outer)]
            for future in as_completed(futures):
                future.result()
                progress.advance(task)

    estimate = _nested_variance(p, v, plan.l, R_inner)
    batches = [
        _nested_variance(pb, vb, plan.l, R_inner)
        for pb, vb in zip(
            np.array_split(p, STDERR_BATCHES),
            np.array_split(v, STDERR_BATCHES),
            strict=True,
        )
    ]
    stderr = float(np.std(batches, ddof=1) / math.sqrt(STDERR_BATCHES))
    return estimate, stderr


def run_diagnostics(
    config: DiagnoseConfig,
    show_progress: bool = False,
) -> DiagnosticsReport:
    """g(m) sur la grille, distances de Kolmogorov et variance de Hájek.

    La graine racine est scindée en trois flux indépendants (g, Kolmogorov,
    Hájek) : activer l'un ne modifie pas les tirages des autres.
    """
    g_ss, ks_ss, hajek_ss = np.random.SeedSequence(config.seed).spawn(3)
    points = g_curve(config.spec, list(config.m_grid), config.R, make_rng(g_ss))
    if config.ks_replicates:
        ks_rng = make_rng(ks_ss)
        for point in points:
            point.kolmogorov_distance = berry_esseen_distance(
                config.spec, point.m, config.ks_replicates, ks_rng,
            )

    report = DiagnosticsReport(g_points=points)
    settings = config.hajek
    if settings is not None:
        t, lower, upper = settings.resolve_t()
        plan = make_block_plan(
            settings.l * settings.k * settings.b, settings.k, settings.l,
        )
        estimate, stderr = hajek_variance(
            config.spec,
            plan,
            t,
            settings.R_outer,
            settings.R_inner,
            seed=int(hajek_ss.generate_state(1, dtype=np.uint64)[0]),
            threads=resolve_threads(config.threads),
            show_progress=show_progress,
        )
        report.hajek = HajekPoint(
            l=settings.l,
            b=settings.b,
            k=settings.k,
            t_used=t,
            L=lower,
            M=upper,
            hajek_var=estimate,
            hajek_var_stderr=stderr,
            hajek_reference=hajek_reference(settings.l, settings.k, t),
        )
    return report
