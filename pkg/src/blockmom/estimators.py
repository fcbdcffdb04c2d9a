"""Estimateurs ponctuels de la moyenne : MOM, U-MOM et médiane à blocs.

Toutes les moyennes passent par anchored_mean : x₀ + Σ(xᵢ − x₀)/n, la
somme étant la réduction par paires de numpy le long d'une ligne
contiguë. Un échantillon constant renvoie ainsi exactement sa valeur.
"""

import dataclasses
import itertools
from collections.abc import Iterable, Sequence

import numpy as np

from blockmom.combinatorics import (
    enumerate_subsets,
    exact_design,
    sample_subsets,
    subsampled_design,
)
from blockmom.errors import ConfigError, DataError
from blockmom.models import BlockMeans, BlockPlan, EstimateReport, SampleBatch

# Nombre de sous-ensembles matérialisés à la fois pendant l'énumération
ENUM_CHUNK = 1 << 16


def anchored_mean(values: np.ndarray) -> np.ndarray:
    """Moyenne le long du dernier axe, ancrée sur le premier élément."""
    anchor = values[..., :1]
    deviations = np.ascontiguousarray(values - anchor)
    total = np.add.reduce(deviations, axis=-1)
    return values[..., 0] + total / values.shape[-1]


def median(values: Sequence[float] | np.ndarray) -> float:
    """Médiane, milieu des deux statistiques d'ordre centrales si n est pair."""
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        raise DataError("empty sequence")
    if not np.all(np.isfinite(arr)):
        raise DataError("median of non-finite values")
    return float(np.median(arr))


def sample_mean(batch: SampleBatch) -> float:
    """Moyenne empirique des N observations."""
    return float(anchored_mean(batch.values))


def sample_mean_estimate(batch: SampleBatch) -> EstimateReport:
    """Moyenne empirique, présentée comme un plan à un seul bloc."""
    plan = make_block_plan(batch.count, 1, 1)
    return EstimateReport(
        estimator_id="sample_mean",
        value=sample_mean(batch),
        plan=plan,
        subset_means_evaluated=1,
        design=exact_design(1, 1),
    )


def make_block_plan(n_total: int, k: int, l: int) -> BlockPlan:
    """Construit la géométrie n = lk, b = ⌊N/(lk)⌋, m = lb."""
    for name, value in (("N", n_total), ("k", k), ("l", l)):
        if isinstance(value, bool) or int(value) != value or value < 1:
            raise ConfigError(f"{name} must be a positive integer, got {value!r}")
    n_total, k, l = int(n_total), int(k), int(l)
    n = l * k
    if n > n_total:
        raise ConfigError(
            f"too many blocks for sample size (l·k = {n} > N = {n_total})"
        )
    b = n_total // n
    return BlockPlan(
        n_total=n_total, k=k, l=l, n=n, b=b, m=l * b, n_used=n * b,
    )


def block_means(batch: SampleBatch, plan: BlockPlan) -> BlockMeans:
    """Moyennes des n blocs contigus G_j = {(j−1)b, …, jb − 1}."""
    if batch.count != plan.n_total:
        raise ConfigError(
            f"plan built for N={plan.n_total} but batch has {batch.count}"
            " observations"
        )
    rows = batch.values[: plan.n_used].reshape(plan.n, plan.b)
    return BlockMeans(z=anchored_mean(rows), plan=plan)


def shuffled(batch: SampleBatch, seed: int) -> SampleBatch:
    """Permutation aléatoire (graine fixée) avant l'affectation aux blocs."""
    rng = np.random.Generator(np.random.Philox(int(seed)))
    return SampleBatch(rng.permutation(batch.values))


def subset_means(
    means: BlockMeans,
    subsets: Iterable[tuple[int, ...]] | np.ndarray,
) -> np.ndarray:
    """Moyennes Z̄_J = (1/l) Σ_{j∈J} Z_j, dans l'ordre des sous-ensembles."""
    l = means.plan.l
    if isinstance(subsets, np.ndarray):
        return anchored_mean(means.z[subsets.reshape(-1, l)])

    chunks = []
    it = iter(subsets)
    while True:
        flat = np.fromiter(
            itertools.chain.from_iterable(itertools.islice(it, ENUM_CHUNK)),
            dtype=np.intp,
        )
        if flat.size == 0:
            break
        chunks.append(anchored_mean(means.z[flat.reshape(-1, l)]))
    if not chunks:
        return np.empty(0)
    return np.concatenate(chunks)


def mom_estimate(batch: SampleBatch, k: int) -> EstimateReport:
    """Médiane des moyennes classique : k groupes disjoints de taille ⌊N/k⌋."""
    plan = make_block_plan(batch.count, k, 1)
    groups = block_means(batch, plan)
    return EstimateReport(
        estimator_id="mom",
        value=median(groups.z),
        plan=plan,
        subset_means_evaluated=plan.k,
        design=exact_design(plan.k, 1),
    )


def block_umom_exact(batch: SampleBatch, plan: BlockPlan) -> EstimateReport:
    """Médiane des Z̄_J sur tout A_n^(l), énumérés en ordre lexicographique."""
    design = exact_design(plan.n, plan.l)
    means = block_means(batch, plan)
    values = subset_means(means, enumerate_subsets(plan.n, plan.l))
    return EstimateReport(
        estimator_id="block_umom_exact",
        value=median(values),
        plan=plan,
        subset_means_evaluated=int(values.size),
        design=design,
    )


def block_umom_subsampled(
    batch: SampleBatch,
    plan: BlockPlan,
    T: int,
    seed: int,
) -> EstimateReport:
    """Médiane des moyennes de T sous-ensembles tirés uniformément.

    Les tirages sont indépendants (avec remise d'un tirage à l'autre) ;
    le résultat est déterministe pour (batch, plan, T, seed).
    """
    if isinstance(T, bool) or int(T) != T or T < 1:
        raise ConfigError(f"T must be a positive integer, got {T!r}")
    design = subsampled_design(plan.n, plan.l, int(T), int(seed))
    means = block_means(batch, plan)
    rng = np.random.Generator(np.random.Philox(int(seed)))
    subsets = sample_subsets(plan.n, plan.l, int(T), rng)
    values = subset_means(means, subsets)
    return EstimateReport(
        estimator_id="block_umom_subsampled",
        value=median(values),
        plan=plan,
        subset_means_evaluated=int(values.size),
        design=design,
    )


def umom_full(batch: SampleBatch, k: int) -> EstimateReport:
    """U-MOM complet : moyennes sur tous les sous-ensembles de taille ⌊N/k⌋.

    Cas b = 1 de block_umom_exact, réservé aux petits N (oracle).
    """
    if isinstance(k, bool) or int(k) != k or not 1 <= k <= batch.count:
        raise ConfigError(f"k must satisfy 1 <= k <= N={batch.count}, got {k!r}")
    plan = make_block_plan(batch.count, k, batch.count // k)
    report = block_umom_exact(batch, plan)
    return dataclasses.replace(report, estimator_id="umom_full")


def eval_objective(
    block_means: BlockMeans,
    subset_means: Sequence[float] | np.ndarray,
    z: float,
) -> float:
    """F(z) = Σ_J |√m (Z̄_J − z)|, convexe et affine par morceaux en z."""
    values = np.asarray(subset_means, dtype=np.float64)
    if values.size == 0:
        raise DataError("empty sequence")
    scale = np.sqrt(block_means.plan.m)
    return float(np.add.reduce(np.abs(scale * (values - z))))
