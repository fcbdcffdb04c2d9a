"""Structures de données partagées pour blockmom."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from blockmom.errors import ConfigError, DataError

# Identifiants d'estimateurs reconnus dans les rapports
ESTIMATOR_IDS = (
    "mom",
    "umom_full",
    "block_umom_exact",
    "block_umom_subsampled",
    "sample_mean",
)


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """Échantillon i.i.d. X₁, …, X_N, dans l'ordre de lecture."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, copy=True).ravel()
        if arr.size == 0:
            raise DataError("empty sample")
        if not np.all(np.isfinite(arr)):
            raise DataError("sample contains non-finite values")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def count(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class BlockPlan:
    """Géométrie (N, k, l) : n = lk blocs de taille b, groupes de taille m."""

    n_total: int
    k: int
    l: int
    n: int
    b: int
    m: int
    n_used: int

    @property
    def discarded(self) -> int:
        """Observations de queue écartées (N − nb)."""
        return self.n_total - self.n_used

    def to_dict(self) -> dict:
        return {
            "N_total": self.n_total,
            "k": self.k,
            "l": self.l,
            "n": self.n,
            "b": self.b,
            "m": self.m,
            "N_used": self.n_used,
        }


@dataclass(frozen=True, eq=False)
class BlockMeans:
    """Moyennes de blocs Z₁, …, Z_n."""

    z: np.ndarray
    plan: BlockPlan


class DesignKind(Enum):
    """Plan complet (énumération) ou sous-échantillonné."""

    EXACT = "exact"
    SUBSAMPLED = "subsampled"


@dataclass(frozen=True)
class SubsetDesign:
    """Famille de sous-ensembles de [n] de cardinal l."""

    kind: DesignKind
    n: int
    l: int
    draws: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if not 1 <= self.l <= self.n:
            raise ConfigError(
                f"subset order l={self.l} must satisfy 1 <= l <= n={self.n}"
            )
        if self.kind is DesignKind.SUBSAMPLED:
            if self.draws is None or self.draws < 1:
                raise ConfigError("subsampled design needs T >= 1")
            if self.seed is None or not 0 <= self.seed < 2**64:
                raise ConfigError("subsampled design needs a 64-bit seed")

    def to_dict(self) -> dict:
        data = {"kind": self.kind.value, "n": self.n, "l": self.l}
        if self.kind is DesignKind.SUBSAMPLED:
            data["T"] = self.draws
            data["seed"] = self.seed
        return data


@dataclass(frozen=True)
class EstimateReport:
    """Résultat d'un estimateur ponctuel de la moyenne."""

    estimator_id: str
    value: float
    plan: BlockPlan
    subset_means_evaluated: int
    design: SubsetDesign
    discarded_tail: int = field(init=False)

    def __post_init__(self):
        if self.estimator_id not in ESTIMATOR_IDS:
            raise ConfigError(f"unknown estimator: {self.estimator_id}")
        object.__setattr__(self, "discarded_tail", self.plan.discarded)

    def to_dict(self) -> dict:
        return {
            "estimator_id": self.estimator_id,
            "value": self.value,
            "plan": self.plan.to_dict(),
            "subset_means_evaluated": self.subset_means_evaluated,
            "design": self.design.to_dict(),
            "discarded_tail": self.discarded_tail,
        }


@dataclass(frozen=True)
class DistributionSpec:
    """Loi synthétique de moyenne μ et d'écart-type σ connus.

    epsilon_max est la borne (exclue) des ε tels que E|X−μ|^{2+ε} < ∞,
    math.inf pour les lois ayant tous leurs moments.
    """

    family: str
    params: dict[str, float]
    mu: float
    sigma: float
    epsilon_max: float

    @property
    def all_moments(self) -> bool:
        return math.isinf(self.epsilon_max)

    def to_dict(self) -> dict:
        return {"family": self.family, **self.params}
