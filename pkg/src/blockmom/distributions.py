"""Lois synthétiques à μ, σ et indice de moments connus, tirages graînés."""

import math

import numpy as np

from blockmom.errors import ConfigError
from blockmom.models import DistributionSpec, SampleBatch

FAMILIES = ("gaussian", "student_t", "pareto", "lognormal", "rademacher")

# Paramètres acceptés par famille, avec leur valeur par défaut
_DEFAULTS: dict[str, dict[str, float]] = {
    "gaussian": {"mu": 0.0, "sigma": 1.0},
    "student_t": {"df": 4.0, "loc": 0.0, "scale": 1.0},
    "pareto": {"alpha": 3.0, "scale": 1.0},
    "lognormal": {"meanlog": 0.0, "sdlog": 1.0},
    "rademacher": {},
}


def seed_sequence(master: int, index: int) -> np.random.SeedSequence:
    """Graine du flux numéro index dérivée de la graine maître.

    Contrat de reproductibilité : SeedSequence(master, spawn_key=(index,)).
    """
    return np.random.SeedSequence(int(master), spawn_key=(int(index),))


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    """Générateur Philox, indépendant de tout état global."""
    return np.random.Generator(np.random.Philox(seed))


def make_spec(
    family: str,
    standardize: bool = False,
    **params: float,
) -> DistributionSpec:
    """Construit une loi et calcule analytiquement μ, σ et ε_max.

    standardize=True (student_t uniquement) fixe l'échelle pour σ = 1.
    """
    if family not in _DEFAULTS:
        raise ConfigError(
            f"unknown distribution family: {family!r}"
            f" (known: {', '.join(FAMILIES)})"
        )
    unknown = sorted(set(params) - set(_DEFAULTS[family]))
    if unknown:
        raise ConfigError(
            f"unknown parameters for {family}: {', '.join(unknown)}"
        )
    values = {**_DEFAULTS[family], **{k: float(v) for k, v in params.items()}}
    for name, value in values.items():
        if not math.isfinite(value):
            raise ConfigError(f"{family}.{name} must be finite")

    if standardize:
        if family != "student_t":
            raise ConfigError("standardize is only supported for student_t")
        if values["df"] > 2:
            values["scale"] = math.sqrt((values["df"] - 2) / values["df"])

    if family == "gaussian":
        mu, sigma, eps = values["mu"], values["sigma"], math.inf
    elif family == "student_t":
        df = values["df"]
        if df <= 2:
            raise ConfigError(f"student_t requires df > 2, got {df}")
        if values["scale"] <= 0:
            raise ConfigError("student_t scale must be positive")
        mu = values["loc"]
        sigma = values["scale"] * math.sqrt(df / (df - 2))
        eps = df - 2
    elif family == "pareto":
        alpha, xm = values["alpha"], values["scale"]
        if alpha <= 2:
            raise ConfigError(f"pareto requires alpha > 2, got {alpha}")
        if xm <= 0:
            raise ConfigError("pareto scale must be positive")
        mu = alpha * xm / (alpha - 1)
        sigma = xm / (alpha - 1) * math.sqrt(alpha / (alpha - 2))
        eps = alpha - 2
    elif family == "lognormal":
        s2 = values["sdlog"] ** 2
        if values["sdlog"] <= 0:
            raise ConfigError("lognormal sdlog must be positive")
        mu = math.exp(values["meanlog"] + s2 / 2)
        sigma = math.sqrt(math.expm1(s2)) * mu
        eps = math.inf
    else:
        mu, sigma, eps = 0.0, 1.0, math.inf

    if not sigma > 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    return DistributionSpec(
        family=family, params=values, mu=mu, sigma=sigma, epsilon_max=eps,
    )


def sample_values(
    spec: DistributionSpec,
    rng: np.random.Generator,
    size: int | tuple[int, ...],
) -> np.ndarray:
    """Tirages bruts i.i.d. de forme size."""
    p = spec.params
    if spec.family == "gaussian":
        return p["mu"] + p["sigma"] * rng.standard_normal(size)
    if spec.family == "student_t":
        # Rapport gaussienne / racine de khi-deux
        return p["loc"] + p["scale"] * rng.standard_t(p["df"], size)
    if spec.family == "pareto":
        # Inverse de la fonction de répartition ; 1 − U ∈ (0, 1]
        u = 1.0 - rng.random(size)
        return p["scale"] * u ** (-1.0 / p["alpha"])
    if spec.family == "lognormal":
        return rng.lognormal(p["meanlog"], p["sdlog"], size)
    return np.where(rng.random(size) < 0.5, -1.0, 1.0)


def draw(
    spec: DistributionSpec,
    rng: np.random.Generator,
    count: int,
) -> SampleBatch:
    """count tirages i.i.d. de la loi, déterministes pour un rng donné."""
    if count < 1:
        raise ConfigError(f"count must be positive, got {count}")
    return SampleBatch(sample_values(spec, rng, count))


def standardize(spec: DistributionSpec, x):
    """(x − μ)/σ, scalaire ou tableau."""
    return (x - spec.mu) / spec.sigma
