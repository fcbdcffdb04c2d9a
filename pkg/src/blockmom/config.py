"""Lecture et validation des fichiers de configuration (TOML ou JSON).

Un fichier regroupe des paires clé = valeur en sections par commande :
[distribution], [simulate], [diagnose], [sweep] et, pour les balayages,
[distributions.<nom>]. Les résumés JSON produits par la CLI peuvent être
relus tels quels : leur clé "config" est alors utilisée.
"""

from __future__ import annotations

import hashlib
import json
import math
import tomllib
from dataclasses import dataclass, field
from pathlib import Path

from blockmom.diagnostics import confidence_range
from blockmom.distributions import make_spec
from blockmom.errors import ConfigError
from blockmom.estimators import make_block_plan
from blockmom.harness import (
    DEFAULT_T_GRID,
    MIN_TAIL_REPLICATES,
    DeviationStudyConfig,
    validate_study,
)
from blockmom.models import DistributionSpec

COMMANDS = ("estimate", "simulate", "diagnose", "sweep")

SIMULATE_KEYS = frozenset({
    "N", "k", "l", "T", "replicates", "estimators", "t_grid", "seed",
    "threads",
})
DIAGNOSE_KEYS = frozenset({
    "m_grid", "R", "ks_replicates", "l", "b", "k", "t", "epsilon",
    "R_outer", "R_inner", "seed", "threads",
})
SWEEP_KEYS = SIMULATE_KEYS | {"distributions"}

# Sections autorisées à la racine, par commande
TOP_LEVEL = {
    "simulate": frozenset({"distribution", "simulate"}),
    "diagnose": frozenset({"distribution", "diagnose"}),
    "sweep": frozenset({"distributions", "sweep"}),
}

# Nombre maximal de cellules d'un balayage
MAX_SWEEP_CELLS = 10**4

# Estimateurs par défaut d'une étude
DEFAULT_ESTIMATORS = ("mom", "block_umom_subsampled", "sample_mean")

# Choix symboliques du point t de la projection de Hájek
T_CHOICES = ("midpoint", "L", "M")


@dataclass
class RunConfig:
    """Paramètres communs d'une invocation de la CLI."""

    command: str
    output_dir: Path
    seed: int | None = None
    threads: int | str = 1
    fmt: str | None = None
    config_path: Path | None = None
    input_path: Path | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command: {self.command}")
        if self.command != "estimate" and self.seed is None:
            raise ConfigError(f"{self.command} requires a seed")


@dataclass
class HajekSettings:
    """Géométrie (l, b, k) et point t de la projection de Hájek."""

    l: int
    b: int
    k: int
    t: float | str = "midpoint"
    epsilon: float = 1.0
    R_outer: int = 5000
    R_inner: int = 2000

    def resolve_t(self) -> tuple[float, float, float]:
        """(t, L, M) avec t numérique."""
        plan = make_block_plan(self.l * self.k * self.b, self.k, self.l)
        lower, upper = confidence_range(plan.n, plan.l, plan.m, self.epsilon)
        if self.t == "midpoint":
            return math.sqrt(lower * upper), lower, upper
        if self.t == "L":
            return lower, lower, upper
        if self.t == "M":
            return upper, lower, upper
        return float(self.t), lower, upper


@dataclass
class DiagnoseConfig:
    """Configuration de la commande diagnose."""

    spec: DistributionSpec
    m_grid: tuple[int, ...]
    R: int
    seed: int
    threads: int | str = 1
    ks_replicates: int = 0
    hajek: HajekSettings | None = None


@dataclass
class SweepCell:
    """Une cellule (k, l, T, loi) d'un balayage."""

    index: int
    distribution: str
    study: DeviationStudyConfig

    @property
    def cell_id(self) -> str:
        s = self.study
        return f"k{s.k}_l{s.l}_T{s.T}_{self.distribution}"

    @property
    def digest(self) -> str:
        """Empreinte SHA-256 de tout ce qui détermine les lignes de la cellule.

        Le nombre de threads n'y entre pas : il ne change pas les résultats.
        """
        echo = study_echo(self.study)
        del echo["simulate"]["threads"]
        text = json.dumps({"name": self.distribution, **echo}, sort_keys=True)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass
class SweepConfig:
    """Configuration de la commande sweep."""

    cells: list[SweepCell] = field(default_factory=list)
    seed: int = 0
    threads: int | str = 1


def load_config(path: str | Path) -> dict:
    """Charge un fichier TOML ou JSON en dictionnaire."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(text)
        else:
            data = tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"cannot parse config {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a table of sections")
    # Résumé JSON produit par la CLI : on relit la configuration en écho
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]
    return data


def _check_keys(section: str, values: dict, allowed: frozenset) -> None:
    unknown = sorted(set(values) - allowed)
    if unknown:
        raise ConfigError(
            f"unknown keys in [{section}]: {', '.join(unknown)}"
        )


def _section(raw: dict, name: str, command: str) -> dict:
    _check_keys("<root>", raw, TOP_LEVEL[command])
    section = raw.get(name, {})
    if not isinstance(section, dict):
        raise ConfigError(f"[{name}] must be a table")
    return section


def _apply_overrides(values: dict, overrides: dict | None) -> dict:
    merged = dict(values)
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value
    return merged


def _positive_int(values: dict, key: str, default: int | None = None) -> int:
    value = values.get(key, default)
    if value is None:
        raise ConfigError(f"missing required key: {key}")
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(f"{key} must be a positive integer, got {value!r}")
    return value


def _seed(values: dict) -> int:
    seed = values.get("seed")
    if seed is None:
        raise ConfigError("missing required key: seed")
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError(f"seed must be an integer, got {seed!r}")
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    return seed


def _threads(values: dict) -> int | str:
    threads = values.get("threads", 1)
    if threads == "auto":
        return threads
    if isinstance(threads, bool) or not isinstance(threads, int) or threads < 1:
        raise ConfigError(f"threads must be a positive integer or 'auto', got {threads!r}")
    return threads


def _subsample(value) -> int | str:
    if value is None or value == "auto":
        return "auto"
    if isinstance(value, str) and value.isdigit():
        value = int(value)
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(f"T must be a positive integer or 'auto', got {value!r}")
    return value


def _t_grid(value) -> tuple[float, ...]:
    if value is None:
        return DEFAULT_T_GRID
    if isinstance(value, str):
        value = [v for v in value.split(",") if v.strip()]
    try:
        return tuple(float(v) for v in value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid t_grid: {value!r}") from e


def distribution_spec(section: dict) -> DistributionSpec:
    """Construit la loi décrite par une section [distribution]."""
    if "family" not in section:
        raise ConfigError("distribution section needs a 'family' key")
    params = {k: v for k, v in section.items() if k != "family"}
    standardize = params.pop("standardize", False)
    try:
        return make_spec(section["family"], standardize=standardize, **params)
    except TypeError as e:
        raise ConfigError(f"invalid distribution parameters: {e}") from e


def _study(
    spec: DistributionSpec,
    values: dict,
    section: str,
    allowed: frozenset,
) -> DeviationStudyConfig:
    _check_keys(section, values, allowed)
    estimators = values.get("estimators", DEFAULT_ESTIMATORS)
    if isinstance(estimators, str):
        estimators = [e.strip() for e in estimators.split(",") if e.strip()]
    study = DeviationStudyConfig(
        spec=spec,
        N=_positive_int(values, "N"),
        estimators=tuple(estimators),
        k=_positive_int(values, "k"),
        l=_positive_int(values, "l", 1),
        T=_subsample(values.get("T")),
        replicates=_positive_int(values, "replicates", MIN_TAIL_REPLICATES),
        t_grid=_t_grid(values.get("t_grid")),
        master_seed=_seed(values),
        threads=_threads(values),
    )
    if study.replicates < MIN_TAIL_REPLICATES:
        raise ConfigError(
            f"tail studies need replicates >= {MIN_TAIL_REPLICATES},"
            f" got {study.replicates}"
        )
    validate_study(study)
    return study


def study_config(raw: dict, overrides: dict | None = None) -> DeviationStudyConfig:
    """Étude de déviations de la commande simulate, validée."""
    dist = _section(raw, "distribution", "simulate")
    values = _apply_overrides(_section(raw, "simulate", "simulate"), overrides)
    return _study(distribution_spec(dist), values, "simulate", SIMULATE_KEYS)


def study_echo(study: DeviationStudyConfig) -> dict:
    """Écho de configuration : relu, il reproduit la même étude."""
    return {
        "distribution": study.spec.to_dict(),
        "simulate": {
            "N": study.N,
            "k": study.k,
            "l": study.l,
            "T": study.T,
            "replicates": study.replicates,
            "estimators": list(study.estimators),
            "t_grid": list(study.t_grid),
            "seed": study.master_seed,
            "threads": study.threads,
        },
    }


def diagnose_config(raw: dict, overrides: dict | None = None) -> DiagnoseConfig:
    """Configuration de la commande diagnose, validée."""
    dist = _section(raw, "distribution", "diagnose")
    values = _apply_overrides(_section(raw, "diagnose", "diagnose"), overrides)
    _check_keys("diagnose", values, DIAGNOSE_KEYS)

    m_grid = values.get("m_grid", [25, 100, 400])
    if (
        not isinstance(m_grid, list) or not m_grid
        or any(isinstance(m, bool) or not isinstance(m, int) or m < 1
               for m in m_grid)
    ):
        raise ConfigError(f"m_grid must be a list of positive integers, got {m_grid!r}")

    hajek = None
    if "l" in values or "b" in values:
        t = values.get("t", "midpoint")
        if isinstance(t, str) and t not in T_CHOICES:
            raise ConfigError(f"t must be a number or one of {', '.join(T_CHOICES)}")
        epsilon = float(values.get("epsilon", 1.0))
        if not epsilon > 0:
            raise ConfigError("epsilon must be positive")
        hajek = HajekSettings(
            l=_positive_int(values, "l"),
            b=_positive_int(values, "b"),
            k=_positive_int(values, "k", 64),
            t=t,
            epsilon=epsilon,
            R_outer=_positive_int(values, "R_outer", 5000),
            R_inner=_positive_int(values, "R_inner", 2000),
        )
        if hajek.R_outer < 100 or hajek.R_inner < 100:
            raise ConfigError("R_outer and R_inner must be >= 100")
        if hajek.resolve_t()[0] <= 0:
            raise ConfigError("t must be positive")

    ks = values.get("ks_replicates", 0)
    if isinstance(ks, bool) or not isinstance(ks, int) or ks < 0:
        raise ConfigError("ks_replicates must be a nonnegative integer")
    if 0 < ks < 100:
        raise ConfigError("ks_replicates must be 0 or >= 100")

    R = _positive_int(values, "R", 10**6)
    if R < 100:
        raise ConfigError("R must be >= 100")
    return DiagnoseConfig(
        spec=distribution_spec(dist),
        m_grid=tuple(m_grid),
        R=R,
        seed=_seed(values),
        threads=_threads(values),
        ks_replicates=ks,
        hajek=hajek,
    )


def diagnose_echo(config: DiagnoseConfig) -> dict:
    """Écho de la configuration diagnose."""
    section = {
        "m_grid": list(config.m_grid),
        "R": config.R,
        "ks_replicates": config.ks_replicates,
        "seed": config.seed,
        "threads": config.threads,
    }
    if config.hajek is not None:
        h = config.hajek
        section.update({
            "l": h.l, "b": h.b, "k": h.k, "t": h.t, "epsilon": h.epsilon,
            "R_outer": h.R_outer, "R_inner": h.R_inner,
        })
    return {"distribution": config.spec.to_dict(), "diagnose": section}


def _as_list(value, default):
    if value is None:
        return list(default)
    if isinstance(value, list):
        return value
    return [value]


def sweep_config(raw: dict, overrides: dict | None = None) -> SweepConfig:
    """Développe la grille (k, l, T, loi) en cellules validées."""
    tables = _section(raw, "distributions", "sweep")
    values = _apply_overrides(_section(raw, "sweep", "sweep"), overrides)
    _check_keys("sweep", values, SWEEP_KEYS)
    if not tables:
        raise ConfigError("sweep needs at least one [distributions.<name>] table")

    names = _as_list(values.get("distributions"), tables.keys())
    missing = [n for n in names if n not in tables]
    if missing:
        raise ConfigError(f"undefined distributions: {', '.join(missing)}")
    ks = _as_list(values.get("k"), [])
    ls = _as_list(values.get("l"), [1])
    subsamples = _as_list(values.get("T"), ["auto"])
    if not ks:
        raise ConfigError("missing required key: k")

    size = len(ks) * len(ls) * len(subsamples) * len(names)
    if size > MAX_SWEEP_CELLS:
        raise ConfigError(
            f"sweep grid too large: {size} cells > {MAX_SWEEP_CELLS}"
        )

    specs = {name: distribution_spec(tables[name]) for name in names}
    base = {k: v for k, v in values.items() if k not in ("k", "l", "T", "distributions")}
    cells = []
    for k in ks:
        for l in ls:
            for subsample in subsamples:
                for name in names:
                    cell_values = {**base, "k": k, "l": l, "T": subsample}
                    study = _study(specs[name], cell_values, "sweep", SWEEP_KEYS)
                    cells.append(SweepCell(
                        index=len(cells), distribution=name, study=study,
                    ))
    return SweepConfig(
        cells=cells, seed=_seed(values), threads=_threads(values),
    )


def sweep_echo(raw: dict, overrides: dict | None = None) -> dict:
    """Écho d'une configuration de balayage (surcharges appliquées)."""
    values = _apply_overrides(raw.get("sweep", {}), overrides)
    return {"distributions": raw.get("distributions", {}), "sweep": values}

