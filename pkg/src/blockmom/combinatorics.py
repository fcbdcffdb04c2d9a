"""Combinatoire de A_n^(l) : comptage, énumération et tirage de sous-ensembles."""

import itertools
import math
from collections.abc import Iterator

import numpy as np

from blockmom.errors import CapacityError, ConfigError
from blockmom.models import DesignKind, SubsetDesign

# Au-delà de ce nombre de sous-ensembles, le plan exact est refusé
ENUMERATION_CAP = 10**7

# Plus grand entier non signé 64 bits
U64_MAX = 2**64 - 1


def binomial_saturating(n: int, l: int) -> int | None:
    """C(n, l) exact s'il tient sur 64 bits, None (saturation) sinon."""
    if l < 0 or l > n:
        return 0
    l = min(l, n - l)
    count = 1
    # Les produits partiels C(n−l+i, i) croissent : on peut s'arrêter tôt
    for i in range(1, l + 1):
        count = count * (n - l + i) // i
        if count > U64_MAX:
            return None
    return count


def _check_order(n: int, l: int) -> None:
    if n < 1 or not 1 <= l <= n:
        raise ConfigError(f"invalid subset order: need 1 <= l={l} <= n={n}")


def exact_design(n: int, l: int) -> SubsetDesign:
    """Plan complet A_n^(l), refusé au-delà de ENUMERATION_CAP."""
    _check_order(n, l)
    count = binomial_saturating(n, l)
    if count is None or count > ENUMERATION_CAP:
        shown = "> 2^64" if count is None else str(count)
        raise CapacityError(
            f"design too large; use subsampled variant"
            f" (C({n},{l}) = {shown} > {ENUMERATION_CAP})"
        )
    return SubsetDesign(kind=DesignKind.EXACT, n=n, l=l)


def subsampled_design(n: int, l: int, draws: int, seed: int) -> SubsetDesign:
    """Plan de T sous-ensembles tirés uniformément (avec remise)."""
    _check_order(n, l)
    return SubsetDesign(
        kind=DesignKind.SUBSAMPLED, n=n, l=l, draws=draws, seed=seed,
    )


def design_size(design: SubsetDesign) -> int:
    """Nombre de moyennes de sous-ensembles évaluées par le plan."""
    if design.kind is DesignKind.EXACT:
        return binomial_saturating(design.n, design.l)
    return design.draws


def enumerate_subsets(n: int, l: int) -> Iterator[tuple[int, ...]]:
    """Énumère les l-sous-ensembles de {0, …, n−1} en ordre lexicographique.

    Le plafond est vérifié avant le premier tuple produit.
    """
    exact_design(n, l)
    return itertools.combinations(range(n), l)


def sample_subsets(
    n: int,
    l: int,
    count: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Tire count sous-ensembles uniformes indépendants (algorithme de Floyd).

    À l'étape i, on tire t dans {0, …, n−l+i} ; si t est déjà pris, on
    garde n−l+i à sa place. Mémoire en O(count · l).
    Chaque ligne du tableau (count, l) est triée par ordre croissant.
    """
    _check_order(n, l)
    chosen = np.empty((count, l), dtype=np.intp)
    for i in range(l):
        top = n - l + i
        t = rng.integers(0, top + 1, size=count)
        taken = (chosen[:, :i] == t[:, None]).any(axis=1)
        chosen[:, i] = np.where(taken, top, t)
    return np.sort(chosen, axis=1)


def sample_subset(n: int, l: int, rng: np.random.Generator) -> tuple[int, ...]:
    """Tire un l-sous-ensemble uniforme de {0, …, n−1}."""
    return tuple(int(i) for i in sample_subsets(n, l, 1, rng)[0])


def default_T(n: int, l: int) -> int:
    """Budget T par défaut : ⌈10 · (n/l) · ln(max(n, 3))⌉, donc T ≫ n/l."""
    _check_order(n, l)
    return math.ceil(10 * n / l * math.log(max(n, 3)))
