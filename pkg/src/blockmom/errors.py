"""Hiérarchie d'erreurs de blockmom.

Chaque classe correspond à un code de sortie de la CLI.
"""


class BlockMomError(Exception):
    """Erreur de base du paquet."""

    exit_code = 1


class ConfigError(BlockMomError, ValueError):
    """Paramètres ou fichier de configuration invalides."""

    exit_code = 2


class DataError(BlockMomError, ValueError):
    """Données d'entrée illisibles, vides ou non finies."""

    exit_code = 3


class CapacityError(BlockMomError, ValueError):
    """Plan d'énumération exacte au-delà du plafond autorisé."""

    exit_code = 4
