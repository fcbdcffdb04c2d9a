"""Point d'entrée pour python -m blockmom."""

from blockmom.cli import cli

cli()
