"""blockmom — Médiane de moyennes à blocs recouvrants et banc Monte Carlo."""

__version__ = "0.1.0"
