"""Entrées/sorties : lecture d'échantillons, écritures atomiques, flottants."""

import csv
import math
import os
import tempfile
from collections.abc import Iterable, Sequence
from io import StringIO
from pathlib import Path

from blockmom.errors import DataError
from blockmom.models import SampleBatch


def read_sample(path: str | Path) -> SampleBatch:
    """Lit un nombre décimal fini par ligne.

    Les lignes vides et celles commençant par '#' sont ignorées.
    """
    path = Path(path)
    values: list[float] = []
    try:
        with path.open("rb") as f:
            for lineno, raw in enumerate(f, 1):
                try:
                    text = raw.decode("utf-8").strip()
                except UnicodeDecodeError:
                    raise DataError(f"line {lineno}: not valid UTF-8") from None
                if not text or text.startswith("#"):
                    continue
                try:
                    value = float(text)
                except ValueError:
                    raise DataError(f"line {lineno}: not a number") from None
                if not math.isfinite(value):
                    raise DataError(f"line {lineno}: not a finite number")
                values.append(value)
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e
    if not values:
        raise DataError(f"empty sample: no numeric line in {path}")
    return SampleBatch(values)


def fmt_float(value: float) -> str:
    """Représentation décimale la plus courte qui se relit à l'identique."""
    return repr(float(value))


def fmt_cell(value) -> str:
    """Sérialise une cellule CSV (flottants en pleine précision)."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return fmt_float(value)
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Table CSV avec fins de ligne \\n, quel que soit l'OS."""
    output = StringIO()
    writer = csv.writer(output, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt_cell(v) for v in row])
    return output.getvalue()


def atomic_write(path: str | Path, content: str) -> Path:
    """Écrit dans un fichier temporaire voisin puis renomme."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(
        prefix=f".{path.name}.", suffix=".tmp", dir=path.parent,
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(content)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path
