"""Registre DuckDB des cellules de balayage terminées."""

import os
from pathlib import Path

import duckdb

SCHEMA_CELLS = """\
CREATE TABLE IF NOT EXISTS cells (
    cell_id       VARCHAR NOT NULL PRIMARY KEY,
    cell_index    INTEGER NOT NULL,
    distribution  VARCHAR NOT NULL,
    k             INTEGER NOT NULL,
    l             INTEGER NOT NULL,
    T             VARCHAR NOT NULL,
    seed          UBIGINT NOT NULL,
    digest        VARCHAR NOT NULL,
    row_count     INTEGER NOT NULL,
    path          VARCHAR NOT NULL,
    completed_at  TIMESTAMP NOT NULL DEFAULT now()
);
"""


def connect(db_path: str | Path = "sweep.duckdb") -> duckdb.DuckDBPyConnection:
    """Ouvre le registre et crée le schéma si nécessaire."""
    conn = duckdb.connect(str(db_path))
    conn.execute(SCHEMA_CELLS)
    return conn


def record_cell(
    conn: duckdb.DuckDBPyConnection,
    cell_id: str,
    cell_index: int,
    distribution: str,
    k: int,
    l: int,
    T: int | str,
    seed: int,
    digest: str,
    rows: int,
    path: str | Path,
) -> None:
    """Marque une cellule comme terminée (remplace une entrée existante)."""
    conn.execute(
        """
        INSERT INTO cells (cell_id, cell_index, distribution, k, l, T, seed,
                           digest, row_count, path)
        VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
        ON CONFLICT (cell_id) DO UPDATE SET
            cell_index = excluded.cell_index,
            seed = excluded.seed,
            digest = excluded.digest,
            row_count = excluded.row_count,
            path = excluded.path,
            completed_at = now()
        """,
        [cell_id, cell_index, distribution, k, l, str(T), seed, digest, rows,
         str(path)],
    )


def completed_cells(
    conn: duckdb.DuckDBPyConnection,
    seed: int,
) -> dict[str, str]:
    """Cellules terminées pour cette graine : cell_id → empreinte."""
    rows = conn.execute(
        "SELECT cell_id, digest FROM cells WHERE seed = ? ORDER BY cell_index",
        [seed],
    ).fetchall()
    return {r[0]: r[1] for r in rows}


def cell_count(conn: duckdb.DuckDBPyConnection) -> int:
    return conn.execute("SELECT count(*) FROM cells").fetchone()[0]


def _literal(text: str) -> str:
    return "'" + text.replace("'", "''") + "'"


def merge_csv(
    conn: duckdb.DuckDBPyConnection,
    paths: list[str | Path],
    dest: str | Path,
) -> int:
    """Concatène les CSV de cellules (même en-tête) dans dest.

    Les valeurs sont relues comme texte pour que les flottants restent
    identiques octet par octet. Retourne le nombre de lignes écrites.
    """
    dest = Path(dest)
    tmp = dest.with_name(f".{dest.name}.tmp")
    files = "[" + ", ".join(_literal(str(p)) for p in paths) + "]"
    source = f"read_csv({files}, header = true, all_varchar = true)"
    conn.execute("SET preserve_insertion_order = true")
    count = conn.execute(f"SELECT count(*) FROM {source}").fetchone()[0]
    conn.execute(
        f"COPY (SELECT * FROM {source}) TO {_literal(str(tmp))}"
        " (FORMAT csv, HEADER true)"
    )
    os.replace(tmp, dest)
    return count
