"""CSV output with round-trip exact floats."""
from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from ..errors import EgtLabError


class OutputError(EgtLabError, OSError):
    pass


def format_value(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        # repr is the shortest string that reads back to the same double
        return repr(float(v))
    if v is None:
        raise OutputError("missing cell (None) in result row")
    return str(v)


def write_results(rows: Sequence[dict], path) -> Path:
    rows = list(rows)
    if not rows:
        raise OutputError("no result rows to write")
    columns = list(rows[0])
    for i, row in enumerate(rows):
        if list(row) != columns:
            raise OutputError(
                f"row {i} has columns {list(row)}, expected {columns}: mixed schemas in one file"
            )
    path = Path(path)
    try:
        if path.parent != Path("."):
            path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([format_value(row[c]) for c in columns])
    except OSError as err:
        raise OutputError(f"cannot write {path}: {err.strerror or err}") from None
    return path


def _parse(cell: str):
    for conv in (int, float):
        try:
            return conv(cell)
        except ValueError:
            pass
    if cell in ("true", "false"):
        return cell == "true"
    return cell


def read_results(path) -> list[dict]:
    """Read a file written by :func:`write_results`, converting numeric cells."""
    with open(path, newline="") as fh:
        return [{k: _parse(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def side_path(path, suffix: str) -> Path:
    """``results.csv`` -> ``results_<suffix>.csv``."""
    path = Path(path)
    return path.with_name(f"{path.stem}_{suffix}{path.suffix or '.csv'}")


def write_experiment(result, path) -> list[Path]:
    written = [write_results(result.rows, path)]
    for name, table in sorted(result.tables.items()):
        written.append(write_results(table, side_path(path, name)))
    return written
