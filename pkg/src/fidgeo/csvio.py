"""Deterministic CSV output: 17 significant digits, '\\n' line endings."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence


def fmt(v) -> str:
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def write_csv(path: str | Path, header: Sequence[str], columns: Iterable[Sequence]) -> Path:
    """Write equal-length ``columns`` under ``header``."""
    cols = [list(c) for c in columns]
    if len(cols) != len(header):
        raise ValueError("header and column count differ")
    if cols and any(len(c) != len(cols[0]) for c in cols):
        raise ValueError("columns have unequal length")
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([fmt(v) for v in row])
    return path
