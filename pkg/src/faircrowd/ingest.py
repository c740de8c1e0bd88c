"""Fixed-point ingestion of real-valued sensor readings from CSV."""
from __future__ import annotations

import csv
from decimal import Decimal, InvalidOperation
from importlib import resources
from pathlib import Path

DEFAULT_SCALE = 10
BUILTIN_PREFIX = "builtin:"


class IngestError(ValueError):
    pass


class NonNumericCell(IngestError):
    pass


class BoundsExceeded(IngestError):
    pass


class MissingColumn(IngestError):
    pass


def resolve(path: str | Path, base: Path | None = None) -> Path:
    """``builtin:<name>`` names a file shipped in the package data directory."""
    s = str(path)
    if s.startswith(BUILTIN_PREFIX):
        return Path(str(resources.files("faircrowd") / "data" / s[len(BUILTIN_PREFIX):]))
    p = Path(s)
    if base is not None and not p.is_absolute():
        p = base / p
    return p


def read_rows(path: str | Path) -> list[dict[str, str]]:
    """CSV rows as dicts; lines starting with ``#`` carry notes and are skipped."""
    with open(resolve(path), newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    return list(csv.DictReader(lines))


def read_column(path: str | Path, column: str) -> list[Decimal]:
    rows = read_rows(path)
    if rows and column not in rows[0]:
        raise MissingColumn(f"no column {column!r}; have {sorted(rows[0])}")
    out = []
    for k, row in enumerate(rows, 1):
        cell = (row.get(column) or "").strip()
        try:
            value = Decimal(cell)
        except InvalidOperation:
            raise NonNumericCell(f"row {k}: {column}={cell!r} is not a number") from None
        if not value.is_finite():
            raise NonNumericCell(f"row {k}: {column}={cell!r} is not finite")
        out.append(value)
    return out


def to_fixed_point(value: Decimal, scale: int, bound: int | None = None) -> int:
    scaled = value * scale
    if scaled != scaled.to_integral_value():
        raise BoundsExceeded(f"{value} has more precision than scale {scale} keeps")
    k = int(scaled)
    if k < 0:
        raise BoundsExceeded(f"negative reading {value}")
    if bound is not None and k >= bound:
        raise BoundsExceeded(f"{value} scales to {k}, not below {bound}")
    return k


def ingest(path: str | Path, column: str, scale: int = DEFAULT_SCALE, bound: int | None = None) -> list[int]:
    """One integer per row: the reading times ``scale``, exact or an error."""
    if scale < 1:
        raise IngestError("scale must be a positive integer")
    return [to_fixed_point(v, scale, bound) for v in read_column(path, column)]
