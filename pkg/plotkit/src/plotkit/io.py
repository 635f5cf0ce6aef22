"""CSV input layer: comment-aware reading, metadata, and schema checks.

All inputs are plain CSVs whose leading ``#`` lines are comments. Comment
lines of the form ``# key=value`` are collected as metadata (the convention
used for carrying the true impulse response alongside estimate draws).
"""

from __future__ import annotations

import csv
import io


class SchemaError(Exception):
    """An input CSV does not match the documented schema for its figure kind."""


def read_table(path) -> tuple[list[dict[str, str]], dict[str, str]]:
    """Read a CSV into dict-rows plus ``key=value`` metadata from comments."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except FileNotFoundError:
        raise SchemaError(f"input file not found: {path}") from None
    metadata: dict[str, str] = {}
    data_lines = []
    for line in text.splitlines():
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if "=" in body:
                key, _, value = body.partition("=")
                # "irflab v0.1.0 config=abc" style headers carry spaces in the
                # key part; only single-token keys are treated as metadata.
                if key.strip() and " " not in key.strip():
                    metadata[key.strip()] = value.strip()
            continue
        if line.strip():
            data_lines.append(line)
    if not data_lines:
        raise SchemaError(f"{path}: empty CSV (no header row)")
    rows = list(csv.DictReader(io.StringIO("\n".join(data_lines))))
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows, metadata


def require_columns(rows: list[dict[str, str]], required, path) -> None:
    have = list(rows[0].keys())
    missing = [name for name in required if name not in have]
    if missing:
        raise SchemaError(
            f"{path}: missing required column '{missing[0]}' (have: {', '.join(have)})"
        )


def floats(rows: list[dict[str, str]], column: str, path) -> list[float]:
    out = []
    for i, row in enumerate(rows, start=1):
        cell = row[column]
        try:
            out.append(float(cell))
        except (TypeError, ValueError):
            raise SchemaError(
                f"{path}: non-numeric value {cell!r} in column '{column}' at data row {i}"
            ) from None
    return out


def stat_rows(rows, statistic: str, path) -> list[dict[str, str]]:
    """Filter tidy (group, estimator, horizon, statistic, value) rows."""
    require_columns(rows, ("group", "estimator", "horizon", "statistic", "value"), path)
    keep = [row for row in rows if row["statistic"] == statistic and row["value"] != ""]
    if not keep:
        have = sorted({row["statistic"] for row in rows})
        raise SchemaError(
            f"{path}: no rows with statistic '{statistic}' (have: {', '.join(have)})"
        )
    return keep
