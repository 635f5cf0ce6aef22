"""Multivariate time-series container and CSV ingestion."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from irflab.errors import InputError


@dataclass(frozen=True)
class Dataset:
    """A named multivariate time series.

    ``values`` has one row per period and one column per series, aligned with
    ``names``. An optional date column read from CSV is carried as metadata
    and excluded from all numerics.
    """

    names: tuple[str, ...]
    values: np.ndarray
    dates: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise InputError("dataset values must be a 2-d array (T x n)")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", tuple(self.names))
        if len(self.names) != values.shape[1]:
            raise InputError(
                f"{len(self.names)} column names for {values.shape[1]} columns"
            )
        if len(set(self.names)) != len(self.names):
            raise InputError("column names must be unique")
        if values.shape[0] < 1:
            raise InputError("dataset must contain at least one row")
        if not np.all(np.isfinite(values)):
            t, j = np.argwhere(~np.isfinite(values))[0]
            raise InputError(
                f"non-finite value in column '{self.names[j]}' at row {t + 1}"
            )
        if self.dates is not None:
            dates = tuple(self.dates)
            object.__setattr__(self, "dates", dates)
            if len(dates) != values.shape[0]:
                raise InputError("date column length does not match data length")

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def n_columns(self) -> int:
        return self.values.shape[1]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.column_index(name)]

    def column_index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise InputError(f"column '{name}' not in dataset {list(self.names)}") from None

    def column_indices(self, names) -> list[int]:
        return [self.column_index(name) for name in names]

    def with_column(self, name: str, values: np.ndarray) -> "Dataset":
        """Return a copy with one extra column appended."""
        values = np.asarray(values, dtype=float).reshape(-1, 1)
        return Dataset(self.names + (name,), np.hstack([self.values, values]), self.dates)


def read_dataset_csv(path_or_buffer) -> Dataset:
    """Read a Dataset from CSV.

    The first non-comment row is a header of unique column names. An optional
    first column named ``date`` is kept as metadata. Lines starting with ``#``
    are ignored. Missing or non-numeric cells are rejected with their
    location.
    """
    if hasattr(path_or_buffer, "read"):
        text = path_or_buffer.read()
    else:
        with open(path_or_buffer, "r", encoding="utf-8") as fh:
            text = fh.read()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise InputError("empty CSV: no header row found")
    rows = list(csv.reader(io.StringIO("\n".join(lines))))
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise InputError("CSV header has duplicate column names")
    has_date = bool(header) and header[0] == "date"
    names = header[1:] if has_date else header
    if not names:
        raise InputError("CSV has no data columns")
    dates: list[str] = []
    data = np.empty((len(rows) - 1, len(names)))
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise InputError(f"row {i}: expected {len(header)} cells, found {len(row)}")
        cells = row[1:] if has_date else row
        if has_date:
            dates.append(row[0])
        for j, cell in enumerate(cells):
            cell = cell.strip()
            if cell == "":
                raise InputError(f"missing value at row {i}, column '{names[j]}'")
            try:
                value = float(cell)
            except ValueError:
                raise InputError(
                    f"non-numeric value '{cell}' at row {i}, column '{names[j]}'"
                ) from None
            if not math.isfinite(value):
                raise InputError(f"non-finite value at row {i}, column '{names[j]}'")
            data[i - 2, j] = value
    if data.shape[0] == 0:
        raise InputError("CSV contains a header but no data rows")
    return Dataset(tuple(names), data, tuple(dates) if has_date else None)


def write_dataset_csv(dataset: Dataset, path, header_comment: str | None = None) -> None:
    """Write a Dataset to CSV with full float round-trip precision."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        if dataset.dates is not None:
            writer.writerow(("date",) + dataset.names)
            for date, row in zip(dataset.dates, dataset.values):
                writer.writerow([date] + [repr(float(v)) for v in row])
        else:
            writer.writerow(dataset.names)
            for row in dataset.values:
                writer.writerow([repr(float(v)) for v in row])
