"""CSV and JSON writers for run artifacts."""

import csv
import json
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence

import numpy as np

from .observables import ObservableRecord


def format_value(value: float) -> str:
    """Shortest round-trip representation of a float ("nan" for NaN)."""
    value = float(value)
    if np.isnan(value):
        return "nan"
    return repr(value)


class OutputFormatter:
    """Formats time series as CSV rows and results as JSON."""

    def format_row(self, values: Iterable[float]) -> List[str]:
        return [format_value(v) for v in values]

    def format_json(self, payload: Any) -> str:
        """Serialize a result mapping; NumPy scalars and arrays become plain JSON.

        Args:
            payload: Mapping or list to serialize

        Returns:
            Indented JSON string
        """
        return json.dumps(payload, indent=2, default=self._default)

    def _default(self, obj: Any) -> Any:
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, np.generic):
            return obj.item()
        if isinstance(obj, Path):
            return str(obj)
        raise TypeError(f"cannot serialize {type(obj).__name__}")

    def write_json(self, path: Path, payload: Any) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.format_json(payload) + "\n", encoding="utf-8")

    def write_table(
        self, path: Path, header: Sequence[str], rows: Iterable[Iterable[float]]
    ) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            for row in rows:
                writer.writerow(self.format_row(row))


class RecordWriter:
    """Streams ObservableRecords to a CSV file, one row per output time.

    The header is written with the first record unless the file is opened
    for appending to an existing table.
    """

    def __init__(self, path: Path, append: bool = False) -> None:
        self.path = path
        self._formatter = OutputFormatter()
        self._header: Optional[List[str]] = None
        path.parent.mkdir(parents=True, exist_ok=True)
        if append and path.exists():
            with path.open(newline="", encoding="utf-8") as handle:
                self._header = next(csv.reader(handle), None)
        else:
            path.write_text("", encoding="utf-8")

    def write(self, rec: ObservableRecord) -> None:
        header = rec.header()
        with self.path.open("a", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            if self._header is None:
                writer.writerow(header)
                self._header = header
            elif self._header != header:
                raise ValueError("record columns do not match the existing table")
            writer.writerow(self._formatter.format_row(rec.values()))


def read_table(path: Path) -> List[dict]:
    """Read a CSV written by this module back into dicts of floats."""
    with path.open(newline="", encoding="utf-8") as handle:
        return [
            {key: float(value) for key, value in row.items()}
            for row in csv.DictReader(handle)
        ]


def format_json(payload: Any) -> str:
    """Convenience wrapper around OutputFormatter.format_json."""
    return OutputFormatter().format_json(payload)


def write_json(path: Path, payload: Any) -> None:
    OutputFormatter().write_json(path, payload)


def write_table(
    path: Path, header: Sequence[str], rows: Iterable[Iterable[float]]
) -> None:
    OutputFormatter().write_table(path, header, rows)
