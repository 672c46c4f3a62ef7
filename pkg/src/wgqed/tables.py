"""Column tables for spectra and trajectories, with plain CSV output."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError

CSV_DIGITS = 12


def format_value(x) -> str:
    """Render one CSV cell: 12 significant digits, integers kept exact."""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if np.isnan(x):
        return "nan"
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    out = f"{x:.{CSV_DIGITS}g}"
    return "0" if out == "-0" else out


def write_csv(header, rows, path=None) -> str:
    """Write comma-separated rows with LF endings; returns the text."""
    buf = io.StringIO(newline="")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(format_value(v) for v in row) + "\n")
    text = buf.getvalue()
    if path is not None:
        with open(Path(path), "w", newline="\n") as fh:
            fh.write(text)
    return text


class Table:
    """Ordered named columns of equal length."""

    required: tuple = ()

    def __init__(self, columns: dict, meta: dict | None = None):
        cols = {}
        n = None
        for name, values in columns.items():
            arr = np.asarray(values)
            if arr.ndim != 1:
                raise InvalidArgumentError(f"column {name!r} must be one-dimensional")
            if n is None:
                n = arr.size
            elif arr.size != n:
                raise InvalidArgumentError("all columns must have the same length")
            cols[name] = arr
        missing = [c for c in self.required if c not in cols]
        if missing:
            raise InvalidArgumentError(f"missing columns: {missing}")
        self.columns = cols
        self.meta = dict(meta or {})

    def __getitem__(self, name):
        return self.columns[name]

    def __contains__(self, name):
        return name in self.columns

    def __len__(self):
        return next(iter(self.columns.values())).size if self.columns else 0

    @property
    def header(self) -> list:
        return list(self.columns)

    def to_csv(self, path=None) -> str:
        rows = zip(*self.columns.values())
        return write_csv(self.header, rows, path)

    @classmethod
    def from_csv(cls, path_or_text, meta=None):
        """Read a table back; columns that are not all numeric stay strings."""
        text = path_or_text
        if "\n" not in str(path_or_text):
            text = Path(path_or_text).read_text()
        header, *rows = csv.reader(ln for ln in text.splitlines() if ln)
        cols = {}
        for i, name in enumerate(header):
            raw = [r[i] for r in rows]
            try:
                cols[name] = np.array([float(v) for v in raw])
            except ValueError:
                cols[name] = np.array(raw, dtype=object)
        return cls(cols, meta)


class SpectrumTable(Table):
    """Detuning-indexed spectrum.

    ``delta`` is the dimensionless detuning. ``meta['gamma_total']`` records the
    rate that converts it back to a detuning rate.
    """

    required = ("delta",)

    @property
    def delta(self):
        return self.columns["delta"]

    @property
    def detuning(self):
        return self.delta * self.meta.get("gamma_total", 2.0) / 2.0


class TrajectoryTable(Table):
    """Time-indexed populations; optionally carries the raw amplitudes."""

    required = ("t",)

    def __init__(self, columns, meta=None, amplitudes=None):
        super().__init__(columns, meta)
        self.amplitudes = amplitudes

    @property
    def t(self):
        return self.columns["t"]
