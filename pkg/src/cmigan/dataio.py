"""CSV and JSON plumbing: sample matrices, model sidecars, benchmark manifests.

CSV files are UTF-8 with a header row and '.' decimal points. An
alternative dialect (semicolon separators with ',' decimals, as in the
UCI air-quality export) is available behind a flag. The value -200 is
treated as a missing-data sentinel, as are empty and non-numeric cells;
rows containing any missing value in a mapped column are dropped and
counted. Floats are written with 17 significant digits so a save/load
round trip is bit-exact.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .datagen import ModelParams
from .estimators import SampleSet

MISSING_SENTINEL = -200.0
MAX_CSV_BYTES = 1 << 29  # 512 MiB guard against pathological inputs


class DataError(ValueError):
    """Unusable input data (missing file/columns, empty selection, bad encoding)."""


@dataclass
class ColumnMapping:
    """Which CSV columns form the x/y/z blocks.

    Columns may be header names or 0-based integer indices.
    ``normalization`` is 'none' or 'zscore' (applied after row drops);
    ``shuffle_seed`` permutes rows reproducibly, None means keep order.
    """

    x_cols: list
    y_cols: list
    z_cols: list = field(default_factory=list)
    normalization: str = "none"
    shuffle_seed: int | None = None

    def __post_init__(self):
        if not self.x_cols or not self.y_cols:
            raise DataError("x_cols and y_cols must be non-empty")
        if self.normalization not in ("none", "zscore"):
            raise DataError(f"unknown normalization {self.normalization!r}")


@dataclass
class LoadedCsv:
    """A parsed sample matrix plus row accounting (dropped + kept = source)."""

    samples: SampleSet
    dropped_rows: int
    kept_rows: int
    source_rows: int


def _resolve(columns: list, header: list[str], path: str) -> list[int]:
    out = []
    for col in columns:
        if isinstance(col, int) or (isinstance(col, str) and col.lstrip("-").isdigit()):
            idx = int(col)
            if not 0 <= idx < len(header):
                raise DataError(f"{path}: column index {idx} out of range (0..{len(header) - 1})")
            out.append(idx)
        elif col in header:
            out.append(header.index(col))
        else:
            raise DataError(f"{path}: no column named {col!r} in header {header}")
    return out


def _parse_cell(text: str, decimal_comma: bool) -> float | None:
    text = text.strip()
    if not text:
        return None
    if decimal_comma:
        text = text.replace(",", ".")
    try:
        value = float(text)
    except ValueError:
        return None
    if value == MISSING_SENTINEL or not np.isfinite(value):
        return None
    return value


def load_csv(path: str, mapping: ColumnMapping, semicolon: bool = False) -> LoadedCsv:
    """Read a header-ed CSV into a SampleSet with columns [x|y|z].

    ``semicolon=True`` switches to ';' separators with ',' decimals.
    Rows with any missing mapped cell (empty, non-numeric, the -200
    sentinel, or non-finite) are dropped and counted.
    """
    if not os.path.isfile(path):
        raise DataError(f"no such file: {path}")
    if os.path.getsize(path) > MAX_CSV_BYTES:
        raise DataError(f"{path} exceeds the {MAX_CSV_BYTES} byte limit")
    delimiter = ";" if semicolon else ","
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh, delimiter=delimiter)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path} is empty; a header row is required") from None
            header = [h.strip() for h in header]
            idx = [
                _resolve(cols, header, path)
                for cols in (mapping.x_cols, mapping.y_cols, mapping.z_cols)
            ]
            wanted = idx[0] + idx[1] + idx[2]
            rows = []
            source_rows = 0
            for row in reader:
                if not row or all(not cell.strip() for cell in row):
                    continue
                source_rows += 1
                if max(wanted) >= len(row):
                    continue  # short row: counts as dropped
                vals = [_parse_cell(row[i], semicolon) for i in wanted]
                if any(v is None for v in vals):
                    continue
                rows.append(vals)
    except UnicodeDecodeError as exc:
        raise DataError(f"{path} is not valid UTF-8: {exc}") from None

    if not rows:
        raise DataError(f"{path}: no usable rows after dropping missing data")
    data = np.asarray(rows, dtype=np.float64)
    if mapping.normalization == "zscore":
        mu = data.mean(axis=0)
        sd = data.std(axis=0)
        sd = np.where(sd > 0.0, sd, 1.0)
        data = (data - mu) / sd
    if mapping.shuffle_seed is not None:
        perm = np.random.default_rng(mapping.shuffle_seed).permutation(len(data))
        data = data[perm]
    dims = (len(idx[0]), len(idx[1]), len(idx[2]))
    return LoadedCsv(
        samples=SampleSet(data, dims),
        dropped_rows=source_rows - len(rows),
        kept_rows=len(rows),
        source_rows=source_rows,
    )


def default_headers(dims: tuple[int, int, int]) -> list[str]:
    dx, dy, dz = dims
    return (
        [f"x{i}" for i in range(dx)]
        + [f"y{i}" for i in range(dy)]
        + [f"z{i}" for i in range(dz)]
    )


def save_csv(samples: SampleSet, path: str, header_names: list[str] | None = None):
    """Write a SampleSet as comma-separated UTF-8 with 17-digit floats."""
    headers = header_names or default_headers(samples.dims)
    if len(headers) != samples.data.shape[1]:
        raise DataError(
            f"{len(headers)} header names for {samples.data.shape[1]} columns"
        )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(headers)
        for row in samples.data:
            writer.writerow([format(v, ".17g") for v in row])


def sidecar_path(csv_path: str) -> str:
    return csv_path + ".json"


def write_sidecar(csv_path: str, params: ModelParams, true_value: float | None):
    """Record generator parameters (and closed-form truth, if any) next to a CSV."""
    doc = params.to_dict()
    doc["true_cmi"] = true_value
    doc["csv"] = os.path.basename(csv_path)
    with open(sidecar_path(csv_path), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
    return sidecar_path(csv_path)


def read_sidecar(path: str) -> tuple[ModelParams, float | None]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return ModelParams.from_dict(doc), doc.get("true_cmi")


@dataclass
class ManifestEntry:
    csv: str
    label: str
    dims: tuple[int, int, int]

    def __post_init__(self):
        if self.label not in ("CI", "CD"):
            raise DataError(f"manifest label must be CI or CD, got {self.label!r}")
        self.dims = tuple(int(d) for d in self.dims)


def write_manifest(path: str, entries: list[ManifestEntry]):
    doc = {"datasets": [{"csv": e.csv, "label": e.label, "dims": list(e.dims)} for e in entries]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)


def read_manifest(path: str) -> list[ManifestEntry]:
    if not os.path.isfile(path):
        raise DataError(f"no such manifest: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path} is not valid JSON: {exc}") from None
    if "datasets" not in doc or not isinstance(doc["datasets"], list):
        raise DataError(f"{path} must contain a 'datasets' list")
    out = []
    for i, entry in enumerate(doc["datasets"]):
        try:
            out.append(ManifestEntry(entry["csv"], entry["label"], tuple(entry["dims"])))
        except (KeyError, TypeError) as exc:
            raise DataError(f"{path}: malformed dataset entry {i}: {exc}") from None
    return out
