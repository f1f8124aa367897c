"""CSV ingestion, bundled datasets and JSON report builders."""

from __future__ import annotations

import csv
import json
import math
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .exceptions import ConfigError, DataFormatError
from .mcb import McbPair, Muc, amuc, muc_points
from .regression import Dataset
from .vscs import VscsResult

BUNDLED = ("diabetes",)


def bundled_path(name: str) -> Path:
    if name not in BUNDLED:
        raise ConfigError(f"no bundled dataset named {name!r}; available: {', '.join(BUNDLED)}")
    return Path(str(resources.files("mcbounds") / "data" / f"{name}.csv"))


def resolve_data_path(spec: str) -> Path:
    """A bundled dataset name or a filesystem path."""
    if spec in BUNDLED:
        return bundled_path(spec)
    return Path(spec)


def read_table(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Header and float matrix of a comma-delimited UTF-8 file.

    Raises :class:`DataFormatError` naming the file line and column of the
    first bad field.
    """
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot open data file {path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: file is empty") from None
        except (csv.Error, UnicodeDecodeError) as exc:
            raise DataFormatError(f"{path}: line 1: {exc}") from None
        header = [h.strip() for h in header]
        if not header or any(h == "" for h in header):
            raise DataFormatError(f"{path}: line 1: header has an empty column name")
        dup = {h for h in header if header.count(h) > 1}
        if dup:
            raise DataFormatError(f"{path}: line 1: duplicate column names {sorted(dup)}")
        rows = []
        try:
            for fields in reader:
                line = reader.line_num
                if not fields or all(f.strip() == "" for f in fields):
                    continue
                if len(fields) != len(header):
                    raise DataFormatError(
                        f"{path}: line {line}: expected {len(header)} fields, found {len(fields)}")
                row = []
                for name, raw in zip(header, fields):
                    try:
                        v = float(raw)
                    except ValueError:
                        raise DataFormatError(
                            f"{path}: line {line}, column {name!r}: not a number: {raw!r}") from None
                    if not math.isfinite(v):
                        raise DataFormatError(f"{path}: line {line}, column {name!r}: non-finite value {raw!r}")
                    row.append(v)
                rows.append(row)
        except (csv.Error, UnicodeDecodeError) as exc:
            raise DataFormatError(f"{path}: line {reader.line_num}: {exc}") from None
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return header, np.array(rows, dtype=np.float64)


def load_dataset(path: str | Path, response: str | None = None) -> tuple[Dataset, str]:
    """Dataset from a CSV file; ``response`` defaults to the last column."""
    header, M = read_table(path)
    if len(header) < 2:
        raise DataFormatError(f"{path}: need a response and at least one predictor column")
    if response is None:
        response = header[-1]
    if response not in header:
        raise ConfigError(f"response column {response!r} not found in {path} (columns: {', '.join(header)})")
    j = header.index(response)
    names = [h for h in header if h != response]
    X = np.delete(M, j, axis=1)
    try:
        return Dataset(X, M[:, j], tuple(names)), response
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc


def write_dataset(data: Dataset, path: str | Path, response: str = "y") -> None:
    """Write predictors then the response; ``repr`` floats make a re-read bit-exact."""
    if response in data.names:
        raise ValueError(f"response name {response!r} clashes with a predictor name")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*data.names, response])
        for row, yi in zip(data.X, data.y):
            w.writerow([repr(float(v)) for v in row] + [repr(float(yi))])


def names_of(model, names: Sequence[str]) -> list[str]:
    return [names[j] for j in model]


def muc_table(muc: Muc, names: Sequence[str]) -> list[dict]:
    """One row per width: the curve point and the bounds attaining it."""
    return [{"w": w, "w_over_p": x, "cr": y,
             "lbm": names_of(e.lbm, names), "ubm": names_of(e.ubm, names)}
            for w, ((x, y), e) in enumerate(zip(muc_points(muc), muc.entries))]


def mcb_report(pair: McbPair, muc: Muc, alpha: float, names: Sequence[str],
               config: dict | None = None) -> dict:
    report = {
        "alpha": alpha,
        "algorithm": muc.algorithm.value,
        "width": pair.width,
        "lbm": names_of(pair.lbm, names),
        "ubm": names_of(pair.ubm, names),
        "bcr": pair.bcr,
        "cardinality": pair.cardinality,
        "muc": [{"w": w, "w_over_p": x, "cr": y} for w, (x, y) in enumerate(muc_points(muc))],
        "amuc": amuc(muc),
    }
    if config is not None:
        report["config"] = config
    return report


def vscs_report(result: VscsResult, names: Sequence[str], config: dict | None = None,
                survivors: bool = False) -> dict:
    report = {
        "alpha": result.alpha,
        "cardinality": result.cardinality,
        "lbms": [names_of(m, names) for m in result.lbms],
        "surviving_count": result.cardinality,
    }
    if survivors:
        report["surviving"] = [names_of(m, names) for m in result.surviving]
    if config is not None:
        report["config"] = config
    return report


def write_json(obj, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
