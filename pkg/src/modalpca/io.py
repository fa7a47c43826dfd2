"""CSV datasets, JSON model files and CSV result tables."""

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, ParseError, StructureError
from .estimator import ModalComponent, MpcaModel

MODEL_VERSION = "modalpca-model/1"

_LABELS = {"0": True, "inlier": True, "1": False, "outlier": False}


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    data: np.ndarray
    inlier_mask: np.ndarray = None
    column_names: list = None

    def __post_init__(self):
        if self.inlier_mask is not None and len(self.inlier_mask) != len(self.data):
            raise StructureError("mask length does not match the number of rows")


def _parse_cell(text, line, column):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"row {line}, column {column}: cannot parse {text!r} as a number",
                         row=line, column=column) from None
    if not math.isfinite(value):
        raise ParseError(f"row {line}, column {column}: non-finite value {text!r}",
                         row=line, column=column)
    return value


def read_csv(path, header=False, label_column=None, delimiter=","):
    """Read a numeric CSV file, optionally splitting off an inlier/outlier label column.

    Parameters
    ----------
    path : str or Path
    header : bool
        Whether the first line holds column names.
    label_column : str or int, optional
        Column name (requires ``header``) or 0-based index of the label
        column. Labels ``0``/``inlier`` mark inliers, ``1``/``outlier``
        outliers.
    delimiter : str

    Notes
    -----
    Row and column numbers in error messages are 1-based and count data
    rows only, so a header line does not shift them.
    """
    with open(path, newline="") as fh:
        lines = [row for row in csv.reader(fh, delimiter=delimiter)]
    names = None
    if header:
        if not lines:
            raise StructureError("empty file: header expected")
        names = [c.strip() for c in lines[0]]
        lines = lines[1:]
    lines = [row for row in lines if any(c.strip() for c in row)]
    if not lines:
        raise StructureError("no data rows")
    width = len(lines[0])
    label_idx = None
    if label_column is not None:
        if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
            if names is None or label_column not in names:
                raise StructureError(f"label column {label_column!r} not found")
            label_idx = names.index(label_column)
        else:
            label_idx = int(label_column)
            if not 0 <= label_idx < width:
                raise StructureError(f"label column index {label_idx} out of range")
    rows, mask = [], []
    for r, row in enumerate(lines, start=1):
        if len(row) != width:
            raise StructureError(f"row {r} has {len(row)} fields, expected {width}")
        values = []
        for c, cell in enumerate(row):
            cell = cell.strip()
            if c == label_idx:
                key = cell.lower()
                if key not in _LABELS:
                    raise ParseError(f"row {r}, column {c + 1}: unknown label {cell!r}", row=r, column=c + 1)
                mask.append(_LABELS[key])
            else:
                values.append(_parse_cell(cell, r, c + 1))
        rows.append(values)
    if names is not None and label_idx is not None:
        names = [n for i, n in enumerate(names) if i != label_idx]
    data = np.array(rows, dtype=float)
    if data.ndim != 2 or data.shape[1] == 0:
        raise StructureError("no numeric columns")
    return LabeledDataset(data, np.array(mask, dtype=bool) if label_idx is not None else None, names)


def format_float(x):
    """Shortest round-tripping text for a float."""
    return repr(float(x))


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return str(v)


def write_table(path, header, rows):
    """Write a CSV table with ``\\n`` line endings and round-tripping floats."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def write_csv(path, data, mask=None, column_names=None):
    """Write a dataset, appending a ``label`` column (inlier/outlier) when ``mask`` is given."""
    data = np.asarray(data, dtype=float)
    names = list(column_names) if column_names else [f"x{j + 1}" for j in range(data.shape[1])]
    rows = [list(r) for r in data]
    if mask is not None:
        names.append("label")
        rows = [r + ["inlier" if ok else "outlier"] for r, ok in zip(rows, mask)]
    write_table(path, names, rows)


def model_to_dict(model):
    return {
        "version": MODEL_VERSION,
        "dim": model.dim,
        "n_samples": model.n_samples,
        "bandwidths": [float(c.bandwidth) for c in model.components],
        "components": [
            {
                "index": c.index,
                "mode": float(c.mode),
                "objective": float(c.objective),
                "direction": [float(x) for x in c.direction],
                "bandwidth": float(c.bandwidth),
                "iterations": int(c.iterations),
                "converged": bool(c.converged),
            }
            for c in model.components
        ],
        "center": [float(x) for x in model.center],
    }


def write_model(model, path):
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n")


def model_from_dict(obj):
    """Build a model from parsed JSON; per-component fields beyond direction and mode are optional."""
    if not isinstance(obj, dict):
        raise FormatError("model file must hold a JSON object")
    version = obj.get("version", MODEL_VERSION)
    if version != MODEL_VERSION:
        raise FormatError(f"unsupported model version {version!r}")
    if "components" not in obj or not isinstance(obj["components"], list) or not obj["components"]:
        raise FormatError("model file has no 'components' list")
    bws = obj.get("bandwidths", [])
    comps = []
    try:
        for i, c in enumerate(obj["components"]):
            direction = np.array(c["direction"], dtype=float)
            bw = c.get("bandwidth", bws[i] if i < len(bws) else math.nan)
            comps.append(ModalComponent(
                index=int(c.get("index", i + 1)),
                direction=direction,
                mode=float(c.get("mode", 0.0)),
                bandwidth=float(bw),
                objective=float(c.get("objective", math.nan)),
                iterations=int(c.get("iterations", 0)),
                converged=bool(c.get("converged", True)),
            ))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed component: {exc}") from None
    dim = int(obj.get("dim", comps[0].direction.size))
    if any(c.direction.shape != (dim,) for c in comps):
        raise FormatError("component directions do not match 'dim'")
    return MpcaModel(tuple(comps), dim, int(obj.get("n_samples", 0)))


def read_model(path):
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from None
    return model_from_dict(obj)


def read_basis(path):
    """Basis matrix from CSV (one row per coordinate) or from a model JSON file."""
    p = Path(path)
    if p.suffix.lower() == ".json":
        return read_model(p).directions
    text = p.read_text().splitlines()
    first = text[0].split(",") if text else []
    header = bool(first) and any(_not_number(c) for c in first)
    return read_csv(p, header=header).data


def _not_number(s):
    try:
        float(s)
        return False
    except ValueError:
        return True
