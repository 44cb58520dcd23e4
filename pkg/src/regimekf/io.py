"""On-disk formats.

Model files are JSON with explicit dimensions; observation files are CSV
with a y1..yp header and empty cells for missing values.  Every file the
package writes starts with a provenance comment line

    # regimekf key=value key=value ...

carrying at least the seed, the model hash, and the algorithm tag.  Readers
skip any number of leading '#' lines, so the files round-trip.
"""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .model import MarkovChain, MSStateSpace, ObservationSeries, RegimeParams, validate_model

_REGIME_FIELDS = ("c_y", "Z", "g", "c_alpha", "T", "R")


def model_to_dict(model: MSStateSpace) -> dict:
    p, m, p_e, q = model.dims
    return {
        "h": model.h,
        "dims": {"p": p, "m": m, "p_e": p_e, "q": q},
        "Q": model.chain.Q.tolist(),
        "regimes": [
            {name: getattr(reg, name).tolist() for name in _REGIME_FIELDS}
            for reg in model.regimes
        ],
    }


def model_from_dict(data: dict) -> MSStateSpace:
    try:
        chain = MarkovChain(np.asarray(data["Q"], dtype=float))
        regimes = [
            RegimeParams(**{name: np.asarray(reg[name], dtype=float) for name in _REGIME_FIELDS})
            for reg in data["regimes"]
        ]
        declared = data["dims"]
        declared_h = int(data["h"])
    except (KeyError, TypeError) as exc:
        raise DataFormatError(f"model file is missing field {exc}") from exc
    model = validate_model(MSStateSpace(chain, regimes))
    p, m, p_e, q = model.dims
    derived = {"p": p, "m": m, "p_e": p_e, "q": q}
    for key, val in derived.items():
        if int(declared.get(key, val)) != val:
            raise DataFormatError(
                f"declared dims.{key}={declared[key]} but matrices imply {val}"
            )
    if declared_h != model.h:
        raise DataFormatError(f"declared h={declared_h} but Q is {model.h}x{model.h}")
    return model


def load_model(path) -> MSStateSpace:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: not valid JSON ({exc})") from exc
    return model_from_dict(data)


def save_model(model: MSStateSpace, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n")


def model_hash(model: MSStateSpace) -> str:
    """Short content hash of the canonical model JSON."""
    canon = json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def comment_line(**fields) -> str:
    return "# regimekf " + " ".join(f"{k}={v}" for k, v in fields.items())


def read_comments(path) -> dict:
    """Key=value pairs from the leading comment lines of a file."""
    out: dict[str, str] = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            for token in line.lstrip("#").split():
                if "=" in token:
                    k, _, v = token.partition("=")
                    out[k] = v
    return out


def _fmt(x: float) -> str:
    return repr(float(x))


def write_table(path, comment: str, header: list[str], rows) -> None:
    """CSV with one leading comment line; cells are already strings."""
    with open(path, "w", newline="") as fh:
        fh.write(comment + "\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def save_observations(y: np.ndarray, path, comment: str) -> None:
    """Observation CSV; NaN entries become empty cells."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    p = y.shape[1]
    header = [f"y{j + 1}" for j in range(p)]
    rows = [["" if np.isnan(v) else _fmt(v) for v in row] for row in y]
    write_table(path, comment, header, rows)


def load_observations(path) -> ObservationSeries:
    """Read an observation CSV: skip comments, check the y1..yp header."""
    with open(path) as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise DataFormatError(f"{path}: no data rows")
    reader = csv.reader(lines)
    header = next(reader)
    p = len(header)
    expected = [f"y{j + 1}" for j in range(p)]
    if [c.strip() for c in header] != expected:
        raise DataFormatError(
            f"{path}: header {header} does not match expected {expected}"
        )
    data = []
    for r, row in enumerate(reader):
        if len(row) != p:
            raise DataFormatError(f"{path}: row {r + 1} has {len(row)} cells, expected {p}")
        try:
            data.append([np.nan if cell.strip() == "" else float(cell) for cell in row])
        except ValueError as exc:
            raise DataFormatError(f"{path}: row {r + 1}: {exc}") from exc
    return ObservationSeries(np.asarray(data, dtype=float).reshape(len(data), p))
