"""File formats: sample/point CSVs, value CSVs and the fitted-model document.

The model document is JSON. Scalars are written as ``%.17g`` and the
coefficients, which are held in long double, with the shortest digit string
that reads back to the same long double value, so a save/load round trip
reproduces the coefficients, and hence every evaluation, bit for bit.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import InvalidSampleError, ValidationError
from .estimator import PskkModel
from .kernel import KernelParams
from .lattice import Lattice, lattice_nodes

MODEL_FORMAT = "pskk-model/1"


def read_points_csv(path) -> np.ndarray:
    """Read an ``(n, d)`` array from CSV; a non-numeric first row is taken as a header."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise InvalidSampleError(f"{path}: no data rows")
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        rows = rows[1:]
    if not rows:
        raise InvalidSampleError(f"{path}: header but no data rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise InvalidSampleError(f"{path}: rows have differing numbers of columns")
    try:
        data = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise InvalidSampleError(f"{path}: non-numeric entry ({exc})") from None
    if not np.all(np.isfinite(data)):
        raise InvalidSampleError(f"{path}: non-finite entries")
    return data


read_samples_csv = read_points_csv


def write_points_csv(path, points, header=None) -> None:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header is not None:
            w.writerow(header)
        for row in pts:
            w.writerow([format(v, ".17g") for v in row])


def write_values_csv(path, values, name: str = "density") -> None:
    """One ``name`` column with one row per value, full precision."""
    with open(path, "w", newline="") as fh:
        fh.write(name + "\n")
        for v in np.asarray(values, dtype=float).ravel():
            fh.write(format(v, ".17g") + "\n")


def _num(x: float) -> str:
    return format(float(x), ".17g")


def model_to_text(model: PskkModel) -> str:
    """Serialise a lattice-based model as a JSON document."""
    lat = model.lattice
    if lat is None:
        raise ValidationError("only models fitted on lattice nodes can be saved")
    coeffs = ",\n    ".join(np.format_float_scientific(c, unique=True) for c in model.coeffs)
    return (
        "{\n"
        f'  "format": "{MODEL_FORMAT}",\n'
        f'  "alpha": {model.kp.alpha},\n'
        f'  "a": {_num(model.a)},\n'
        f'  "d": {model.d},\n'
        f'  "lambda": {_num(model.lam)},\n'
        f'  "N": {lat.N},\n'
        f'  "z": [{", ".join(str(v) for v in lat.z)}],\n'
        f'  "coefficients": [\n    {coeffs}\n  ]\n'
        "}\n"
    )


def model_from_text(text: str) -> PskkModel:
    try:
        doc = json.loads(text, parse_float=str)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"model file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ValidationError("not a pskk-model/1 document")
    try:
        kp = KernelParams(int(doc["alpha"]), float(doc["a"]), int(doc["d"]))
        lat = Lattice(tuple(doc["z"]), int(doc["N"]))
        coeffs = np.array([np.longdouble(str(c)) for c in doc["coefficients"]], dtype=np.longdouble)
        lam = float(doc["lambda"])
    except KeyError as exc:
        raise ValidationError(f"model file lacks field {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"malformed model file: {exc}") from None
    return PskkModel(kp, lattice_nodes(lat, kp.a), coeffs, lam)


def save_model(model: PskkModel, path) -> None:
    Path(path).write_text(model_to_text(model))


def load_model(path) -> PskkModel:
    return model_from_text(Path(path).read_text())
