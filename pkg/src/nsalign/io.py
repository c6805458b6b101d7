"""Embedding files (npy v1.0 and CSV) and run manifests."""
from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib import format as npformat

from ._version import __version__
from .errors import FileAccessError, FormatError, InvalidInput

NPY = "npy"
CSV = "csv"
_NPY_DTYPES = {"<f4": np.dtype("<f4"), "<f8": np.dtype("<f8")}


def detect_format(path, hint: str | None = None) -> str:
    """Format from ``hint``, then the file extension, then the npy magic bytes."""
    if hint:
        hint = hint.lower()
        if hint not in (NPY, CSV):
            raise InvalidInput(f"unknown format {hint!r}; expected 'npy' or 'csv'")
        return hint
    suffix = Path(path).suffix.lower()
    if suffix == ".npy":
        return NPY
    if suffix in (".csv", ".txt"):
        return CSV
    try:
        with open(path, "rb") as fh:
            head = fh.read(6)
    except OSError as exc:
        raise FileAccessError(f"{path}: {exc.strerror or exc}") from exc
    return NPY if head == npformat.MAGIC_PREFIX else CSV


def _check_finite(arr: np.ndarray, path):
    bad = ~np.isfinite(arr)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise InvalidInput(f"{path}: non-finite value {arr[row, col]} at row {row}, column {col}")


def _load_npy(path) -> np.ndarray:
    with open(path, "rb") as fh:
        try:
            version = npformat.read_magic(fh)
        except ValueError as exc:
            raise FormatError(f"{path}: not an npy file ({exc})") from exc
        if version != (1, 0):
            raise FormatError(f"{path}: npy version {version[0]}.{version[1]} unsupported; expected 1.0")
        try:
            shape, fortran, dtype = npformat.read_array_header_1_0(fh)
        except ValueError as exc:
            raise FormatError(f"{path}: malformed npy header ({exc})") from exc
        if len(shape) != 2:
            raise FormatError(f"{path}: expected 2-D array, got shape {shape}")
        if fortran:
            raise FormatError(f"{path}: Fortran-ordered arrays are not supported")
        if dtype.str not in _NPY_DTYPES:
            raise FormatError(f"{path}: dtype {dtype.str} unsupported; expected <f4 or <f8")
        count = shape[0] * shape[1]
        payload = fh.read(count * dtype.itemsize)
        if len(payload) != count * dtype.itemsize:
            raise FormatError(f"{path}: truncated data ({len(payload)} of {count * dtype.itemsize} bytes)")
    return np.frombuffer(payload, dtype=dtype).reshape(shape).astype(np.float64)


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _load_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(f.strip() for f in r)]
    if rows and not all(_is_number(f) for f in rows[0]):
        rows = rows[1:]
    if not rows:
        raise FormatError(f"{path}: no numeric rows")
    width = len(rows[0])
    out = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise FormatError(f"{path}: ragged CSV, data row {i} has {len(row)} fields, expected {width}")
        for j, text in enumerate(row):
            try:
                out[i, j] = float(text)
            except ValueError:
                raise FormatError(f"{path}: non-numeric field {text!r} at row {i}, column {j}") from None
    return out


def load_embedding(path, format_hint: str | None = None) -> np.ndarray:
    """Load an ``(N, D)`` matrix as float64; float32 input is widened."""
    fmt = detect_format(path, format_hint)
    try:
        arr = _load_npy(path) if fmt == NPY else _load_csv(path)
    except OSError as exc:
        raise FileAccessError(f"{path}: {exc.strerror or exc}") from exc
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise FormatError(f"{path}: expected 2-D with N, D >= 1, got shape {arr.shape}")
    _check_finite(arr, path)
    return np.ascontiguousarray(arr)


def save_embedding(cloud, path, format: str | None = None) -> Path:
    """Write ``cloud`` as npy v1.0 (``<f8``, C order) or 17-digit CSV.

    Parent directories are created.  The bytes depend only on the values.
    """
    arr = np.ascontiguousarray(np.asarray(cloud, dtype="<f8"))
    if arr.ndim != 2:
        raise FormatError(f"expected 2-D array, got shape {arr.shape}")
    path = Path(path)
    fmt = (format or (CSV if path.suffix.lower() in (".csv", ".txt") else NPY)).lower()
    if fmt not in (NPY, CSV):
        raise InvalidInput(f"unknown format {fmt!r}; expected 'npy' or 'csv'")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == NPY:
            with open(path, "wb") as fh:
                header = {"descr": "<f8", "fortran_order": False, "shape": arr.shape}
                npformat.write_array_header_1_0(fh, header)
                fh.write(arr.tobytes(order="C"))
        else:
            with open(path, "w", newline="") as fh:
                for row in arr:
                    fh.write(",".join(format_float(v) for v in row) + "\n")
    except OSError as exc:
        raise FileAccessError(f"{path}: {exc.strerror or exc}") from exc
    return path


def format_float(v) -> str:
    return format(float(v), ".17g")


def write_table(path, header, rows) -> Path:
    """Write a CSV table; floats use 17 significant digits."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    except OSError as exc:
        raise FileAccessError(f"{path}: {exc.strerror or exc}") from exc
    return path


# -- manifests -----------------------------------------------------------------

def sha256_file(path) -> str:
    h = hashlib.sha256()
    try:
        with open(path, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 20), b""):
                h.update(chunk)
    except OSError as exc:
        raise FileAccessError(f"{path}: {exc.strerror or exc}") from exc
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None
    inputs: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    version: str = __version__

    @classmethod
    def for_inputs(cls, command, config, seed, paths, outputs=()):
        inputs = {os.fspath(p): sha256_file(p) for p in paths}
        return cls(command, config, seed, inputs, [os.fspath(o) for o in outputs])

    def to_dict(self):
        return {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "inputs": [{"path": p, "sha256": d} for p, d in self.inputs.items()],
            "outputs": list(self.outputs),
            "version": self.version,
        }

    def write(self, output_path) -> Path:
        """Write ``<output_path>.manifest.json`` next to the artifact."""
        target = Path(f"{os.fspath(output_path)}.manifest.json")
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(dumps(self.to_dict(), indent=2) + "\n")
        except OSError as exc:
            raise FileAccessError(f"{target}: {exc.strerror or exc}") from exc
        return target


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj, indent=None) -> str:
    """JSON with keys sorted; floats keep full (shortest round-trip) precision."""
    return json.dumps(_jsonable(obj), indent=indent, sort_keys=True, allow_nan=False)
