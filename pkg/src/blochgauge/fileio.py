"""Family files and CSV export.

A family file is one line of compact JSON (the header) followed by the raw
samples as little-endian float64 (re, im) pairs.  Matrices are row-major and
grid points are in odometer order with the last axis varying fastest, which
is exactly numpy's C order for arrays of shape ``(N,)*dim + (rows, cols)``.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import InvalidInput
from .torus import ProjectionFamily, SelfAdjointFamily, TorusGrid, UnitaryFamily, symmetry_of

PAYLOADS = ("unitary", "self-adjoint", "projection", "frame")
_HEADER_KEYS = ("dim", "N", "m", "n", "symmetry", "payload")


def _header_for(obj) -> dict[str, Any]:
    from .frames import BlochFrame

    sym = obj.symmetry.kind if obj.symmetry is not None else "none"
    if isinstance(obj, BlochFrame):
        return {"dim": obj.grid.dim, "N": obj.grid.N, "m": obj.m, "n": obj.n, "symmetry": sym, "payload": "frame"}
    if isinstance(obj, ProjectionFamily):
        return {"dim": obj.grid.dim, "N": obj.grid.N, "m": obj.rank, "n": obj.n, "symmetry": sym, "payload": "projection"}
    kind = "self-adjoint" if isinstance(obj, SelfAdjointFamily) else "unitary"
    return {"dim": obj.grid.dim, "N": obj.grid.N, "m": obj.m, "n": obj.m, "symmetry": sym, "payload": kind}


def write_family(path: str | Path, obj, extra: dict[str, Any] | None = None) -> None:
    header = _header_for(obj)
    if extra:
        header["extra"] = extra
    data = np.ascontiguousarray(obj.samples if hasattr(obj, "samples") else obj.vectors, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")).encode() + b"\n")
        fh.write(data.view("<f8").tobytes())


def read_header(path: str | Path) -> tuple[dict[str, Any], bytes]:
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise InvalidInput("missing family header", path=str(path))
    try:
        header = json.loads(raw[:nl].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"corrupted family header: {exc}", path=str(path)) from exc
    if not isinstance(header, dict) or any(k not in header for k in _HEADER_KEYS):
        raise InvalidInput("family header lacks required keys", path=str(path), required=list(_HEADER_KEYS))
    if header["payload"] not in PAYLOADS:
        raise InvalidInput("unknown payload kind", payload=header["payload"])
    return header, raw[nl + 1 :]


def read_family(path: str | Path):
    """Load a family file and return the matching family (or frame) object."""
    from .frames import BlochFrame

    header, blob = read_header(path)
    grid = TorusGrid(int(header["dim"]), int(header["N"]))
    m, n = int(header["m"]), int(header["n"])
    payload = header["payload"]
    rows, cols = {"unitary": (m, m), "self-adjoint": (m, m), "projection": (n, n), "frame": (n, m)}[payload]
    count = grid.size * rows * cols
    if len(blob) != 16 * count:
        raise InvalidInput("payload size does not match header", expected=16 * count, got=len(blob))
    data = np.frombuffer(blob, dtype="<f8").view("<c16").reshape(grid.shape + (rows, cols)).astype(complex)
    sym = symmetry_of(header["symmetry"])
    if payload == "unitary":
        return UnitaryFamily(grid, data, sym)
    if payload == "self-adjoint":
        return SelfAdjointFamily(grid, data, sym)
    if payload == "projection":
        return ProjectionFamily(grid, data, sym, rank=m)
    return BlochFrame(grid, data, sym)


def write_csv(path: str | Path, columns: dict[str, Sequence[Any]]) -> None:
    """Write equal-length columns; floats use repr so output is reproducible."""
    names = list(columns)
    length = len(next(iter(columns.values()))) if columns else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for i in range(length):
            w.writerow([_fmt(columns[c][i]) for c in names])


def _fmt(x: Any) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (np.integer,)):
        return str(int(x))
    return str(x)


def scalar_field_columns(grid: TorusGrid, values: np.ndarray, name: str) -> dict[str, list[Any]]:
    """Columns (k_1, ..., k_d, name...) for a field with optional trailing axis."""
    coords = grid.coords().reshape(-1, grid.dim) if grid.dim else np.zeros((1, 0))
    vals = np.asarray(values).reshape(grid.size, -1)
    cols: dict[str, list[Any]] = {f"k{i + 1}": list(coords[:, i]) for i in range(grid.dim)}
    if vals.shape[1] == 1:
        cols[name] = list(vals[:, 0])
    else:
        for j in range(vals.shape[1]):
            cols[f"{name}{j + 1}"] = list(vals[:, j])
    return cols
