"""Serialization of fields, paths, reports and solver traces.

Binary layouts are little-endian:

field file::

    4s   magic  b"SDFL"
    <I   version (1)
    <I   d
    <I   n
    <d   nu
    <c16 coefficients, C order, shape (d, n, ..., n)

path file::

    4s   magic  b"SDPT"
    <I   version (1)
    <I   d
    <I   n
    <I   N
    <d   nu
    <d   T
    <c16 nodes, C order, shape (N + 1, d, n, ..., n)

Field CSV files hold one record per retained mode and component with header
``kx,ky[,kz],component,re,im``.
"""
from __future__ import annotations

import csv
import json
import math
import struct
from pathlib import Path as FsPath

import numpy as np

from .errors import InvalidArgument
from .fields import SpectralField, TorusGrid
from .functional import Path

__all__ = [
    "write_field_binary",
    "read_field_binary",
    "write_path_binary",
    "read_path_binary",
    "write_field_csv",
    "read_field_csv",
    "write_trace_csv",
    "read_trace_csv",
    "write_json",
    "TRACE_HEADER",
]

VERSION = 1
FIELD_MAGIC = b"SDFL"
PATH_MAGIC = b"SDPT"
_FIELD_HEAD = struct.Struct("<4sIIId")
_PATH_HEAD = struct.Struct("<4sIIIIdd")
TRACE_HEADER = ("iter", "total", "grad_norm", "step")


def write_field_binary(path, u: SpectralField) -> None:
    g = u.grid
    with open(path, "wb") as fh:
        fh.write(_FIELD_HEAD.pack(FIELD_MAGIC, VERSION, g.d, g.n, g.nu))
        fh.write(np.ascontiguousarray(u.coefficients, dtype="<c16").tobytes())


def read_field_binary(path) -> SpectralField:
    raw = FsPath(path).read_bytes()
    magic, version, d, n, nu = _FIELD_HEAD.unpack_from(raw)
    if magic != FIELD_MAGIC or version != VERSION:
        raise InvalidArgument(f"{path}: not a version-{VERSION} field file")
    g = TorusGrid(d, n, nu)
    data = np.frombuffer(raw, dtype="<c16", offset=_FIELD_HEAD.size)
    if data.size != int(np.prod(g.shape)):
        raise InvalidArgument(f"{path}: truncated field data")
    return SpectralField(g, data.reshape(g.shape))


def write_path_binary(path, p: Path) -> None:
    g = p.grid
    with open(path, "wb") as fh:
        fh.write(_PATH_HEAD.pack(PATH_MAGIC, VERSION, g.d, g.n, p.N, g.nu, p.T))
        fh.write(np.ascontiguousarray(p.nodes, dtype="<c16").tobytes())


def read_path_binary(path) -> Path:
    raw = FsPath(path).read_bytes()
    magic, version, d, n, N, nu, T = _PATH_HEAD.unpack_from(raw)
    if magic != PATH_MAGIC or version != VERSION:
        raise InvalidArgument(f"{path}: not a version-{VERSION} path file")
    g = TorusGrid(d, n, nu)
    data = np.frombuffer(raw, dtype="<c16", offset=_PATH_HEAD.size)
    if data.size != (N + 1) * int(np.prod(g.shape)):
        raise InvalidArgument(f"{path}: truncated path data")
    return Path(g, data.reshape((N + 1,) + g.shape), T)


def _axes_names(d):
    return ["kx", "ky", "kz"][:d]


def write_field_csv(path, u: SpectralField) -> None:
    g = u.grid
    k = g.wavevectors.astype(int)
    idx = np.argwhere(g.mask)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_axes_names(g.d) + ["component", "re", "im"])
        for pos in idx:
            kk = [int(k[a][tuple(pos)]) for a in range(g.d)]
            for j in range(g.d):
                c = u.coefficients[(j,) + tuple(pos)]
                w.writerow(kk + [j, repr(float(c.real)), repr(float(c.imag))])


def read_field_csv(path, grid: TorusGrid) -> SpectralField:
    c = grid.zeros()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        names = _axes_names(grid.d)
        if reader.fieldnames != names + ["component", "re", "im"]:
            raise InvalidArgument(f"{path}: unexpected header {reader.fieldnames}")
        for row in reader:
            pos = tuple(int(row[a]) % grid.n for a in names)
            c[(int(row["component"]),) + pos] = complex(float(row["re"]), float(row["im"]))
    return SpectralField(grid, c)


def write_trace_csv(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for i, total, gnorm, step in trace.rows():
            w.writerow([i, repr(total), repr(gnorm), repr(step)])


def read_trace_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [(int(r["iter"]), float(r["total"]), float(r["grad_norm"]), float(r["step"])) for r in reader]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, data: dict) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=False)
        fh.write("\n")
