"""Single-file field container: header line, one-line JSON manifest, raw float64 payload.

Layout::

    CDII-FIELDS 1\\n
    {"version": 1, "little_endian": true, "grid": {...}, "fields": [...], "attrs": {...}}\\n
    <payload>

Each field entry has ``name``, ``kind`` (scalar, vector, matrix, twoform),
``components`` and a byte ``offset`` into the payload. Values are 64-bit
little-endian floats, nodes row-major with the last axis fastest and the
component index innermost.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContainerError
from .grid import Grid, MatrixField, ScalarField, TwoFormField, VectorField

__all__ = ["MAGIC", "VERSION", "FieldContainer", "write_container", "read_container"]

MAGIC = "CDII-FIELDS"
VERSION = 1

_KINDS = {"scalar": ScalarField, "vector": VectorField, "matrix": MatrixField, "twoform": TwoFormField}
_KIND_OF = {v: k for k, v in _KINDS.items()}


def _components(kind: str, n: int) -> int:
    return {"scalar": 1, "vector": n, "matrix": n * n, "twoform": n * n}[kind]


@dataclass
class FieldContainer:
    """Named fields on one grid plus free-form JSON attributes."""

    grid: Grid
    fields: dict = field(default_factory=dict)
    attrs: dict = field(default_factory=dict)

    def add(self, name: str, f) -> "FieldContainer":
        if type(f) not in _KIND_OF:
            raise TypeError(f"cannot store {type(f).__name__}")
        if not f.grid.same_as(self.grid):
            raise ValueError(f"field {name!r} lives on a different grid")
        self.fields[name] = f
        return self

    def __contains__(self, name):
        return name in self.fields

    def __getitem__(self, name):
        try:
            return self.fields[name]
        except KeyError:
            raise ContainerError(f"container has no field {name!r} "
                                 f"(available: {', '.join(self.fields) or 'none'})") from None

    def numbered(self, prefix: str) -> list:
        """Fields ``prefix1, prefix2, ...`` in order, stopping at the first gap."""
        out, k = [], 1
        while f"{prefix}{k}" in self.fields:
            out.append(self.fields[f"{prefix}{k}"])
            k += 1
        return out


def write_container(path, fc: FieldContainer) -> Path:
    path = Path(path)
    entries, chunks, offset = [], [], 0
    for name, f in fc.fields.items():
        kind = _KIND_OF[type(f)]
        data = np.ascontiguousarray(f.values, dtype="<f8").tobytes()
        entries.append({"name": name, "kind": kind, "components": _components(kind, fc.grid.n),
                        "offset": offset})
        chunks.append(data)
        offset += len(data)
    manifest = {"version": VERSION, "little_endian": True, "grid": fc.grid.to_dict(),
                "fields": entries, "attrs": fc.attrs}
    try:
        with open(path, "wb") as fh:
            fh.write(f"{MAGIC} {VERSION}\n".encode())
            fh.write(json.dumps(manifest, sort_keys=True).encode() + b"\n")
            for c in chunks:
                fh.write(c)
    except OSError as exc:
        raise ContainerError(f"cannot write {path}: {exc}") from exc
    return path


def read_container(path) -> FieldContainer:
    """Read and validate a container.

    Raises
    ------
    ContainerError
        Unreadable file, bad header, malformed manifest, version mismatch,
        foreign byte order, or a payload too short for some field (named).
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ContainerError(f"cannot read {path}: {exc}") from exc
    first = raw.find(b"\n")
    second = raw.find(b"\n", first + 1) if first >= 0 else -1
    if first < 0 or second < 0:
        raise ContainerError(f"{path}: missing header or manifest line")
    header = raw[:first].decode("ascii", "replace").split()
    if len(header) != 2 or header[0] != MAGIC:
        raise ContainerError(f"{path}: not a field container (bad header)")
    if header[1] != str(VERSION):
        raise ContainerError(f"{path}: container version {header[1]} is not supported (expected {VERSION})")
    try:
        manifest = json.loads(raw[first + 1:second])
        grid = Grid.from_dict(manifest["grid"])
        entries = manifest["fields"]
    except (ValueError, KeyError, TypeError) as exc:
        raise ContainerError(f"{path}: malformed manifest ({exc})") from exc
    if manifest.get("version") != VERSION:
        raise ContainerError(f"{path}: manifest version {manifest.get('version')} is not supported")
    if manifest.get("little_endian") is not True:
        raise ContainerError(f"{path}: payload is not little-endian; foreign byte order is rejected")
    payload = raw[second + 1:]
    fc = FieldContainer(grid, attrs=manifest.get("attrs", {}))
    for e in entries:
        try:
            name, kind, comps, off = e["name"], e["kind"], int(e["components"]), int(e["offset"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ContainerError(f"{path}: malformed field entry {e!r}") from exc
        if kind not in _KINDS:
            raise ContainerError(f"{path}: field {name!r} has unknown kind {kind!r}")
        if comps != _components(kind, grid.n):
            raise ContainerError(f"{path}: field {name!r} declares {comps} components, "
                                 f"expected {_components(kind, grid.n)}")
        nbytes = grid.size * comps * 8
        if off < 0 or off + nbytes > len(payload):
            raise ContainerError(f"{path}: payload truncated in field {name!r} "
                                 f"(needs bytes {off}..{off + nbytes}, have {len(payload)})")
        cls = _KINDS[kind]
        vals = np.frombuffer(payload, dtype="<f8", count=grid.size * comps, offset=off)
        shape = grid.dims + cls._component_shape(grid.n)
        try:
            fc.fields[name] = cls(grid, vals.astype(float).reshape(shape))
        except ValueError as exc:
            raise ContainerError(f"{path}: field {name!r}: {exc}") from exc
    expected = sum(grid.size * int(e["components"]) * 8 for e in entries)
    if len(payload) != expected:
        raise ContainerError(f"{path}: payload has {len(payload)} bytes, manifest describes {expected}")
    return fc
