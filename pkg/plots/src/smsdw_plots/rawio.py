"""Readers for the simulator's documented on-disk formats.

Deliberately self-contained: this package consumes files, not the
simulator's in-process objects.  Formats: comma-separated tables with a
single header row of "name[unit]" columns, and raw dumps with a short text
header (magic, dtype, shape, optional field names, "end") followed by flat
little-endian binary data.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

RAW_MAGIC = "SMSDW-RAW 1"
_DTYPES = {"float64-le": "<f8", "complex128-le": "<c16"}


class MalformedInput(ValueError):
    pass


def read_csv(path):
    """name -> column array; raises with file and line on malformed rows."""
    path = Path(path)
    with open(path) as fh:
        header = fh.readline()
        if not header.strip():
            raise MalformedInput(f"{path}:1: empty header row")
        names = header.strip().split(",")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.strip().split(",")
            if len(parts) != len(names):
                raise MalformedInput(
                    f"{path}:{lineno}: expected {len(names)} columns, got {len(parts)}")
            try:
                rows.append([float(v) for v in parts])
            except ValueError as err:
                raise MalformedInput(f"{path}:{lineno}: {err}") from None
    data = np.array(rows) if rows else np.empty((0, len(names)))
    return {n: data[:, i] for i, n in enumerate(names)}


def read_raw(path):
    """(array, field names or None) from a raw dump."""
    path = Path(path)
    with open(path, "rb") as fh:
        lines = []
        while True:
            line = fh.readline().decode("ascii", errors="replace").rstrip("\n")
            lines.append(line)
            if line == "end":
                break
            if len(lines) > 16:
                raise MalformedInput(f"{path}: header runs past 16 lines")
        if lines[0] != RAW_MAGIC:
            raise MalformedInput(f"{path}: bad magic {lines[0]!r}")
        meta = dict(item.split(": ", 1) for item in lines[1:-1])
        try:
            dtype = _DTYPES[meta["dtype"]]
            shape = tuple(int(s) for s in meta["shape"].split())
        except (KeyError, ValueError) as err:
            raise MalformedInput(f"{path}: bad header field ({err})") from None
        fields = meta.get("fields", "").split() or None
        data = np.frombuffer(fh.read(), dtype=dtype)
    return data.reshape(shape).copy(), fields


def find_column(table: dict, stem: str, path="<table>"):
    """Column whose name starts with `stem` (unit suffixes vary)."""
    for name, values in table.items():
        if name == stem or name.startswith(stem + "["):
            return values
    raise MalformedInput(f"{path}: no column named {stem!r} (have {list(table)})")
