"""Snapshot files: one JSON header line plus a raw float64 payload.

Layout: ``<json header>\n<payload>`` where the payload concatenates the
named fields as little-endian 64-bit floats in row-major order.  The
header records grid, time, field names, byte order, payload size and a
CRC-32 checksum of the payload.
"""

from __future__ import annotations

import json
import zlib

import numpy as np

from .grids import GridSpec, ScalarField

FORMAT_NAME = "chemopm-snapshot"
FORMAT_VERSION = 1


class SnapshotFormatError(ValueError):
    pass


def write_snapshot(path, time: float, fields: dict, grid: GridSpec,
                   extra: dict = None):
    names = list(fields)
    payload = b"".join(
        np.ascontiguousarray(fields[name], dtype="<f8").tobytes()
        for name in names)
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "grid": {
            "dimension": grid.dimension,
            "half_width": grid.half_width,
            "cells_per_axis": grid.cells_per_axis,
            "boundary": grid.boundary,
        },
        "time": float(time),
        "fields": names,
        "dtype": "<f8",
        "byte_order": "little",
        "payload_bytes": len(payload),
        "checksum_crc32": zlib.crc32(payload),
    }
    if extra:
        header["extra"] = extra
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(payload)


def read_snapshot(path):
    """Returns (header dict, {name: ScalarField}) after validation."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    header = json.loads(header_line.decode("utf-8"))
    if header.get("format") != FORMAT_NAME:
        raise SnapshotFormatError(f"not a {FORMAT_NAME} file")
    if len(payload) != header["payload_bytes"]:
        raise SnapshotFormatError(
            f"payload is {len(payload)} bytes, header says {header['payload_bytes']}")
    if zlib.crc32(payload) != header["checksum_crc32"]:
        raise SnapshotFormatError("payload checksum mismatch")
    g = header["grid"]
    grid = GridSpec(g["dimension"], g["half_width"], g["cells_per_axis"],
                    g["boundary"])
    per_field = grid.num_cells * 8
    expected = per_field * len(header["fields"])
    if len(payload) != expected:
        raise SnapshotFormatError(
            f"payload is {len(payload)} bytes, expected {expected}")
    out = {}
    for i, name in enumerate(header["fields"]):
        raw = payload[i * per_field:(i + 1) * per_field]
        vals = np.frombuffer(raw, dtype="<f8").reshape(grid.shape)
        out[name] = ScalarField(grid, vals.copy())
    return header, out
