"""File formats: CWTF binary grids, CSV tables, JSON reports, signal files.

All writers go through a temporary file in the destination directory and an
atomic rename, and format floats with ``%.17g`` so outputs are byte-stable.
"""
from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .cwt import CwtField, ScaleGrid, SignalSeries
from .errors import ContractViolation, ParseError
from .model import parse_columns

__all__ = [
    "CWTF_MAGIC",
    "CWTF_VERSION",
    "atomic_write",
    "fmt",
    "write_csv",
    "write_json",
    "write_cwtf",
    "read_cwtf",
    "cwtf_bytes",
    "parse_cwtf",
    "read_signal",
    "write_signal",
    "write_modulus_csv",
]

CWTF_MAGIC = b"CWTF"
CWTF_VERSION = 1
_HEADER = struct.Struct("<4sIQQdd")


def _file_mode():
    mask = os.umask(0)
    os.umask(mask)
    return 0o666 & ~mask


def fmt(x):
    return "%.17g" % x


def atomic_write(path, data):
    """Write ``data`` (str or bytes) to ``path`` via temp file + rename."""
    path = Path(path)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.chmod(tmp, _file_mode())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _csv_text(header, columns):
    cols = [np.asarray(c) for c in columns]
    lines = [",".join(header)]
    for row in zip(*cols):
        lines.append(",".join(fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path, header, columns):
    atomic_write(path, _csv_text(header, columns))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj):
    atomic_write(path, json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# CWTF binary


def cwtf_bytes(field: CwtField) -> bytes:
    nscale, ntrans = field.shape
    head = _HEADER.pack(CWTF_MAGIC, CWTF_VERSION, nscale, ntrans, field.b0, field.db)
    body = np.ascontiguousarray(field.values, dtype="<c16").tobytes()
    return head + np.asarray(field.scales, dtype="<f8").tobytes() + body


def parse_cwtf(data: bytes, wavelet=None) -> CwtField:
    if len(data) < _HEADER.size:
        raise ParseError("truncated CWTF header", None)
    magic, version, nscale, ntrans, b0, db = _HEADER.unpack_from(data)
    if magic != CWTF_MAGIC:
        raise ParseError(f"bad magic {magic!r}", None)
    if version != CWTF_VERSION:
        raise ParseError(f"unsupported CWTF version {version}", None)
    expect = _HEADER.size + 8 * nscale + 16 * nscale * ntrans
    if len(data) != expect:
        raise ParseError(f"CWTF size {len(data)} does not match header ({expect} bytes)", None)
    off = _HEADER.size
    scales = np.frombuffer(data, dtype="<f8", count=nscale, offset=off).astype(float)
    off += 8 * nscale
    values = np.frombuffer(data, dtype="<c16", count=nscale * ntrans, offset=off)
    values = values.astype(complex).reshape(nscale, ntrans)
    try:
        return CwtField(ScaleGrid(scales), b0, db, values, wavelet)
    except ContractViolation as exc:
        raise ParseError(str(exc), None) from None


def write_cwtf(path, field: CwtField):
    atomic_write(path, cwtf_bytes(field))


def read_cwtf(path, wavelet=None) -> CwtField:
    return parse_cwtf(Path(path).read_bytes(), wavelet)


# ---------------------------------------------------------------------------
# signals and tables


def read_signal(path) -> SignalSeries:
    """Two-column (axis, value) text file; comma or whitespace separated."""
    with open(Path(path), encoding="utf-8") as fh:
        t, y, _ = parse_columns(fh, min_rows=2)
    try:
        return SignalSeries.from_samples(t, y)
    except ContractViolation as exc:
        raise ParseError(str(exc), None) from None


def write_signal(path, signal: SignalSeries):
    write_csv(path, [signal.axis_label, signal.value_label], [signal.axis, signal.values])


def write_modulus_csv(path, field: CwtField, w=None):
    """Wide table: one row per scale with its frequency, then |F| at every b."""
    freqs = field.frequencies(w)
    b = field.translations
    lines = [",".join(["scale", "frequency"] + [fmt(x) for x in b])]
    for a, nu, row in zip(field.scales, freqs, field.modulus):
        lines.append(",".join([fmt(a), fmt(nu)] + [fmt(x) for x in row]))
    atomic_write(path, "\n".join(lines) + "\n")
