"""On-disk formats for tag streams and analysis tables.

QTT1 is a little-endian binary layout: a 16-byte header (magic ``QTT1``,
u32 version, u64 record count) followed by 16-byte records (u64 timestamp
in picoseconds, u8 channel, u8 flags, 6 reserved bytes).  Flags and
reserved bytes are zero in version 1; the reader rejects anything it does
not understand, reporting the byte offset of the first offending field.

The CSV helpers write plain comma-separated tables preceded by ``#``
comment lines that carry enough metadata (as ``# key: value``) to
reproduce the run.
"""

from __future__ import annotations

import csv
import io
import json
import struct
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .mc_engine import TagStream

__all__ = [
    "read_csv_table",
    "read_qtt1",
    "write_csv_table",
    "write_qtt1",
    "write_summary_json",
]

_MAGIC = b"QTT1"
_VERSION = 1
_HEADER = struct.Struct("<4sIQ")
_RECORD_DTYPE = np.dtype(
    [
        ("time", "<u8"),
        ("channel", "u1"),
        ("flags", "u1"),
        ("reserved", "V6"),
    ]
)


def write_qtt1(path, tags: TagStream) -> None:
    """Serialize a tag stream; records are written in stream order."""
    if np.any(tags.time_ps < 0):
        raise ValueError("tag timestamps must be non-negative to serialize")
    records = np.zeros(len(tags), dtype=_RECORD_DTYPE)
    records["time"] = tags.time_ps.astype(np.uint64)
    records["channel"] = tags.channel
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, len(tags)))
        fh.write(records.tobytes())


def read_qtt1(path) -> TagStream:
    """Parse and validate a QTT1 file.

    Raises :class:`DataFormatError` (with the byte offset of the problem)
    on a bad magic, unsupported version, truncation, or any record with an
    unknown channel or nonzero flags/reserved bytes.
    """
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise DataFormatError(
            f"file is {len(raw)} bytes, shorter than the 16-byte header", offset=0
        )
    magic, version, count = _HEADER.unpack_from(raw, 0)
    if magic != _MAGIC:
        raise DataFormatError(f"bad magic {magic!r}; expected {_MAGIC!r}", offset=0)
    if version != _VERSION:
        raise DataFormatError(
            f"unsupported version {version}; this reader handles version {_VERSION}",
            offset=4,
        )
    body = len(raw) - _HEADER.size
    expected = count * _RECORD_DTYPE.itemsize
    if body != expected:
        raise DataFormatError(
            f"header promises {count} records ({expected} bytes) but file body "
            f"has {body} bytes",
            offset=8,
        )
    records = np.frombuffer(raw, dtype=_RECORD_DTYPE, offset=_HEADER.size)
    bad = np.nonzero(records["channel"] > 1)[0]
    if len(bad):
        i = int(bad[0])
        raise DataFormatError(
            f"record {i} has channel {records['channel'][i]}; only 0 and 1 exist",
            offset=_HEADER.size + i * _RECORD_DTYPE.itemsize + 8,
        )
    bad = np.nonzero(records["flags"] != 0)[0]
    if len(bad):
        i = int(bad[0])
        raise DataFormatError(
            f"record {i} has nonzero flags; version {_VERSION} defines none",
            offset=_HEADER.size + i * _RECORD_DTYPE.itemsize + 9,
        )
    reserved = np.frombuffer(records["reserved"].tobytes(), np.uint8).reshape(-1, 6)
    bad = np.nonzero(reserved.any(axis=1))[0]
    if len(bad):
        i = int(bad[0])
        raise DataFormatError(
            f"record {i} has nonzero reserved bytes",
            offset=_HEADER.size + i * _RECORD_DTYPE.itemsize + 10,
        )
    return TagStream.from_arrays(
        records["time"].astype(np.int64), records["channel"].astype(np.uint8)
    )


def write_csv_table(path, columns: dict, meta: dict | None = None) -> None:
    """Write named columns as CSV, preceded by ``# key: value`` metadata."""
    names = list(columns)
    arrays = [np.asarray(columns[k]) for k in names]
    if arrays and any(len(a) != len(arrays[0]) for a in arrays):
        raise ValueError("all columns must have the same length")
    with open(path, "w", newline="") as fh:
        for key, value in (meta or {}).items():
            fh.write(f"# {key}: {value}\n")
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in zip(*arrays):
            writer.writerow([_format_cell(v) for v in row])


def _format_cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return int(v)
    return v


def read_csv_table(path):
    """Read a CSV written by :func:`write_csv_table`.

    Returns (columns, meta): columns as float arrays keyed by header name,
    metadata from leading ``# key: value`` lines as strings.
    """
    meta: dict[str, str] = {}
    text = Path(path).read_text()
    lines = text.splitlines()
    body_start = 0
    for line in lines:
        if not line.startswith("#"):
            break
        body_start += 1
        key, sep, value = line[1:].partition(":")
        if sep:
            meta[key.strip()] = value.strip()
    reader = csv.reader(io.StringIO("\n".join(lines[body_start:])))
    rows = [row for row in reader if row]
    if not rows:
        raise DataFormatError("CSV has no header row", offset=0)
    header = rows[0]
    data = rows[1:]
    columns = {}
    for j, name in enumerate(header):
        try:
            columns[name] = np.array([float(r[j]) for r in data])
        except (ValueError, IndexError) as exc:
            raise DataFormatError(
                f"column {name!r} is not numeric or rows are ragged: {exc}", offset=0
            ) from None
    return columns, meta


def write_summary_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
