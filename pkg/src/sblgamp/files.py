"""Matrix/vector files and CSV tables.

Text files are CSV with one matrix row per line and no header; a vector is
a single column. Files ending in ``.bin`` hold two little-endian uint32
dimensions (rows, cols) followed by the row-major float64 payload.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

_BIN_HEADER = np.dtype("<u4")
_BIN_PAYLOAD = np.dtype("<f8")


class FileFormatError(ValueError):
    pass


def _read_csv(path: Path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            values = []
            for col, cell in enumerate(row, start=1):
                try:
                    v = float(cell)
                except ValueError:
                    raise FileFormatError(f"{path}:{lineno}:{col}: not a number: {cell.strip()!r}") from None
                if not math.isfinite(v):
                    raise FileFormatError(f"{path}:{lineno}:{col}: non-finite entry {cell.strip()!r}")
                values.append(v)
            if rows and len(values) != len(rows[0]):
                raise FileFormatError(
                    f"{path}:{lineno}: expected {len(rows[0])} columns, found {len(values)}")
            rows.append(values)
    if not rows:
        raise FileFormatError(f"{path}: file holds no data")
    return np.array(rows, dtype=np.float64)


def _read_bin(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    if len(raw) < 8:
        raise FileFormatError(f"{path}: truncated header ({len(raw)} bytes)")
    rows, cols = (int(v) for v in np.frombuffer(raw[:8], dtype=_BIN_HEADER))
    expected = 8 + rows * cols * 8
    if len(raw) != expected:
        raise FileFormatError(f"{path}: header says {rows}x{cols} ({expected} bytes) but file has {len(raw)}")
    data = np.frombuffer(raw[8:], dtype=_BIN_PAYLOAD).astype(np.float64).reshape(rows, cols)
    bad = np.argwhere(~np.isfinite(data))
    if bad.size:
        r, c = bad[0]
        raise FileFormatError(f"{path}: non-finite entry at row {r + 1}, column {c + 1}")
    return data


def read_matrix(path) -> np.ndarray:
    path = Path(path)
    try:
        return _read_bin(path) if path.suffix == ".bin" else _read_csv(path)
    except OSError as exc:
        raise FileFormatError(f"{path}: cannot read ({exc.strerror})") from None


def read_vector(path) -> np.ndarray:
    data = read_matrix(path)
    if data.shape[1] != 1:
        raise FileFormatError(f"{path}: a vector file must have one column, found {data.shape[1]}")
    return data[:, 0]


def write_matrix(path, data) -> None:
    path = Path(path)
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 1:
        data = data[:, None]
    if path.suffix == ".bin":
        header = np.array(data.shape, dtype=_BIN_HEADER).tobytes()
        path.write_bytes(header + np.ascontiguousarray(data, dtype=_BIN_PAYLOAD).tobytes())
        return
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in data:
            writer.writerow([repr(float(v)) for v in row])


write_vector = write_matrix


def format_value(v) -> str:
    """Round-trip text for a table cell (shortest repr for floats)."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_table(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
