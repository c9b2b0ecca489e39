"""Report envelopes, stable JSON output and CSV ingestion."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from . import __version__
from .errors import DomainError


class ObservationError(DomainError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


# -- JSON ----------------------------------------------------------------------

def _float_token(x: float) -> str:
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    return format(x, ".17g")


def _encode(obj: Any, out: list) -> None:
    if obj is None or isinstance(obj, bool):
        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(_float_token(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, Mapping):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(", ")
            out.append(json.dumps(str(k), ensure_ascii=False))
            out.append(": ")
            _encode(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(", ")
            _encode(v, out)
        out.append("]")
    elif hasattr(obj, "item"):  # numpy scalar
        _encode(obj.item(), out)
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj: Any) -> str:
    """Serialise to JSON with every real written to 17 significant digits."""
    out: list[str] = []
    _encode(obj, out)
    return "".join(out)


@dataclass(frozen=True)
class ReportEnvelope:
    tool_version: str
    command: str
    inputs_digest: str
    payload: Any

    def to_dict(self) -> dict:
        return {"tool_version": self.tool_version, "command": self.command,
                "inputs_digest": self.inputs_digest, "payload": self.payload}

    def to_json(self) -> str:
        return dumps(self.to_dict()) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ReportEnvelope":
        data = json.loads(text)
        return cls(data["tool_version"], data["command"], data["inputs_digest"], data["payload"])


def digest_inputs(config: Mapping, files: Mapping[str, bytes] = {}) -> str:
    """SHA-256 over the canonical option set and the bytes of every input file."""
    h = hashlib.sha256()
    h.update(dumps(dict(sorted(config.items()))).encode())
    for name in sorted(files):
        h.update(b"\0" + name.encode() + b"\0")
        h.update(files[name])
    return h.hexdigest()


def envelope(command: str, config: Mapping, payload: Any, files: Mapping[str, bytes] = {}) -> ReportEnvelope:
    return ReportEnvelope(__version__, command, digest_inputs(config, files), payload)


# -- CSV -----------------------------------------------------------------------

def _number(text: str) -> float | None:
    try:
        value = float(text)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def parse_observations(text: str, column: str | int | None = None) -> list[float]:
    """Read one column of reals from CSV text.

    A first row whose selected cell is not a number is a header.  ``column``
    is a header name or a 0-based index (default: first column).
    """
    rows = [(i, row) for i, row in enumerate(csv.reader(io.StringIO(text)), start=1)
            if row and any(cell.strip() for cell in row)]
    if not rows:
        raise ObservationError("no data rows")
    first_no, first = rows[0]
    index = 0
    has_header = False
    if isinstance(column, str) and not column.lstrip("-").isdigit():
        names = [c.strip() for c in first]
        if column not in names:
            raise ObservationError(f"no column named {column!r}", row=first_no)
        index = names.index(column)
        has_header = True
    elif column is not None:
        index = int(column)
    if not has_header and index < len(first) and _number(first[index].strip()) is None:
        has_header = True
    body = rows[1:] if has_header else rows
    values = []
    for row_no, row in body:
        if index >= len(row):
            raise ObservationError(f"row {row_no} has no column {index + 1}", row=row_no, column=index + 1)
        cell = row[index].strip()
        value = _number(cell)
        if value is None:
            raise ObservationError(f"cannot parse {cell!r} at row {row_no}, column {index + 1}",
                                   row=row_no, column=index + 1)
        values.append(value)
    if not values:
        raise ObservationError("no data rows")
    return values


def ingest_observations(path, column: str | int | None = None) -> list[float]:
    return parse_observations(Path(path).read_bytes().decode("utf-8"), column)


def table_csv(rows, header) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])
    return buf.getvalue()
