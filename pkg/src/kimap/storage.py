"""Server key database files.

``kimapdb v1`` is a line-oriented text format::

    kimapdb v1 lambda=<bits>
    v1 <label> <counter> <hex key_current>:<len> [<hex key_previous>:<len>]

The master key lives in a separate file holding a single ``hex:len`` line;
it never appears in the tag database.
"""

from __future__ import annotations

from pathlib import Path
from typing import Union

from .bits import BitString
from .protocol import MasterKey, ServerTagRecord

HEADER_PREFIX = "kimapdb v1 lambda="


class DatabaseFormatError(ValueError):
    def __init__(self, path: Union[str, Path], line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.line_no = line_no


def dump_database(lam: int, records: dict[str, ServerTagRecord]) -> str:
    lines = [f"{HEADER_PREFIX}{lam}"]
    for rec in records.values():
        parts = [f"v1 {rec.label} {rec.counter} {rec.key_current.to_text()}"]
        if rec.key_previous is not None:
            parts.append(rec.key_previous.to_text())
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def save_database(path: Union[str, Path], lam: int, records: dict[str, ServerTagRecord]) -> None:
    Path(path).write_text(dump_database(lam, records))


def load_database(path: Union[str, Path]) -> tuple[int, dict[str, ServerTagRecord]]:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith(HEADER_PREFIX):
        raise DatabaseFormatError(path, 1, f"expected header '{HEADER_PREFIX}<bits>'")
    try:
        lam = int(lines[0][len(HEADER_PREFIX):])
    except ValueError:
        raise DatabaseFormatError(path, 1, "bad lambda in header") from None

    records: dict[str, ServerTagRecord] = {}
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) not in (4, 5) or fields[0] != "v1":
            raise DatabaseFormatError(path, line_no, "expected 'v1 <label> <counter> <key> [<prev>]'")
        label = fields[1]
        if label in records:
            raise DatabaseFormatError(path, line_no, f"duplicate label {label!r}")
        try:
            counter = int(fields[2])
            key_current = BitString.from_text(fields[3])
            key_previous = BitString.from_text(fields[4]) if len(fields) == 5 else None
        except ValueError as exc:
            raise DatabaseFormatError(path, line_no, str(exc)) from None
        if counter < 1:
            raise DatabaseFormatError(path, line_no, f"counter must be >= 1, got {counter}")
        if len(key_current) != lam or (key_previous is not None and len(key_previous) != lam):
            raise DatabaseFormatError(path, line_no, f"key width does not match header lambda={lam}")
        records[label] = ServerTagRecord(label=label, key_current=key_current,
                                         key_previous=key_previous, counter=counter)
    if not records:
        raise DatabaseFormatError(path, 2, "database has no tag records")
    return lam, records


def save_master(path: Union[str, Path], master: MasterKey) -> None:
    Path(path).write_text(master.value.to_text() + "\n")


def load_master(path: Union[str, Path]) -> MasterKey:
    text = Path(path).read_text().strip()
    try:
        return MasterKey(BitString.from_text(text))
    except ValueError as exc:
        raise DatabaseFormatError(path, 1, str(exc)) from None
