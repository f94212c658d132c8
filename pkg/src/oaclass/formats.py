"""Text formats for codes, code archives and local-code archives.

A code file is a header line ``crcode v1 n=<n> size=<N>`` followed by one
word per line in lowercase hex, zero-padded to ceil(n/4) digits, ascending.
Archives hold several records separated by a blank line, each introduced by
``id=<k>``.  Local-code records carry extra header keys (``kind``, ``r`` or
``r0``/``r1``, ``c``) on the ``crcode`` line.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, TextIO

from .core import Code


class FormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass
class Record:
    code: Code
    id: int | None = None
    meta: dict[str, str] = field(default_factory=dict)


def hex_width(n: int) -> int:
    return (n + 3) // 4


def _header(code: Code, meta: dict[str, str] | None) -> str:
    head = f"crcode v1 n={code.n} size={len(code)}"
    if meta:
        head += "".join(f" {k}={v}" for k, v in meta.items())
    return head


def format_code(code: Code, meta: dict[str, str] | None = None) -> str:
    w = hex_width(code.n)
    lines = [_header(code, meta)]
    lines.extend(f"{x:0{w}x}" for x in code.words)
    return "\n".join(lines) + "\n"


def format_archive(records: Iterable[Record]) -> str:
    chunks = []
    for k, rec in enumerate(records):
        rid = k if rec.id is None else rec.id
        chunks.append(f"id={rid}\n" + format_code(rec.code, rec.meta))
    return "\n".join(chunks)


def _parse_header(line: str, lineno: int) -> tuple[int, int, dict[str, str]]:
    parts = line.split()
    if parts[:2] != ["crcode", "v1"]:
        raise FormatError(f"expected 'crcode v1 ...' header, got {line!r}", lineno)
    fields: dict[str, str] = {}
    for token in parts[2:]:
        key, sep, value = token.partition("=")
        if not sep:
            raise FormatError(f"malformed header field {token!r}", lineno)
        fields[key] = value
    try:
        n = int(fields.pop("n"))
        size = int(fields.pop("size"))
    except (KeyError, ValueError) as exc:
        raise FormatError("header needs integer n= and size=", lineno) from exc
    return n, size, fields


def _parse_records(lines: list[str]) -> list[Record]:
    records: list[Record] = []
    i = 0
    total = len(lines)
    while i < total:
        if not lines[i].strip():
            i += 1
            continue
        rid = None
        if lines[i].startswith("id="):
            try:
                rid = int(lines[i][3:])
            except ValueError as exc:
                raise FormatError(f"bad record id {lines[i]!r}", i + 1) from exc
            i += 1
            if i >= total:
                raise FormatError("record id without code", i)
        n, size, meta = _parse_header(lines[i].strip(), i + 1)
        i += 1
        w = hex_width(n)
        words = []
        while i < total and lines[i].strip():
            tok = lines[i].strip()
            if len(tok) != w:
                raise FormatError(f"word {tok!r} is not {w} hex digits", i + 1)
            try:
                x = int(tok, 16)
            except ValueError as exc:
                raise FormatError(f"word {tok!r} is not hexadecimal", i + 1) from exc
            if x >> n:
                raise FormatError(f"word {tok!r} does not fit in {n} bits", i + 1)
            if words and x <= words[-1]:
                raise FormatError("words must be strictly ascending", i + 1)
            words.append(x)
            i += 1
        if len(words) != size:
            raise FormatError(f"header says size={size} but {len(words)} words follow", i)
        records.append(Record(Code(n, tuple(words)), rid, meta))
    return records


def parse_code(text: str) -> Code:
    records = _parse_records(text.splitlines())
    if len(records) != 1:
        raise FormatError(f"expected exactly one code, found {len(records)}")
    return records[0].code


def parse_archive(text: str) -> list[Record]:
    return _parse_records(text.splitlines())


def read_code(path: str | Path) -> Code:
    return parse_code(Path(path).read_text())


def read_archive(path: str | Path) -> list[Record]:
    return parse_archive(Path(path).read_text())


def write_code(path: str | Path, code: Code, meta: dict[str, str] | None = None) -> None:
    Path(path).write_text(format_code(code, meta))


def write_archive(path: str | Path, records: Iterable[Record]) -> None:
    Path(path).write_text(format_archive(records))


def dump(obj: Code | Iterable[Record], stream: TextIO | None = None) -> str:
    text = format_code(obj) if isinstance(obj, Code) else format_archive(obj)
    if stream is not None:
        stream.write(text)
    return text


def load(stream: TextIO | str) -> list[Record]:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    return parse_archive(stream.read())
