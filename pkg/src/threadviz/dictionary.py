"""CSV schema inference and the editable, markdown-rendered data dictionary."""
from __future__ import annotations

import copy
import csv
import io
import math
import re
from dataclasses import dataclass, field
from datetime import datetime

from .errors import EmptyFile, NoHeader, NoTableFound, UnknownColumn, UnparseableCsv

TYPE_INTEGER = "integer"
TYPE_FLOAT = "float"
TYPE_STRING = "string"
TYPE_BOOLEAN = "boolean"
TYPE_DATETIME = "datetime"

RANGE_SEPARATOR = " – "  # en dash, "min – max"

HEADERS = ("", "Data Type", "Range or Example", "Description")
# Content width between pipes of each header cell as rendered in prompts.
MIN_WIDTHS = (12, 12, 24, 27)

_BOOL_LITERALS = {"true", "false"}


@dataclass
class ColumnProfile:
    name: str
    data_type: str
    range_or_example: str
    description: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "data_type": self.data_type,
            "range_or_example": self.range_or_example,
            "description": self.description,
        }

    @classmethod
    def from_dict(cls, data: dict) -> ColumnProfile:
        return cls(
            name=data["name"],
            data_type=data["data_type"],
            range_or_example=data["range_or_example"],
            description=data.get("description", ""),
        )


@dataclass
class DataDictionary:
    filename: str
    columns: list[ColumnProfile]
    row_count: int
    warnings: list[str] = field(default_factory=list)

    def column(self, name: str) -> ColumnProfile:
        for profile in self.columns:
            if profile.name == name:
                return profile
        raise UnknownColumn(name)

    def to_dict(self) -> dict:
        return {
            "filename": self.filename,
            "row_count": self.row_count,
            "columns": [c.to_dict() for c in self.columns],
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, data: dict) -> DataDictionary:
        return cls(
            filename=data["filename"],
            columns=[ColumnProfile.from_dict(c) for c in data["columns"]],
            row_count=data["row_count"],
            warnings=list(data.get("warnings", [])),
        )


def _is_boolean(values: list[str]) -> bool:
    return all(v.strip().lower() in _BOOL_LITERALS for v in values)


def _as_integers(values: list[str]) -> list[int] | None:
    out = []
    for v in values:
        try:
            out.append(int(v.strip()))
        except ValueError:
            return None
    return out


def _as_floats(values: list[str]) -> list[float] | None:
    out = []
    for v in values:
        try:
            parsed = float(v.strip())
        except ValueError:
            return None
        if not math.isfinite(parsed):
            return None
        out.append(parsed)
    return out


def _is_datetime(values: list[str]) -> bool:
    for v in values:
        text = v.strip()
        if text.endswith(("Z", "z")):
            text = text[:-1] + "+00:00"
        try:
            datetime.fromisoformat(text)
        except ValueError:
            return False
    return True


def _profile_column(name: str, values: list[str], warnings: list[str]) -> ColumnProfile:
    non_null = [v for v in values if v != ""]
    if not non_null:
        warnings.append(f"column {name!r} has no values")
        return ColumnProfile(name=name, data_type=TYPE_STRING, range_or_example="")
    if _is_boolean(non_null):
        return ColumnProfile(name=name, data_type=TYPE_BOOLEAN, range_or_example=non_null[0])
    ints = _as_integers(non_null)
    if ints is not None:
        rendered = f"{min(ints)}{RANGE_SEPARATOR}{max(ints)}"
        return ColumnProfile(name=name, data_type=TYPE_INTEGER, range_or_example=rendered)
    floats = _as_floats(non_null)
    if floats is not None:
        rendered = f"{min(floats)}{RANGE_SEPARATOR}{max(floats)}"
        return ColumnProfile(name=name, data_type=TYPE_FLOAT, range_or_example=rendered)
    if _is_datetime(non_null):
        return ColumnProfile(name=name, data_type=TYPE_DATETIME, range_or_example=non_null[0])
    return ColumnProfile(name=name, data_type=TYPE_STRING, range_or_example=non_null[0])


def infer_schema(csv_bytes: bytes, filename: str) -> DataDictionary:
    """Profile a comma-delimited UTF-8 CSV whose first row is the header."""
    if not csv_bytes or not csv_bytes.strip():
        raise EmptyFile(filename)
    try:
        text = csv_bytes.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise UnparseableCsv(0, f"not valid UTF-8: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    try:
        rows = list(reader)
    except csv.Error as exc:
        raise UnparseableCsv(reader.line_num, str(exc)) from exc
    rows = [row for row in rows if row]
    if not rows:
        raise EmptyFile(filename)
    header = rows[0]
    names = [h.strip() for h in header]
    if not names or any(not n for n in names):
        raise NoHeader("header row has empty column names")
    if len(set(names)) != len(names):
        raise NoHeader("header row has duplicate column names")
    data_rows = rows[1:]
    for i, row in enumerate(data_rows, start=2):
        if len(row) != len(names):
            raise UnparseableCsv(i, f"expected {len(names)} fields, got {len(row)}")
    warnings: list[str] = []
    columns = [
        _profile_column(name, [row[j] for row in data_rows], warnings)
        for j, name in enumerate(names)
    ]
    return DataDictionary(filename=filename, columns=columns, row_count=len(data_rows), warnings=warnings)


def _escape_cell(text: str) -> str:
    return text.replace("\\", "\\\\").replace("|", "\\|")


def _unescape_cell(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        if text[i] == "\\" and i + 1 < len(text) and text[i + 1] in ("\\", "|"):
            out.append(text[i + 1])
            i += 2
        else:
            out.append(text[i])
            i += 1
    return "".join(out)


def _split_row(line: str) -> list[str]:
    """Split a |-delimited table row on unescaped pipes."""
    body = line.strip()
    if body.startswith("|"):
        body = body[1:]
    if body.endswith("|") and not body.endswith("\\|"):
        body = body[:-1]
    cells = []
    current = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            current.append(ch)
            current.append(body[i + 1])
            i += 2
            continue
        if ch == "|":
            cells.append("".join(current))
            current = []
        else:
            current.append(ch)
        i += 1
    cells.append("".join(current))
    return [_unescape_cell(c.strip()) for c in cells]


def render_markdown(dictionary: DataDictionary, include_descriptions: bool = True) -> str:
    """Render the dictionary as the fixed-header markdown table shown to the LLM."""
    n = 4 if include_descriptions else 3
    headers = HEADERS[:n]
    rows = []
    for profile in dictionary.columns:
        cells = [profile.name, profile.data_type, profile.range_or_example, profile.description]
        rows.append([_escape_cell(c) for c in cells[:n]])
    widths = []
    for j in range(n):
        longest = max((len(row[j]) for row in rows), default=0)
        longest = max(longest, len(headers[j]))
        widths.append(max(MIN_WIDTHS[j], longest + 2))
    def fmt(cells: list[str]) -> str:
        padded = [" " + c + " " * (widths[j] - 1 - len(c)) for j, c in enumerate(cells)]
        return "|" + "|".join(padded) + "|"
    lines = [fmt(list(headers))]
    lines.append("|" + "|".join(":" + "-" * (w - 1) for w in widths) + "|")
    lines.extend(fmt(row) for row in rows)
    return "\n".join(lines)


_SEPARATOR_CELL = re.compile(r"^:?-+:?$")


def parse_markdown(table_text: str) -> list[ColumnProfile]:
    """Extract column profiles from the first table whose header mentions Description.

    Tolerant of surrounding prose; header cell positions decide the field mapping.
    """
    lines = table_text.splitlines()
    for start, line in enumerate(lines):
        if not line.strip().startswith("|"):
            continue
        header = _split_row(line)
        if "Description" not in header:
            continue
        def pos(label: str, default: int) -> int:
            return header.index(label) if label in header else default
        type_i = pos("Data Type", 1)
        range_i = pos("Range or Example", 2)
        desc_i = header.index("Description")
        profiles = []
        for row_line in lines[start + 1:]:
            if not row_line.strip().startswith("|"):
                break
            cells = _split_row(row_line)
            if all(_SEPARATOR_CELL.match(c) for c in cells if c):
                continue
            cells += [""] * (len(header) - len(cells))
            name = cells[0]
            if not name:
                continue
            profiles.append(
                ColumnProfile(
                    name=name,
                    data_type=cells[type_i] if type_i < len(cells) else "",
                    range_or_example=cells[range_i] if range_i < len(cells) else "",
                    description=cells[desc_i] if desc_i < len(cells) else "",
                )
            )
        return profiles
    raise NoTableFound("no markdown table with a Description header")


def generate_descriptions(dictionary: DataDictionary, client) -> DataDictionary:
    """Ask the LLM to describe each column; on parse failure return the input with a warning."""
    from .prompts import PURPOSE_DICTIONARY, dictionary_bundle

    table = render_markdown(dictionary, include_descriptions=False)
    bundle = dictionary_bundle(dictionary.filename, table)
    reply = client.complete(bundle.messages, purpose=PURPOSE_DICTIONARY)
    updated = copy.deepcopy(dictionary)
    try:
        parsed = parse_markdown(reply)
    except NoTableFound:
        updated.warnings.append("description generation reply had no parseable table")
        return updated
    by_name = {p.name: p.description for p in parsed}
    missing = []
    for profile in updated.columns:
        if profile.name in by_name:
            profile.description = by_name[profile.name]
        else:
            missing.append(profile.name)
    if missing:
        updated.warnings.append("no description generated for: " + ", ".join(missing))
    return updated


def edit_description(dictionary: DataDictionary, column_name: str, text: str) -> DataDictionary:
    """Return a copy with exactly one description changed."""
    dictionary.column(column_name)  # raises UnknownColumn
    updated = copy.deepcopy(dictionary)
    updated.column(column_name).description = text
    return updated
