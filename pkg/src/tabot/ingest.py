"""CSV ingestion and column profiling.

Parses RFC 4180 CSV into an immutable in-memory table, then profiles each
column: a type, the count of distinct values (diversity) and whether the
column is categorical.  The type ladder tries Boolean, Integer, Float,
Date, Datetime in that order and falls back to Text; a type wins when at
least ``type_consensus_ratio`` of the non-missing cells parse as it.
Columns whose cells are all missing are typed Empty.

Cells that fail the winning type are treated as missing by typed views;
the raw text stays available in the Table.
"""

from __future__ import annotations

import csv
import io
import re
import unicodedata
from dataclasses import dataclass
from datetime import date, datetime, timezone
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Sequence, Union

from .config import DEFAULT_CONFIG, TabotConfig


class IngestError(ValueError):
    """Base class for ingestion failures."""


class MalformedCsv(IngestError):
    def __init__(self, row_index: int, reason: str) -> None:
        super().__init__(f"row {row_index}: {reason}")
        self.row_index = row_index
        self.reason = reason


class DuplicateColumnName(IngestError):
    def __init__(self, name: str) -> None:
        super().__init__(f"duplicate column name after normalization: {name!r}")
        self.name = name


class EmptyInput(IngestError):
    pass


class UnknownField(IngestError):
    def __init__(self, name: str) -> None:
        super().__init__(f"unknown field: {name!r}")
        self.name = name


def fold(text: str) -> str:
    """Casefold, strip accents and trim: the normal form used everywhere
    names and text values are compared."""
    decomposed = unicodedata.normalize("NFKD", text)
    stripped = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
    return stripped.casefold().strip()


class FieldType(str, Enum):
    INTEGER = "integer"
    FLOAT = "float"
    DATE = "date"
    DATETIME = "datetime"
    BOOLEAN = "boolean"
    TEXT = "text"
    EMPTY = "empty"

    @property
    def is_numeric(self) -> bool:
        return self in (FieldType.INTEGER, FieldType.FLOAT)

    @property
    def is_temporal(self) -> bool:
        return self in (FieldType.DATE, FieldType.DATETIME)


@dataclass(frozen=True)
class SourceMeta:
    origin: str = "unknown"
    imported_at: datetime | None = None


@dataclass(frozen=True)
class Column:
    name: str
    cells: tuple[Union[str, None], ...]  # None marks a missing cell


@dataclass(frozen=True)
class Table:
    columns: tuple[Column, ...]
    row_count: int
    source_meta: SourceMeta = SourceMeta()

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def column(self, name: str) -> Column:
        key = fold(name)
        for col in self.columns:
            if fold(col.name) == key:
                return col
        raise UnknownField(name)

    def has_column(self, name: str) -> bool:
        key = fold(name)
        return any(fold(c.name) == key for c in self.columns)


@dataclass(frozen=True)
class IngestOptions:
    delimiter: str = ","
    has_header: bool = True
    encoding: str = "utf-8"


@dataclass(frozen=True)
class FieldStats:
    inferred_type: FieldType
    diversity: int
    missing_count: int
    is_categorical: bool
    value_lexicon: tuple[str, ...] = ()


CsvSource = Union[str, bytes, Path, IO]


def load_csv(source: CsvSource, options: IngestOptions = IngestOptions(), *,
             origin: str | None = None, imported_at: datetime | None = None,
             config: TabotConfig = DEFAULT_CONFIG) -> Table:
    """Parse a CSV source into a Table.

    ``source`` may be a Path (read from disk; the file mtime becomes the
    import timestamp so repeated loads of the same file are reproducible),
    a str/bytes payload, or a readable file object.  Ragged rows raise
    MalformedCsv; fully empty lines are skipped.
    """
    if isinstance(source, Path):
        text = source.read_bytes().decode(options.encoding)
        origin = origin or str(source)
        if imported_at is None:
            imported_at = datetime.fromtimestamp(source.stat().st_mtime, tz=timezone.utc)
    elif isinstance(source, bytes):
        text = source.decode(options.encoding)
    elif isinstance(source, str):
        text = source
    elif hasattr(source, "read"):
        data = source.read()
        text = data.decode(options.encoding) if isinstance(data, bytes) else data
    else:
        raise TypeError(f"unsupported CSV source: {type(source)!r}")

    text = text.lstrip("﻿")
    if not text.strip():
        raise EmptyInput("no CSV content")

    reader = csv.reader(io.StringIO(text, newline=""), delimiter=options.delimiter)
    raw_rows = [row for row in reader if row]
    if not raw_rows:
        raise EmptyInput("no CSV rows")

    if options.has_header:
        header = [name.strip() for name in raw_rows[0]]
        data_rows = raw_rows[1:]
    else:
        header = [f"col_{i + 1}" for i in range(len(raw_rows[0]))]
        data_rows = raw_rows

    seen: set[str] = set()
    for name in header:
        key = fold(name)
        if not key:
            raise MalformedCsv(0, "empty column name in header")
        if key in seen:
            raise DuplicateColumnName(name)
        seen.add(key)

    arity = len(header)
    markers = set(config.missing_markers)
    cells_by_column: list[list[str | None]] = [[] for _ in header]
    for row_index, row in enumerate(data_rows, start=1):
        if len(row) != arity:
            raise MalformedCsv(row_index, f"arity mismatch: expected {arity} cells, got {len(row)}")
        for j, cell in enumerate(row):
            cells_by_column[j].append(None if fold(cell) in markers else cell)

    columns = tuple(Column(name, tuple(cells))
                    for name, cells in zip(header, cells_by_column))
    meta = SourceMeta(origin=origin or "inline", imported_at=imported_at)
    return Table(columns=columns, row_count=len(data_rows), source_meta=meta)


# ---------------------------------------------------------------------------
# cell parsers

_INT_RE = re.compile(r"[+-]?(?:\d{1,3}(?:,\d{3})+|\d+)")
_FLOAT_RE = re.compile(r"[+-]?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?(?:[eE][+-]?\d+)?")
_INT_COMMA_RE = re.compile(r"[+-]?(?:\d{1,3}(?:\.\d{3})+|\d+)")
_FLOAT_COMMA_RE = re.compile(r"[+-]?(?:\d{1,3}(?:\.\d{3})+|\d+)(?:,\d+)?(?:[eE][+-]?\d+)?")
_ISO_DATE_RE = re.compile(r"\d{4}-\d{2}-\d{2}")
_SLASH_DATE_RE = re.compile(r"(\d{1,2})/(\d{1,2})/(\d{4})")
_ISO_DATETIME_RE = re.compile(
    r"\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}(?::\d{2}(?:\.\d+)?)?(?:Z|[+-]\d{2}:\d{2})?")

_BOOL_WORDS = {"true": True, "yes": True, "si": True,
               "false": False, "no": False}


def parse_int(raw: str, decimal_comma: bool = False) -> int | None:
    s = raw.strip()
    pattern = _INT_COMMA_RE if decimal_comma else _INT_RE
    if not pattern.fullmatch(s):
        return None
    group_sep = "." if decimal_comma else ","
    return int(s.replace(group_sep, ""))


def parse_float(raw: str, decimal_comma: bool = False) -> float | None:
    s = raw.strip()
    if decimal_comma:
        if not _FLOAT_COMMA_RE.fullmatch(s):
            return None
        s = s.replace(".", "").replace(",", ".")
    else:
        if not _FLOAT_RE.fullmatch(s):
            return None
        s = s.replace(",", "")
    return float(s)


def parse_bool_word(raw: str) -> bool | None:
    return _BOOL_WORDS.get(fold(raw))


def _valid_date(year: int, month: int, day: int) -> date | None:
    try:
        return date(year, month, day)
    except ValueError:
        return None


def parse_date(raw: str, slash_format: str | None = None) -> date | None:
    s = raw.strip()
    if _ISO_DATE_RE.fullmatch(s):
        try:
            return date.fromisoformat(s)
        except ValueError:
            return None
    m = _SLASH_DATE_RE.fullmatch(s)
    if m and slash_format:
        a, b, year = int(m.group(1)), int(m.group(2)), int(m.group(3))
        if slash_format == "dmy":
            return _valid_date(year, b, a)
        return _valid_date(year, a, b)
    return None


def parse_datetime(raw: str, slash_format: str | None = None) -> datetime | None:
    s = raw.strip()
    if _ISO_DATETIME_RE.fullmatch(s):
        try:
            return datetime.fromisoformat(s.replace("Z", "+00:00"))
        except ValueError:
            return None
    d = parse_date(s, slash_format)
    if d is not None:
        return datetime(d.year, d.month, d.day)
    return None


def resolve_slash_format(cells: Iterable[str]) -> str | None:
    """Pick dd/mm vs mm/dd by majority vote over unambiguous cells.

    Returns None when no slash-formatted cell exists or the vote ties, in
    which case slash cells do not parse as dates at all.
    """
    dmy = mdy = 0
    saw_slash = False
    for raw in cells:
        m = _SLASH_DATE_RE.fullmatch(raw.strip())
        if not m:
            continue
        saw_slash = True
        a, b, year = int(m.group(1)), int(m.group(2)), int(m.group(3))
        dmy_ok = _valid_date(year, b, a) is not None
        mdy_ok = _valid_date(year, a, b) is not None
        if dmy_ok and not mdy_ok:
            dmy += 1
        elif mdy_ok and not dmy_ok:
            mdy += 1
    if not saw_slash or dmy == mdy:
        return None
    return "dmy" if dmy > mdy else "mdy"


def _non_missing(cells: Iterable[str | None], markers: set[str]) -> list[str]:
    return [c for c in cells if c is not None and fold(c) not in markers]


def infer_field_type(cells: Iterable[str | None],
                     config: TabotConfig = DEFAULT_CONFIG) -> FieldType:
    """Most specific type that a consensus of non-missing cells parses as."""
    markers = set(config.missing_markers)
    values = _non_missing(cells, markers)
    if not values:
        return FieldType.EMPTY

    n = len(values)
    need = config.type_consensus_ratio

    def consensus(parses) -> bool:
        return sum(1 for v in values if parses(v)) / n >= need

    distinct = {v.strip() for v in values}
    if distinct == {"0", "1"}:
        return FieldType.BOOLEAN
    if consensus(lambda v: parse_bool_word(v) is not None):
        return FieldType.BOOLEAN
    if consensus(lambda v: parse_int(v, config.decimal_comma) is not None):
        return FieldType.INTEGER
    if consensus(lambda v: parse_float(v, config.decimal_comma) is not None):
        return FieldType.FLOAT
    slash = resolve_slash_format(values)
    if consensus(lambda v: parse_date(v, slash) is not None):
        return FieldType.DATE
    if consensus(lambda v: parse_datetime(v, slash) is not None):
        return FieldType.DATETIME
    return FieldType.TEXT


def coerce_cell(raw: str | None, field_type: FieldType,
                config: TabotConfig = DEFAULT_CONFIG,
                slash_format: str | None = None):
    """Convert one raw cell to the typed value for ``field_type``.

    Returns None for missing markers and for cells that fail the type
    (missing-with-original-preserved semantics).
    """
    if raw is None or fold(raw) in set(config.missing_markers):
        return None
    if field_type == FieldType.TEXT:
        return raw.strip()
    if field_type == FieldType.INTEGER:
        return parse_int(raw, config.decimal_comma)
    if field_type == FieldType.FLOAT:
        return parse_float(raw, config.decimal_comma)
    if field_type == FieldType.BOOLEAN:
        word = parse_bool_word(raw)
        if word is not None:
            return word
        stripped = raw.strip()
        if stripped in ("0", "1"):
            return stripped == "1"
        return None
    if field_type == FieldType.DATE:
        return parse_date(raw, slash_format)
    if field_type == FieldType.DATETIME:
        return parse_datetime(raw, slash_format)
    return None  # EMPTY


def typed_values(cells: Sequence[str | None], field_type: FieldType,
                 config: TabotConfig = DEFAULT_CONFIG) -> list:
    """Typed view of a raw column; unparseable cells become None."""
    slash = None
    if field_type in (FieldType.DATE, FieldType.DATETIME):
        markers = set(config.missing_markers)
        slash = resolve_slash_format(_non_missing(cells, markers))
    return [coerce_cell(c, field_type, config, slash) for c in cells]


def _display_value(value, field_type: FieldType) -> str:
    if field_type == FieldType.BOOLEAN:
        return "true" if value else "false"
    return str(value)


def compute_field_stats(table: Table, field: str, threshold: int | None = None,
                        config: TabotConfig = DEFAULT_CONFIG) -> FieldStats:
    """Profile one column: type, diversity, missing count, categorical flag.

    A column is categorical when its type is Text, Boolean or Integer, its
    diversity is within the threshold, and at least one value repeats
    (all-distinct columns are identifiers, not categories).
    """
    if threshold is None:
        threshold = config.categorical_threshold
    column = table.column(field)
    field_type = infer_field_type(column.cells, config)
    typed = typed_values(column.cells, field_type, config)
    missing = sum(1 for v in typed if v is None)

    canonical_display: dict = {}
    for value in typed:
        if value is None:
            continue
        key = fold(value) if field_type == FieldType.TEXT else value
        if key not in canonical_display:
            canonical_display[key] = _display_value(value, field_type)
    diversity = len(canonical_display)

    non_missing = table.row_count - missing
    eligible = field_type in (FieldType.TEXT, FieldType.BOOLEAN, FieldType.INTEGER)
    is_categorical = (eligible and 1 <= diversity <= threshold
                      and diversity < non_missing)
    lexicon = tuple(canonical_display.values()) if is_categorical else ()
    return FieldStats(inferred_type=field_type, diversity=diversity,
                      missing_count=missing, is_categorical=is_categorical,
                      value_lexicon=lexicon)
