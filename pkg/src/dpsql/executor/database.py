"""In-memory relational instance and its delimited-text loader."""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
from pathlib import Path
from typing import Any, Iterable, Mapping

from dpsql.catalog import Catalog, DType, TableMeta
from dpsql.errors import DataLoadError, TypeMismatch, UnknownColumn, UnknownTable

_MASK64 = (1 << 64) - 1


class Table:
    """Ordered rows of typed values laid out as ``meta.columns``."""

    def __init__(self, meta: TableMeta, rows: Iterable[tuple], validate: bool = True):
        self.meta = meta
        self.rows: tuple[tuple, ...] = tuple(tuple(r) for r in rows)
        if validate:
            self._check()

    @property
    def name(self) -> str:
        return self.meta.name

    def __len__(self) -> int:
        return len(self.rows)

    def column_values(self, column: str) -> list[Any]:
        try:
            i = self.meta.index(column)
        except UnknownColumn:
            raise UnknownColumn(f"{self.name}.{column}") from None
        return [r[i] for r in self.rows]

    def _check(self) -> None:
        width = len(self.meta.columns)
        for n, row in enumerate(self.rows):
            if len(row) != width:
                raise TypeMismatch(f"{self.name} row {n}: expected {width} values, got {len(row)}")
            for col, value in zip(self.meta.columns, row):
                if not col.dtype.accepts(value):
                    raise TypeMismatch(
                        f"{self.name}.{col.name} row {n}: {value!r} is not {col.dtype.value}"
                    )
        if self.meta.primary_key:
            idx = [self.meta.index(c) for c in self.meta.primary_key]
            seen = set()
            for row in self.rows:
                key = tuple(row[i] for i in idx)
                if key in seen:
                    raise TypeMismatch(f"duplicate primary key {key!r} in {self.name}")
                seen.add(key)


class Database:
    """Named tables; treated as immutable once built."""

    def __init__(self, tables: Mapping[str, Table]):
        self.tables: dict[str, Table] = dict(tables)
        self.metadata_cache: dict = {}

    @classmethod
    def from_rows(
        cls, catalog: Catalog, rows: Mapping[str, Iterable[tuple]], validate: bool = True
    ) -> "Database":
        tables = {}
        for name, meta in catalog.tables.items():
            tables[name] = Table(meta, rows.get(name, ()), validate=validate)
        unknown = set(rows) - set(catalog.tables)
        if unknown:
            raise UnknownTable(", ".join(sorted(unknown)))
        return cls(tables)

    def table(self, name: str) -> Table:
        try:
            return self.tables[name]
        except KeyError:
            raise UnknownTable(name) from None

    @property
    def schema(self) -> dict[str, TableMeta]:
        return {name: t.meta for name, t in self.tables.items()}

    def total_rows(self) -> int:
        return sum(len(t) for t in self.tables.values())

    def replace_rows(self, name: str, rows: Iterable[tuple]) -> "Database":
        """Copy of this database with one table's rows swapped (no validation)."""
        tables = dict(self.tables)
        tables[name] = Table(self.tables[name].meta, rows, validate=False)
        return Database(tables)

    def fingerprint(self) -> int:
        """Order-independent 64-bit hash of the instance contents."""
        acc = 0
        for name in sorted(self.tables):
            for row in self.tables[name].rows:
                h = hashlib.blake2b(f"{name}\x1f{row!r}".encode(), digest_size=8)
                acc = (acc + int.from_bytes(h.digest(), "big")) & _MASK64
        return acc


# -- delimited text ------------------------------------------------------------

_PARSERS = {
    DType.INT: int,
    DType.REAL: float,
    DType.TEXT: str,
    DType.DATE: dt.date.fromisoformat,
}


def _format(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, dt.date):
        return value.isoformat()
    return str(value)


def _data_file(directory: Path, table: str) -> Path | None:
    for suffix in (".tsv", ".tbl", ".txt"):
        p = directory / f"{table}{suffix}"
        if p.exists():
            return p
    return None


def read_table(path: Path, meta: TableMeta, delimiter: str = "\t") -> Table:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise DataLoadError(f"{path}: missing header row") from None
        if header and header[-1] == "":
            header = header[:-1]
        names = [h.strip().lower() for h in header]
        if names != list(meta.column_names):
            raise DataLoadError(f"{path}: header {names} does not match catalog {list(meta.column_names)}")
        parsers = [_PARSERS[c.dtype] for c in meta.columns]
        rows = []
        for lineno, fields in enumerate(reader, start=2):
            if not fields:
                continue
            if len(fields) == len(parsers) + 1 and fields[-1] == "":
                fields = fields[:-1]  # TPC-H style trailing delimiter
            if len(fields) != len(parsers):
                raise DataLoadError(f"{path}:{lineno}: expected {len(parsers)} fields, got {len(fields)}")
            try:
                rows.append(tuple(p(f) for p, f in zip(parsers, fields)))
            except ValueError as exc:
                raise DataLoadError(f"{path}:{lineno}: {exc}") from None
    try:
        return Table(meta, rows)
    except TypeMismatch as exc:
        raise DataLoadError(f"{path}: {exc}") from None


def load_database(directory: str | Path, catalog: Catalog, delimiter: str = "\t") -> Database:
    """Load one delimited file per catalog table (``<table>.tsv`` or ``.tbl``)."""
    d = Path(directory)
    if not d.is_dir():
        raise DataLoadError(f"{d} is not a directory")
    tables = {}
    for name, meta in catalog.tables.items():
        path = _data_file(d, name)
        if path is None:
            raise DataLoadError(f"no data file for table {name} in {d}")
        tables[name] = read_table(path, meta, delimiter)
    return Database(tables)


def dump_database(db: Database, directory: str | Path, delimiter: str = "\t") -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for name, table in db.tables.items():
        with open(d / f"{name}.tsv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
            writer.writerow(table.meta.column_names)
            for row in table.rows:
                writer.writerow([_format(v) for v in row])
