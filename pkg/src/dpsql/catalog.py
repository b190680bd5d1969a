"""Schemas and the privacy metadata the mechanisms rely on.

A catalog is stored as TOML::

    privacy_unit = "user"            # or "tuple"

    [table.customer]
    columns = [
      { name = "c_custkey", type = "int", lo = 1, hi = 150000 },
      { name = "c_mktsegment", type = "text", domain = ["AUTOMOBILE", "BUILDING"] },
      { name = "c_since", type = "date", lo = 1992-01-01, hi = 1998-12-31 },
    ]
    primary_key = ["c_custkey"]
    foreign_keys = [["c_nationkey", "nation", "n_nationkey"]]
    pid_column = "c_custkey"
    max_user_contribution = 1
    public = false

Column types are ``int``, ``real``, ``text`` and ``date``.  ``lo``/``hi`` are
optional but must come together; ``domain`` enumerates a finite category set.
Tables flagged ``public`` hold no personal data: they are ignored when
resolving PIDs at user level.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import enum
import sys
from collections import Counter, deque
from pathlib import Path
from typing import Any, Mapping

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from dpsql.errors import (
    AmbiguousPid,
    InvalidRange,
    InvalidReference,
    MalformedCatalog,
    UnknownColumn,
    UnknownTable,
)


class PrivacyUnit(str, enum.Enum):
    TUPLE = "tuple"
    USER = "user"


class DType(str, enum.Enum):
    INT = "int"
    REAL = "real"
    TEXT = "text"
    DATE = "date"

    @property
    def numeric(self) -> bool:
        return self in (DType.INT, DType.REAL)

    @property
    def ordered(self) -> bool:
        return self is not DType.TEXT

    def accepts(self, value: Any) -> bool:
        if self is DType.INT:
            return isinstance(value, int) and not isinstance(value, bool)
        if self is DType.REAL:
            return isinstance(value, (int, float)) and not isinstance(value, bool)
        if self is DType.TEXT:
            return isinstance(value, str)
        return isinstance(value, dt.date) and not isinstance(value, dt.datetime)


@dataclasses.dataclass(frozen=True)
class ColumnMeta:
    name: str
    dtype: DType
    range: tuple[Any, Any] | None = None
    domain: tuple[Any, ...] | None = None

    @property
    def finite(self) -> bool:
        return self.domain is not None


@dataclasses.dataclass(frozen=True)
class ForeignKey:
    column: str
    ref_table: str
    ref_column: str


@dataclasses.dataclass(frozen=True)
class TableMeta:
    name: str
    columns: tuple[ColumnMeta, ...]
    primary_key: tuple[str, ...] = ()
    foreign_keys: tuple[ForeignKey, ...] = ()
    pid_column: str | None = None
    max_user_contribution: int | None = None
    public: bool = False

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def column(self, name: str) -> ColumnMeta:
        for col in self.columns:
            if col.name == name:
                return col
        raise UnknownColumn(f"{self.name}.{name}")

    def has_column(self, name: str) -> bool:
        return any(c.name == name for c in self.columns)

    def index(self, name: str) -> int:
        for i, col in enumerate(self.columns):
            if col.name == name:
                return i
        raise UnknownColumn(f"{self.name}.{name}")


@dataclasses.dataclass(frozen=True, eq=True)
class Catalog:
    """Validated, immutable schema plus privacy annotations."""

    tables: Mapping[str, TableMeta]
    privacy_unit: PrivacyUnit = PrivacyUnit.TUPLE
    _pid_paths: Mapping[str, tuple[ForeignKey, ...] | None] = dataclasses.field(
        default=None, compare=False, repr=False
    )

    def __post_init__(self):
        object.__setattr__(self, "tables", dict(self.tables))
        object.__setattr__(self, "privacy_unit", PrivacyUnit(self.privacy_unit))
        _validate(self)
        object.__setattr__(self, "_pid_paths", _compute_pid_paths(self))

    def table(self, name: str) -> TableMeta:
        try:
            return self.tables[name]
        except KeyError:
            raise UnknownTable(name) from None

    def column(self, table: str, column: str) -> ColumnMeta:
        return self.table(table).column(column)

    def pid_path(self, table: str) -> tuple[ForeignKey, ...] | None:
        """Foreign-key hops from ``table`` to the table owning its PID.

        Empty tuple when the table carries the PID itself, None when the
        table is public or no owner is reachable.
        """
        self.table(table)
        return self._pid_paths[table]

    def pid_owner(self, table: str) -> str | None:
        path = self.pid_path(table)
        if path is None:
            return None
        return path[-1].ref_table if path else table

    def with_unit(self, unit: PrivacyUnit | str) -> "Catalog":
        return Catalog(self.tables, PrivacyUnit(unit))


# -- validation --------------------------------------------------------------

def _validate(cat: Catalog) -> None:
    for key, meta in cat.tables.items():
        if key != meta.name:
            raise MalformedCatalog(f"table key {key!r} does not match name {meta.name!r}")
        names = meta.column_names
        if not names:
            raise MalformedCatalog(f"table {meta.name} has no columns")
        if len(set(names)) != len(names):
            raise MalformedCatalog(f"duplicate column in table {meta.name}")
        for col in meta.columns:
            _validate_column(meta.name, col)
        for pk in meta.primary_key:
            if pk not in names:
                raise InvalidReference(f"primary key column {meta.name}.{pk} does not exist")
        for fk in meta.foreign_keys:
            if fk.column not in names:
                raise InvalidReference(f"foreign key column {meta.name}.{fk.column} does not exist")
            ref = cat.tables.get(fk.ref_table)
            if ref is None:
                raise InvalidReference(
                    f"foreign key {meta.name}.{fk.column} references missing table {fk.ref_table}"
                )
            if not ref.has_column(fk.ref_column):
                raise InvalidReference(
                    f"foreign key {meta.name}.{fk.column} references missing column "
                    f"{fk.ref_table}.{fk.ref_column}"
                )
        if meta.pid_column is not None and meta.pid_column not in names:
            raise InvalidReference(f"pid column {meta.name}.{meta.pid_column} does not exist")
        c = meta.max_user_contribution
        if c is not None and (not isinstance(c, int) or isinstance(c, bool) or c < 1):
            raise MalformedCatalog(f"max_user_contribution of {meta.name} must be an integer >= 1")
    if cat.privacy_unit is PrivacyUnit.USER and not any(
        t.pid_column for t in cat.tables.values()
    ):
        raise MalformedCatalog("user-level catalog declares no pid_column")


def _validate_column(table: str, col: ColumnMeta) -> None:
    where = f"{table}.{col.name}"
    if col.range is not None:
        if not col.dtype.ordered:
            raise MalformedCatalog(f"range declared on text column {where}")
        lo, hi = col.range
        if not (col.dtype.accepts(lo) and col.dtype.accepts(hi)):
            raise MalformedCatalog(f"range bounds of {where} do not match type {col.dtype.value}")
        if lo > hi:
            raise InvalidRange(f"{where}: lo {lo!r} > hi {hi!r}")
    if col.domain is not None:
        if not col.domain:
            raise MalformedCatalog(f"empty domain on {where}")
        if not all(col.dtype.accepts(v) for v in col.domain):
            raise MalformedCatalog(f"domain values of {where} do not match type {col.dtype.value}")
        if len(set(col.domain)) != len(col.domain):
            raise MalformedCatalog(f"duplicate domain value on {where}")


def _compute_pid_paths(cat: Catalog) -> dict[str, tuple[ForeignKey, ...] | None]:
    paths: dict[str, tuple[ForeignKey, ...] | None] = {}
    for name, meta in cat.tables.items():
        if meta.public:
            paths[name] = None
            continue
        if meta.pid_column is not None:
            paths[name] = ()
            continue
        # BFS along foreign keys through non-public tables.
        owners: dict[str, tuple[ForeignKey, ...]] = {}
        seen = {name}
        queue: deque[tuple[str, tuple[ForeignKey, ...]]] = deque([(name, ())])
        while queue:
            current, path = queue.popleft()
            for fk in cat.tables[current].foreign_keys:
                nxt = cat.tables[fk.ref_table]
                if nxt.public or fk.ref_table in seen:
                    continue
                seen.add(fk.ref_table)
                hop = path + (fk,)
                if nxt.pid_column is not None:
                    owners.setdefault(fk.ref_table, hop)
                else:
                    queue.append((fk.ref_table, hop))
        if len(owners) > 1:
            raise AmbiguousPid(f"table {name} reaches PID owners {sorted(owners)}")
        paths[name] = next(iter(owners.values())) if owners else None
    return paths


# -- file format -------------------------------------------------------------

def _ident(value: Any, what: str) -> str:
    if not isinstance(value, str) or not value:
        raise MalformedCatalog(f"{what} must be a non-empty string")
    return value.lower()


def _coerce_bound(dtype: DType, value: Any) -> Any:
    if dtype is DType.DATE and isinstance(value, str):
        try:
            return dt.date.fromisoformat(value)
        except ValueError:
            raise MalformedCatalog(f"bad date literal {value!r}") from None
    if dtype is DType.REAL and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    return value


def _parse_column(table: str, raw: Any) -> ColumnMeta:
    if not isinstance(raw, dict):
        raise MalformedCatalog(f"column entries of {table} must be tables")
    unknown = set(raw) - {"name", "type", "lo", "hi", "domain"}
    if unknown:
        raise MalformedCatalog(f"unknown column keys {sorted(unknown)} in {table}")
    name = _ident(raw.get("name"), f"column name in {table}")
    try:
        dtype = DType(str(raw.get("type", "")).lower())
    except ValueError:
        raise MalformedCatalog(f"bad type {raw.get('type')!r} for {table}.{name}") from None
    rng = None
    if ("lo" in raw) != ("hi" in raw):
        raise MalformedCatalog(f"{table}.{name}: lo and hi must be given together")
    if "lo" in raw:
        rng = (_coerce_bound(dtype, raw["lo"]), _coerce_bound(dtype, raw["hi"]))
    domain = None
    if "domain" in raw:
        if not isinstance(raw["domain"], list):
            raise MalformedCatalog(f"{table}.{name}: domain must be a list")
        domain = tuple(_coerce_bound(dtype, v) for v in raw["domain"])
    return ColumnMeta(name, dtype, rng, domain)


def _parse_table(name: str, raw: Any) -> TableMeta:
    if not isinstance(raw, dict):
        raise MalformedCatalog(f"[table.{name}] must be a section")
    unknown = set(raw) - {
        "columns", "primary_key", "foreign_keys", "pid_column", "max_user_contribution", "public"
    }
    if unknown:
        raise MalformedCatalog(f"unknown keys {sorted(unknown)} in [table.{name}]")
    cols = raw.get("columns")
    if not isinstance(cols, list):
        raise MalformedCatalog(f"[table.{name}] needs a columns list")
    fks = []
    for fk in raw.get("foreign_keys", []):
        if not (isinstance(fk, list) and len(fk) == 3):
            raise MalformedCatalog(f"foreign key in {name} must be [column, table, column]")
        fks.append(ForeignKey(*(_ident(x, "foreign key part") for x in fk)))
    pk = raw.get("primary_key", [])
    if not isinstance(pk, list):
        raise MalformedCatalog(f"primary_key of {name} must be a list")
    pid = raw.get("pid_column")
    public = raw.get("public", False)
    if not isinstance(public, bool):
        raise MalformedCatalog(f"public flag of {name} must be boolean")
    return TableMeta(
        name=name,
        columns=tuple(_parse_column(name, c) for c in cols),
        primary_key=tuple(_ident(c, "primary key column") for c in pk),
        foreign_keys=tuple(fks),
        pid_column=_ident(pid, "pid_column") if pid is not None else None,
        max_user_contribution=raw.get("max_user_contribution"),
        public=public,
    )


def loads_catalog(text: str) -> Catalog:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise MalformedCatalog(str(exc)) from None
    unknown = set(doc) - {"privacy_unit", "table"}
    if unknown:
        raise MalformedCatalog(f"unknown top-level keys {sorted(unknown)}")
    try:
        unit = PrivacyUnit(str(doc.get("privacy_unit", "tuple")).lower())
    except ValueError:
        raise MalformedCatalog(f"bad privacy_unit {doc.get('privacy_unit')!r}") from None
    raw_tables = doc.get("table", {})
    if not isinstance(raw_tables, dict) or not raw_tables:
        raise MalformedCatalog("catalog declares no tables")
    tables: dict[str, TableMeta] = {}
    for raw_name, body in raw_tables.items():
        name = _ident(raw_name, "table name")
        if name in tables:
            raise MalformedCatalog(f"duplicate table {name}")
        tables[name] = _parse_table(name, body)
    return Catalog(tables, unit)


def load_catalog(path: str | Path) -> Catalog:
    p = Path(path)
    try:
        data = p.read_bytes()
    except OSError as exc:
        raise MalformedCatalog(f"cannot read {p}: {exc}") from None
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise MalformedCatalog(f"{p} is not UTF-8") from None
    return loads_catalog(text)


def dumps_catalog(cat: Catalog) -> str:
    doc: dict[str, Any] = {"privacy_unit": cat.privacy_unit.value, "table": {}}
    for name, meta in cat.tables.items():
        cols = []
        for c in meta.columns:
            entry: dict[str, Any] = {"name": c.name, "type": c.dtype.value}
            if c.range is not None:
                entry["lo"], entry["hi"] = c.range
            if c.domain is not None:
                entry["domain"] = list(c.domain)
            cols.append(entry)
        body: dict[str, Any] = {"columns": cols}
        if meta.primary_key:
            body["primary_key"] = list(meta.primary_key)
        if meta.foreign_keys:
            body["foreign_keys"] = [[f.column, f.ref_table, f.ref_column] for f in meta.foreign_keys]
        if meta.pid_column is not None:
            body["pid_column"] = meta.pid_column
        if meta.max_user_contribution is not None:
            body["max_user_contribution"] = meta.max_user_contribution
        if meta.public:
            body["public"] = True
        doc["table"][name] = body
    return tomli_w.dumps(doc, multiline_strings=False)


def save_catalog(cat: Catalog, path: str | Path) -> None:
    Path(path).write_text(dumps_catalog(cat), encoding="utf-8")


# -- data-dependent metadata ---------------------------------------------------

def max_frequency(db, table: str, column: str) -> int:
    """Largest multiplicity of a single value in ``table.column``.

    Computed from the live instance and memoised on the database object.
    """
    cache = db.metadata_cache
    key = ("max_frequency", table, column)
    if key not in cache:
        values = db.table(table).column_values(column)
        cache[key] = max(Counter(values).values(), default=0)
    return cache[key]

