"""PID attribution: which user owns each row that reaches a query result."""

from __future__ import annotations

from dpsql.catalog import Catalog
from dpsql.errors import ExecutionError, NoPidPath
from dpsql.executor.database import Database
from dpsql.executor.fast import RowSet, matching_rows
from dpsql.frontend.ast import QueryAst


class PidResolver:
    """Maps base rows to their owning PID by following foreign-key paths."""

    def __init__(self, db: Database, catalog: Catalog):
        self.db = db
        self.catalog = catalog
        self._indexes: dict[tuple[str, str], dict] = {}

    def _index(self, table: str, column: str) -> dict:
        key = (table, column)
        if key not in self._indexes:
            t = self.db.table(table)
            i = t.meta.index(column)
            self._indexes[key] = {r[i]: r for r in t.rows}
        return self._indexes[key]

    def owns_pids(self, table: str) -> bool:
        return not self.catalog.table(table).public

    def check(self, table: str) -> None:
        if self.owns_pids(table) and self.catalog.pid_path(table) is None:
            raise NoPidPath(f"table {table} has no foreign-key path to a pid column")

    def pid_of(self, table: str, row: tuple):
        """PID owning ``row`` of ``table``; None for public tables."""
        if not self.owns_pids(table):
            return None
        path = self.catalog.pid_path(table)
        if path is None:
            raise NoPidPath(f"table {table} has no foreign-key path to a pid column")
        meta = self.catalog.table(table)
        for fk in path:
            value = row[meta.index(fk.column)]
            row = self._index(fk.ref_table, fk.ref_column).get(value)
            if row is None:
                raise ExecutionError(f"dangling foreign key {meta.name}.{fk.column}={value!r}")
            meta = self.catalog.table(fk.ref_table)
        return row[meta.index(meta.pid_column)]


def row_pids(rs: RowSet, resolver: PidResolver) -> list[frozenset]:
    """For each joined row, the set of PIDs owning one of its base rows."""
    names = [rs.table_name(k) for k in rs.keys]
    for n in set(names):
        resolver.check(n)
    out = []
    for row in rs.rows:
        pids = set()
        for name, base in zip(names, row):
            p = resolver.pid_of(name, base)
            if p is not None:
                pids.add(p)
        out.append(frozenset(pids))
    return out


def target_user_set(ast: QueryAst, db: Database, catalog: Catalog) -> set:
    """Distinct PIDs owning at least one row that survives selection and joins."""
    rs = matching_rows(ast, db)
    users: set = set()
    for pids in row_pids(rs, PidResolver(db, catalog)):
        users |= pids
    return users
