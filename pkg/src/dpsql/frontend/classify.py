"""Name resolution, type checking and query-class assignment."""

from __future__ import annotations

import dataclasses
import datetime as dt
import enum
from typing import Mapping

from dpsql.catalog import Catalog, DType, TableMeta
from dpsql.errors import AmbiguousColumn, TypeMismatch, UnknownColumn, UnknownTable
from dpsql.frontend.ast import (
    AggFunc,
    AggregateCall,
    And,
    BinaryOp,
    ColumnRef,
    Comparison,
    InList,
    JoinSpec,
    Literal,
    Negate,
    Not,
    Or,
    QueryAst,
    SelectItem,
)


class QueryKind(str, enum.Enum):
    SCALAR_AGGREGATE = "ScalarAggregate"
    HISTOGRAM_FINITE = "HistogramFinite"
    HISTOGRAM_INFINITE = "HistogramInfinite"
    DATA_QUERY = "DataQuery"
    UNSUPPORTED = "Unsupported"


@dataclasses.dataclass(frozen=True)
class QueryClass:
    kind: QueryKind
    reason: str | None = None
    ast: QueryAst | None = dataclasses.field(default=None, compare=False, repr=False)

    @property
    def is_histogram(self) -> bool:
        return self.kind in (QueryKind.HISTOGRAM_FINITE, QueryKind.HISTOGRAM_INFINITE)


class _Scope:
    def __init__(self, ast: QueryAst, tables: Mapping[str, TableMeta]):
        self.by_key: dict[str, TableMeta] = {}
        for ref in ast.tables:
            meta = tables.get(ref.name)
            if meta is None:
                raise UnknownTable(ref.name)
            if ref.key in self.by_key:
                raise AmbiguousColumn(f"table alias {ref.key!r} used twice")
            self.by_key[ref.key] = meta

    def column(self, ref: ColumnRef) -> ColumnRef:
        if ref.table is not None:
            meta = self.by_key.get(ref.table)
            if meta is None:
                raise UnknownColumn(f"{ref} (no table {ref.table!r} in FROM)")
            if not meta.has_column(ref.name):
                raise UnknownColumn(str(ref))
            return ref
        owners = [k for k, m in self.by_key.items() if m.has_column(ref.name)]
        if not owners:
            raise UnknownColumn(ref.name)
        if len(owners) > 1:
            raise AmbiguousColumn(f"{ref.name} (in {', '.join(owners)})")
        return ColumnRef(ref.name, owners[0])

    def dtype(self, ref: ColumnRef) -> DType:
        return self.by_key[ref.table].column(ref.name).dtype


def _literal_type(lit: Literal) -> DType:
    v = lit.value
    if isinstance(v, bool):
        raise TypeMismatch("boolean literal")
    if isinstance(v, int):
        return DType.INT
    if isinstance(v, float):
        return DType.REAL
    if isinstance(v, dt.date):
        return DType.DATE
    return DType.TEXT


class _Resolver:
    def __init__(self, scope: _Scope):
        self.scope = scope

    def expr(self, e):
        """Returns (resolved expression, dtype)."""
        if isinstance(e, ColumnRef):
            r = self.scope.column(e)
            return r, self.scope.dtype(r)
        if isinstance(e, Literal):
            return e, _literal_type(e)
        if isinstance(e, Negate):
            inner, t = self.expr(e.operand)
            if not t.numeric:
                raise TypeMismatch(f"cannot negate {t.value}")
            return Negate(inner), t
        if isinstance(e, BinaryOp):
            left, lt = self.expr(e.left)
            right, rt = self.expr(e.right)
            if not (lt.numeric and rt.numeric):
                raise TypeMismatch(f"arithmetic on {lt.value} and {rt.value}")
            out = DType.INT if lt is rt is DType.INT and e.op != "/" else DType.REAL
            return BinaryOp(e.op, left, right), out
        raise TypeError(f"not an expression: {e!r}")

    def _coerce_pair(self, left, lt, right, rt):
        # Quoted 'YYYY-MM-DD' strings compare as dates against date operands.
        if lt is DType.DATE and rt is DType.TEXT and isinstance(right, Literal):
            right, rt = _as_date(right), DType.DATE
        elif rt is DType.DATE and lt is DType.TEXT and isinstance(left, Literal):
            left, lt = _as_date(left), DType.DATE
        compatible = (lt.numeric and rt.numeric) or lt is rt
        if not compatible:
            raise TypeMismatch(f"cannot compare {lt.value} with {rt.value}")
        return left, right

    def predicate(self, p):
        if isinstance(p, Comparison):
            left, lt = self.expr(p.left)
            right, rt = self.expr(p.right)
            left, right = self._coerce_pair(left, lt, right, rt)
            return Comparison(p.op, left, right)
        if isinstance(p, InList):
            e, t = self.expr(p.expr)
            vals = []
            for v in p.values:
                _, vt = self.expr(v)
                _, v2 = self._coerce_pair(e, t, v, vt)
                vals.append(v2)
            return InList(e, tuple(vals), p.negated)
        if isinstance(p, And):
            return And(tuple(self.predicate(i) for i in p.items))
        if isinstance(p, Or):
            return Or(tuple(self.predicate(i) for i in p.items))
        if isinstance(p, Not):
            return Not(self.predicate(p.item))
        raise TypeError(f"not a predicate: {p!r}")


def _as_date(lit: Literal) -> Literal:
    try:
        return Literal(dt.date.fromisoformat(lit.value))
    except ValueError:
        raise TypeMismatch(f"{lit.value!r} is not a YYYY-MM-DD date") from None


def resolve(ast: QueryAst, tables: Mapping[str, TableMeta]) -> QueryAst:
    """Qualify every column reference with its table key and coerce date literals.

    Raises UnknownTable, UnknownColumn, AmbiguousColumn or TypeMismatch.
    """
    scope = _Scope(ast, tables)
    res = _Resolver(scope)
    items = []
    for item in ast.projections:
        if isinstance(item.expr, AggregateCall):
            arg = None
            if item.expr.argument is not None:
                arg, _ = res.expr(item.expr.argument)
            items.append(SelectItem(AggregateCall(item.expr.func, arg), item.alias))
        else:
            items.append(SelectItem(scope.column(item.expr), item.alias))
    joins = []
    for j in ast.joins:
        left, right = scope.column(j.left), scope.column(j.right)
        res._coerce_pair(left, scope.dtype(left), right, scope.dtype(right))
        joins.append(JoinSpec(left, right))
    where = res.predicate(ast.where) if ast.where is not None else None
    group = tuple(scope.column(c) for c in ast.group_by)
    return QueryAst(tuple(items), ast.tables, tuple(joins), where, group)


def aggregate_type(ast: QueryAst, tables: Mapping[str, TableMeta]) -> DType | None:
    """Type of the aggregate argument of a resolved AST (None for COUNT(*))."""
    agg = ast.aggregate
    if agg is None or agg.argument is None:
        return None
    _, t = _Resolver(_Scope(ast, tables)).expr(agg.argument)
    return t


def _connected(ast: QueryAst) -> bool:
    keys = [t.key for t in ast.tables]
    if len(keys) <= 1:
        return True
    adj: dict[str, set[str]] = {k: set() for k in keys}
    for j in ast.joins:
        adj[j.left.table].add(j.right.table)
        adj[j.right.table].add(j.left.table)
    seen = {keys[0]}
    stack = [keys[0]]
    while stack:
        for nxt in adj[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return len(seen) == len(keys)


def _unsupported(reason: str, ast: QueryAst | None) -> QueryClass:
    return QueryClass(QueryKind.UNSUPPORTED, reason, ast)


def classify(ast: QueryAst, catalog: Catalog) -> QueryClass:
    """Assign the query to exactly one class. The resolved AST rides along."""
    try:
        resolved = resolve(ast, catalog.tables)
    except TypeMismatch as exc:
        return _unsupported(f"type mismatch: {exc}", None)
    aggs = resolved.aggregates
    if not _connected(resolved):
        return _unsupported("cross product (tables not linked by an equi-join)", resolved)
    if not aggs:
        if resolved.group_by:
            return _unsupported("GROUP BY without aggregate", resolved)
        return QueryClass(QueryKind.DATA_QUERY, None, resolved)
    if len(aggs) > 1:
        return _unsupported("multiple aggregate functions", resolved)
    agg = aggs[0]
    if agg.argument is not None and agg.func not in (AggFunc.COUNT, AggFunc.COUNT_DISTINCT):
        t = aggregate_type(resolved, catalog.tables)
        if not t.numeric:
            return _unsupported(f"{agg.func.value} over non-numeric argument", resolved)
    plain = [p.expr for p in resolved.projections if isinstance(p.expr, ColumnRef)]
    group = list(resolved.group_by)
    if any(c not in group for c in plain):
        return _unsupported("non-aggregated column outside GROUP BY", resolved)
    if any(c not in plain for c in group):
        return _unsupported("GROUP BY column missing from select list", resolved)
    if not group:
        return QueryClass(QueryKind.SCALAR_AGGREGATE, None, resolved)
    if len(group) > 1:
        return _unsupported("multiple grouping keys", resolved)
    key = group[0]
    table = next(t.name for t in resolved.tables if t.key == key.table)
    if catalog.column(table, key.name).finite:
        return QueryClass(QueryKind.HISTOGRAM_FINITE, None, resolved)
    return QueryClass(QueryKind.HISTOGRAM_INFINITE, None, resolved)


def table_of(ast: QueryAst, key: str) -> str:
    """Underlying table name for an alias key of a resolved AST."""
    for t in ast.tables:
        if t.key == key:
            return t.name
    raise UnknownTable(key)
