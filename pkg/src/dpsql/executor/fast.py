"""Hash-join executor: the engine's ground truth and the mechanisms' inner engine."""

from __future__ import annotations

import dataclasses
import operator
from collections import defaultdict
from typing import Any, Callable

from dpsql.errors import EmptyAggregate, ExecutionError
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
    conjuncts,
    walk_columns,
)
from dpsql.frontend.classify import resolve
from dpsql.executor.database import Database
from dpsql.executor.result import ExactResult

_CMP = {
    "=": operator.eq,
    "<>": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


def _divide(a, b):
    if b == 0:
        raise ExecutionError("division by zero")
    return a / b


_ARITH = {"+": operator.add, "-": operator.sub, "*": operator.mul, "/": _divide}


@dataclasses.dataclass
class RowSet:
    """Joined and filtered rows; each row is a tuple of base rows, one per alias."""

    ast: QueryAst  # resolved
    db: Database
    keys: tuple[str, ...]
    rows: list[tuple[tuple, ...]]

    def table_name(self, key: str) -> str:
        return next(t.name for t in self.ast.tables if t.key == key)

    def locate(self, ref: ColumnRef) -> tuple[int, int]:
        pos = self.keys.index(ref.table)
        idx = self.db.table(self.table_name(ref.table)).meta.index(ref.name)
        return pos, idx

    def getter(self, expr) -> Callable[[tuple], Any]:
        return compile_expr(expr, self._locator())

    def _locator(self):
        return lambda ref: self.locate(ref)


def compile_expr(e, locate) -> Callable[[tuple], Any]:
    if isinstance(e, ColumnRef):
        pos, idx = locate(e)
        return lambda row: row[pos][idx]
    if isinstance(e, Literal):
        v = e.value
        return lambda row: v
    if isinstance(e, Negate):
        f = compile_expr(e.operand, locate)
        return lambda row: -f(row)
    if isinstance(e, BinaryOp):
        lf, rf, op = compile_expr(e.left, locate), compile_expr(e.right, locate), _ARITH[e.op]
        return lambda row: op(lf(row), rf(row))
    raise TypeError(f"not an expression: {e!r}")


def compile_predicate(p, locate) -> Callable[[tuple], bool]:
    if isinstance(p, Comparison):
        lf, rf, op = compile_expr(p.left, locate), compile_expr(p.right, locate), _CMP[p.op]
        return lambda row: op(lf(row), rf(row))
    if isinstance(p, InList):
        f = compile_expr(p.expr, locate)
        values = [v.value for v in p.values]
        if p.negated:
            return lambda row: f(row) not in values
        return lambda row: f(row) in values
    if isinstance(p, And):
        fs = [compile_predicate(i, locate) for i in p.items]
        return lambda row: all(f(row) for f in fs)
    if isinstance(p, Or):
        fs = [compile_predicate(i, locate) for i in p.items]
        return lambda row: any(f(row) for f in fs)
    if isinstance(p, Not):
        f = compile_predicate(p.item, locate)
        return lambda row: not f(row)
    raise TypeError(f"not a predicate: {p!r}")


def _aliases(node) -> set[str]:
    return {c.table for c in walk_columns(node)}


def matching_rows(ast: QueryAst, db: Database) -> RowSet:
    """Evaluate FROM, joins and WHERE; return the surviving joined rows."""
    ast = resolve(ast, db.schema)
    refs = {t.key: t for t in ast.tables}
    preds = conjuncts(ast.where)
    local = defaultdict(list)
    residual = []
    for p in preds:
        owners = _aliases(p)
        if len(owners) == 1:
            local[next(iter(owners))].append(p)
        else:
            residual.append(p)
    for j in ast.joins:
        if j.left.table == j.right.table:
            local[j.left.table].append(Comparison("=", j.left, j.right))

    def base_rows(key: str) -> list[tuple]:
        table = db.table(refs[key].name)
        rows = table.rows
        if local[key]:
            meta = table.meta
            f = compile_predicate(
                And(tuple(local[key])), lambda ref: (0, meta.index(ref.name))
            )
            rows = [r for r in rows if f((r,))]
        return list(rows)

    order = [ast.tables[0].key]
    current = [(r,) for r in base_rows(order[0])]
    pending = [t.key for t in ast.tables[1:]]
    cross = [j for j in ast.joins if j.left.table != j.right.table]
    while pending:
        joined = set(order)
        nxt = None
        for key in pending:
            if any(_links(j, key, joined) for j in cross):
                nxt = key
                break
        if nxt is None:
            nxt = pending[0]  # cross product; classification normally rejects these
        pending.remove(nxt)
        links = [j for j in cross if _links(j, nxt, joined)]
        meta = db.table(refs[nxt].name).meta
        new_cols = []
        old_refs = []
        for j in links:
            new_side, old_side = (j.right, j.left) if j.right.table == nxt else (j.left, j.right)
            new_cols.append(meta.index(new_side.name))
            old_refs.append(old_side)
        index: dict[tuple, list[tuple]] = defaultdict(list)
        for r in base_rows(nxt):
            index[tuple(r[i] for i in new_cols)].append(r)
        pos_of = {k: i for i, k in enumerate(order)}
        old_loc = [
            (pos_of[ref.table], db.table(refs[ref.table].name).meta.index(ref.name)) for ref in old_refs
        ]
        out = []
        for row in current:
            bucket = index.get(tuple(row[p][i] for p, i in old_loc))
            if bucket:
                for r in bucket:
                    out.append(row + (r,))
        current = out
        order.append(nxt)
    rs = RowSet(ast, db, tuple(order), current)
    if residual:
        f = compile_predicate(And(tuple(residual)), rs._locator())
        rs.rows = [r for r in rs.rows if f(r)]
    return rs


def _links(j: JoinSpec, key: str, joined: set[str]) -> bool:
    return (j.left.table == key and j.right.table in joined) or (
        j.right.table == key and j.left.table in joined
    )


def aggregate_values(func: AggFunc, values: list) -> Any:
    if func is AggFunc.COUNT:
        return len(values)
    if func is AggFunc.COUNT_DISTINCT:
        return len(set(values))
    if func is AggFunc.SUM:
        total = 0
        for v in values:
            total += v
        return total
    if not values:
        raise EmptyAggregate(f"{func.value} over empty selection")
    if func is AggFunc.AVG:
        total = 0
        for v in values:
            total += v
        return total / len(values)
    if func is AggFunc.MIN:
        return min(values)
    return max(values)


def evaluate(rs: RowSet, agg: AggregateCall, group_by=()) -> ExactResult:
    """Aggregate a row set, optionally grouped (categories sorted ascending)."""
    arg = rs.getter(agg.argument) if agg.argument is not None else (lambda row: 1)
    if not group_by:
        return ExactResult.of_scalar(aggregate_values(agg.func, [arg(r) for r in rs.rows]))
    keys = [rs.getter(c) for c in group_by]
    groups: dict[Any, list] = {}
    for r in rs.rows:
        k = keys[0](r) if len(keys) == 1 else tuple(f(r) for f in keys)
        groups.setdefault(k, []).append(arg(r))
    return ExactResult.of_histogram(
        (k, aggregate_values(agg.func, groups[k])) for k in sorted(groups)
    )


def execute(ast: QueryAst, db: Database) -> ExactResult:
    rs = matching_rows(ast, db)
    ast = rs.ast
    agg_items = [p for p in ast.projections if isinstance(p.expr, AggregateCall)]
    if not agg_items:
        getters = [rs.getter(p.expr) for p in ast.projections]
        names = [p.alias or p.expr.name for p in ast.projections]
        return ExactResult.of_rows(names, (tuple(g(r) for g in getters) for r in rs.rows))
    if len(agg_items) > 1:
        raise ExecutionError("only one aggregate per query is supported")
    return evaluate(rs, agg_items[0].expr, ast.group_by)
