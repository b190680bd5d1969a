"""Naive nested-loop evaluator used as a correctness oracle.

Deliberately shares nothing with the fast path except the AST: its own name
lookup, its own interpreter and linear-search grouping.  Only for small
instances.
"""

from __future__ import annotations

import datetime as dt

from dpsql.errors import AmbiguousColumn, EmptyAggregate, ExecutionError, UnknownColumn, UnknownTable
from dpsql.frontend.ast import (
    AggFunc,
    AggregateCall,
    And,
    BinaryOp,
    ColumnRef,
    Comparison,
    InList,
    Literal,
    Negate,
    Not,
    Or,
    QueryAst,
)
from dpsql.executor.result import ExactResult


class _Env:
    """Binds FROM aliases to tables and the current tuple of each alias."""

    def __init__(self, ast: QueryAst, db):
        self.aliases = []
        self.tables = {}
        for ref in ast.tables:
            alias = ref.alias or ref.name
            if ref.name not in db.tables:
                raise UnknownTable(ref.name)
            self.aliases.append(alias)
            self.tables[alias] = db.tables[ref.name]
        self.current: dict[str, tuple] = {}
        self.slots: dict[ColumnRef, tuple[str, int]] = {}

    def owner(self, ref: ColumnRef) -> str:
        if ref.table is not None:
            if ref.table not in self.tables:
                raise UnknownColumn(str(ref))
            if ref.name not in self.tables[ref.table].meta.column_names:
                raise UnknownColumn(str(ref))
            return ref.table
        found = [a for a in self.aliases if ref.name in self.tables[a].meta.column_names]
        if not found:
            raise UnknownColumn(ref.name)
        if len(found) > 1:
            raise AmbiguousColumn(ref.name)
        return found[0]

    def dtype(self, ref: ColumnRef) -> str:
        a = self.owner(ref)
        for c in self.tables[a].meta.columns:
            if c.name == ref.name:
                return c.dtype.value
        raise UnknownColumn(ref.name)

    def lookup(self, ref: ColumnRef):
        slot = self.slots.get(ref)
        if slot is None:
            a = self.owner(ref)
            slot = self.slots[ref] = (a, list(self.tables[a].meta.column_names).index(ref.name))
        return self.current[slot[0]][slot[1]]


def _value(e, env: _Env):
    if isinstance(e, ColumnRef):
        return env.lookup(e)
    if isinstance(e, Literal):
        return e.value
    if isinstance(e, Negate):
        return -_value(e.operand, env)
    if isinstance(e, BinaryOp):
        a, b = _value(e.left, env), _value(e.right, env)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if b == 0:
            raise ExecutionError("division by zero")
        return a / b
    raise TypeError(e)


def _literal_for(other, lit, env: _Env):
    """Date columns compare against 'YYYY-MM-DD' strings."""
    v = lit.value if isinstance(lit, Literal) else None
    if isinstance(v, str) and isinstance(other, ColumnRef) and env.dtype(other) == "date":
        return dt.date.fromisoformat(v)
    return None


def _compare(op, a, b) -> bool:
    if op == "=":
        return a == b
    if op == "<>":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def _holds(p, env: _Env) -> bool:
    if isinstance(p, Comparison):
        a = _literal_for(p.right, p.left, env)
        b = _literal_for(p.left, p.right, env)
        a = _value(p.left, env) if a is None else a
        b = _value(p.right, env) if b is None else b
        return _compare(p.op, a, b)
    if isinstance(p, InList):
        x = _value(p.expr, env)
        hit = False
        for v in p.values:
            c = _literal_for(p.expr, v, env)
            if x == (v.value if c is None else c):
                hit = True
        return hit != p.negated
    if isinstance(p, And):
        return all(_holds(i, env) for i in p.items)
    if isinstance(p, Or):
        return any(_holds(i, env) for i in p.items)
    if isinstance(p, Not):
        return not _holds(p.item, env)
    raise TypeError(p)


def _cols(node, env: _Env, out: set):
    if isinstance(node, ColumnRef):
        out.add(env.owner(node))
    elif isinstance(node, (BinaryOp, Comparison)):
        _cols(node.left, env, out)
        _cols(node.right, env, out)
    elif isinstance(node, Negate):
        _cols(node.operand, env, out)
    elif isinstance(node, InList):
        _cols(node.expr, env, out)
    elif isinstance(node, (And, Or)):
        for i in node.items:
            _cols(i, env, out)
    elif isinstance(node, Not):
        _cols(node.item, env, out)
    return out


def joined_tuples(ast: QueryAst, db) -> tuple[_Env, list[dict]]:
    """Every combination of one row per alias that satisfies joins and WHERE."""
    env = _Env(ast, db)
    conds = [Comparison("=", j.left, j.right) for j in ast.joins]
    if ast.where is not None:
        conds.extend(ast.where.items if isinstance(ast.where, And) else [ast.where])
    # attach each condition to the first depth at which all its aliases are bound
    depth_of = []
    for c in conds:
        needed = _cols(c, env, set())
        depth_of.append(max((env.aliases.index(a) for a in needed), default=0))
    at_depth = [[c for c, d in zip(conds, depth_of) if d == i] for i in range(len(env.aliases))]
    out: list[dict] = []

    def loop(i: int):
        if i == len(env.aliases):
            out.append(dict(env.current))
            return
        alias = env.aliases[i]
        for row in env.tables[alias].rows:
            env.current[alias] = row
            if all(_holds(c, env) for c in at_depth[i]):
                loop(i + 1)
        env.current.pop(alias, None)

    loop(0)
    return env, out


def _aggregate(func: AggFunc, values: list):
    if func is AggFunc.COUNT:
        return len(values)
    if func is AggFunc.COUNT_DISTINCT:
        seen = []
        for v in values:
            if v not in seen:
                seen.append(v)
        return len(seen)
    if func is AggFunc.SUM:
        s = 0
        for v in values:
            s = s + v
        return s
    if len(values) == 0:
        raise EmptyAggregate(func.value)
    if func is AggFunc.AVG:
        s = 0
        for v in values:
            s = s + v
        return s / len(values)
    best = values[0]
    for v in values[1:]:
        if (v < best) if func is AggFunc.MIN else (v > best):
            best = v
    return best


def execute_bruteforce(ast: QueryAst, db) -> ExactResult:
    env, tuples = joined_tuples(ast, db)
    aggs = [p for p in ast.projections if isinstance(p.expr, AggregateCall)]
    if not aggs:
        names, rows = [], []
        for p in ast.projections:
            names.append(p.alias or p.expr.name)
        for t in tuples:
            env.current = t
            rows.append(tuple(_value(p.expr, env) for p in ast.projections))
        return ExactResult.of_rows(names, rows)
    if len(aggs) != 1:
        raise ExecutionError("one aggregate expected")
    call = aggs[0].expr

    def arg_of(t):
        env.current = t
        return 1 if call.argument is None else _value(call.argument, env)

    if not ast.group_by:
        return ExactResult.of_scalar(_aggregate(call.func, [arg_of(t) for t in tuples]))
    groups: list[list] = []  # [key, values]
    for t in tuples:
        env.current = t
        vals = [env.lookup(c) for c in ast.group_by]
        key = vals[0] if len(vals) == 1 else tuple(vals)
        for g in groups:
            if g[0] == key:
                g[1].append(arg_of(t))
                break
        else:
            groups.append([key, [arg_of(t)]])
    # selection sort by category value
    bins = []
    while groups:
        i = min(range(len(groups)), key=lambda j: groups[j][0])
        key, vals = groups.pop(i)
        bins.append((key, _aggregate(call.func, vals)))
    return ExactResult.of_histogram(bins)
