"""Deterministic SQL rendering; ``parse(render(ast)) == ast`` for canonical ASTs."""

from __future__ import annotations

import datetime as dt

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

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def render_literal(lit: Literal) -> str:
    v = lit.value
    if isinstance(v, dt.date):
        return f"DATE '{v.isoformat()}'"
    if isinstance(v, str):
        return "'" + v.replace("'", "''") + "'"
    return repr(v)


def render_expr(e) -> str:
    if isinstance(e, ColumnRef):
        return str(e)
    if isinstance(e, Literal):
        return render_literal(e)
    if isinstance(e, Negate):
        return f"-({render_expr(e.operand)})"
    if isinstance(e, BinaryOp):
        p = _PREC[e.op]
        left = render_expr(e.left)
        if isinstance(e.left, BinaryOp) and _PREC[e.left.op] < p:
            left = f"({left})"
        right = render_expr(e.right)
        if isinstance(e.right, BinaryOp) and _PREC[e.right.op] <= p:
            right = f"({right})"
        return f"{left} {e.op} {right}"
    raise TypeError(f"not an expression: {e!r}")


def render_predicate(p, context: str = "") -> str:
    if isinstance(p, Comparison):
        return f"{render_expr(p.left)} {p.op} {render_expr(p.right)}"
    if isinstance(p, InList):
        vals = ", ".join(render_literal(v) for v in p.values)
        kw = "NOT IN" if p.negated else "IN"
        return f"{render_expr(p.expr)} {kw} ({vals})"
    if isinstance(p, Not):
        return f"NOT ({render_predicate(p.item)})"
    if isinstance(p, And):
        text = " AND ".join(render_predicate(i, "and") for i in p.items)
        return text
    if isinstance(p, Or):
        text = " OR ".join(render_predicate(i, "or") for i in p.items)
        return f"({text})" if context == "and" else text
    raise TypeError(f"not a predicate: {p!r}")


def render_aggregate(a: AggregateCall) -> str:
    if a.func is AggFunc.COUNT and a.argument is None:
        return "COUNT(*)"
    if a.func is AggFunc.COUNT_DISTINCT:
        return f"COUNT(DISTINCT {render_expr(a.argument)})"
    return f"{a.func.value}({render_expr(a.argument)})"


def render(ast: QueryAst) -> str:
    items = []
    for item in ast.projections:
        text = render_aggregate(item.expr) if isinstance(item.expr, AggregateCall) else str(item.expr)
        if item.alias:
            text += f" AS {item.alias}"
        items.append(text)
    tables = ", ".join(f"{t.name} AS {t.alias}" if t.alias else t.name for t in ast.tables)
    sql = f"SELECT {', '.join(items)} FROM {tables}"
    parts = [f"{j.left} = {j.right}" for j in ast.joins]
    if ast.where is not None:
        if isinstance(ast.where, And):
            parts.extend(render_predicate(i, "and") for i in ast.where.items)
        else:
            parts.append(render_predicate(ast.where, "and" if parts else ""))
    if parts:
        sql += " WHERE " + " AND ".join(parts)
    if ast.group_by:
        sql += " GROUP BY " + ", ".join(str(c) for c in ast.group_by)
    return sql
