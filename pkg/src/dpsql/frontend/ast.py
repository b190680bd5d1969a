"""Immutable AST for the supported SPJA subset."""

from __future__ import annotations

import dataclasses
import datetime as dt
import enum
from typing import Union


@dataclasses.dataclass(frozen=True)
class ColumnRef:
    name: str
    table: str | None = None  # alias qualifier; filled in by name resolution

    def __str__(self) -> str:
        return f"{self.table}.{self.name}" if self.table else self.name


@dataclasses.dataclass(frozen=True)
class Literal:
    value: Union[int, float, str, dt.date]


@dataclasses.dataclass(frozen=True)
class BinaryOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclasses.dataclass(frozen=True)
class Negate:
    operand: "Expr"


Expr = Union[ColumnRef, Literal, BinaryOp, Negate]


class AggFunc(str, enum.Enum):
    COUNT = "COUNT"
    COUNT_DISTINCT = "COUNT_DISTINCT"
    SUM = "SUM"
    AVG = "AVG"
    MIN = "MIN"
    MAX = "MAX"


@dataclasses.dataclass(frozen=True)
class AggregateCall:
    func: AggFunc
    argument: Expr | None = None  # None only for COUNT(*)

    @property
    def distinct(self) -> bool:
        return self.func is AggFunc.COUNT_DISTINCT


@dataclasses.dataclass(frozen=True)
class SelectItem:
    expr: Union[ColumnRef, AggregateCall]
    alias: str | None = None


@dataclasses.dataclass(frozen=True)
class TableRef:
    name: str
    alias: str | None = None

    @property
    def key(self) -> str:
        return self.alias or self.name


@dataclasses.dataclass(frozen=True)
class JoinSpec:
    """Inner equi-join condition ``left = right``."""

    left: ColumnRef
    right: ColumnRef


@dataclasses.dataclass(frozen=True)
class Comparison:
    op: str  # = <> < <= > >=
    left: Expr
    right: Expr


@dataclasses.dataclass(frozen=True)
class InList:
    expr: Expr
    values: tuple[Literal, ...]
    negated: bool = False


@dataclasses.dataclass(frozen=True)
class And:
    items: tuple["Predicate", ...]


@dataclasses.dataclass(frozen=True)
class Or:
    items: tuple["Predicate", ...]


@dataclasses.dataclass(frozen=True)
class Not:
    item: "Predicate"


Predicate = Union[Comparison, InList, And, Or, Not]


@dataclasses.dataclass(frozen=True)
class QueryAst:
    projections: tuple[SelectItem, ...]
    tables: tuple[TableRef, ...]
    joins: tuple[JoinSpec, ...] = ()
    where: Predicate | None = None
    group_by: tuple[ColumnRef, ...] = ()

    @property
    def aggregates(self) -> list[AggregateCall]:
        return [p.expr for p in self.projections if isinstance(p.expr, AggregateCall)]

    @property
    def aggregate(self) -> AggregateCall | None:
        aggs = self.aggregates
        return aggs[0] if len(aggs) == 1 else None


def walk_columns(node) -> list[ColumnRef]:
    """All column references below ``node`` in left-to-right order."""
    out: list[ColumnRef] = []

    def visit(n):
        if isinstance(n, ColumnRef):
            out.append(n)
        elif isinstance(n, BinaryOp):
            visit(n.left)
            visit(n.right)
        elif isinstance(n, Negate):
            visit(n.operand)
        elif isinstance(n, AggregateCall):
            if n.argument is not None:
                visit(n.argument)
        elif isinstance(n, Comparison):
            visit(n.left)
            visit(n.right)
        elif isinstance(n, InList):
            visit(n.expr)
        elif isinstance(n, (And, Or)):
            for item in n.items:
                visit(item)
        elif isinstance(n, Not):
            visit(n.item)
        elif isinstance(n, JoinSpec):
            visit(n.left)
            visit(n.right)

    visit(node)
    return out


def conjuncts(pred: Predicate | None) -> list[Predicate]:
    if pred is None:
        return []
    if isinstance(pred, And):
        return list(pred.items)
    return [pred]


def conjoin(preds: list[Predicate]) -> Predicate | None:
    if not preds:
        return None
    if len(preds) == 1:
        return preds[0]
    flat: list[Predicate] = []
    for p in preds:
        flat.extend(p.items if isinstance(p, And) else [p])
    return And(tuple(flat))
