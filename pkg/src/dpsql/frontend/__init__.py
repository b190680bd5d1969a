"""SQL frontend: lexer, parser, renderer and query classifier."""

from dpsql.frontend.ast import AggFunc, AggregateCall, ColumnRef, QueryAst
from dpsql.frontend.classify import QueryClass, QueryKind, classify, resolve
from dpsql.frontend.parser import parse
from dpsql.frontend.render import render

__all__ = [
    "AggFunc",
    "AggregateCall",
    "ColumnRef",
    "QueryAst",
    "QueryClass",
    "QueryKind",
    "classify",
    "parse",
    "render",
    "resolve",
]
