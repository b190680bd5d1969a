"""Recursive-descent parser for the SPJA subset.

Grammar (EBNF)::

    query       = "SELECT" item {"," item} "FROM" from_clause
                  ["WHERE" predicate] ["GROUP" "BY" column {"," column}] [";"]
    item        = (aggregate | column) [["AS"] ident]
    aggregate   = "COUNT" "(" "*" ")"
                | "COUNT" "(" "DISTINCT" expr ")"
                | ("COUNT" | "SUM" | "AVG" | "MIN" | "MAX") "(" expr ")"
    from_clause = table {"," table | ["INNER"] "JOIN" table "ON" equalities}
    table       = ident [["AS"] ident]
    equalities  = column "=" column {"AND" column "=" column}
    predicate   = conj {"OR" conj}
    conj        = neg {"AND" neg}
    neg         = "NOT" neg | "(" predicate ")" | expr compare expr
                | expr ["NOT"] "IN" "(" literal {"," literal} ")"
                | expr ["NOT"] "BETWEEN" expr "AND" expr
    compare     = "=" | "<>" | "!=" | "<" | "<=" | ">" | ">="
    expr        = term {("+" | "-") term}
    term        = factor {("*" | "/") factor}
    factor      = "-" factor | "(" expr ")" | column | literal
    literal     = INT | REAL | STRING | "DATE" STRING
    column      = ident ["." ident]

With several FROM tables, top-level ``WHERE`` conjuncts of the form
``column = column`` become join conditions, so comma joins and ``JOIN ... ON``
produce the same AST.  ``BETWEEN`` is rewritten into two comparisons.
"""

from __future__ import annotations

import datetime as dt

from dpsql.errors import SqlSyntaxError, UnsupportedFeature
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
    TableRef,
    conjoin,
    conjuncts,
)
from dpsql.frontend.lexer import Token, tokenize

_COMPARE = {"=", "<>", "<", "<=", ">", ">="}
_AGG = {"COUNT", "SUM", "AVG", "MIN", "MAX"}

_UNSUPPORTED_KW = {
    "HAVING": "HAVING",
    "ORDER": "ORDER BY",
    "LIMIT": "LIMIT",
    "UNION": "set operation",
    "INTERSECT": "set operation",
    "EXCEPT": "set operation",
    "OVER": "window function",
    "PARTITION": "window function",
    "LEFT": "outer join",
    "RIGHT": "outer join",
    "FULL": "outer join",
    "OUTER": "outer join",
    "CROSS": "cross join",
    "NATURAL": "natural join",
    "USING": "JOIN USING",
    "WITH": "common table expression",
    "EXISTS": "subquery",
    "ANY": "subquery",
    "ALL": "subquery",
    "SOME": "subquery",
    "CASE": "CASE expression",
}


def _scan_unsupported(tokens: list[Token]) -> None:
    selects = 0
    for i, tok in enumerate(tokens):
        if tok.kind != "KW":
            continue
        if tok.value == "SELECT":
            selects += 1
            if selects > 1:
                raise UnsupportedFeature("subquery", tok.pos)
        elif tok.value in _UNSUPPORTED_KW:
            raise UnsupportedFeature(_UNSUPPORTED_KW[tok.value], tok.pos)


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        _scan_unsupported(self.tokens)
        self.i = 0

    # -- token helpers --
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def error(self, message: str) -> SqlSyntaxError:
        tok = self.tok
        return SqlSyntaxError(message, tok.pos, tok.value if tok.kind != "EOF" else "<end>")

    def at_kw(self, *words: str) -> bool:
        return self.tok.kind == "KW" and self.tok.value in words

    def at_op(self, *ops: str) -> bool:
        return self.tok.kind == "OP" and self.tok.value in ops

    def take(self) -> Token:
        tok = self.tok
        self.i += 1
        return tok

    def expect_kw(self, word: str) -> Token:
        if not self.at_kw(word):
            raise self.error(f"expected {word}")
        return self.take()

    def expect_op(self, op: str) -> Token:
        if not self.at_op(op):
            raise self.error(f"expected {op!r}")
        return self.take()

    def ident(self) -> str:
        if self.tok.kind != "IDENT":
            raise self.error("expected identifier")
        return self.take().value

    # -- query --
    def query(self) -> QueryAst:
        self.expect_kw("SELECT")
        if self.at_kw("DISTINCT"):
            raise UnsupportedFeature("SELECT DISTINCT", self.tok.pos)
        items = [self.select_item()]
        while self.at_op(","):
            self.take()
            items.append(self.select_item())
        self.expect_kw("FROM")
        tables, joins = self.from_clause()
        where = None
        if self.at_kw("WHERE"):
            self.take()
            where = self.predicate()
        group_by: list[ColumnRef] = []
        if self.at_kw("GROUP"):
            self.take()
            self.expect_kw("BY")
            group_by.append(self.column())
            while self.at_op(","):
                self.take()
                group_by.append(self.column())
        if self.at_op(";"):
            self.take()
        if self.tok.kind != "EOF":
            raise self.error("unexpected token")
        if len(tables) > 1:
            residual = []
            for c in conjuncts(where):
                if (
                    isinstance(c, Comparison)
                    and c.op == "="
                    and isinstance(c.left, ColumnRef)
                    and isinstance(c.right, ColumnRef)
                ):
                    joins.append(JoinSpec(c.left, c.right))
                else:
                    residual.append(c)
            where = conjoin(residual)
        return QueryAst(tuple(items), tuple(tables), tuple(joins), where, tuple(group_by))

    def select_item(self) -> SelectItem:
        if self.at_kw(*_AGG):
            expr = self.aggregate()
        elif self.tok.kind == "IDENT":
            expr = self.column()
        else:
            raise self.error("expected column or aggregate in select list")
        alias = None
        if self.at_kw("AS"):
            self.take()
            alias = self.ident()
        elif self.tok.kind == "IDENT":
            alias = self.ident()
        return SelectItem(expr, alias)

    def aggregate(self) -> AggregateCall:
        name = self.take().value
        self.expect_op("(")
        if self.at_op("*"):
            if name != "COUNT":
                raise self.error(f"{name}(*) is not valid")
            self.take()
            self.expect_op(")")
            return AggregateCall(AggFunc.COUNT)
        if self.at_kw("DISTINCT"):
            if name != "COUNT":
                raise UnsupportedFeature(f"{name}(DISTINCT ...)", self.tok.pos)
            self.take()
            arg = self.expr()
            self.expect_op(")")
            return AggregateCall(AggFunc.COUNT_DISTINCT, arg)
        arg = self.expr()
        self.expect_op(")")
        return AggregateCall(AggFunc(name), arg)

    def from_clause(self) -> tuple[list[TableRef], list[JoinSpec]]:
        tables = [self.table_ref()]
        joins: list[JoinSpec] = []
        while True:
            if self.at_op(","):
                self.take()
                tables.append(self.table_ref())
            elif self.at_kw("JOIN", "INNER"):
                if self.at_kw("INNER"):
                    self.take()
                self.expect_kw("JOIN")
                tables.append(self.table_ref())
                self.expect_kw("ON")
                joins.extend(self.join_condition())
            else:
                return tables, joins

    def table_ref(self) -> TableRef:
        if self.at_op("("):
            raise UnsupportedFeature("derived table", self.tok.pos)
        name = self.ident()
        alias = None
        if self.at_kw("AS"):
            self.take()
            alias = self.ident()
        elif self.tok.kind == "IDENT":
            alias = self.ident()
        return TableRef(name, alias)

    def join_condition(self) -> list[JoinSpec]:
        start = self.tok.pos
        pred = self.predicate()
        specs = []
        for c in conjuncts(pred):
            if not (
                isinstance(c, Comparison)
                and c.op == "="
                and isinstance(c.left, ColumnRef)
                and isinstance(c.right, ColumnRef)
            ):
                raise UnsupportedFeature("non-equi join", start)
            specs.append(JoinSpec(c.left, c.right))
        return specs

    # -- predicates --
    def predicate(self):
        items = [self.conj()]
        while self.at_kw("OR"):
            self.take()
            items.append(self.conj())
        if len(items) == 1:
            return items[0]
        flat = []
        for it in items:
            flat.extend(it.items if isinstance(it, Or) else [it])
        return Or(tuple(flat))

    def conj(self):
        items = [self.neg()]
        while self.at_kw("AND"):
            self.take()
            items.append(self.neg())
        return items[0] if len(items) == 1 else conjoin(items)

    def neg(self):
        if self.at_kw("NOT"):
            self.take()
            return Not(self.neg())
        if self.at_op("("):
            save = self.i
            self.take()
            try:
                inner = self.predicate()
                self.expect_op(")")
            except SqlSyntaxError:
                inner = None
            # A parenthesised arithmetic operand, e.g. "(a + b) > 3".
            if inner is not None and not self.at_op(*_COMPARE, "+", "-", "*", "/") and not self.at_kw(
                "IN", "BETWEEN", "NOT"
            ):
                return inner
            self.i = save
        left = self.expr()
        negated = False
        if self.at_kw("NOT"):
            self.take()
            negated = True
            if not self.at_kw("IN", "BETWEEN"):
                raise self.error("expected IN or BETWEEN after NOT")
        if self.at_kw("IN"):
            self.take()
            self.expect_op("(")
            values = [self.literal()]
            while self.at_op(","):
                self.take()
                values.append(self.literal())
            self.expect_op(")")
            return InList(left, tuple(values), negated)
        if self.at_kw("BETWEEN"):
            self.take()
            lo = self.expr()
            self.expect_kw("AND")
            hi = self.expr()
            pred = And((Comparison(">=", left, lo), Comparison("<=", left, hi)))
            return Not(pred) if negated else pred
        if not self.at_op(*_COMPARE):
            raise self.error("expected comparison operator")
        op = self.take().value
        return Comparison(op, left, self.expr())

    # -- expressions --
    def expr(self):
        node = self.term()
        while self.at_op("+", "-"):
            op = self.take().value
            node = BinaryOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.at_op("*", "/"):
            op = self.take().value
            node = BinaryOp(op, node, self.factor())
        return node

    def factor(self):
        if self.at_op("-"):
            self.take()
            inner = self.factor()
            if isinstance(inner, Literal) and isinstance(inner.value, (int, float)):
                return Literal(-inner.value)
            return Negate(inner)
        if self.at_op("("):
            self.take()
            node = self.expr()
            self.expect_op(")")
            return node
        if self.tok.kind == "IDENT":
            if self.peek().kind == "OP" and self.peek().value == "(":
                raise UnsupportedFeature(f"function {self.tok.value}()", self.tok.pos)
            return self.column()
        if self.at_kw(*_AGG):
            raise UnsupportedFeature("nested aggregate", self.tok.pos)
        return self.literal()

    def literal(self) -> Literal:
        tok = self.tok
        if tok.kind == "INT":
            self.take()
            return Literal(int(tok.value))
        if tok.kind == "REAL":
            self.take()
            return Literal(float(tok.value))
        if tok.kind == "STRING":
            self.take()
            return Literal(tok.value)
        if self.at_kw("DATE"):
            self.take()
            s = self.tok
            if s.kind != "STRING":
                raise self.error("expected date string after DATE")
            self.take()
            try:
                return Literal(dt.date.fromisoformat(s.value))
            except ValueError:
                raise SqlSyntaxError("bad date literal", s.pos, s.value) from None
        if self.at_op("-"):
            self.take()
            inner = self.literal()
            if not isinstance(inner.value, (int, float)):
                raise self.error("cannot negate non-numeric literal")
            return Literal(-inner.value)
        raise self.error("expected literal")

    def column(self) -> ColumnRef:
        first = self.ident()
        if self.at_op("."):
            self.take()
            return ColumnRef(self.ident(), first)
        return ColumnRef(first)


def parse(sql_text: str) -> QueryAst:
    """Parse one SELECT statement of the supported subset."""
    return _Parser(sql_text).query()
