"""Tokenizer for the SQL subset. Identifiers and keywords are case-insensitive."""

from __future__ import annotations

import dataclasses
import re

from dpsql.errors import SqlSyntaxError

KEYWORDS = frozenset(
    """
    SELECT FROM WHERE GROUP BY AS JOIN INNER ON AND OR NOT IN COUNT SUM AVG MIN MAX
    DISTINCT DATE BETWEEN HAVING ORDER LIMIT UNION INTERSECT EXCEPT OVER PARTITION
    LEFT RIGHT FULL OUTER CROSS NATURAL USING WITH EXISTS ALL ANY SOME CASE
    """.split()
)


@dataclasses.dataclass(frozen=True)
class Token:
    kind: str  # KW, IDENT, INT, REAL, STRING, OP, EOF
    value: str
    pos: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|--[^\n]*)
  | (?P<real>(?:\d+\.\d*|\.\d+)(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)
  | (?P<int>\d+)
  | (?P<string>'(?:[^']|'')*')
  | (?P<qident>"(?:[^"]|"")+")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><>|!=|<=|>=|[=<>(),.*+\-/;])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise SqlSyntaxError("unexpected character", pos, text[pos])
        kind = m.lastgroup
        raw = m.group()
        if kind == "ws":
            pass
        elif kind == "string":
            tokens.append(Token("STRING", raw[1:-1].replace("''", "'"), pos))
        elif kind == "qident":
            tokens.append(Token("IDENT", raw[1:-1].replace('""', '"').lower(), pos))
        elif kind == "ident":
            upper = raw.upper()
            if upper in KEYWORDS:
                tokens.append(Token("KW", upper, pos))
            else:
                tokens.append(Token("IDENT", raw.lower(), pos))
        elif kind == "op":
            tokens.append(Token("OP", "<>" if raw == "!=" else raw, pos))
        else:
            tokens.append(Token(kind.upper(), raw, pos))
        pos = m.end()
    tokens.append(Token("EOF", "", len(text)))
    return tokens
