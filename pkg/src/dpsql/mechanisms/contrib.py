"""Row-level preparation shared by the mechanisms: clipping and per-user truncation."""

from __future__ import annotations

import dataclasses
import hashlib

from dpsql.catalog import Catalog
from dpsql.errors import RejectedQuery, RejectReason
from dpsql.executor.database import Database
from dpsql.executor.fast import RowSet, matching_rows
from dpsql.executor.pids import PidResolver, row_pids
from dpsql.frontend.ast import AggFunc, QueryAst
from dpsql.frontend.render import render
from dpsql.sensitivity import expr_range


def fingerprint_sql(ast: QueryAst) -> str:
    return hashlib.blake2b(render(ast).encode(), digest_size=8).hexdigest()


def clip(x, lo, hi):
    return lo if x < lo else hi if x > hi else x


@dataclasses.dataclass
class Prepared:
    """Per-row aggregate inputs after clipping/truncation, plus group keys."""

    values: list  # argument value per kept row (1 for COUNT(*))
    keys: list  # group key per kept row; None when ungrouped
    pids: list | None  # owning PID per kept row (user unit only)
    value_range: tuple[float, float] | None
    dropped: int = 0  # rows removed by per-user truncation


def argument_range(ast: QueryAst, catalog: Catalog):
    agg = ast.aggregate
    if agg.argument is None:
        return None
    return expr_range(agg.argument, ast, catalog)


def prepare(
    ast: QueryAst,
    db: Database,
    catalog: Catalog,
    clip_values: bool,
    user_cap: int | None = None,
    rs: RowSet | None = None,
) -> Prepared:
    """Evaluate the query's rows and apply the contribution bounds.

    ``clip_values`` clamps SUM/AVG arguments into their declared range.
    ``user_cap`` keeps at most that many rows per PID (first in row order) and
    rejects joined rows that belong to more than one user.
    """
    rs = rs or matching_rows(ast, db)
    ast = rs.ast
    agg = ast.aggregate
    numeric = agg.func in (AggFunc.SUM, AggFunc.AVG)
    rng = argument_range(ast, catalog) if numeric else None
    arg = rs.getter(agg.argument) if agg.argument is not None else (lambda row: 1)
    key_getters = [rs.getter(c) for c in ast.group_by]
    rows = rs.rows
    pids = None
    dropped = 0
    if user_cap is not None:
        owners = row_pids(rs, PidResolver(db, catalog))
        kept, pids, seen = [], [], {}
        for row, owner in zip(rows, owners):
            if len(owner) > 1:
                raise RejectedQuery(
                    RejectReason.UNSUPPORTED, "a joined row belongs to more than one user"
                )
            pid = next(iter(owner)) if owner else None
            if pid is not None:
                n = seen.get(pid, 0)
                if n >= user_cap:
                    dropped += 1
                    continue
                seen[pid] = n + 1
            kept.append(row)
            pids.append(pid)
        rows = kept
    values = [arg(r) for r in rows]
    if clip_values and rng is not None:
        lo, hi = rng
        values = [clip(v, lo, hi) for v in values]
    if key_getters:
        if len(key_getters) == 1:
            keys = [key_getters[0](r) for r in rows]
        else:
            keys = [tuple(g(r) for g in key_getters) for r in rows]
    else:
        keys = [None] * len(rows)
    return Prepared(values, keys, pids, rng, dropped)
