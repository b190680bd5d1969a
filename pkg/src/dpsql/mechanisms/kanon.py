"""k-anonymity admission gate and quasi-identifier checks."""

from __future__ import annotations

from collections import Counter
from typing import Sequence

from dpsql.catalog import Catalog
from dpsql.errors import RejectedQuery, RejectReason
from dpsql.executor.database import Database
from dpsql.executor.pids import target_user_set
from dpsql.frontend.ast import QueryAst
from dpsql.mechanisms.params import KAnonParams


def kanon_gate(ast: QueryAst, db: Database, catalog: Catalog, kparams: KAnonParams) -> bool:
    """Pass iff the query's rows belong to at least k distinct users."""
    n = len(target_user_set(ast, db, catalog))
    if n < kparams.k:
        raise RejectedQuery(RejectReason.K_ANONYMITY, f"{n} users targeted, k={kparams.k}")
    return True


def group_sizes(table: str, attrs: Sequence[str], db: Database) -> Counter:
    t = db.table(table)
    idx = [t.meta.index(a) for a in attrs]
    return Counter(tuple(r[i] for i in idx) for r in t.rows)


def is_quasi_identifier(attrs: Sequence[str], table: str, db: Database) -> bool:
    """True iff grouping ``table`` by ``attrs`` leaves some group of size one."""
    if not attrs:
        raise ValueError("attrs must be nonempty")
    return any(n == 1 for n in group_sizes(table, attrs, db).values())


def kanon_check(table: str, qid: Sequence[str], k: int, db: Database) -> bool:
    """True iff no group over ``qid`` has a size strictly between 0 and k."""
    return all(n >= k for n in group_sizes(table, qid, db).values())
