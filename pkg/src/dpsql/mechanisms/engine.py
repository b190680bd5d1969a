"""One entry point: parse, classify, gate, pick the mechanism, release."""

from __future__ import annotations

from dpsql.accountant import Budget
from dpsql.catalog import Catalog
from dpsql.errors import RejectedQuery, RejectReason
from dpsql.executor.database import Database
from dpsql.frontend.ast import QueryAst
from dpsql.frontend.classify import QueryKind, classify
from dpsql.frontend.parser import parse
from dpsql.mechanisms.histogram import sanitize_histogram
from dpsql.mechanisms.kanon import kanon_gate
from dpsql.mechanisms.params import KAnonParams, Mechanism, PrivacyParams
from dpsql.mechanisms.result import SanitizedResult
from dpsql.mechanisms.saa import saa
from dpsql.mechanisms.scalar import sanitize_scalar


def sanitize(
    query: str | QueryAst,
    db: Database,
    catalog: Catalog,
    params: PrivacyParams,
    budget: Budget | None = None,
    k: int | KAnonParams | None = None,
) -> SanitizedResult:
    """Release a differentially private answer or raise RejectedQuery.

    Without a budget, a fresh one sized to ``params`` is used.  A ``k``
    enables the k-anonymity gate, which runs before any noise is drawn.
    """
    ast = parse(query) if isinstance(query, str) else query
    qc = classify(ast, catalog)
    if qc.kind is QueryKind.UNSUPPORTED:
        raise RejectedQuery(RejectReason.UNSUPPORTED, qc.reason or "")
    if qc.kind is QueryKind.DATA_QUERY:
        raise RejectedQuery(RejectReason.UNSUPPORTED, "data queries are not released")
    if budget is None:
        budget = Budget(params.epsilon, params.delta)
    if k is not None:
        kanon_gate(qc.ast, db, catalog, k if isinstance(k, KAnonParams) else KAnonParams(k))
    if qc.is_histogram:
        return sanitize_histogram(qc.ast, db, catalog, params, budget)
    if params.mechanism is Mechanism.SAA:
        return saa(qc.ast, db, catalog, params, budget)
    return sanitize_scalar(qc.ast, db, catalog, params, budget)
