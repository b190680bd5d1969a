"""Sample-and-aggregate: evaluate on k disjoint partitions, clip, average, noise."""

from __future__ import annotations

import hashlib
import math

from dpsql.accountant import Budget
from dpsql.catalog import Catalog, PrivacyUnit
from dpsql.errors import RejectedQuery, RejectReason
from dpsql.executor.database import Database
from dpsql.executor.fast import aggregate_values, matching_rows
from dpsql.executor.pids import PidResolver
from dpsql.frontend.ast import AggFunc, QueryAst
from dpsql.frontend.classify import QueryKind, classify
from dpsql.mechanisms.contrib import argument_range, clip, fingerprint_sql
from dpsql.mechanisms.noise import laplace_sample, make_rng
from dpsql.mechanisms.params import PrivacyParams
from dpsql.mechanisms.result import SanitizedResult
from dpsql.mechanisms.scalar import reserve, spend
from dpsql.sensitivity import BoundKind, SensitivityBound


def partition_of(key, k: int) -> int:
    """Deterministic partition index of a primary key (or PID) value."""
    if isinstance(key, tuple) and len(key) == 1:
        key = key[0]
    if isinstance(key, int) and not isinstance(key, bool):
        return key % k
    h = hashlib.blake2b(repr(key).encode(), digest_size=8).digest()
    return int.from_bytes(h, "big") % k


def output_range(func: AggFunc, m: int, value_range) -> tuple[float, float]:
    """Clip range of one partition's result; m bounds the rows per partition."""
    if func is AggFunc.COUNT:
        return (0.0, float(m))
    lo, hi = value_range
    if func is AggFunc.SUM:
        return (m * min(lo, 0), m * max(hi, 0))
    return (lo, hi)


def partition_keys(table: str, db: Database, catalog: Catalog) -> list:
    """Partitioning key of every row: the primary key, or the PID at user unit."""
    t = db.table(table)
    if catalog.privacy_unit is PrivacyUnit.USER:
        resolver = PidResolver(db, catalog)
        resolver.check(table)
        return [resolver.pid_of(table, r) for r in t.rows]
    if t.meta.primary_key:
        idx = [t.meta.index(c) for c in t.meta.primary_key]
        return [tuple(r[i] for i in idx) for r in t.rows]
    return [tuple(r) for r in t.rows]


def saa_check(ast: QueryAst, catalog: Catalog):
    """Reject queries SAA cannot answer; returns the resolved AST and argument range."""
    qc = classify(ast, catalog)
    if qc.kind is not QueryKind.SCALAR_AGGREGATE:
        raise RejectedQuery(RejectReason.UNSUPPORTED, f"SAA answers scalar aggregates, not {qc.kind.value}")
    ast = qc.ast
    func = ast.aggregate.func
    if func in (AggFunc.MIN, AggFunc.MAX):
        raise RejectedQuery(RejectReason.UNBOUNDED_SENSITIVITY, f"{func.value} has no finite sensitivity")
    if func not in (AggFunc.COUNT, AggFunc.SUM, AggFunc.AVG):
        raise RejectedQuery(RejectReason.UNSUPPORTED, f"SAA does not answer {func.value}")
    if len(ast.tables) > 1:
        raise RejectedQuery(RejectReason.UNSUPPORTED, "SAA does not support joins")
    value_range = None
    if func is not AggFunc.COUNT:
        value_range = argument_range(ast, catalog)
        if value_range is None:
            raise RejectedQuery(RejectReason.MISSING_RANGE, "aggregate argument has no declared range")
    return ast, value_range, qc


def saa(
    ast: QueryAst, db: Database, catalog: Catalog, params: PrivacyParams, budget: Budget
) -> SanitizedResult:
    ast, value_range, qc = saa_check(ast, catalog)
    func = ast.aggregate.func
    eps = params.epsilon
    reserve(budget, eps, 0.0)
    k = params.partitions
    table = ast.tables[0].name
    n = len(db.table(table).rows)
    m = max(1, math.ceil(n / k))

    keys = partition_keys(table, db, catalog)
    part_of_row = {}
    for row, key in zip(db.table(table).rows, keys):
        part_of_row.setdefault(row, partition_of(key, k))
    rs = matching_rows(ast, db)
    arg = rs.getter(ast.aggregate.argument) if ast.aggregate.argument is not None else (lambda r: 1)
    groups: list[list] = [[] for _ in range(k)]
    for r in rs.rows:
        v = arg(r)
        if value_range is not None:
            v = clip(v, *value_range)
        groups[part_of_row[r[0]]].append(v)

    fp = fingerprint_sql(ast)
    if func is AggFunc.AVG and not any(groups):
        spend(budget, eps, 0.0, fp, params.mechanism.value, outcome="rejected")
        raise RejectedQuery(RejectReason.EMPTY_AGGREGATE, "AVG over an empty selection")
    lo, hi = output_range(func, m, value_range)
    results = []
    for vals in groups:
        if func is AggFunc.AVG and not vals:
            results.append((lo + hi) / 2)
        else:
            results.append(clip(float(aggregate_values(func, vals)), lo, hi))
    mean = math.fsum(results) / k
    width = hi - lo
    scale = (width if width > 0 else 1.0) / (k * eps)
    noisy_mean = mean + laplace_sample(scale, make_rng(params.seed))
    # COUNT and SUM partition results estimate F/k, so the release rescales by k
    value = noisy_mean if func is AggFunc.AVG else k * noisy_mean
    spend(budget, eps, 0.0, fp, params.mechanism.value)
    bound = SensitivityBound(width / k, BoundKind.GLOBAL, catalog.privacy_unit)
    return SanitizedResult(
        kind="scalar", value=value, bins=(), epsilon=eps, delta=0.0,
        mechanism=params.mechanism.value, sensitivity=bound, noise_scale=scale,
        seed=params.seed, fingerprint=fp, query_class=qc.kind.value,
        partition_mean=mean, partitions=k,
    )


def partition_sizes(table: str, db: Database, catalog: Catalog, k: int) -> list[int]:
    sizes = [0] * k
    for key in partition_keys(table, db, catalog):
        sizes[partition_of(key, k)] += 1
    return sizes
