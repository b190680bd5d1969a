"""Grouped releases: full-domain (finite) and thresholded (open-domain) histograms."""

from __future__ import annotations

import math

from dpsql.accountant import Budget
from dpsql.catalog import Catalog
from dpsql.errors import InvalidParams, RejectedQuery, RejectReason
from dpsql.executor.database import Database
from dpsql.frontend.ast import AggFunc, QueryAst
from dpsql.frontend.classify import QueryKind, classify, table_of
from dpsql.frontend.render import render
from dpsql.mechanisms.contrib import fingerprint_sql, prepare
from dpsql.mechanisms.noise import derive_seed, laplace_sample, laplace_samples, make_rng
from dpsql.mechanisms.params import Mechanism, PrivacyParams, Suppressor
from dpsql.mechanisms.result import SanitizedResult
from dpsql.mechanisms.scalar import plan, reserve, spend
from dpsql.sensitivity import BoundKind, group_factor


def default_tau(delta_bin: float, scale: float, bins_per_unit: float, delta: float) -> float:
    """Threshold such that a bin created by one unit survives with probability <= delta.

    A unit adds at most ``delta_bin`` to each of at most ``bins_per_unit`` new
    bins; each passes tau with probability exp(-(tau - delta_bin)/scale)/2.
    """
    return delta_bin + scale * math.log(max(bins_per_unit, 1.0) / (2.0 * delta))


def sticky_threshold(tau_base: float, sql: str, fingerprint: int) -> float:
    """tau_base + Laplace(tau_base/4), seeded by the query text and the data."""
    rng = make_rng(derive_seed("sticky", sql, fingerprint))
    return tau_base + laplace_sample(tau_base / 4.0, rng)


def sanitize_histogram(
    ast: QueryAst, db: Database, catalog: Catalog, params: PrivacyParams, budget: Budget
) -> SanitizedResult:
    qc = classify(ast, catalog)
    if not qc.is_histogram:
        raise RejectedQuery(RejectReason.UNSUPPORTED, f"expected a histogram, got {qc.kind.value}")
    ast = qc.ast
    func = ast.aggregate.func
    finite = qc.kind is QueryKind.HISTOGRAM_FINITE
    suppressor = params.histogram_suppressor
    if func in (AggFunc.MIN, AggFunc.MAX):
        raise RejectedQuery(RejectReason.UNBOUNDED_SENSITIVITY, f"{func.value} has no finite sensitivity")
    if func not in (AggFunc.COUNT, AggFunc.SUM):
        raise RejectedQuery(RejectReason.UNSUPPORTED, f"histograms of {func.value} are not released")
    if params.mechanism is Mechanism.SAA:
        raise RejectedQuery(RejectReason.UNSUPPORTED, "SAA does not release histograms")
    if not finite:
        if suppressor is Suppressor.NONE:
            raise RejectedQuery(RejectReason.NO_SUPPRESSOR, "open-domain histogram needs a suppressor")
        if suppressor is Suppressor.TAU_THRESHOLD and params.delta <= 0:
            raise InvalidParams("TauThreshold needs delta > 0")
        if suppressor is Suppressor.STICKY_THRESHOLD and params.delta <= 0 and params.tau is None:
            raise InvalidParams("StickyThreshold needs delta > 0 or an explicit tau")
    eps = params.epsilon
    delta = 0.0 if finite else params.delta
    reserve(budget, eps, delta)

    p = plan(ast, db, catalog, params.mechanism)
    base = p.total if func is AggFunc.SUM else p.count
    factor = group_factor(ast, catalog)
    if base.kind is BoundKind.ELASTIC:
        # the elastic bound already covers the whole bin vector
        bound, bin_delta = base, base.value / factor
    else:
        bound, bin_delta = base.scaled(factor, BoundKind.STABILITY_COMPOSED), base.value
    per_bin = bound.value if bound.value > 0 else 1.0
    scale = per_bin / eps

    prep = prepare(ast, db, catalog, clip_values=p.clip, user_cap=p.user_cap)
    totals: dict = {}
    for key, v in zip(prep.keys, prep.values):
        totals[key] = totals.get(key, 0) + v

    rng = make_rng(params.seed)
    fp = fingerprint_sql(ast)
    threshold = None
    suppressed = 0
    if finite:
        key = ast.group_by[0]
        domain = catalog.column(table_of(ast, key.table), key.name).domain
        cats = sorted(domain)
        noise = laplace_samples(scale, rng, len(cats))
        bins = tuple((c, float(totals.get(c, 0)) + float(z)) for c, z in zip(cats, noise))
    else:
        cats = sorted(totals)
        noise = laplace_samples(scale, rng, len(cats)) if cats else []
        noisy = [(c, float(totals[c]) + float(z)) for c, z in zip(cats, noise)]
        if params.tau is not None:
            tau_base = params.tau
        else:
            tau_base = default_tau(bin_delta, scale, p.rows_per_unit, params.delta)
        if suppressor is Suppressor.STICKY_THRESHOLD:
            threshold = sticky_threshold(tau_base, render(ast), db.fingerprint())
        else:
            threshold = tau_base
        bins = tuple((c, v) for c, v in noisy if v >= threshold)
        suppressed = len(noisy) - len(bins)
    spend(budget, eps, delta, fp, params.mechanism.value, composition="parallel")
    return SanitizedResult(
        kind="histogram", value=None, bins=bins, epsilon=eps, delta=delta,
        mechanism=params.mechanism.value, sensitivity=bound, noise_scale=scale,
        seed=params.seed, fingerprint=fp, query_class=qc.kind.value,
        suppressed_bin_count=suppressed, threshold=threshold,
    )
