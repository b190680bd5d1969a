"""Laplace release of scalar aggregates under the GS, elastic and bounded-sum bounds."""

from __future__ import annotations

import dataclasses

from dpsql.accountant import Budget
from dpsql.catalog import Catalog, PrivacyUnit
from dpsql.errors import BudgetExhausted, RejectedQuery, RejectReason, UnsupportedAggregate
from dpsql.executor.database import Database
from dpsql.executor.fast import aggregate_values
from dpsql.frontend.ast import AggFunc, AggregateCall, QueryAst, SelectItem
from dpsql.frontend.classify import QueryKind, classify
from dpsql.mechanisms.contrib import argument_range, clip, fingerprint_sql, prepare
from dpsql.mechanisms.noise import laplace_sample, make_rng
from dpsql.mechanisms.params import Mechanism, PrivacyParams
from dpsql.mechanisms.result import SanitizedResult
from dpsql.sensitivity import (
    BoundKind,
    SensitivityBound,
    contribution_bound,
    elastic_sensitivity,
    global_sensitivity,
    group_factor,
)


def with_aggregate(ast: QueryAst, func: AggFunc, argument="keep") -> QueryAst:
    """Same query with its aggregate swapped (AVG -> SUM, AVG -> COUNT(*))."""
    items = []
    for p in ast.projections:
        if isinstance(p.expr, AggregateCall):
            arg = p.expr.argument if argument == "keep" else argument
            items.append(SelectItem(AggregateCall(func, arg), p.alias))
        else:
            items.append(p)
    return dataclasses.replace(ast, projections=tuple(items))


@dataclasses.dataclass(frozen=True)
class Plan:
    """Sensitivity of each noised part plus the row bounding to apply first."""

    count: SensitivityBound | None  # COUNT-like part (COUNT, COUNT DISTINCT, AVG denominator)
    total: SensitivityBound | None  # SUM-like part (SUM, AVG numerator)
    user_cap: int | None
    clip: bool
    rows_per_unit: float  # rows one privacy unit can add; sizes H2 thresholds


def _reject(reason: RejectReason, detail: str):
    raise RejectedQuery(reason, detail)


def plan(ast: QueryAst, db: Database, catalog: Catalog, mechanism: Mechanism) -> Plan:
    """Pick the bound for ``mechanism`` or reject the query."""
    agg = ast.aggregate
    unit = catalog.privacy_unit
    if agg.func in (AggFunc.MIN, AggFunc.MAX):
        _reject(RejectReason.UNBOUNDED_SENSITIVITY, f"{agg.func.value} has no finite sensitivity")
    numeric = agg.func in (AggFunc.SUM, AggFunc.AVG)
    count_ast = with_aggregate(ast, AggFunc.COUNT, None) if agg.func is AggFunc.AVG else ast
    sum_ast = with_aggregate(ast, AggFunc.SUM) if agg.func is AggFunc.AVG else ast

    if mechanism is Mechanism.LAPLACE_GS:
        if len(ast.tables) > 1:
            _reject(RejectReason.UNBOUNDED_SENSITIVITY, "joins have unbounded global sensitivity")
        cap = None
        if unit is PrivacyUnit.USER:
            cap = contribution_bound(ast, catalog)
            if cap is None:
                _reject(RejectReason.UNBOUNDED_SENSITIVITY, "no max_user_contribution declared")
        total = global_sensitivity(sum_ast, catalog) if numeric else None
        if total is not None and not total.bounded:
            _reject(RejectReason.UNBOUNDED_SENSITIVITY, "aggregate argument has no declared range")
        count = global_sensitivity(count_ast, catalog) if agg.func is not AggFunc.SUM else None
        return Plan(count, total, cap, True, float(cap or 1))

    if mechanism is Mechanism.LAPLACE_ELASTIC:
        try:
            bound = elastic_sensitivity(ast, db, catalog)
        except UnsupportedAggregate as exc:
            _reject(RejectReason.UNSUPPORTED, str(exc))
        if not bound.bounded:
            _reject(RejectReason.UNBOUNDED_SENSITIVITY, "elastic bound is unbounded")
        return Plan(bound, None, None, False, bound.value / group_factor(ast, catalog))

    if mechanism is Mechanism.BOUNDED_SUM:
        if unit is not PrivacyUnit.USER:
            _reject(RejectReason.UNSUPPORTED, "BoundedSum needs a user-level catalog")
        cap = contribution_bound(ast, catalog)
        if cap is None:
            _reject(RejectReason.UNSUPPORTED, "a touched private table declares no max_user_contribution")
        total = None
        if numeric:
            r = argument_range(ast, catalog)
            if r is None:
                _reject(RejectReason.MISSING_RANGE, "aggregate argument has no declared range")
            total = SensitivityBound(cap * max(abs(r[0]), abs(r[1])), BoundKind.GLOBAL, unit)
        count = None
        if agg.func is not AggFunc.SUM:
            count = SensitivityBound(float(cap), BoundKind.GLOBAL, unit)
        return Plan(count, total, cap, True, float(cap))

    _reject(RejectReason.UNSUPPORTED, f"{mechanism.value} has no plan here")


def _positive(bound: SensitivityBound) -> float:
    # an all-public query has nothing to protect; keep the scale valid
    return bound.value if bound.value > 0 else 1.0


def reserve(budget: Budget, eps: float, delta: float) -> None:
    if not budget.can_afford(eps, delta):
        raise RejectedQuery(
            RejectReason.BUDGET_EXHAUSTED,
            f"requested eps={eps:g} but only {budget.epsilon_remaining:g} remains",
        )


def spend(budget: Budget, eps, delta, fingerprint, mechanism, outcome="answered", composition="sequential"):
    try:
        budget.charge(eps, delta, fingerprint=fingerprint, mechanism=mechanism,
                      outcome=outcome, composition=composition)
    except BudgetExhausted as exc:
        raise RejectedQuery(RejectReason.BUDGET_EXHAUSTED, str(exc)) from None


def sanitize_scalar(
    ast: QueryAst, db: Database, catalog: Catalog, params: PrivacyParams, budget: Budget
) -> SanitizedResult:
    qc = classify(ast, catalog)
    if qc.kind is not QueryKind.SCALAR_AGGREGATE:
        _reject(RejectReason.UNSUPPORTED, f"expected a scalar aggregate, got {qc.kind.value}")
    ast = qc.ast
    eps = params.epsilon
    reserve(budget, eps, 0.0)
    p = plan(ast, db, catalog, params.mechanism)
    prep = prepare(ast, db, catalog, clip_values=p.clip, user_cap=p.user_cap)
    rng = make_rng(params.seed)
    fp = fingerprint_sql(ast)
    func = ast.aggregate.func
    common = dict(
        kind="scalar", bins=(), epsilon=eps, delta=0.0, mechanism=params.mechanism.value,
        seed=params.seed, fingerprint=fp, query_class=qc.kind.value,
    )
    if func is AggFunc.AVG:
        if not prep.values:
            spend(budget, eps, 0.0, fp, params.mechanism.value, outcome="rejected")
            _reject(RejectReason.EMPTY_AGGREGATE, "AVG over an empty selection")
        half = eps / 2
        s_scale = _positive(p.total) / half
        c_scale = _positive(p.count) / half
        noisy_sum = aggregate_values(AggFunc.SUM, prep.values) + laplace_sample(s_scale, rng)
        noisy_count = len(prep.values) + laplace_sample(c_scale, rng)
        if noisy_count <= 0:
            spend(budget, eps, 0.0, fp, params.mechanism.value, outcome="rejected")
            _reject(RejectReason.DEGENERATE_DENOMINATOR, f"noisy count {noisy_count:.3g} <= 0")
        value = noisy_sum / noisy_count
        if prep.value_range is not None:
            value = clip(value, *prep.value_range)  # post-processing
        spend(budget, eps, 0.0, fp, params.mechanism.value)
        return SanitizedResult(value=value, sensitivity=p.total, noise_scale=s_scale, **common)
    bound = p.total if func is AggFunc.SUM else p.count
    scale = _positive(bound) / eps
    true = aggregate_values(func, prep.values)
    value = float(true) + laplace_sample(scale, rng)
    spend(budget, eps, 0.0, fp, params.mechanism.value)
    return SanitizedResult(value=value, sensitivity=bound, noise_scale=scale, **common)
