"""Sensitivity bounds: global, elastic (join-aware), stability chains, and a
brute-force local-sensitivity oracle used only by tests."""

from __future__ import annotations

import dataclasses
import enum
import itertools
import math
from collections import Counter
from typing import Iterable, Mapping, Sequence

from dpsql.catalog import Catalog, PrivacyUnit, max_frequency
from dpsql.errors import DomainTooLarge, EmptyAggregate, UnknownTransformation, UnsupportedAggregate
from dpsql.executor.database import Database
from dpsql.executor.fast import execute
from dpsql.executor.pids import PidResolver
from dpsql.frontend.ast import AggFunc, BinaryOp, ColumnRef, Literal, Negate, QueryAst
from dpsql.frontend.classify import resolve, table_of

UNBOUNDED = math.inf


class BoundKind(str, enum.Enum):
    GLOBAL = "Global"
    ELASTIC = "Elastic"
    STABILITY_COMPOSED = "StabilityComposed"
    LOCAL_ORACLE = "LocalOracle"


@dataclasses.dataclass(frozen=True)
class SensitivityBound:
    value: float
    kind: BoundKind
    unit: PrivacyUnit

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.value)

    def scaled(self, factor: float, kind: BoundKind | None = None) -> "SensitivityBound":
        # inf * positive stays inf; nothing here ever multiplies by zero
        return SensitivityBound(self.value * factor, kind or self.kind, self.unit)

    def __str__(self) -> str:
        v = "unbounded" if not self.bounded else f"{self.value:g}"
        return f"{v} ({self.kind.value}, {self.unit.value} unit)"


# -- value ranges --------------------------------------------------------------

def expr_range(expr, ast: QueryAst, catalog: Catalog) -> tuple[float, float] | None:
    """Interval bound of a numeric expression over a resolved AST; None if unknown."""
    if isinstance(expr, Literal):
        v = expr.value
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            return (v, v)
        return None
    if isinstance(expr, ColumnRef):
        col = catalog.column(table_of(ast, expr.table), expr.name)
        if not col.dtype.numeric or col.range is None:
            return None
        return col.range
    if isinstance(expr, Negate):
        r = expr_range(expr.operand, ast, catalog)
        return None if r is None else (-r[1], -r[0])
    if isinstance(expr, BinaryOp):
        a = expr_range(expr.left, ast, catalog)
        b = expr_range(expr.right, ast, catalog)
        if a is None or b is None:
            return None
        if expr.op == "+":
            return (a[0] + b[0], a[1] + b[1])
        if expr.op == "-":
            return (a[0] - b[1], a[1] - b[0])
        if expr.op == "/":
            if b[0] <= 0 <= b[1]:
                return None
            b = (1 / b[1], 1 / b[0])
        corners = [x * y for x in a for y in b]
        return (min(corners), max(corners))
    return None


def value_sensitivity(r: tuple[float, float]) -> float:
    """Largest change one row can make to a sum of values drawn from ``r``.

    Covers adding or removing a row (|v| <= max(|lo|, |hi|)) and replacing
    one value by another in place (hi - lo).
    """
    lo, hi = r
    return max(abs(lo), abs(hi), hi - lo)


def contribution_bound(ast: QueryAst, catalog: Catalog) -> int | None:
    """C: the largest declared rows-per-user over the private tables touched."""
    bounds = []
    for ref in ast.tables:
        meta = catalog.table(ref.name)
        if meta.public:
            continue
        if meta.max_user_contribution is None:
            return None
        bounds.append(meta.max_user_contribution)
    return max(bounds) if bounds else None


# -- global sensitivity --------------------------------------------------------

def global_sensitivity(ast: QueryAst, catalog: Catalog) -> SensitivityBound:
    """Data-independent bound.  Joins, MIN/MAX and range-less sums are unbounded.

    For AVG this is the bound of its numerator (the sum); the mechanism noises
    the numerator and the denominator separately.
    """
    ast = resolve(ast, catalog.tables)
    unit = catalog.privacy_unit
    agg = ast.aggregate

    def bound(v):
        return SensitivityBound(v, BoundKind.GLOBAL, unit)

    if agg is None or len(ast.tables) > 1 or agg.func in (AggFunc.MIN, AggFunc.MAX):
        return bound(UNBOUNDED)
    mult = 1
    if unit is PrivacyUnit.USER:
        c = contribution_bound(ast, catalog)
        if c is None:
            return bound(UNBOUNDED)
        mult = c
    if agg.func in (AggFunc.COUNT, AggFunc.COUNT_DISTINCT):
        return bound(float(mult))
    r = expr_range(agg.argument, ast, catalog)
    if r is None:
        return bound(UNBOUNDED)
    if unit is PrivacyUnit.USER:
        # user neighbours add or drop whole users, never rewrite a row in place
        return bound(mult * max(abs(r[0]), abs(r[1])))
    return bound(value_sensitivity(r))


# -- elastic sensitivity -------------------------------------------------------

def join_order(ast: QueryAst) -> list[tuple[str, list]]:
    """Left-deep greedy order: (alias, link edges to the already-joined set)."""
    keys = [t.key for t in ast.tables]
    cross = [j for j in ast.joins if j.left.table != j.right.table]
    order = [(keys[0], [])]
    joined = {keys[0]}
    pending = keys[1:]
    while pending:
        nxt = next(
            (k for k in pending if any(_touches(j, k, joined) for j in cross)), pending[0]
        )
        pending.remove(nxt)
        order.append((nxt, [j for j in cross if _touches(j, nxt, joined)]))
        joined.add(nxt)
    return order


def _touches(j, key: str, joined: set) -> bool:
    return (j.left.table == key and j.right.table in joined) or (
        j.right.table == key and j.left.table in joined
    )


def rows_per_user(db: Database, catalog: Catalog, table: str) -> int:
    """Observed maximum number of rows of ``table`` owned by one PID."""
    cache = db.metadata_cache
    key = ("rows_per_user", table)
    if key not in cache:
        resolver = PidResolver(db, catalog)
        resolver.check(table)
        counts = Counter(resolver.pid_of(table, r) for r in db.table(table).rows)
        cache[key] = max(counts.values(), default=0)
    return cache[key]


def _elastic_chain(ast: QueryAst, db: Database, changed: Mapping[str, float]) -> float:
    """Propagate the changed-row bound through the join chain.

    ``changed`` gives, per alias, how many of its base rows a neighbour may
    alter.  Joining L with T on key k gives
    S = S_L * mf_T(k) + S_T * mf_L(k) + S_L * S_T, and every attribute's
    max frequency is multiplied by the partner's key frequency.
    """
    order = join_order(ast)
    first = order[0][0]

    def base_mf(alias: str, col: str) -> float:
        return float(max_frequency(db, table_of(ast, alias), col))

    def columns(alias: str):
        return db.table(table_of(ast, alias)).meta.column_names

    mf = {(first, c): base_mf(first, c) for c in columns(first)}
    s = changed.get(first, 0.0)
    for alias, links in order[1:]:
        if not links:
            return UNBOUNDED  # cross product
        s_t = changed.get(alias, 0.0)
        mf_l_key = mf_t_key = UNBOUNDED
        for j in links:
            new, old = (j.right, j.left) if j.right.table == alias else (j.left, j.right)
            mf_l_key = min(mf_l_key, mf[(old.table, old.name)])
            mf_t_key = min(mf_t_key, base_mf(alias, new.name))
        mf_l_key = max(mf_l_key, 1.0)
        mf_t_key = max(mf_t_key, 1.0)
        s = s * mf_t_key + s_t * mf_l_key + s * s_t
        for key in mf:
            mf[key] *= mf_t_key
        for c in columns(alias):
            mf[(alias, c)] = base_mf(alias, c) * mf_l_key
    return s


def elastic_sensitivity(ast: QueryAst, db: Database, catalog: Catalog) -> SensitivityBound:
    """Join-aware bound for COUNT and COUNT DISTINCT, computed from live max frequencies.

    For a grouped query the bound covers the whole bin vector (L1).
    """
    ast = resolve(ast, catalog.tables)
    agg = ast.aggregate
    if agg is None or agg.func not in (AggFunc.COUNT, AggFunc.COUNT_DISTINCT):
        name = agg.func.value if agg else "no aggregate"
        raise UnsupportedAggregate(f"elastic sensitivity covers COUNT only, not {name}")
    unit = catalog.privacy_unit
    if unit is PrivacyUnit.TUPLE:
        best = 0.0
        for table in sorted({t.name for t in ast.tables}):
            changed = {t.key: 1.0 for t in ast.tables if t.name == table}
            best = max(best, _elastic_chain(ast, db, changed))
        value = best
    else:
        changed = {}
        for t in ast.tables:
            meta = catalog.table(t.name)
            if meta.public:
                continue
            declared = meta.max_user_contribution or 0
            changed[t.key] = float(max(declared, rows_per_user(db, catalog, t.name)))
        value = _elastic_chain(ast, db, changed)
    return SensitivityBound(value * group_factor(ast, catalog), BoundKind.ELASTIC, unit)


def group_factor(ast: QueryAst, catalog: Catalog) -> int:
    """L1 change of a grouped release per unit change of one bin.

    A tuple-level neighbour may move a row between two groups; user-level
    neighbours only add or drop rows.
    """
    if ast.group_by and catalog.privacy_unit is PrivacyUnit.TUPLE:
        return STABILITY_CONSTANTS[Transformation.GROUP_BY_CATEGORY]
    return 1


# -- stability ---------------------------------------------------------------

class Transformation(str, enum.Enum):
    SELECTION = "Selection"
    GROUP_BY_CATEGORY = "GroupByCategory"
    UNION = "Union"
    JOIN_ONE_TO_ONE = "JoinOneToOne"


STABILITY_CONSTANTS = {
    Transformation.SELECTION: 1,
    Transformation.GROUP_BY_CATEGORY: 2,
    Transformation.UNION: 1,
    Transformation.JOIN_ONE_TO_ONE: 1,
}


@dataclasses.dataclass(frozen=True)
class StabilityFactor:
    c: int


def stability(chain: Iterable[Transformation | str]) -> StabilityFactor:
    c = 1
    for tag in chain:
        try:
            t = Transformation(tag)
        except ValueError:
            raise UnknownTransformation(str(tag)) from None
        c *= STABILITY_CONSTANTS[t]
    return StabilityFactor(c)


def query_chain(ast: QueryAst) -> list[Transformation]:
    chain = []
    if ast.where is not None:
        chain.append(Transformation.SELECTION)
    if ast.group_by:
        chain.append(Transformation.GROUP_BY_CATEGORY)
    return chain


def stability_bound(ast: QueryAst, catalog: Catalog) -> SensitivityBound:
    """Per-release bound of a single-table aggregate with its stability chain applied.

    Grouping counts 2 at tuple unit, where a neighbour may move a row between
    groups; at user unit neighbours only add or drop rows, so it counts 1.
    """
    base = global_sensitivity(ast, catalog)
    chain = query_chain(ast)
    if catalog.privacy_unit is PrivacyUnit.USER:
        chain = [t for t in chain if t is not Transformation.GROUP_BY_CATEGORY]
    return base.scaled(stability(chain).c, BoundKind.STABILITY_COMPOSED)


# -- local sensitivity oracle (tests only) -----------------------------------

def _distance(a, b) -> float:
    if a.kind == "scalar":
        return abs(a.scalar - b.scalar)
    da, db_ = a.as_dict(), b.as_dict()
    return sum(abs(da.get(k, 0) - db_.get(k, 0)) for k in set(da) | set(db_))


def _column_domain(db: Database, table: str, col: str, value_domain) -> list:
    for key in ((table, col), f"{table}.{col}"):
        if key in value_domain:
            return list(value_domain[key])
    return sorted(set(db.table(table).column_values(col)), key=repr)


def tuple_neighbours(
    db: Database, tables: Sequence[str], value_domain: Mapping, cap: int
) -> Iterable[Database]:
    """Add, remove, or replace one row (the replacement keeps its primary key)."""
    total = 0
    plans = []
    for name in tables:
        t = db.table(name)
        meta = t.meta
        doms = [_column_domain(db, name, c.name, value_domain) for c in meta.columns]
        pk_idx = [meta.index(c) for c in meta.primary_key]
        other_idx = [i for i in range(len(meta.columns)) if i not in pk_idx]
        n_add = math.prod(len(d) for d in doms)
        n_rep = len(t.rows) * math.prod(len(doms[i]) for i in other_idx)
        total += n_add + n_rep + len(t.rows)
        plans.append((name, t, doms, pk_idx, other_idx))
    if total > cap:
        raise DomainTooLarge(f"{total} neighbours exceed the cap of {cap}")
    for name, t, doms, pk_idx, other_idx in plans:
        rows = list(t.rows)
        keys = {tuple(r[i] for i in pk_idx) for r in rows}
        for i in range(len(rows)):
            yield db.replace_rows(name, rows[:i] + rows[i + 1:])
        for combo in itertools.product(*doms):
            if pk_idx and tuple(combo[i] for i in pk_idx) in keys:
                continue
            yield db.replace_rows(name, rows + [combo])
        for i, row in enumerate(rows):
            for vals in itertools.product(*(doms[j] for j in other_idx)):
                new = list(row)
                for j, v in zip(other_idx, vals):
                    new[j] = v
                new = tuple(new)
                if new != row:
                    yield db.replace_rows(name, rows[:i] + [new] + rows[i + 1:])


def user_neighbours(db: Database, catalog: Catalog) -> Iterable[Database]:
    """Remove every row owned by one PID, across all private tables."""
    resolver = PidResolver(db, catalog)
    owned: dict[str, list] = {}
    pids = set()
    for name in db.tables:
        if not resolver.owns_pids(name) or catalog.pid_path(name) is None:
            continue
        owned[name] = [resolver.pid_of(name, r) for r in db.table(name).rows]
        pids.update(owned[name])
    for pid in sorted(pids, key=repr):
        out = db
        for name, owners in owned.items():
            rows = [r for r, p in zip(db.table(name).rows, owners) if p != pid]
            out = out.replace_rows(name, rows)
        yield out


def local_sensitivity_oracle(
    ast: QueryAst,
    db: Database,
    catalog: Catalog,
    value_domain: Mapping | None = None,
    cap: int = 20000,
) -> float:
    """max over neighbours D2 of |Q(db) - Q(D2)| by exhaustive enumeration.

    Histograms use the L1 distance between bin vectors.  Neighbours on which
    the aggregate is undefined (AVG of nothing) are skipped.
    """
    base = execute(ast, db)
    if catalog.privacy_unit is PrivacyUnit.TUPLE:
        touched = sorted({t.name for t in ast.tables})
        neighbours = tuple_neighbours(db, touched, value_domain or {}, cap)
    else:
        neighbours = user_neighbours(db, catalog)
    best = 0.0
    for other in neighbours:
        try:
            res = execute(ast, other)
        except EmptyAggregate:
            continue
        best = max(best, _distance(base, res))
    return best
