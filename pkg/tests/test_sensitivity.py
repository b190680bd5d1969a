import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpsql.catalog import PrivacyUnit, loads_catalog
from dpsql.errors import DomainTooLarge, UnknownTransformation, UnsupportedAggregate
from dpsql.executor.database import Database
from dpsql.frontend import parse, resolve
from dpsql.sensitivity import (
    STABILITY_CONSTANTS,
    UNBOUNDED,
    BoundKind,
    Transformation,
    elastic_sensitivity,
    expr_range,
    global_sensitivity,
    local_sensitivity_oracle,
    stability,
    stability_bound,
)

import oracles
from oracles import random_query, tiny_catalog, tiny_database, tiny_value_domain

ACCT = """
privacy_unit = "{unit}"
[table.customer]
columns = [
  {{ name = "c_custkey", type = "int" }},
  {{ name = "c_acctbal", type = "real", lo = 0, hi = 10000 }},
  {{ name = "c_note", type = "real" }},
]
primary_key = ["c_custkey"]
pid_column = "c_custkey"
max_user_contribution = 2
"""


def acct(unit="tuple"):
    return loads_catalog(ACCT.format(unit=unit))


def test_count_tuple_level_is_one():
    b = global_sensitivity(parse("SELECT COUNT(*) FROM customer"), acct())
    assert b.value == 1 and b.kind is BoundKind.GLOBAL and b.unit is PrivacyUnit.TUPLE


def test_sum_with_declared_range():
    assert global_sensitivity(parse("SELECT SUM(c_acctbal) FROM customer"), acct()).value == 10000


def test_sum_without_range_is_unbounded():
    b = global_sensitivity(parse("SELECT SUM(c_note) FROM customer"), acct())
    assert b.value == UNBOUNDED and not b.bounded


@pytest.mark.parametrize("func", ["MIN", "MAX"])
def test_min_max_unbounded(func):
    assert not global_sensitivity(parse(f"SELECT {func}(c_acctbal) FROM customer"), acct()).bounded


def test_join_global_unbounded(tpch):
    q = parse("SELECT COUNT(*) FROM orders JOIN customer ON o_custkey = c_custkey")
    assert not global_sensitivity(q, tpch).bounded


def test_user_level_scales_by_contribution():
    cat = acct("user")
    assert global_sensitivity(parse("SELECT COUNT(*) FROM customer"), cat).value == 2
    assert global_sensitivity(parse("SELECT COUNT(DISTINCT c_acctbal) FROM customer"), cat).value == 2
    assert global_sensitivity(parse("SELECT SUM(c_acctbal) FROM customer"), cat).value == 20000


def test_sum_range_straddling_zero_tuple_level():
    # a replacement can move a value from lo to hi
    cat = loads_catalog('[table.t]\ncolumns = [{ name = "x", type = "int", lo = -3, hi = 5 }]\n')
    assert global_sensitivity(parse("SELECT SUM(x) FROM t"), cat).value == 8


def test_expr_range_interval_arithmetic():
    cat = loads_catalog("""
[table.t]
columns = [{ name = "a", type = "real", lo = 1, hi = 2 }, { name = "b", type = "real", lo = -1, hi = 3 }]
""")

    def rng_of(sql):
        ast = resolve(parse(sql), cat.tables)
        return expr_range(ast.aggregate.argument, ast, cat)

    assert rng_of("SELECT SUM(a * b - 2) FROM t") == (-4.0, 4.0)
    assert rng_of("SELECT SUM(a / b) FROM t") is None
    assert rng_of("SELECT SUM(b / a) FROM t") == (-1.0, 3.0)
    assert rng_of("SELECT SUM(-a) FROM t") == (-2.0, -1.0)


def test_bound_arithmetic_keeps_unbounded():
    b = global_sensitivity(parse("SELECT SUM(c_note) FROM customer"), acct())
    assert math.isinf(b.scaled(2).value)
    assert str(b).startswith("unbounded")


# -- elastic -------------------------------------------------------------------

def test_elastic_single_table_is_global():
    db = Database.from_rows(acct(), {"customer": [(1, 5.0, 0.0), (2, 6.0, 1.0)]})
    q = parse("SELECT COUNT(*) FROM customer")
    assert elastic_sensitivity(q, db, acct()).value == global_sensitivity(q, acct()).value == 1
    assert elastic_sensitivity(q, db, acct("user")).value == global_sensitivity(q, acct("user")).value == 2


def test_elastic_rejects_non_count(tiny_tpch, tpch):
    with pytest.raises(UnsupportedAggregate):
        elastic_sensitivity(parse("SELECT SUM(o_totalprice) FROM orders"), tiny_tpch, tpch)


def _owner_with_three_events():
    users = [(u, "a", 1) for u in range(1, 6)]
    events = [(1, 1, "x", "p", 0), (2, 1, "y", "p", 1), (3, 1, "x", "q", 2), (4, 2, "x", "q", 3), (5, 3, "y", "r", 4)]
    return Database.from_rows(tiny_catalog(), {"users": users, "events": events})


def test_elastic_join_covers_customer_with_three_orders():
    db = _owner_with_three_events()
    q = parse("SELECT COUNT(*) FROM events JOIN users ON events.uid = users.uid")
    cat = tiny_catalog()
    ls = local_sensitivity_oracle(q, db, cat, tiny_value_domain(db))
    es = elastic_sensitivity(q, db, cat)
    assert ls == 3  # dropping user 1 removes three joined rows
    assert es.value >= 3 and es.kind is BoundKind.ELASTIC


def test_elastic_self_join_against_oracle():
    # four rows, one uid repeated m=3 times; adding a fourth row for it adds 2m+1 pairs
    users = [(1, "a", 0), (2, "b", 0)]
    events = [(1, 1, "x", "p", 0), (2, 1, "x", "p", 0), (3, 1, "y", "p", 0), (4, 2, "y", "p", 0)]
    db = Database.from_rows(tiny_catalog(), {"users": users, "events": events})
    q = parse("SELECT COUNT(*) FROM events e1 JOIN events e2 ON e1.uid = e2.uid")
    cat = tiny_catalog()
    ls = local_sensitivity_oracle(q, db, cat, tiny_value_domain(db))
    assert ls == 2 * 3 + 1
    assert elastic_sensitivity(q, db, cat).value >= ls


def test_cross_product_is_unbounded(tiny_tpch, tpch):
    from dpsql.frontend.ast import QueryAst, SelectItem, AggregateCall, AggFunc, TableRef
    q = QueryAst((SelectItem(AggregateCall(AggFunc.COUNT)),), (TableRef("orders"), TableRef("customer")))
    assert not elastic_sensitivity(q, tiny_tpch, tpch).bounded


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False), st.sampled_from(["tuple", "user"]), st.integers(0, 4))
def test_adding_a_join_never_lowers_elastic(rng, unit, t):
    db = tiny_database(rng)
    cat = tiny_catalog(unit)
    base = "SELECT COUNT(*) FROM events JOIN users ON events.uid = users.uid"
    more = base + " JOIN labels ON events.kind = labels.kind"
    where = f" WHERE amt >= {t}"
    a = elastic_sensitivity(parse(base + where), db, cat).value
    b = elastic_sensitivity(parse(more + where), db, cat).value
    c = elastic_sensitivity(parse(f"SELECT COUNT(*) FROM events WHERE amt >= {t}"), db, cat).value
    assert c <= a <= b


# -- stability -------------------------------------------------------------------

def test_stability_examples():
    assert stability([Transformation.SELECTION]).c == 1
    assert stability(["Selection", "Selection"]).c == 1
    assert stability([Transformation.GROUP_BY_CATEGORY]).c == 2
    assert stability([]).c == 1


def test_unknown_transformation():
    with pytest.raises(UnknownTransformation):
        stability(["Selection", "Shuffle"])


@given(st.lists(st.sampled_from(list(Transformation)), max_size=6), st.randoms(use_true_random=False))
def test_stability_order_independent(chain, rng):
    shuffled = list(chain)
    rng.shuffle(shuffled)
    assert stability(chain) == stability(shuffled)
    k = len(chain) // 2
    assert stability(chain).c == stability(chain[:k]).c * stability(chain[k:]).c


def test_stability_bound_for_histogram(tpch):
    q = parse("SELECT o_orderstatus, COUNT(*) FROM orders WHERE o_totalprice > 5 GROUP BY o_orderstatus")
    assert stability_bound(q, tpch).value == 2
    assert stability_bound(q, tpch.with_unit("user")).value == 30


def test_brute_force_selection_constant():
    c = max(oracles.empirical_stability(oracles.select(p), max_size=4) for p in oracles.SELECTIONS)
    assert c == STABILITY_CONSTANTS[Transformation.SELECTION]


# -- local sensitivity oracle -----------------------------------------------------

NUMS = """
privacy_unit = "{unit}"
[table.p]
columns = [{{ name = "uid", type = "int" }}]
primary_key = ["uid"]
pid_column = "uid"
[table.t]
columns = [{{ name = "id", type = "int" }}, {{ name = "uid", type = "int" }}, {{ name = "x", type = "int", lo = 0, hi = 10 }}]
primary_key = ["id"]
foreign_keys = [["uid", "p", "uid"]]
"""


def nums(unit, p_rows, t_rows):
    cat = loads_catalog(NUMS.format(unit=unit))
    return cat, Database.from_rows(cat, {"p": p_rows, "t": t_rows})


def test_oracle_count_tuple_is_one():
    rng = random.Random(11)
    for _ in range(5):
        db = tiny_database(rng)
        q = parse("SELECT COUNT(*) FROM users")
        assert local_sensitivity_oracle(q, db, tiny_catalog(), tiny_value_domain(db)) == 1


def test_oracle_sum_add_beats_replace():
    cat, db = nums("tuple", [(1,)], [(1, 1, 3), (2, 1, 5)])
    domain = {("t", "id"): [1, 2, 3], ("t", "uid"): [1], ("t", "x"): range(11)}
    q = parse("SELECT SUM(x) FROM t")
    assert local_sensitivity_oracle(q, db, cat, domain) == 10


def test_oracle_user_removal():
    cat, db = nums("user", [(1,), (2,)], [(1, 1, 3), (2, 1, 5), (3, 2, 1)])
    assert local_sensitivity_oracle(parse("SELECT SUM(x) FROM t"), db, cat) == 8


def test_oracle_histogram_replacement_moves_two():
    rng = random.Random(2)
    db = tiny_database(rng)
    q = parse("SELECT grp, COUNT(*) FROM users GROUP BY grp")
    assert local_sensitivity_oracle(q, db, tiny_catalog(), tiny_value_domain(db)) == 2


def test_oracle_domain_cap():
    cat, db = nums("tuple", [(1,)], [(1, 1, 3)])
    domain = {("t", "id"): range(100), ("t", "uid"): range(100), ("t", "x"): range(11)}
    with pytest.raises(DomainTooLarge):
        local_sensitivity_oracle(parse("SELECT SUM(x) FROM t"), db, cat, domain, cap=1000)


@settings(max_examples=40, deadline=None)
@given(st.randoms(use_true_random=False), st.sampled_from(["tuple", "user"]))
def test_dominance_small(rng, unit):
    db = tiny_database(rng)
    cat = tiny_catalog(unit)
    for pool in (oracles.SINGLE_TABLE_QUERIES, oracles.JOIN_QUERIES, oracles.HISTOGRAM_QUERIES):
        q = parse(random_query(rng, pool))
        ls = local_sensitivity_oracle(q, db, cat, tiny_value_domain(db))
        try:
            assert elastic_sensitivity(q, db, cat).value >= ls
        except UnsupportedAggregate:
            pass
        gs = stability_bound(q, cat)
        if gs.bounded:
            assert gs.value >= ls
