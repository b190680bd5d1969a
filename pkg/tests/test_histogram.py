import random

import pytest

from dpsql.accountant import Budget
from dpsql.catalog import loads_catalog
from dpsql.errors import InvalidParams, RejectedQuery, RejectReason
from dpsql.executor import Database, execute
from dpsql.frontend import parse
from dpsql.mechanisms import PrivacyParams, default_tau, sanitize, sticky_threshold

CAT = """
privacy_unit = "tuple"
[table.t]
columns = [{ name = "id", type = "int" }, { name = "cat", type = "text" },
           { name = "dom", type = "text", domain = ["A", "B", "C"] }]
primary_key = ["id"]
"""


def make(counts, shuffle=None):
    cat = loads_catalog(CAT)
    rows = []
    for c, n in counts.items():
        rows += [(len(rows) + i, c, c if c in "ABC" else "A") for i in range(n)]
    if shuffle is not None:
        random.Random(shuffle).shuffle(rows)
    return cat, Database.from_rows(cat, {"t": rows})


H2 = "SELECT cat, COUNT(*) FROM t GROUP BY cat"


def test_finite_domain_emits_every_bin(tiny_tpch, tpch):
    q = "SELECT o_orderstatus, COUNT(*) FROM orders WHERE o_orderstatus <> 'P' GROUP BY o_orderstatus"
    res = sanitize(q, tiny_tpch, tpch, PrivacyParams(1.0))
    assert [c for c, _ in res.bins] == ["F", "O", "P"]
    assert res.delta == 0 and res.sensitivity.value == 2


def test_h1_is_charged_once_in_parallel(tiny_tpch, tpch):
    budget = Budget(1.0)
    sanitize("SELECT o_orderstatus, COUNT(*) FROM orders GROUP BY o_orderstatus", tiny_tpch, tpch,
             PrivacyParams(0.6), budget)
    assert len(budget.ledger) == 1
    assert budget.ledger[0].composition == "parallel" and budget.epsilon_spent == 0.6


def test_threshold_example():
    cat, db = make({"A": 10, "B": 2})
    res = sanitize(H2, db, cat, PrivacyParams(1e9, delta=1e-6, tau=5.0, histogram_suppressor="TauThreshold"))
    assert res.bin_dict() == pytest.approx({"A": 10.0})
    assert res.suppressed_bin_count == 1


def test_released_bins_are_true_bins():
    cat, db = make({"A": 30, "B": 1, "C": 4, "D": 12})
    truth = dict(execute(parse(H2), db).histogram)
    for seed in range(30):
        for sup in ("TauThreshold", "StickyThreshold"):
            res = sanitize(H2, db, cat, PrivacyParams(1.0, delta=1e-3, seed=seed, histogram_suppressor=sup))
            assert set(res.bin_dict()) <= set(truth)
            assert len(res.bins) + res.suppressed_bin_count == len(truth)


def test_suppressor_requirements():
    cat, db = make({"A": 3})
    with pytest.raises(RejectedQuery) as info:
        sanitize(H2, db, cat, PrivacyParams(1.0, delta=1e-6, histogram_suppressor="None"))
    assert info.value.reason is RejectReason.NO_SUPPRESSOR
    with pytest.raises(InvalidParams):
        sanitize(H2, db, cat, PrivacyParams(1.0, delta=0.0, histogram_suppressor="TauThreshold"))


def test_default_tau_formula():
    assert default_tau(2.0, 1.0, 1.0, 0.5) == pytest.approx(2.0)
    assert default_tau(1.0, 2.0, 4.0, 1e-3) > default_tau(1.0, 2.0, 1.0, 1e-3)


def test_sticky_threshold_is_a_function_of_query_and_data():
    base = 20.0
    assert sticky_threshold(base, "q", 1) == sticky_threshold(base, "q", 1)
    assert sticky_threshold(base, "q", 1) != sticky_threshold(base, "q", 2)


def test_sticky_threshold_ignores_noise_seed_and_row_order():
    counts = {"A": 9, "B": 4, "C": 1}
    cat, db = make(counts, shuffle=1)
    _, db2 = make(counts, shuffle=2)
    p = PrivacyParams(1.0, delta=1e-3, histogram_suppressor="StickyThreshold")
    a = sanitize(H2, db, cat, p.replace(seed=1))
    b = sanitize(H2, db2, cat, p.replace(seed=99))
    assert a.threshold == b.threshold


def test_histogram_rejections(tiny_tpch, tpch):
    cases = [
        ("SELECT o_orderstatus, MAX(o_totalprice) FROM orders GROUP BY o_orderstatus", RejectReason.UNBOUNDED_SENSITIVITY),
        ("SELECT o_orderstatus, AVG(o_totalprice) FROM orders GROUP BY o_orderstatus", RejectReason.UNSUPPORTED),
    ]
    for sql, reason in cases:
        with pytest.raises(RejectedQuery) as info:
            sanitize(sql, tiny_tpch, tpch, PrivacyParams(1.0))
        assert info.value.reason is reason
