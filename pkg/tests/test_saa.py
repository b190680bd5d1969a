import pytest

from dpsql.catalog import loads_catalog
from dpsql.errors import RejectedQuery, RejectReason
from dpsql.executor import Database
from dpsql.mechanisms import PrivacyParams, partition_of, partition_sizes, sanitize

CAT = """
privacy_unit = "tuple"
[table.t]
columns = [{ name = "id", type = "int" }, { name = "x", type = "real", lo = 0, hi = 10 },
           { name = "raw", type = "real" }]
primary_key = ["id"]
[table.u]
columns = [{ name = "id", type = "int" }]
primary_key = ["id"]
"""


def make(rows):
    cat = loads_catalog(CAT)
    return cat, Database.from_rows(cat, {"t": rows, "u": [(1,)]})


def saa_params(eps=1.0, k=10, seed=0):
    return PrivacyParams(eps, mechanism="SAA", saa_partitions=k, seed=seed)


def test_partitions_equal_size_for_dense_keys():
    cat, db = make([(i, float(i % 10), 0.0) for i in range(100)])
    assert partition_sizes("t", db, cat, 10) == [10] * 10


def test_partition_of_is_deterministic_for_text_keys():
    assert partition_of(("abc",), 7) == partition_of(("abc",), 7)
    assert 0 <= partition_of("abc", 7) < 7


def test_count_partitions_add_up():
    cat, db = make([(i, 1.0, 0.0) for i in range(8)])
    res = sanitize("SELECT COUNT(*) FROM t", db, cat, saa_params(k=4))
    assert res.partition_mean * 4 == pytest.approx(8)
    assert res.partitions == 4


@pytest.mark.parametrize("sql,truth", [
    ("SELECT COUNT(*) FROM t WHERE x > 4", 50),
    ("SELECT SUM(x) FROM t", 450),
    ("SELECT AVG(x) FROM t", 4.5),
])
def test_zero_noise_limit(sql, truth):
    cat, db = make([(i, float(i % 10), 0.0) for i in range(100)])
    res = sanitize(sql, db, cat, saa_params(eps=1e9))
    assert res.value == pytest.approx(truth, rel=1e-6)


def test_saa_rejects_joins_and_missing_ranges():
    cat, db = make([(1, 1.0, 1.0)])
    cases = [
        ("SELECT COUNT(*) FROM t JOIN u ON t.id = u.id", RejectReason.UNSUPPORTED),
        ("SELECT SUM(raw) FROM t", RejectReason.MISSING_RANGE),
        ("SELECT MAX(x) FROM t", RejectReason.UNBOUNDED_SENSITIVITY),
    ]
    for sql, reason in cases:
        with pytest.raises(RejectedQuery) as info:
            sanitize(sql, db, cat, saa_params())
        assert info.value.reason is reason


def test_one_changed_row_moves_mean_by_at_most_width_over_k():
    rows = [(i, float(i % 10), 0.0) for i in range(100)]
    cat, db = make(rows)
    changed = list(rows)
    changed[37] = (37, 10.0, 0.0)
    _, db2 = make(changed)
    q = "SELECT SUM(x) FROM t"
    a = sanitize(q, db, cat, saa_params()).partition_mean
    b = sanitize(q, db2, cat, saa_params()).partition_mean
    m = 10
    assert 0 < abs(a - b) <= m * 10 / 10


def test_saa_noise_scale():
    cat, db = make([(i, 1.0, 0.0) for i in range(20)])
    res = sanitize("SELECT AVG(x) FROM t", db, cat, saa_params(eps=0.5, k=5))
    assert res.noise_scale == pytest.approx(10 / (5 * 0.5))
