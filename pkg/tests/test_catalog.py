
import pytest

from dpsql.catalog import (
    Catalog,
    DType,
    PrivacyUnit,
    dumps_catalog,
    load_catalog,
    loads_catalog,
    max_frequency,
    save_catalog,
)
from dpsql.errors import AmbiguousPid, InvalidRange, InvalidReference, MalformedCatalog, UnknownColumn, UnknownTable
from dpsql.executor.database import Database

from oracles import TINY_CATALOG

MINIMAL = """
[table.t]
columns = [{ name = "x", type = "int" }]
"""


def test_minimal_catalog_is_tuple_level_with_one_table():
    cat = loads_catalog(MINIMAL)
    assert list(cat.tables) == ["t"]
    assert cat.privacy_unit is PrivacyUnit.TUPLE
    assert cat.column("t", "x").dtype is DType.INT


def test_pid_column_user_level():
    cat = loads_catalog("""
privacy_unit = "user"
[table.customer]
columns = [{ name = "c_custkey", type = "int" }, { name = "c_acctbal", type = "real", lo = 0, hi = 10000 }]
pid_column = "c_custkey"
""")
    assert cat.privacy_unit is PrivacyUnit.USER
    assert cat.table("customer").pid_column == "c_custkey"
    assert cat.column("customer", "c_acctbal").range == (0.0, 10000.0)


def test_foreign_key_to_missing_table():
    with pytest.raises(InvalidReference):
        loads_catalog("""
[table.orders]
columns = [{ name = "o_custkey", type = "int" }]
foreign_keys = [["o_custkey", "customer", "c_custkey"]]
""")


def test_foreign_key_to_missing_column():
    with pytest.raises(InvalidReference):
        loads_catalog("""
[table.a]
columns = [{ name = "k", type = "int" }]
[table.b]
columns = [{ name = "ak", type = "int" }]
foreign_keys = [["ak", "a", "nope"]]
""")


def test_inverted_range():
    with pytest.raises(InvalidRange):
        loads_catalog('[table.t]\ncolumns = [{ name = "x", type = "real", lo = 5, hi = 1 }]\n')


@pytest.mark.parametrize("text", [
    "[table.t\ncolumns = []",
    '[table.t]\ncolumns = [{ name = "x", type = "blob" }]\n',
    '[table.t]\ncolumns = [{ name = "x", type = "int", lo = 1 }]\n',
    '[table.t]\ncolumns = [{ name = "x", type = "int", domain = ["a"] }]\n',
    '[table.t]\ncolumns = [{ name = "x", type = "int" }, { name = "x", type = "int" }]\n',
    '[table.t]\ncolumns = [{ name = "x", type = "int" }]\nmax_user_contribution = 0\n',
    'privacy_unit = "user"\n[table.t]\ncolumns = [{ name = "x", type = "int" }]\n',
    'privacy_unit = "row"\n[table.t]\ncolumns = [{ name = "x", type = "int" }]\n',
    'bogus = 1\n[table.t]\ncolumns = [{ name = "x", type = "int" }]\n',
])
def test_malformed(text):
    with pytest.raises(MalformedCatalog):
        loads_catalog(text)


def test_two_pid_ancestors_is_ambiguous():
    with pytest.raises(AmbiguousPid):
        loads_catalog("""
privacy_unit = "user"
[table.a]
columns = [{ name = "id", type = "int" }]
pid_column = "id"
[table.b]
columns = [{ name = "id", type = "int" }]
pid_column = "id"
[table.c]
columns = [{ name = "a_id", type = "int" }, { name = "b_id", type = "int" }]
foreign_keys = [["a_id", "a", "id"], ["b_id", "b", "id"]]
""")


def test_pid_path_is_transitive(tpch):
    path = tpch.pid_path("lineitem")
    assert [fk.ref_table for fk in path] == ["orders", "customer"]
    assert tpch.pid_owner("orders") == "customer"
    assert tpch.pid_owner("customer") == "customer"
    assert tpch.pid_path("nation") is None


def test_dates_and_identifiers_are_normalised():
    cat = loads_catalog("""
[table.Orders]
columns = [{ name = "O_Date", type = "date", lo = 1992-01-01, hi = "1998-12-31" }]
""")
    col = cat.column("orders", "o_date")
    assert col.range[0].year == 1992 and col.range[1].isoformat() == "1998-12-31"


@pytest.mark.parametrize("text", [MINIMAL, TINY_CATALOG])
def test_round_trip_is_identity(text):
    cat = loads_catalog(text)
    again = loads_catalog(dumps_catalog(cat))
    assert again == cat
    assert again.tables == cat.tables


def test_tpch_round_trip(tpch, tmp_path):
    path = tmp_path / "c.toml"
    save_catalog(tpch, path)
    assert load_catalog(path) == tpch


def test_load_is_pure_function_of_bytes(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text(TINY_CATALOG)
    assert load_catalog(path) == load_catalog(path)


def test_missing_file():
    with pytest.raises(MalformedCatalog):
        load_catalog("/nonexistent/catalog.toml")


def test_with_unit_keeps_tables(tpch):
    user = tpch.with_unit("user")
    assert user.privacy_unit is PrivacyUnit.USER and user.tables == tpch.tables
    assert isinstance(user, Catalog)


def _one_column_db(values):
    cat = loads_catalog(MINIMAL)
    return Database.from_rows(cat, {"t": [(v,) for v in values]})


def test_max_frequency_by_hand():
    assert max_frequency(_one_column_db([1, 1, 1, 2]), "t", "x") == 3


def test_max_frequency_empty_table():
    assert max_frequency(_one_column_db([]), "t", "x") == 0


def test_max_frequency_errors():
    db = _one_column_db([1])
    with pytest.raises(UnknownTable):
        max_frequency(db, "nope", "x")
    with pytest.raises(UnknownColumn):
        max_frequency(db, "t", "nope")


def test_max_frequency_matches_group_by(tiny_tpch):
    idx = tiny_tpch.table("orders").meta.index("o_custkey")
    counts = {}
    for row in tiny_tpch.table("orders").rows:
        counts[row[idx]] = counts.get(row[idx], 0) + 1
    assert max_frequency(tiny_tpch, "orders", "o_custkey") == max(counts.values())
