"""The benchmark query suite, one SQL fixture per evaluated query."""

from __future__ import annotations

SUITE: dict[str, str] = {
    "COUNT": "SELECT COUNT(*) FROM customer",
    "COUNT_DISTINCT": (
        "SELECT COUNT(DISTINCT c_nationkey) FROM orders JOIN customer ON o_custkey = c_custkey"
    ),
    "SUM": "SELECT SUM(c_acctbal) FROM customer",
    "SJA": (
        "SELECT COUNT(*) FROM orders, customer "
        "WHERE o_custkey = c_custkey AND c_acctbal < o_totalprice"
    ),
    "AVG": "SELECT AVG(o_totalprice) FROM orders",
    "MIN": "SELECT MIN(o_totalprice) FROM orders",
    "histogram": "SELECT o_orderstatus, COUNT(*) FROM orders GROUP BY o_orderstatus",
    "ME_94_revenue": (
        "SELECT n_name, SUM(l_extendedprice * (1 - l_discount)) AS revenue "
        "FROM customer, orders, lineitem, supplier, nation, region "
        "WHERE c_custkey = o_custkey AND l_orderkey = o_orderkey AND l_suppkey = s_suppkey "
        "AND c_nationkey = s_nationkey AND s_nationkey = n_nationkey "
        "AND n_regionkey = r_regionkey AND r_name = 'MIDDLE EAST' "
        "AND o_orderdate >= '1994-01-01' AND o_orderdate < '1995-01-01' "
        "GROUP BY n_name"
    ),
    "region_revenue": (
        "SELECT r_name, SUM(l_extendedprice * (1 - l_discount)) AS revenue "
        "FROM lineitem, orders, customer, nation, region "
        "WHERE l_orderkey = o_orderkey AND o_custkey = c_custkey "
        "AND c_nationkey = n_nationkey AND n_regionkey = r_regionkey "
        "GROUP BY r_name"
    ),
}

SCALAR_QUERIES = ("COUNT", "COUNT_DISTINCT", "SUM", "SJA", "AVG", "MIN")
HISTOGRAM_QUERIES = ("histogram", "ME_94_revenue", "region_revenue")
