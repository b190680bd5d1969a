"""Deterministic TPC-H-like data at desk scale.

Cardinalities follow the SF-1 ratios (about 8.7 million rows at scale 1);
region and nation keep their fixed 5 and 25 rows.  Every foreign key points
at an existing row and every value lies inside the catalog's declared range.
"""

from __future__ import annotations

import datetime as dt
from importlib import resources

import numpy as np

from dpsql.catalog import Catalog, PrivacyUnit, loads_catalog
from dpsql.executor.database import Database

SF1_ROWS = {
    "supplier": 10_000,
    "customer": 150_000,
    "part": 200_000,
    "orders": 1_500_000,
}
REGIONS = ["AFRICA", "AMERICA", "ASIA", "EUROPE", "MIDDLE EAST"]
NATIONS = [  # (name, region key), TPC-H order
    ("ALGERIA", 0), ("ARGENTINA", 1), ("BRAZIL", 1), ("CANADA", 1), ("EGYPT", 4),
    ("ETHIOPIA", 0), ("FRANCE", 3), ("GERMANY", 3), ("INDIA", 2), ("INDONESIA", 2),
    ("IRAN", 4), ("IRAQ", 4), ("JAPAN", 2), ("JORDAN", 4), ("KENYA", 0),
    ("MOROCCO", 0), ("MOZAMBIQUE", 0), ("PERU", 1), ("CHINA", 2), ("ROMANIA", 3),
    ("SAUDI ARABIA", 4), ("VIETNAM", 2), ("RUSSIA", 3), ("UNITED KINGDOM", 3),
    ("UNITED STATES", 1),
]
SEGMENTS = ["AUTOMOBILE", "BUILDING", "FURNITURE", "HOUSEHOLD", "MACHINERY"]
WORDS = ["quick", "final", "ironic", "bold", "pending", "regular", "express", "special", "careful", "silent"]
ORDERS_PER_CUSTOMER_CAP = 30
START = dt.date(1992, 1, 1)
END = dt.date(1998, 8, 2)
LINE_STATUS_CUTOFF = dt.date(1995, 6, 17)


def tpch_catalog(unit: PrivacyUnit | str = PrivacyUnit.TUPLE) -> Catalog:
    text = resources.files("dpsql.bench").joinpath("tpch.toml").read_text(encoding="utf-8")
    return loads_catalog(text).with_unit(unit)


def table_sizes(scale: float) -> dict[str, int]:
    sizes = {name: max(1, round(n * scale)) for name, n in SF1_ROWS.items()}
    sizes["region"] = len(REGIONS)
    sizes["nation"] = len(NATIONS)
    return sizes


def _money(rng: np.random.Generator, lo: float, hi: float) -> float:
    return round(float(rng.uniform(lo, hi)), 2)


def generate_data(scale: float, seed: int, catalog: Catalog | None = None) -> Database:
    if not scale > 0:
        raise ValueError("scale must be positive")
    catalog = catalog or tpch_catalog()
    rng = np.random.default_rng(seed)
    n = table_sizes(scale)
    rows: dict[str, list[tuple]] = {}

    rows["region"] = [(i, name) for i, name in enumerate(REGIONS)]
    rows["nation"] = [(i, name, r) for i, (name, r) in enumerate(NATIONS)]

    rows["supplier"] = [
        (k, f"Supplier#{k:09d}", int(rng.integers(0, 25)), _money(rng, -999.99, 9999.99))
        for k in range(1, n["supplier"] + 1)
    ]

    customers = []
    for k in range(1, n["customer"] + 1):
        comment = " ".join(rng.choice(WORDS, size=3))
        customers.append((
            k, f"Customer#{k:09d}", int(rng.integers(0, 25)), _money(rng, -999.99, 9999.99),
            SEGMENTS[int(rng.integers(0, len(SEGMENTS)))], comment,
        ))
    rows["customer"] = customers

    parts, prices = [], {}
    for k in range(1, n["part"] + 1):
        price = (90000 + ((k // 10) % 20001) + 100 * (k % 1000)) / 100
        price = min(price, 2100.0)
        prices[k] = price
        parts.append((k, f"part {' '.join(rng.choice(WORDS, size=2))}", price))
    rows["part"] = parts

    per_part = min(4, n["supplier"])
    partsupp, suppliers_of = [], {}
    for k in range(1, n["part"] + 1):
        chosen = sorted(int(s) + 1 for s in rng.choice(n["supplier"], size=per_part, replace=False))
        suppliers_of[k] = chosen
        for s in chosen:
            partsupp.append((k, s, int(rng.integers(1, 10000)), _money(rng, 1.0, 1000.0)))
    rows["partsupp"] = partsupp

    # TPC-H leaves every third customer without orders
    eligible = [c for c in range(1, n["customer"] + 1) if c % 3 != 0] or [1]
    load = dict.fromkeys(eligible, 0)
    span = (END - START).days
    orders, lineitems = [], []
    for ok in range(1, n["orders"] + 1):
        open_custs = [c for c in eligible if load[c] < ORDERS_PER_CUSTOMER_CAP]
        if not open_custs:
            break
        cust = open_custs[int(rng.integers(0, len(open_custs)))]
        load[cust] += 1
        odate = START + dt.timedelta(days=int(rng.integers(0, span + 1)))
        total = 0.0
        statuses = set()
        for ln in range(1, int(rng.integers(1, 8)) + 1):
            pk = int(rng.integers(1, n["part"] + 1))
            sk = suppliers_of[pk][int(rng.integers(0, len(suppliers_of[pk])))]
            qty = int(rng.integers(1, 51))
            ext = round(qty * prices[pk], 2)
            disc = int(rng.integers(0, 11)) / 100
            tax = int(rng.integers(0, 9)) / 100
            ship = odate + dt.timedelta(days=int(rng.integers(1, 122)))
            statuses.add("F" if ship <= LINE_STATUS_CUTOFF else "O")
            total += ext * (1 + tax) * (1 - disc)
            lineitems.append((ok, ln, pk, sk, qty, ext, disc, tax, ship))
        status = statuses.pop() if len(statuses) == 1 else "P"
        orders.append((ok, cust, status, round(total, 2), odate))
    rows["orders"] = orders
    rows["lineitem"] = lineitems
    return Database.from_rows(catalog, rows)
