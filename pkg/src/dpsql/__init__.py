"""Differentially private SQL sanitization over an exact in-memory executor."""

from dpsql.accountant import Budget
from dpsql.catalog import Catalog, PrivacyUnit, load_catalog, loads_catalog
from dpsql.errors import DpSqlError, RejectedQuery, RejectReason
from dpsql.executor import Database, execute, execute_bruteforce, load_database
from dpsql.frontend import classify, parse, render
from dpsql.mechanisms import Mechanism, PrivacyParams, SanitizedResult, Suppressor, sanitize

__version__ = "0.1.0"

__all__ = [
    "Budget",
    "Catalog",
    "Database",
    "DpSqlError",
    "Mechanism",
    "PrivacyParams",
    "PrivacyUnit",
    "RejectReason",
    "RejectedQuery",
    "SanitizedResult",
    "Suppressor",
    "classify",
    "execute",
    "execute_bruteforce",
    "load_catalog",
    "load_database",
    "loads_catalog",
    "parse",
    "render",
    "sanitize",
]
