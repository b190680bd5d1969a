from dpsql.executor.bruteforce import execute_bruteforce
from dpsql.executor.database import Database, Table, dump_database, load_database, read_table
from dpsql.executor.fast import RowSet, execute, matching_rows
from dpsql.executor.pids import PidResolver, row_pids, target_user_set
from dpsql.executor.result import ExactResult

__all__ = [
    "Database",
    "ExactResult",
    "PidResolver",
    "RowSet",
    "Table",
    "dump_database",
    "execute",
    "execute_bruteforce",
    "load_database",
    "matching_rows",
    "read_table",
    "row_pids",
    "target_user_set",
]
