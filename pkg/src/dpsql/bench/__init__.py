from dpsql.bench.datagen import generate_data, table_sizes, tpch_catalog
from dpsql.bench.metrics import mape, mmape, mre
from dpsql.bench.queries import SUITE
from dpsql.bench.report import write_all, write_report_csv
from dpsql.bench.runner import BenchConfig, BenchReport, BenchRow, run_suite

__all__ = [
    "SUITE",
    "BenchConfig",
    "BenchReport",
    "BenchRow",
    "generate_data",
    "mape",
    "mmape",
    "mre",
    "run_suite",
    "table_sizes",
    "tpch_catalog",
    "write_all",
    "write_report_csv",
]
