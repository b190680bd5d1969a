"""Run the query suite over (query, mechanism, epsilon) and collect a report."""

from __future__ import annotations

import dataclasses
import math
import platform
import sys
import time
from typing import Mapping, Sequence

import numpy as np

from dpsql.accountant import Budget
from dpsql.bench.datagen import generate_data, tpch_catalog
from dpsql.bench.metrics import mape_per_run, relative_errors
from dpsql.bench.queries import SUITE
from dpsql.catalog import Catalog, PrivacyUnit
from dpsql.errors import (
    ConfigError,
    DpSqlError,
    EmptyAggregate,
    EmptyTrueHistogram,
    RejectedQuery,
    ZeroTrueValue,
)
from dpsql.executor.database import Database
from dpsql.executor.fast import execute
from dpsql.frontend.parser import parse
from dpsql.mechanisms.engine import sanitize
from dpsql.mechanisms.noise import derive_seed
from dpsql.mechanisms.params import Mechanism, PrivacyParams, Suppressor

DEFAULT_MECHANISMS = (
    Mechanism.LAPLACE_GS,
    Mechanism.LAPLACE_ELASTIC,
    Mechanism.SAA,
    Mechanism.BOUNDED_SUM,
)


@dataclasses.dataclass(frozen=True)
class BenchConfig:
    scale: float = 0.001
    data_seed: int = 1
    noise_seed: int = 2
    epsilons: tuple[float, ...] = (0.1, 1.0, 10.0)
    repetitions: int = 25
    mechanisms: tuple[Mechanism, ...] = DEFAULT_MECHANISMS
    queries: Mapping[str, str] = dataclasses.field(default_factory=lambda: dict(SUITE))
    delta: float = 1e-6
    suppressor: Suppressor = Suppressor.TAU_THRESHOLD
    saa_partitions: int = 10

    def __post_init__(self):
        if not self.scale > 0:
            raise ConfigError("scale must be positive")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if not self.epsilons:
            raise ConfigError("epsilons must be nonempty")
        if any(not (math.isfinite(e) and e > 0) for e in self.epsilons):
            raise ConfigError("epsilons must be positive")
        if not self.mechanisms:
            raise ConfigError("mechanisms must be nonempty")
        object.__setattr__(self, "mechanisms", tuple(Mechanism(m) for m in self.mechanisms))
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))


@dataclasses.dataclass
class BenchRow:
    query_id: str
    mechanism: str
    epsilon: float
    outcome: str
    metric_kind: str
    metric_mean: float | None = None
    metric_std: float | None = None
    time_mean_s: float | None = None
    time_std_s: float | None = None
    overhead_ratio: float | None = None
    n_reps: int = 0
    seed: int = 0
    errors: list[float] = dataclasses.field(default_factory=list, repr=False)

    @property
    def answered(self) -> bool:
        return self.outcome == "answered"


@dataclasses.dataclass
class BenchReport:
    config: BenchConfig
    rows: list[BenchRow]
    baseline: dict[str, tuple[float, float]]  # query -> (mean s, std s)
    environment: dict

    def row(self, query_id: str, mechanism, epsilon: float) -> BenchRow:
        m = Mechanism(mechanism).value
        for r in self.rows:
            if r.query_id == query_id and r.mechanism == m and r.epsilon == epsilon:
                return r
        raise KeyError((query_id, m, epsilon))


def environment() -> dict:
    return {
        "python": sys.version.split()[0],
        "platform": platform.platform(),
        "machine": platform.machine(),
        "numpy": np.__version__,
    }


def _timed(fn, reps: int) -> tuple[list[float], list]:
    times, outs = [], []
    for i in range(reps):
        t0 = time.perf_counter()
        outs.append(fn(i))
        times.append(time.perf_counter() - t0)
    return times, outs


def _stats(xs: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(xs, dtype=float)
    return float(arr.mean()), float(arr.std())


def run_cell(qid, ast, truth, db, catalog, mechanism, eps, config, baseline_mean) -> BenchRow:
    kind = "MRE" if truth.kind == "scalar" else "MMAPE"
    cell_seed = derive_seed(config.noise_seed, qid, mechanism.value, repr(eps))

    def params(rep: int) -> PrivacyParams:
        return PrivacyParams(
            epsilon=eps, delta=config.delta, seed=derive_seed(cell_seed, rep),
            mechanism=mechanism, histogram_suppressor=config.suppressor,
            saa_partitions=config.saa_partitions,
        )

    def one(rep: int):
        return sanitize(ast, db, catalog, params(rep), Budget(eps, config.delta))

    row = BenchRow(qid, mechanism.value, eps, "answered", kind, seed=cell_seed)
    try:
        one(-1)  # warm-up, discarded
        times, outs = _timed(one, config.repetitions)
    except RejectedQuery as exc:
        row.outcome = f"rejected({exc.reason.value})"
        return row
    try:
        if truth.kind == "scalar":
            errs = relative_errors(truth.scalar, [o.value for o in outs])
        else:
            errs = mape_per_run(truth.histogram, [o.bins for o in outs])
    except (ZeroTrueValue, EmptyTrueHistogram) as exc:
        row.outcome = f"rejected({type(exc).__name__})"
        return row
    row.errors = errs
    row.metric_mean, row.metric_std = _stats(errs)
    row.time_mean_s, row.time_std_s = _stats(times)
    row.overhead_ratio = row.time_mean_s / baseline_mean if baseline_mean > 0 else math.inf
    row.n_reps = config.repetitions
    return row


def run_suite(
    config: BenchConfig, catalog: Catalog | None = None, db: Database | None = None
) -> BenchReport:
    """Every (query, mechanism, epsilon) cell; rejections become report rows."""
    catalog = catalog or tpch_catalog()
    if db is None:
        db = generate_data(config.scale, config.data_seed, catalog)
    tuple_cat = catalog.with_unit(PrivacyUnit.TUPLE)
    user_cat = catalog.with_unit(PrivacyUnit.USER)
    rows, baseline = [], {}
    for qid, sql in config.queries.items():
        try:
            ast = parse(sql)
        except DpSqlError as exc:
            raise ConfigError(f"suite query {qid} does not parse: {exc}") from None
        try:
            execute(ast, db)  # warm-up
        except EmptyAggregate:
            baseline[qid] = (math.nan, math.nan)
            for mech in config.mechanisms:
                for eps in config.epsilons:
                    rows.append(BenchRow(qid, mech.value, eps, "rejected(EmptyAggregate)", "MRE"))
            continue
        times, outs = _timed(lambda _: execute(ast, db), config.repetitions)
        truth = outs[0]
        baseline[qid] = _stats(times)
        for mech in config.mechanisms:
            cat = user_cat if mech is Mechanism.BOUNDED_SUM else tuple_cat
            for eps in config.epsilons:
                rows.append(run_cell(qid, ast, truth, db, cat, mech, eps, config, baseline[qid][0]))
    return BenchReport(config, rows, baseline, environment())
