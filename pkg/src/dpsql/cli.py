"""Command line: ``dpsql run``, ``dpsql inspect`` and ``dpsql bench``.

Exit codes: 0 success, 1 the query was rejected, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import dataclasses
import enum
import os
import sys
from pathlib import Path

from dpsql.accountant import Budget
from dpsql.catalog import Catalog, PrivacyUnit, load_catalog
from dpsql.errors import (
    DpSqlError,
    RejectedQuery,
    RejectReason,
    SqlSyntaxError,
    UnsupportedAggregate,
    UnsupportedFeature,
)
from dpsql.executor.database import dump_database, load_database
from dpsql.frontend.classify import QueryKind, classify
from dpsql.frontend.parser import parse
from dpsql.frontend.render import render
from dpsql.mechanisms.engine import sanitize
from dpsql.mechanisms.params import DEFAULT_SAA_PARTITIONS, Mechanism, PrivacyParams, Suppressor
from dpsql.mechanisms.saa import saa_check
from dpsql.mechanisms.scalar import plan
from dpsql.sensitivity import (
    contribution_bound,
    elastic_sensitivity,
    global_sensitivity,
    stability_bound,
)

EXIT_OK, EXIT_REJECTED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("--catalog", help="catalog TOML (default: built-in TPC-H catalog)")
    p.add_argument("--data-dir", help="directory of per-table delimited files")
    p.add_argument("--unit", choices=[u.value for u in PrivacyUnit], help="override the catalog privacy unit")
    p.add_argument("--scale", type=float, default=0.001, help="generated TPC-H scale when no --data-dir")
    p.add_argument("--data-seed", type=int, default=1)


def _add_query(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--sql", help="query text")
    g.add_argument("--sql-file", help="file holding the query")
    p.add_argument("--mechanism", default=Mechanism.LAPLACE_GS.value, choices=[m.value for m in Mechanism])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dpsql", description="Differentially private SQL aggregates.")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="sanitize one query")
    _add_query(run)
    _add_source(run)
    run.add_argument("--epsilon", type=float, required=True)
    run.add_argument("--delta", type=float, default=0.0)
    run.add_argument("--seed", type=int, help="noise seed (falls back to $DPSQL_SEED, then 0)")
    run.add_argument("--k", type=int, help="enable the k-anonymity gate")
    run.add_argument("--suppressor", default=Suppressor.NONE.value, choices=[s.value for s in Suppressor])
    run.add_argument("--tau", type=float)
    run.add_argument("--saa-partitions", type=int)
    run.add_argument("--ledger", help="append-only budget ledger CSV shared across invocations")
    run.add_argument("--budget-epsilon", type=float, help="total epsilon (default: --epsilon)")
    run.add_argument("--budget-delta", type=float, help="total delta (default: --delta)")

    ins = sub.add_parser("inspect", help="show the analysis of a query without releasing anything")
    _add_query(ins)
    _add_source(ins)

    b = sub.add_parser("bench", help="run the benchmark suite")
    b.add_argument("--scale", type=float, default=0.001)
    b.add_argument("--reps", type=int, default=25)
    b.add_argument("--epsilons", type=_float_list, default=(0.1, 1.0, 10.0))
    b.add_argument("--mechanisms", help="comma-separated subset of mechanisms")
    b.add_argument("--data-seed", type=int, default=1)
    b.add_argument("--noise-seed", type=int, default=2)
    b.add_argument("--delta", type=float, default=1e-6)
    b.add_argument("--suppressor", default=Suppressor.TAU_THRESHOLD.value, choices=[s.value for s in Suppressor])
    b.add_argument("--saa-partitions", type=int, default=DEFAULT_SAA_PARTITIONS)
    b.add_argument("--out", required=True, help="report CSV path")
    b.add_argument("--export-data", help="also write the generated tables to this directory")
    b.add_argument("--no-plots", action="store_true")
    return ap


def _query_text(args) -> str:
    if args.sql is not None:
        return args.sql
    try:
        return Path(args.sql_file).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {args.sql_file}: {exc.strerror}") from None


def _source(args) -> tuple[Catalog, "object"]:
    from dpsql.bench.datagen import generate_data, tpch_catalog

    catalog = load_catalog(args.catalog) if args.catalog else tpch_catalog()
    if args.unit:
        catalog = catalog.with_unit(args.unit)
    if args.data_dir:
        db = load_database(args.data_dir, catalog)
    elif args.catalog:
        raise UsageError("--data-dir is required with a custom --catalog")
    else:
        db = generate_data(args.scale, args.data_seed, catalog)
    return catalog, db


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("DPSQL_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"DPSQL_SEED must be an integer, got {env!r}") from None


def _ledger_line(entry, budget: Budget) -> str:
    return (
        f"ledger: fingerprint={entry.fingerprint} epsilon={entry.epsilon:g} delta={entry.delta:g} "
        f"mechanism={entry.mechanism} outcome={entry.outcome} "
        f"spent={budget.epsilon_spent:g}/{budget.epsilon_total:g} "
        f"delta_spent={budget.delta_spent:g}/{budget.delta_total:g}"
    )


def cmd_run(args, out) -> int:
    sql = _query_text(args)
    catalog, db = _source(args)
    params = PrivacyParams(
        epsilon=args.epsilon, delta=args.delta, seed=_seed(args), mechanism=args.mechanism,
        histogram_suppressor=args.suppressor, tau=args.tau, saa_partitions=args.saa_partitions,
    )
    eps_total = args.epsilon if args.budget_epsilon is None else args.budget_epsilon
    delta_total = args.delta if args.budget_delta is None else args.budget_delta
    if args.ledger:
        budget = Budget.from_csv(args.ledger, eps_total, delta_total)
    else:
        budget = Budget(eps_total, delta_total)
    before = len(budget.ledger)
    rejected = None
    result = None
    try:
        result = sanitize(sql, db, catalog, params, budget, k=args.k)
    except RejectedQuery as exc:
        rejected = exc
    new = budget.ledger[before:]
    if args.ledger and new:
        budget.append_csv(args.ledger, new)
    if result is not None:
        print(result.to_json(), file=out)
    for e in new:
        print(_ledger_line(e, budget), file=out)
    if rejected is not None:
        raise rejected
    return EXIT_OK


def _dump(node, indent: int = 0) -> list[str]:
    pad = "  " * indent
    if dataclasses.is_dataclass(node):
        lines = [f"{pad}{type(node).__name__}"]
        for f in dataclasses.fields(node):
            v = getattr(node, f.name)
            if v is None or v == ():
                continue
            if dataclasses.is_dataclass(v) or isinstance(v, tuple):
                lines.append(f"{pad}  {f.name}:")
                lines.extend(_dump(v, indent + 2))
            else:
                lines.append(f"{pad}  {f.name}: {v.value if isinstance(v, enum.Enum) else v!r}")
        return lines
    if isinstance(node, tuple):
        return [line for item in node for line in _dump(item, indent)]
    return [f"{pad}{node!r}"]


def _admission(ast, db, catalog, mechanism: Mechanism, histogram: bool) -> str:
    """Whether the engine would answer with ``mechanism``, without noise or charge."""
    try:
        if mechanism is Mechanism.SAA:
            if histogram:
                return "rejected: unsupported: SAA does not release histograms"
            saa_check(ast, catalog)
            return "admitted"
        p = plan(ast, db, catalog, mechanism)
    except RejectedQuery as exc:
        return f"rejected: {exc}"
    parts = [f"{name} sensitivity {b}" for name, b in (("count", p.count), ("sum", p.total)) if b is not None]
    return "admitted (" + "; ".join(parts) + ")"


def cmd_inspect(args, out) -> int:
    sql = _query_text(args)
    catalog, db = _source(args)
    ast = parse(sql)
    qc = classify(ast, catalog)
    print(f"query: {render(ast)}", file=out)
    print("ast:", file=out)
    for line in _dump(ast, 1):
        print(line, file=out)
    print(f"class: {qc.kind.value}" + (f" ({qc.reason})" if qc.reason else ""), file=out)
    print(f"privacy unit: {catalog.privacy_unit.value}", file=out)
    if qc.kind in (QueryKind.UNSUPPORTED, QueryKind.DATA_QUERY):
        print("mechanism: none (the engine rejects this query)", file=out)
        return EXIT_OK
    r = qc.ast
    c = contribution_bound(r, catalog)
    print(f"max user contribution: {c if c is not None else 'undeclared'}", file=out)
    print(f"global sensitivity: {global_sensitivity(r, catalog)}", file=out)
    print(f"stability-composed: {stability_bound(r, catalog)}", file=out)
    try:
        print(f"elastic sensitivity: {elastic_sensitivity(r, db, catalog)}", file=out)
    except UnsupportedAggregate as exc:
        print(f"elastic sensitivity: n/a ({exc})", file=out)
    route = "histogram" if qc.is_histogram else "scalar"
    chosen = Mechanism(args.mechanism)
    for m in Mechanism:
        mark = "*" if m is chosen else " "
        print(f"{mark} {m.value}: {_admission(r, db, catalog, m, qc.is_histogram)}", file=out)
    print(f"mechanism: {chosen.value} via the {route} path", file=out)
    return EXIT_OK


def cmd_bench(args, out) -> int:
    from dpsql.bench.datagen import generate_data, tpch_catalog
    from dpsql.bench.report import write_all
    from dpsql.bench.runner import DEFAULT_MECHANISMS, BenchConfig, run_suite

    mechs = DEFAULT_MECHANISMS
    if args.mechanisms:
        try:
            mechs = tuple(Mechanism(m.strip()) for m in args.mechanisms.split(",") if m.strip())
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    config = BenchConfig(
        scale=args.scale, data_seed=args.data_seed, noise_seed=args.noise_seed,
        epsilons=args.epsilons, repetitions=args.reps, mechanisms=mechs, delta=args.delta,
        suppressor=Suppressor(args.suppressor), saa_partitions=args.saa_partitions,
    )
    catalog = tpch_catalog()
    db = generate_data(config.scale, config.data_seed, catalog)
    if args.export_data:
        dump_database(db, args.export_data)
    report = run_suite(config, catalog, db)
    answered = sum(r.answered for r in report.rows)
    print(f"{len(report.rows)} cells, {answered} answered, {db.total_rows} rows of data", file=out)
    for p in write_all(report, args.out, plots=not args.no_plots):
        print(f"wrote {p}", file=out)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "inspect": cmd_inspect, "bench": cmd_bench}


def main(argv: list[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args, out)
    except RejectedQuery as exc:
        print(f"rejected: {exc}", file=err)
        return EXIT_REJECTED
    except UnsupportedFeature as exc:
        print(f"rejected: {RejectedQuery(RejectReason.UNSUPPORTED, exc.feature)}", file=err)
        return EXIT_REJECTED
    except SqlSyntaxError as exc:
        print(f"syntax error: {exc}", file=err)
        return EXIT_USAGE
    except (UsageError, DpSqlError, ValueError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
