"""Delimited report output and figures."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from dpsql.bench.runner import BenchReport

REPORT_COLUMNS = (
    "query_id", "mechanism", "epsilon", "outcome", "metric_kind", "metric_mean",
    "metric_std", "time_mean_s", "time_std_s", "overhead_ratio", "n_reps", "seed",
)
TIMING_COLUMNS = ("time_mean_s", "time_std_s", "overhead_ratio")
LONG_COLUMNS = ("query_id", "mechanism", "epsilon", "metric_kind", "rep", "error_pct")

FOOTER = (
    "# MMAPE excludes true bins with zero count; suppressed bins count as a zero estimate",
    "# rejected rows carry no metrics; timing columns are wall-clock and not reproducible",
)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_report_csv(report: BenchReport, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in report.rows:
            w.writerow([_fmt(getattr(r, c)) for c in REPORT_COLUMNS])
        c = report.config
        fh.write(
            f"# scale={c.scale!r} data_seed={c.data_seed} noise_seed={c.noise_seed} "
            f"reps={c.repetitions} delta={c.delta!r} suppressor={c.suppressor.value} "
            f"saa_partitions={c.saa_partitions}\n"
        )
        for line in FOOTER:
            fh.write(line + "\n")


def write_long_csv(report: BenchReport, path: str | Path) -> None:
    """One row per repetition, for log-scale error plots."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LONG_COLUMNS)
        for r in report.rows:
            for i, e in enumerate(r.errors):
                w.writerow([r.query_id, r.mechanism, repr(r.epsilon), r.metric_kind, i, repr(e)])


def write_environment(report: BenchReport, path: str | Path) -> None:
    c = report.config
    doc = {
        "environment": report.environment,
        "config": {
            "scale": c.scale, "data_seed": c.data_seed, "noise_seed": c.noise_seed,
            "epsilons": list(c.epsilons), "repetitions": c.repetitions,
            "mechanisms": [m.value for m in c.mechanisms], "delta": c.delta,
            "suppressor": c.suppressor.value, "saa_partitions": c.saa_partitions,
        },
        "baseline_time_s": {q: {"mean": m, "std": s} for q, (m, s) in report.baseline.items()},
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def strip_timing(csv_text: str) -> str:
    """Report text with timing columns blanked, for determinism checks."""
    lines = csv_text.splitlines()
    out = []
    reader = csv.reader([l for l in lines if not l.startswith("#")])
    header = next(reader)
    drop = {header.index(c) for c in TIMING_COLUMNS}
    out.append(",".join(header))
    for row in reader:
        out.append(",".join("" if i in drop else v for i, v in enumerate(row)))
    out.extend(l for l in lines if l.startswith("#"))
    return "\n".join(out)


def plot_errors(report: BenchReport, path: str | Path) -> None:
    """One panel per epsilon: mean error per query and mechanism, log scale."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    cfg = report.config
    queries = list(dict.fromkeys(r.query_id for r in report.rows))
    mechs = [m.value for m in cfg.mechanisms]
    width = 0.8 / max(len(mechs), 1)
    fig, axes = plt.subplots(1, len(cfg.epsilons), figsize=(5 * len(cfg.epsilons), 4.5), sharey=True, squeeze=False)
    for ax, eps in zip(axes[0], cfg.epsilons):
        for j, m in enumerate(mechs):
            xs, ys, errs = [], [], []
            for i, q in enumerate(queries):
                r = report.row(q, m, eps)
                if r.answered and r.metric_mean > 0:
                    xs.append(i + (j - (len(mechs) - 1) / 2) * width)
                    ys.append(r.metric_mean)
                    errs.append(r.metric_std)
            ax.bar(xs, ys, width=width, label=m)
        ax.set_yscale("log")
        ax.set_title(f"epsilon = {eps:g}")
        ax.set_xticks(range(len(queries)))
        ax.set_xticklabels(queries, rotation=60, ha="right", fontsize=8)
        ax.grid(axis="y", which="both", alpha=0.3)
    axes[0][0].set_ylabel("error (%)")
    axes[0][-1].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_overhead(report: BenchReport, path: str | Path) -> None:
    """Overhead ratio (sanitized / baseline time) per query, averaged over epsilon."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    cfg = report.config
    queries = list(dict.fromkeys(r.query_id for r in report.rows))
    mechs = [m.value for m in cfg.mechanisms]
    width = 0.8 / max(len(mechs), 1)
    fig, ax = plt.subplots(figsize=(9, 4.5))
    for j, m in enumerate(mechs):
        xs, ys = [], []
        for i, q in enumerate(queries):
            vals = [report.row(q, m, e).overhead_ratio for e in cfg.epsilons]
            vals = [v for v in vals if v is not None]
            if vals:
                xs.append(i + (j - (len(mechs) - 1) / 2) * width)
                ys.append(sum(vals) / len(vals))
        ax.bar(xs, ys, width=width, label=m)
    ax.set_yscale("log")
    ax.axhline(1.0, color="black", linewidth=0.8)
    ax.set_xticks(range(len(queries)))
    ax.set_xticklabels(queries, rotation=60, ha="right", fontsize=8)
    ax.set_ylabel("overhead ratio")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_all(report: BenchReport, out: str | Path, plots: bool = True) -> list[Path]:
    """Report CSV at ``out`` plus long CSV, environment JSON and figures beside it."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    stem = out.with_suffix("")
    paths = [out, Path(f"{stem}_long.csv"), Path(f"{stem}_env.json")]
    write_report_csv(report, paths[0])
    write_long_csv(report, paths[1])
    write_environment(report, paths[2])
    if plots:
        paths += [Path(f"{stem}_errors.png"), Path(f"{stem}_overhead.png")]
        plot_errors(report, paths[3])
        plot_overhead(report, paths[4])
    return paths
