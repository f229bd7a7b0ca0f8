"""CSV emission for run reports.

Two tables per run: a summary with one row per (protocol, N, F) point and a
trace table with per-tick throughput and PF ratios. Numbers are written with
nine significant digits; a '#' metadata header carries the seed and a hash of
the fully resolved config so output files are audit-friendly. Wall-clock
timings never enter the files, which keeps same-seed reruns byte-identical.
"""

from __future__ import annotations

import os

from .runner import RunReport, SweepResult


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return format(float(x), ".9g")


SUMMARY_COLUMNS = (
    "protocol",
    "n_aps",
    "n_channels",
    "trials",
    "mean_throughput_bps",
    "mean_utility",
    "mean_collision_per_txop",
    "mean_idle_per_txop",
)


def _metadata(report: RunReport) -> list[str]:
    cfg = report.config
    return [
        f"# seed={cfg.seed}",
        f"# config_sha256={cfg.config_hash()}",
    ]


def _summary_row(report: RunReport) -> str:
    cfg = report.config
    cells = (
        cfg.protocol,
        str(cfg.n_aps),
        str(cfg.n_channels),
        str(cfg.trials),
        _fmt(report.mean_throughput),
        _fmt(report.mean_utility),
        _fmt(report.mean_collision_per_txop),
        _fmt(report.mean_idle_per_txop),
    )
    return ",".join(cells)


def summary_csv_text(reports: list[RunReport]) -> str:
    lines = _metadata(reports[0]) if reports else []
    lines.append(",".join(SUMMARY_COLUMNS))
    lines.extend(_summary_row(r) for r in reports)
    return "\n".join(lines) + "\n"


def trace_csv_text(report: RunReport) -> str:
    """Per-tick series: throughput plus one PF-ratio column per AP."""
    n_aps = report.config.n_aps
    header = ["trial", "tick", "throughput_bps"]
    header += [f"pf_ratio_ap{ap}" for ap in range(n_aps)]
    lines = _metadata(report)
    lines.append(",".join(header))
    for idx, trace in enumerate(report.trials):
        if trace.trace_ticks is None:
            continue
        for row, tick in enumerate(trace.trace_ticks):
            cells = [str(idx), str(int(tick)), _fmt(trace.trace_throughput[row])]
            if trace.trace_pf is not None:
                cells += [_fmt(v) for v in trace.trace_pf[row]]
            else:
                cells += [""] * n_aps
            lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _write(text: str, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_summary_csv(reports: list[RunReport], path: str) -> None:
    _write(summary_csv_text(reports), path)


def write_trace_csv(report: RunReport, path: str) -> None:
    _write(trace_csv_text(report), path)


def emit_csv(report: RunReport, out_dir: str) -> list[str]:
    """Write summary.csv and trace.csv for one report; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    summary = os.path.join(out_dir, "summary.csv")
    trace = os.path.join(out_dir, "trace.csv")
    write_summary_csv([report], summary)
    write_trace_csv(report, trace)
    return [summary, trace]


def emit_sweep_csv(sweep: SweepResult, out_dir: str) -> list[str]:
    """Write one summary.csv with a row per sweep point."""
    os.makedirs(out_dir, exist_ok=True)
    summary = os.path.join(out_dir, "summary.csv")
    write_summary_csv(sweep.reports, summary)
    return [summary]
