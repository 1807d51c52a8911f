"""Rendering of experiment reports to PNG figures next to their CSV output."""

from __future__ import annotations

import re
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .harness import ExperimentReport  # noqa: E402

_GRID_NUM = re.compile(r"^[nN]=(\d+)")


def render_report(report: ExperimentReport, out_prefix: str) -> list[str]:
    """One figure per statistic with a numeric grid; returns written paths."""
    groups: dict[str, list] = defaultdict(list)
    for row in report.rows:
        m = _GRID_NUM.match(row.grid)
        if m:
            groups[row.statistic].append((int(m.group(1)), row))
    written = []
    for stat, entries in sorted(groups.items()):
        entries.sort(key=lambda e: e[0])
        x = [e[0] for e in entries]
        y = [e[1].estimate for e in entries]
        err = [3.0 * e[1].std_error if e[1].std_error else 0.0 for e in entries]
        oracle = [e[1].oracle for e in entries]
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        if any(err):
            ax.errorbar(x, y, yerr=err, fmt="o-", capsize=3, label="estimate")
        else:
            ax.plot(x, y, "o-", label="estimate")
        if all(v is not None for v in oracle):
            ax.plot(x, oracle, "k--", label="oracle")
        positive = all(v > 0 for v in y)
        if len(set(x)) > 1 and max(x) / max(min(x), 1) >= 8:
            ax.set_xscale("log", base=2)
            if positive:
                ax.set_yscale("log")
        ax.set_xlabel("grid")
        ax.set_ylabel(stat)
        ax.set_title("%s: %s" % (report.experiment, stat))
        ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
        path = "%s_%s.png" % (out_prefix, stat)
        fig.savefig(path, dpi=130)
        plt.close(fig)
        written.append(path)
    return written


def write_report_files(report: ExperimentReport, out_prefix: str,
                       figures: bool = True) -> list[str]:
    """report JSON + CSV (+ figures) under a common path prefix."""
    prefix = Path(out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    written = []
    json_path = str(prefix) + ".json"
    with open(json_path, "w") as fh:
        fh.write(report.to_json() + "\n")
    written.append(json_path)
    csv_path = str(prefix) + ".csv"
    with open(csv_path, "w") as fh:
        fh.write(report.to_csv())
    written.append(csv_path)
    if figures:
        written.extend(render_report(report, str(prefix)))
    return written
