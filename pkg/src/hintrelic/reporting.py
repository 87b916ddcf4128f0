"""Ablation report: per-algorithm OOD micro-F1 by training mode.

Columns follow the ablation ladder — no hints, hint-supervised baseline,
then pointer reversal, the contrastive term, and the KL term added one
at a time — plus the no-reversal variant of the full objective.  Cells
show mean +/- standard error over seeds as percentages; a dash marks a
cell that was not run (depth-first search has no contrasted hints, so
its contrastive cells are structurally empty).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

from .metrics import mean_stderr

REPORT_COLUMNS = (
    ("no_hints", "No Hints"),
    ("baseline", "Baseline"),
    ("baseline_reversal", "+ reversal"),
    ("relic_no_kl", "+ reversal + contr."),
    ("relic", "+ reversal + contr. + KL"),
    ("relic_no_reversal", "Hint-ReLIC (no reversal)"),
)

DASH = "-"


@dataclass
class ReportCell:
    mean: float
    stderr: float
    seeds: int

    def render(self) -> str:
        return f"{100 * self.mean:.2f} ± {100 * self.stderr:.2f}"


@dataclass
class ReportTable:
    algorithms: "list[str]"
    columns: "tuple[tuple[str, str], ...]"
    cells: "dict[tuple[str, str], ReportCell]"


def read_metrics_csv(path: "str | Path") -> "list[dict]":
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def final_ood_scores(rows: "list[dict]") -> "dict[tuple[str, str], dict[int, float]]":
    """Latest test-split micro-F1 per (algorithm, mode, seed)."""
    latest: "dict[tuple[str, str, int], tuple[int, float]]" = {}
    for row in rows:
        if row["split"] != "test" or row["micro_f1"] == "":
            continue
        key = (row["algorithm"], row["mode"], int(row["seed"]))
        step = int(row["step"])
        if key not in latest or step > latest[key][0]:
            latest[key] = (step, float(row["micro_f1"]))
    scores: "dict[tuple[str, str], dict[int, float]]" = {}
    for (algorithm, mode, seed), (_, f1) in latest.items():
        scores.setdefault((algorithm, mode), {})[seed] = f1
    return scores


def build_report(rows: "list[dict]") -> ReportTable:
    if len({row["mode"] for row in rows}) < 2:
        raise ValueError("an ablation report needs at least two modes")
    scores = final_ood_scores(rows)
    algorithms = sorted({alg for alg, _ in scores})
    cells = {}
    for (algorithm, mode), by_seed in scores.items():
        values = [by_seed[s] for s in sorted(by_seed)]
        mean, stderr = mean_stderr(values)
        cells[(algorithm, mode)] = ReportCell(mean, stderr, len(values))
    return ReportTable(algorithms=algorithms, columns=REPORT_COLUMNS, cells=cells)


def render_text(table: ReportTable) -> str:
    headers = ["Algorithm"] + [title for _, title in table.columns]
    body = []
    for algorithm in table.algorithms:
        row = [algorithm]
        for mode, _ in table.columns:
            cell = table.cells.get((algorithm, mode))
            row.append(DASH if cell is None else cell.render())
        body.append(row)
    widths = [
        max(len(headers[c]), *(len(r[c]) for r in body)) if body else len(headers[c])
        for c in range(len(headers))
    ]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for row in body:
        lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def render_csv(table: ReportTable) -> str:
    """Long-form CSV: one row per (algorithm, mode) cell."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["algorithm", "mode", "column", "mean", "stderr", "seeds"])
    for algorithm in table.algorithms:
        for mode, title in table.columns:
            cell = table.cells.get((algorithm, mode))
            if cell is None:
                writer.writerow([algorithm, mode, title, DASH, DASH, 0])
            else:
                writer.writerow(
                    [
                        algorithm,
                        mode,
                        title,
                        format(cell.mean, ".17g"),
                        format(cell.stderr, ".17g"),
                        cell.seeds,
                    ]
                )
    return buf.getvalue()
