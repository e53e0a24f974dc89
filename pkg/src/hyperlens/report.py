"""Score report rendering: delimited output plus figures.

The report is one row per clustering algorithm with the averaged
precision/recall/F1 triple. Alongside the TSV, the report path renders two
PNG figures: a grouped bar chart of the three metrics per algorithm and a
box plot of the per-user F1 distributions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .evaluation import ScoreTriple, UserScore  # noqa: E402

logger = logging.getLogger(__name__)

# Report row order; the content baselines first, the access-pattern path last.
REPORT_ALGORITHMS = (
    "EM",
    "Filtered",
    "K-Mean",
    "FarthestFirst",
    "Density",
    "Hierarchical",
    "Hypergraph",
)


@dataclass
class ReportRow:
    algorithm: str
    triple: ScoreTriple


def render_report(rows: Sequence[ReportRow]) -> str:
    """TSV with header ``algorithm precision recall f1``."""
    lines = ["algorithm\tprecision\trecall\tf1"]
    for row in rows:
        lines.append(
            f"{row.algorithm}\t{row.triple.precision:.6f}"
            f"\t{row.triple.recall:.6f}\t{row.triple.f1:.6f}")
    return "".join(line + "\n" for line in lines)


def parse_report(text: str) -> List[ReportRow]:
    rows = []
    lines = [ln for ln in text.splitlines() if ln.strip()]
    for line in lines[1:]:
        algorithm, precision, recall, f1 = line.split("\t")
        rows.append(ReportRow(algorithm=algorithm, triple=ScoreTriple(
            precision=float(precision), recall=float(recall), f1=float(f1))))
    return rows


def render_score_figure(rows: Sequence[ReportRow], path: Path) -> None:
    """Grouped bar chart of precision/recall/F1 per algorithm."""
    names = [row.algorithm for row in rows]
    metrics = {
        "precision": [row.triple.precision for row in rows],
        "recall": [row.triple.recall for row in rows],
        "f1": [row.triple.f1 for row in rows],
    }
    fig, ax = plt.subplots(figsize=(8, 4))
    width = 0.27
    for offset, (label, values) in enumerate(metrics.items()):
        positions = [i + (offset - 1) * width for i in range(len(names))]
        ax.bar(positions, values, width=width, label=label)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_ylim(0, 1)
    ax.set_ylabel("score")
    ax.set_title("Recommendation scores per clustering algorithm")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="png")
    plt.close(fig)


def render_f1_distribution_figure(per_algorithm: Dict[str, List[UserScore]],
                                  path: Path) -> None:
    """Box plot of the per-user F1 values for each algorithm."""
    names = [name for name in REPORT_ALGORITHMS if name in per_algorithm]
    names += sorted(set(per_algorithm) - set(names))
    data = [[score.triple.f1 for score in per_algorithm[name]] for name in names]
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.boxplot(data, labels=names)
    ax.set_ylim(0, 1)
    ax.set_ylabel("per-user F1")
    ax.set_title("Per-user best-cluster F1 distribution")
    plt.setp(ax.get_xticklabels(), rotation=30, ha="right")
    fig.tight_layout()
    fig.savefig(path, format="png")
    plt.close(fig)
