"""Report tables: dataset statistics, similarity, classification, lexical and
POS group comparisons, and back-translation summaries, emitted as Markdown,
CSV, or JSON with significance marks and provenance footers.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from .classifier import ClassificationRun
from .corpus import DatasetStats
from .lexstats import GroupComparison
from .stattests import StatTestResult, wilcoxon_signed_rank
from .transform import KIND_ORDER, TransformationKind


@dataclass(frozen=True)
class Cell:
    value: float | str | None
    bold: bool = False
    stars: str = ""  # "*" p<0.05, "**" p<0.01
    precision: int | None = None

    def display(self) -> str:
        if self.value is None:
            return "—"
        if isinstance(self.value, str):
            text = self.value
        elif self.precision is not None:
            text = f"{self.value:.{self.precision}f}"
        else:
            text = repr(self.value)
        text += self.stars
        return f"**{text}**" if self.bold else text

    def raw(self):
        if isinstance(self.value, float):
            return self.value
        return self.value


@dataclass
class ReportTable:
    title: str
    columns: list[str]
    rows: list[tuple[str, list[Cell]]]
    footer: list[str] = field(default_factory=list)

    def __post_init__(self):
        for label, cells in self.rows:
            if len(cells) != len(self.columns):
                raise ValueError(f"row {label!r} has {len(cells)} cells, expected {len(self.columns)}")


def emit(table: ReportTable, fmt: str) -> str:
    """Render deterministic bytes; CSV keeps full precision, Markdown the
    display precision."""
    if fmt == "md":
        lines = [f"## {table.title}", ""]
        lines.append("| | " + " | ".join(table.columns) + " |")
        lines.append("|" + "---|" * (len(table.columns) + 1))
        for label, cells in table.rows:
            lines.append("| " + label + " | " + " | ".join(c.display() for c in cells) + " |")
        if table.footer:
            lines.append("")
            for note in table.footer:
                lines.append(f"*{note}*")
        return "\n".join(lines) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([""] + table.columns)
        for label, cells in table.rows:
            writer.writerow([label] + ["" if c.value is None else c.raw() for c in cells])
        return buf.getvalue()
    if fmt == "json":
        obj = {
            "title": table.title,
            "columns": table.columns,
            "rows": [
                {
                    "label": label,
                    "cells": [
                        {"value": c.raw(), "bold": c.bold, "stars": c.stars} for c in cells
                    ],
                }
                for label, cells in table.rows
            ],
            "footer": table.footer,
        }
        return json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def parse_json_table(text: str) -> ReportTable:
    obj = json.loads(text)
    return ReportTable(
        title=obj["title"],
        columns=obj["columns"],
        rows=[
            (
                row["label"],
                [Cell(c["value"], c["bold"], c["stars"]) for c in row["cells"]],
            )
            for row in obj["rows"]
        ],
        footer=obj["footer"],
    )


def _ordered(kinds) -> list[TransformationKind]:
    return [k for k in KIND_ORDER if k in kinds]


DATASET_FOOTER = "Token lengths: lowercased Unicode word tokenizer; sample (n-1) std."


def dataset_table(name: str, stats: DatasetStats) -> ReportTable:
    rows = []
    cells = []
    order = ["AD", "C"]
    for g in order:
        s = stats.per_group[g]
        cells.append(Cell(s.count))
    cells.append(Cell(stats.total))
    for g in order:
        s = stats.per_group[g]
        text = f"{s.mean_tokens:.0f}(±{s.std_tokens:.0f})"
        if s.degenerate:
            text += " (degenerate)"
        cells.append(Cell(text))
    rows.append((name, cells))
    return ReportTable(
        title="Dataset statistics",
        columns=["AD", "Control", "Total", "Length AD", "Length Control"],
        rows=rows,
        footer=[DATASET_FOOTER],
    )


SIMILARITY_FOOTER = (
    "BLEU: orders 1-4, no smoothing, lowercased word tokens. "
    "chrF: orders 1-6, beta=2, whitespace stripped. Cosine reported raw in [-1,1]."
)


def similarity_table(
    scores: dict[TransformationKind, dict[str, float]],
    reference: TransformationKind,
    missing: list[TransformationKind] | None = None,
) -> ReportTable:
    """Per-transformation mean chrF/BLEU/cosine against the reference corpus."""
    rows = []
    for kind in _ordered(scores):
        s = scores[kind]
        rows.append(
            (
                kind.value,
                [
                    Cell(s["chrf"], precision=2),
                    Cell(s["bleu"], precision=2),
                    Cell(s["cosine"], precision=2),
                ],
            )
        )
    footer = [f"Reference corpus: {reference.value}.", SIMILARITY_FOOTER]
    for kind in missing or []:
        footer.append(f"Row omitted (not computed): {kind.value}.")
    return ReportTable("Similarity scores", ["chrF", "BLEU", "Cosine"], rows, footer)


CLASSIFIER_FOOTER = (
    "Classifier: linear head over provider embeddings (not a fine-tuned BERT); "
    "class-weighted logistic loss, early stopping."
)


def classification_table(
    runs: dict[TransformationKind, list[ClassificationRun]],
    baseline: TransformationKind,
) -> ReportTable:
    """Mean macro-F1 and per-class accuracies across paired runs, with
    Wilcoxon significance stars vs. the baseline and per-column bold maxima."""
    if baseline not in runs:
        raise ValueError(f"baseline {baseline.value} missing from runs")
    base_f1 = [r.macro_f1 for r in runs[baseline]]
    n_runs = len(base_f1)
    for kind, rs in runs.items():
        if len(rs) != n_runs:
            raise ValueError(f"{kind.value}: {len(rs)} runs, expected {n_runs} (unpaired)")

    means = {
        kind: (
            sum(r.macro_f1 for r in rs) / n_runs,
            sum(r.acc_ad for r in rs) / n_runs,
            sum(r.acc_c for r in rs) / n_runs,
        )
        for kind, rs in runs.items()
    }
    maxima = tuple(max(m[i] for m in means.values()) for i in range(3))

    rows = []
    for kind in _ordered(runs):
        f1_mean, ad_mean, c_mean = means[kind]
        stars = ""
        if kind != baseline:
            kind_f1 = [r.macro_f1 for r in runs[kind]]
            if any(a != b for a, b in zip(kind_f1, base_f1)):
                res: StatTestResult = wilcoxon_signed_rank(kind_f1, base_f1)
                improved = f1_mean > means[baseline][0]
                if improved and res.p_value < 0.01:
                    stars = "**"
                elif improved and res.p_value < 0.05:
                    stars = "*"
        rows.append(
            (
                kind.value,
                [
                    Cell(f1_mean, bold=f1_mean == maxima[0], stars=stars, precision=3),
                    Cell(ad_mean, bold=ad_mean == maxima[1], precision=3),
                    Cell(c_mean, bold=c_mean == maxima[2], precision=3),
                ],
            )
        )
    footer = [
        f"Mean metrics across {n_runs} paired runs. Baseline: {baseline.value}. "
        "Stars: Wilcoxon signed-rank improvement over baseline (* p<0.05, ** p<0.01).",
        CLASSIFIER_FOOTER,
    ]
    return ReportTable(
        "Classification results",
        ["macro-F1", "Accuracy (AD)", "Accuracy (C)"],
        rows,
        footer,
    )


def group_measure_table(
    title: str,
    measures: list[str],
    comparisons: dict[TransformationKind, dict[str, GroupComparison | None]],
    footer_notes: list[str] | None = None,
) -> ReportTable:
    """C mean / AD mean / p per measure; the triple is bold when p < 0.05."""
    columns = []
    for m in measures:
        columns += [f"{m}_C", f"{m}_AD", f"{m}_p"]
    rows = []
    excluded_notes = []
    for kind in _ordered(comparisons):
        cells = []
        for m in measures:
            comp = comparisons[kind].get(m)
            if comp is None:
                cells += [Cell(None), Cell(None), Cell(None)]
                excluded_notes.append(f"{kind.value}/{m}: undefined for this corpus.")
                continue
            bold = comp.p_value < 0.05
            cells += [
                Cell(comp.mean_control, bold=bold, precision=3),
                Cell(comp.mean_ad, bold=bold, precision=3),
                Cell(comp.p_value, bold=bold, precision=3),
            ]
            if comp.excluded:
                excluded_notes.append(
                    f"{kind.value}/{m}: {comp.excluded} document(s) excluded (undefined measure)."
                )
        rows.append((kind.value, cells))
    footer = ["Welch's t-test, two-sided; bold marks p < 0.05 (strict)."]
    footer += excluded_notes
    footer += footer_notes or []
    return ReportTable(title, columns, rows, footer)
