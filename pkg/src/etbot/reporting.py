"""Render analysis results: plain-text tables for the terminal, delimited
and JSON files for machines, and matplotlib figures saved next to them.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .analytics import (
    BOT_CLASSES,
    PHASES,
    TESTER_CLASSES,
    BugStats,
    InteractionClass,
    MetricsTable,
)

_CLASS_LABELS = {
    InteractionClass.BOT_REACTIVE: "reactive",
    InteractionClass.BOT_ACTIVE: "active",
    InteractionClass.TESTER_REACTIVE: "reactive",
    InteractionClass.TESTER_ACTIVE_ACCEPTED: "active (accepted)",
    InteractionClass.TESTER_ACTIVE_INVALID: "active (invalid)",
}

_PHASE_LABELS = {"training": "training", "test_session": "test sessions"}


def render_interaction_text(table: MetricsTable) -> str:
    """Table-style text: interaction counts per phase and actor."""
    width = 18
    header = f"{'':28s}" + "".join(f"{_PHASE_LABELS[p]:>{width}s}" for p in PHASES)
    lines = ["Interactions", "=" * len(header), header]
    for actor, classes in (("bot", BOT_CLASSES), ("testers", TESTER_CLASSES)):
        lines.append(actor)
        for cls in classes:
            row = f"  {_CLASS_LABELS[cls]:26s}"
            row += "".join(f"{table.count(p, cls):>{width}d}" for p in PHASES)
            lines.append(row)
        row = f"  {'total':26s}"
        row += "".join(f"{table.total(p, actor):>{width}d}" for p in PHASES)
        lines.append(row)
    if table.excluded_plain:
        lines.append(
            f"note: {table.excluded_plain} plain tester message(s) excluded "
            "(neither commands nor dialog replies)"
        )
    if table.uncovered:
        lines.append(f"note: {table.uncovered} record(s) outside all phase spans")
    return "\n".join(lines)


def render_bug_text(stats: BugStats) -> str:
    lines = ["Bug reports", "==========="]
    lines.append(f"participants: {stats.participants}")
    counts = ", ".join(str(c) for c in stats.per_participant_counts) or "-"
    lines.append(f"bugs per participant: {counts}")
    lines.append(f"total: {stats.total}   mean: {stats.mean:g}   median: {stats.median:g}")
    return "\n".join(lines)


def interaction_rows(table: MetricsTable) -> list[dict]:
    rows = []
    for phase in PHASES:
        for actor, classes in (("bot", BOT_CLASSES), ("testers", TESTER_CLASSES)):
            for cls in classes:
                rows.append(
                    {
                        "phase": phase,
                        "actor": actor,
                        "interaction_class": cls.value,
                        "count": table.count(phase, cls),
                    }
                )
            rows.append(
                {
                    "phase": phase,
                    "actor": actor,
                    "interaction_class": "total",
                    "count": table.total(phase, actor),
                }
            )
    return rows


def write_interaction_csv(table: MetricsTable, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["phase", "actor", "interaction_class", "count"])
        writer.writeheader()
        writer.writerows(interaction_rows(table))


def write_bug_csv(stats: BugStats, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["participant", "bugs"])
        for i, count in enumerate(stats.per_participant_counts, start=1):
            writer.writerow([i, count])


def write_metrics_json(table: MetricsTable, stats: BugStats, path: Path) -> None:
    doc = {
        "interactions": {
            phase: {
                cls.value: table.count(phase, cls)
                for cls in list(BOT_CLASSES) + list(TESTER_CLASSES)
            }
            | {
                "bot_total": table.total(phase, "bot"),
                "testers_total": table.total(phase, "testers"),
            }
            for phase in PHASES
        },
        "excluded_plain": table.excluded_plain,
        "uncovered": table.uncovered,
        "bug_stats": {
            "per_participant_counts": list(stats.per_participant_counts),
            "total": stats.total,
            "mean": stats.mean,
            "median": stats.median,
        },
    }
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def render_figures(table: MetricsTable, stats: BugStats, outdir: Path) -> list[Path]:
    """Save the interaction bars and the bug-count distribution as PNGs."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written: list[Path] = []

    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=False)
    for ax, (actor, classes) in zip(axes, (("bot", BOT_CLASSES), ("testers", TESTER_CLASSES))):
        x = range(len(PHASES))
        bar_width = 0.8 / len(classes)
        for k, cls in enumerate(classes):
            values = [table.count(p, cls) for p in PHASES]
            offsets = [xi + k * bar_width for xi in x]
            ax.bar(offsets, values, width=bar_width, label=_CLASS_LABELS[cls])
        ax.set_title(f"{actor} interactions")
        ax.set_xticks([xi + 0.4 - bar_width / 2 for xi in x])
        ax.set_xticklabels([_PHASE_LABELS[p] for p in PHASES])
        ax.legend(fontsize=8)
    fig.tight_layout()
    interactions_png = outdir / "interactions.png"
    fig.savefig(interactions_png, dpi=120)
    plt.close(fig)
    written.append(interactions_png)

    fig, ax = plt.subplots(figsize=(4, 4))
    if stats.per_participant_counts:
        ax.boxplot([list(stats.per_participant_counts)], widths=0.5)
        ax.scatter(
            [1] * stats.participants,
            stats.per_participant_counts,
            alpha=0.6,
            zorder=3,
        )
    ax.set_xticks([1])
    ax.set_xticklabels(["participants"])
    ax.set_ylabel("bugs reported")
    ax.set_title("Bugs per participant")
    fig.tight_layout()
    bugs_png = outdir / "bug_counts.png"
    fig.savefig(bugs_png, dpi=120)
    plt.close(fig)
    written.append(bugs_png)
    return written


def write_outputs(
    table: MetricsTable, stats: BugStats, outdir: Path, figures: bool = True
) -> list[Path]:
    """Write the delimited tables, the JSON summary, and (optionally) the
    figures into outdir; returns every path written."""
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    p = outdir / "interactions.csv"
    write_interaction_csv(table, p)
    written.append(p)
    p = outdir / "bug_counts.csv"
    write_bug_csv(stats, p)
    written.append(p)
    p = outdir / "metrics.json"
    write_metrics_json(table, stats, p)
    written.append(p)
    if figures:
        written.extend(render_figures(table, stats, outdir))
    return written
