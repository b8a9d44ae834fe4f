"""Report rendering: plain-text summaries, delimited tables, and
matplotlib figures written next to them."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .dataset import REFERENCE_INSTRUCTIONS_PER_PDF, CorpusStats, ScoreTable

_PNG_METADATA = {"Software": "pdfharvest"}  # keep PNG output reproducible


def render_stats_summary(stats: CorpusStats, extras: dict | None = None) -> str:
    rows = [
        ("PDFs scanned", stats.pdfs_scanned),
        ("PDFs selected", stats.pdfs_selected),
        ("Pages processed", stats.pages_processed),
        ("Images extracted", stats.images_extracted),
        ("Images dropped by size filter", stats.images_size_filtered),
        ("Pairs emitted", stats.pairs_emitted),
        ("Samples quarantined", stats.samples_quarantined),
        ("Instructions emitted", stats.instructions_emitted),
    ]
    for key, value in (extras or {}).items():
        rows.append((key, value))
    width = max(len(label) for label, _ in rows)
    lines = ["Corpus statistics", "=" * 17]
    lines += [f"{label:<{width}}  {value}" for label, value in rows]
    lines.append("")
    lines.append(
        f"Instructions per selected PDF: {stats.instructions_per_pdf:.2f} "
        f"(reference corpus: {REFERENCE_INSTRUCTIONS_PER_PDF:.2f} = 362K/200K)"
    )
    return "\n".join(lines) + "\n"


def write_stats_report(stats: CorpusStats, out_dir: Path, extras: dict | None = None) -> dict:
    """stats.json + summary.txt + a funnel figure; returns written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = stats.as_dict()
    if extras:
        payload.update(extras)
    json_path = out_dir / "stats.json"
    json_path.write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    txt_path = out_dir / "summary.txt"
    txt_path.write_text(render_stats_summary(stats, extras), encoding="utf-8")
    fig_path = out_dir / "pipeline_funnel.png"
    _plot_funnel(stats, fig_path)
    return {"json": json_path, "summary": txt_path, "figure": fig_path}


def _plot_funnel(stats: CorpusStats, path: Path) -> None:
    labels = ["scanned", "selected", "images", "pairs", "instructions"]
    values = [
        stats.pdfs_scanned,
        stats.pdfs_selected,
        stats.images_extracted,
        stats.pairs_emitted,
        stats.instructions_emitted,
    ]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(labels, values, color="#4878a8")
    ax.set_ylabel("count")
    ax.set_title("Pipeline funnel")
    for i, v in enumerate(values):
        ax.text(i, v, str(v), ha="center", va="bottom", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)


def write_score_report(table: ScoreTable, out_dir: Path) -> dict:
    """scores.csv + ratio bar figure. The overall row pools all rows
    rather than averaging category ratios."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "scores.csv"
    with csv_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["category", "model_mean", "reference_mean", "ratio_pct"])
        for category, score in sorted(table.per_category.items()):
            writer.writerow(
                [
                    category,
                    f"{score.model_mean:.6g}",
                    f"{score.reference_mean:.6g}",
                    f"{score.ratio_pct:.4f}",
                ]
            )
        writer.writerow(
            [
                "overall(pooled)",
                f"{table.overall_model_mean:.6g}",
                f"{table.overall_reference_mean:.6g}",
                f"{table.overall_ratio_pct:.4f}",
            ]
        )
    fig_path = out_dir / "score_ratios.png"
    _plot_scores(table, fig_path)
    return {"csv": csv_path, "figure": fig_path}


def _plot_scores(table: ScoreTable, path: Path) -> None:
    categories = sorted(table.per_category)
    ratios = [table.per_category[c].ratio_pct for c in categories]
    categories.append("overall")
    ratios.append(table.overall_ratio_pct)
    fig, ax = plt.subplots(figsize=(max(5, 1.2 * len(categories)), 4))
    colors = ["#4878a8"] * (len(categories) - 1) + ["#b04848"]
    ax.bar(categories, ratios, color=colors)
    ax.axhline(100.0, color="gray", linestyle="--", linewidth=1, label="reference parity")
    ax.set_ylabel("score ratio (%)")
    ax.set_title("Judge score ratio vs reference answers")
    ax.legend(loc="lower right", fontsize=8)
    for i, v in enumerate(ratios):
        ax.text(i, v, f"{v:.1f}", ha="center", va="bottom", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)
