"""Figures for anonymity reports; written next to the JSON output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams["axes.linewidth"] = 1
plt.rcParams["xtick.direction"] = "in"
plt.rcParams["ytick.direction"] = "in"
plt.rcParams["font.size"] = 10

palette = ["#1F608B", "#E6A355", "#C76048", "#D7DADA"]


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_member_ages(report: dict, path):
    ages = [a for row in report["rows"] for a in row["member_ages"]]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    if ages:
        bins = range(0, max(ages) + 2)
        ax.hist(ages, bins=bins, color=palette[0], edgecolor="white", align="left")
    ax.set_xlabel("ring member age at spend (rounds)")
    ax.set_ylabel("count")
    ax.set_title("Decoy recency")
    return _finish(fig, path)


def plot_effective_anonymity(report: dict, path):
    rows = report["rows"]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    xs = range(len(rows))
    ax.bar(xs, [r["ring_size"] for r in rows], color=palette[3], label="ring size")
    ax.bar(xs, [r["effective_anonymity"] for r in rows], color=palette[1], width=0.5,
           label="effective")
    ax.set_xlabel("withdrawal (log order)")
    ax.set_ylabel("members")
    ax.set_title("Anonymity after chain-reaction elimination")
    if rows:
        ax.legend(frameon=False)
    return _finish(fig, path)


def render_report(report: dict, outdir) -> list:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    return [
        str(plot_member_ages(report, outdir / "member_ages.png")),
        str(plot_effective_anonymity(report, outdir / "effective_anonymity.png")),
    ]
