"""Figures and CSV tables for pipeline reports."""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402


def plot_family(report: dict, path: Path) -> Path:
    levels = report.get("family", {}).get("levels", {})
    fig, ax = plt.subplots(figsize=(6, 3.5))
    width = 0.8 / max(1, len(levels) - 1)
    for k, (lev, info) in enumerate(sorted(levels.items())):
        if lev == "0":
            continue
        hist = {int(a): b for a, b in info["codim_histogram"].items()}
        xs = sorted(hist)
        ax.bar([x + (k - 1) * width for x in xs], [hist[x] for x in xs], width,
               label=f"level {lev} ({info['exceptional']} exceptional)")
    ax.set_xlabel("codimension at own level")
    ax.set_ylabel("sets")
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    ax.set_title("Extracted families")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_tiling(report: dict, path: Path) -> Path:
    """Each level drawn as a row of intervals over the vertex order, shaded by codimension."""
    cubes = report.get("tiling", {}).get("cubes", [])
    n = report["regime"]["n"]
    fig, ax = plt.subplots(figsize=(8, 0.9 + 0.6 * max(1, 1 + max((c["level"] for c in cubes),
                                                                    default=0))))
    cmap = plt.get_cmap("viridis")
    for c in cubes:
        text = c["cube"]
        codim = len(text.rstrip("*"))
        lo = int(text[:codim], 2) << (n - codim) if codim else 0
        size = 1 << (n - codim)
        ax.add_patch(Rectangle((lo, c["level"] - 0.4), size, 0.8, facecolor=cmap(codim / max(n, 1)),
                               edgecolor="black", linewidth=0.5))
        if size * 40 >= (1 << n):
            ax.text(lo + size / 2, c["level"], text, ha="center", va="center", fontsize=6)
    ax.set_xlim(0, 1 << n)
    top = max((c["level"] for c in cubes), default=0)
    ax.set_ylim(top + 0.5, -0.5)
    ax.set_yticks(range(top + 1))
    ax.set_ylabel("level")
    ax.set_xlabel("vertex of Q_n")
    ax.set_title("Multi-tiling (shade = codimension)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_embedding(report: dict, path: Path) -> Path:
    stats = report.get("embedding_stats", [])
    fig, ax = plt.subplots(figsize=(6, 3.5))
    if stats:
        xs = range(len(stats))
        ax.plot(xs, [r["peak_external"] / r["size"] for r in stats], "o-", label="external / |T_C|")
        ax.plot(xs, [r["peak_internal"] / r["size"] for r in stats], "s-", label="internal / |T_C|")
        ax.set_xticks(list(xs))
        ax.set_xticklabels([r["cube"] for r in stats], rotation=60, fontsize=6)
        ax.legend(fontsize=8)
    ax.set_ylabel("peak forbidden fraction")
    ax.set_title("Greedy embedding pressure")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def write_figures(report: dict, outdir: str | Path) -> list[Path]:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    if "family" in report:
        paths.append(plot_family(report, out / "family.png"))
    if report.get("tiling", {}).get("cubes"):
        paths.append(plot_tiling(report, out / "tiling.png"))
    if report.get("embedding_stats"):
        paths.append(plot_embedding(report, out / "embedding.png"))
    return paths


CSV_FIELDS = ["cube_id", "level", "cube", "codims", "set", "set_size", "pruned_size",
              "removed", "peak_internal", "peak_external"]


def write_csv(report: dict, path: str | Path) -> Path:
    """One row per cube of the multi-tiling."""
    stats = {r["cube"]: r for r in report.get("embedding_stats", [])}
    top = report["regime"]["s"] - 2
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        w.writeheader()
        for c in report.get("tiling", {}).get("cubes", []):
            st = stats.get(c["cube"]) if c["level"] == top else None
            w.writerow({"cube_id": c["id"], "level": c["level"], "cube": c["cube"],
                        "codims": " ".join(map(str, c["codims"])), "set": c["set"],
                        "set_size": c["set_size"],
                        "pruned_size": st["size"] if st else "",
                        "removed": c["set_size"] - st["size"] if st else "",
                        "peak_internal": st["peak_internal"] if st else "",
                        "peak_external": st["peak_external"] if st else ""})
    return path
