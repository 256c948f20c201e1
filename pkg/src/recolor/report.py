"""Report persistence and diagnostic figure rendering.

The JSON report is the machine-readable record of an edit (enough to
re-apply it); the figures give the analyst a quick visual audit: palette
before/after, the blending mask, and the threshold search curve. Figures
are written next to a delimited copy of the search trace.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .blending import build_mask
from .colorspace import LabColor, lab_array_to_rgb
from .correction import apply_matrix
from .image import PixelMatrix
from .pipeline import EditReport


def write_report(report: EditReport, path: str | os.PathLike) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2) + "\n")


def load_report(path: str | os.PathLike) -> EditReport:
    return EditReport.from_dict(json.loads(Path(path).read_text()))


def write_batch_report(reports: list[dict], path: str | os.PathLike) -> None:
    Path(path).write_text(json.dumps(reports, indent=2) + "\n")


def render_figures(
    img: PixelMatrix, report: EditReport, out_dir: str | os.PathLike
) -> list[Path]:
    """Render palette/mask/search figures plus search.csv into a directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [
        _palette_figure(report, out / "palette.png"),
        _mask_figure(img, report, out / "blend_mask.png"),
        _search_figure(report, out / "entropy_search.png"),
        _search_csv(report, out / "search.csv"),
    ]
    return written


def _palette_figure(report: EditReport, path: Path) -> Path:
    source_lab = np.asarray(report.palette_centres_lab)
    target_lab = np.asarray(report.target_palette_lab)
    source_rgb, _ = lab_array_to_rgb(source_lab)
    target_rgb, _ = lab_array_to_rgb(target_lab)
    n = len(source_rgb)

    fig, axes = plt.subplots(2, 1, figsize=(max(4.0, 1.2 * n), 3.2))
    for ax, colours, title in (
        (axes[0], source_rgb, "extracted palette"),
        (axes[1], target_rgb, "target palette"),
    ):
        ax.imshow(colours[None, :, :], aspect="auto")
        ax.set_yticks([])
        ax.set_xticks(range(n))
        ax.set_xticklabels([f"{w:.2f}" for w in report.palette_weights])
        ax.set_title(title, fontsize=10)
    for ax in axes:
        ax.add_patch(
            plt.Rectangle(
                (report.primary_index - 0.5, -0.5), 1, 1,
                fill=False, edgecolor="black", linewidth=2,
            )
        )
    axes[1].set_xlabel("cluster weight (boxed: primary)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _mask_figure(img: PixelMatrix, report: EditReport, path: Path) -> Path:
    corrected = img.with_pixels(apply_matrix(img.pixels, np.asarray(report.matrix)))
    mask = build_mask(corrected, LabColor(*report.target_lab), report.delta_e_max)
    grid = mask.reshape(img.height, img.width)

    fig, ax = plt.subplots(figsize=(5, 5 * img.height / img.width))
    im = ax.imshow(grid, cmap="gray", vmin=0.0, vmax=1.0)
    ax.set_title(f"blend mask (threshold {report.delta_e_max:g})", fontsize=10)
    ax.set_xticks([])
    ax.set_yticks([])
    fig.colorbar(im, ax=ax, fraction=0.046, label="restored fraction")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _search_figure(report: EditReport, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(report.candidates, report.objectives, marker="o")
    ax.axvline(report.delta_e_max, color="tab:red", linestyle="--",
               label=f"selected {report.delta_e_max:g}")
    ax.set_xlabel("candidate threshold")
    ax.set_ylabel("edge-difference entropy")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _search_csv(report: EditReport, path: Path) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delta_e_max", "objective", "selected"])
        for candidate, objective in zip(report.candidates, report.objectives):
            writer.writerow(
                [candidate, f"{objective:.12g}", int(candidate == report.delta_e_max)]
            )
    return path
