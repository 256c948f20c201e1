"""End-to-end primary-colour editing.

Model parameters (the 3x3 transform and the blending threshold) are
estimated on a small thumbnail, then applied at full resolution: the
correction is one matrix product and the suppression mask is rebuilt
pixel-wise with the thumbnail-estimated threshold, so large images stay
cheap to process.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import colorspace
from .blending import blend, build_mask, search_delta_e_max
from .clustering import ClusteringParams, adaptive_meanshift, build_target_palette
from .colorspace import LabColor, RgbColor
from .correction import apply_matrix, estimate_matrix
from .image import PixelMatrix, box_resample, load_image, save_image
from .regrain import RegrainParams, regrain


@dataclass(frozen=True)
class EditRequest:
    """Everything a single edit needs besides the image itself."""

    target: RgbColor
    enable_regrain: bool = False
    max_clusters: int = 5
    thumbnail_size: int = 32
    chroma_floor: float = 10.0
    regularisation: float = 1e-3
    regrain_params: RegrainParams = field(default_factory=RegrainParams)

    def __post_init__(self) -> None:
        if self.thumbnail_size < 8:
            raise ValueError("thumbnail size must be at least 8")
        if self.max_clusters < 1:
            raise ValueError("max_clusters must be at least 1")
        if not all(0.0 <= c <= 1.0 for c in self.target):
            raise ValueError("target channels must lie in [0, 1]")


@dataclass
class EditReport:
    """Audit record of one edit: palette, model, search trace, timings."""

    width: int
    height: int
    target_hex: str
    target_rgb: list[float]
    target_lab: list[float]
    settings: dict
    palette_centres_lab: list[list[float]]
    palette_centres_rgb: list[list[float]]
    palette_weights: list[float]
    primary_index: int
    palette_gamut_clamped: bool
    target_palette_lab: list[list[float]]
    matrix: list[list[float]]
    delta_e_max: float
    candidates: list[float]
    objectives: list[float]
    timings: dict
    output_clamp_fraction: float

    def to_dict(self) -> dict:
        return {
            "image": {"width": self.width, "height": self.height},
            "target": {
                "hex": self.target_hex,
                "rgb": self.target_rgb,
                "lab": self.target_lab,
            },
            "settings": self.settings,
            "palette": {
                "centres_lab": self.palette_centres_lab,
                "centres_rgb": self.palette_centres_rgb,
                "weights": self.palette_weights,
                "primary_index": self.primary_index,
                "gamut_clamped": self.palette_gamut_clamped,
            },
            "target_palette": {"centres_lab": self.target_palette_lab},
            "correction": {"matrix": self.matrix, "delta_e_max": self.delta_e_max},
            "search": {"candidates": self.candidates, "objectives": self.objectives},
            "timings": self.timings,
            "output": {"clamp_fraction": self.output_clamp_fraction},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EditReport":
        return cls(
            width=data["image"]["width"],
            height=data["image"]["height"],
            target_hex=data["target"]["hex"],
            target_rgb=data["target"]["rgb"],
            target_lab=data["target"]["lab"],
            settings=data["settings"],
            palette_centres_lab=data["palette"]["centres_lab"],
            palette_centres_rgb=data["palette"]["centres_rgb"],
            palette_weights=data["palette"]["weights"],
            primary_index=data["palette"]["primary_index"],
            palette_gamut_clamped=data["palette"]["gamut_clamped"],
            target_palette_lab=data["target_palette"]["centres_lab"],
            matrix=data["correction"]["matrix"],
            delta_e_max=data["correction"]["delta_e_max"],
            candidates=data["search"]["candidates"],
            objectives=data["search"]["objectives"],
            timings=data["timings"],
            output_clamp_fraction=data["output"]["clamp_fraction"],
        )


def make_thumbnail(img: PixelMatrix, size: int = 32) -> PixelMatrix:
    """Box-filter resample to size x size, ignoring aspect ratio."""
    return PixelMatrix.from_grid(box_resample(img.to_grid(), size, size))


def edit_primary_colour(
    img: PixelMatrix, request: EditRequest
) -> tuple[PixelMatrix, EditReport]:
    """Replace the image's primary colour with the requested target."""
    timings: dict[str, float] = {}
    start = time.perf_counter()

    tick = time.perf_counter()
    thumb = make_thumbnail(img, request.thumbnail_size)
    thumb_lab = colorspace.image_to_lab(thumb)
    timings["thumbnail"] = time.perf_counter() - tick

    tick = time.perf_counter()
    palette = adaptive_meanshift(
        thumb_lab,
        ClusteringParams(
            max_clusters=request.max_clusters, chroma_floor=request.chroma_floor
        ),
    )
    timings["clustering"] = time.perf_counter() - tick

    tick = time.perf_counter()
    target_lab = colorspace.rgb_to_lab(request.target)
    target_palette = build_target_palette(palette, target_lab)
    source_rgb, clamped_src = colorspace.lab_array_to_rgb(palette.centres)
    target_rgb, clamped_tgt = colorspace.lab_array_to_rgb(target_palette.centres)
    gamut_clamped = bool(clamped_src.any() or clamped_tgt.any())
    matrix = estimate_matrix(
        source_rgb, target_rgb, palette.weights, request.regularisation
    )
    timings["estimation"] = time.perf_counter() - tick

    tick = time.perf_counter()
    corrected_thumb = thumb.with_pixels(apply_matrix(thumb.pixels, matrix))
    search = search_delta_e_max(thumb, corrected_thumb, target_lab)
    timings["search"] = time.perf_counter() - tick

    tick = time.perf_counter()
    output, clamp_fraction = apply_correction(
        img, matrix, search.delta_e_max, target_lab
    )
    timings["apply"] = time.perf_counter() - tick

    if request.enable_regrain:
        tick = time.perf_counter()
        output = regrain(img, output, request.regrain_params)
        timings["regrain"] = time.perf_counter() - tick

    timings["total"] = time.perf_counter() - start

    report = EditReport(
        width=img.width,
        height=img.height,
        target_hex=colorspace.to_hex(request.target),
        target_rgb=[float(v) for v in request.target],
        target_lab=[float(v) for v in target_lab],
        settings={
            "max_clusters": request.max_clusters,
            "thumbnail_size": request.thumbnail_size,
            "chroma_floor": request.chroma_floor,
            "regularisation": request.regularisation,
            "regrain": request.enable_regrain,
        },
        palette_centres_lab=palette.centres.tolist(),
        palette_centres_rgb=source_rgb.tolist(),
        palette_weights=palette.weights.tolist(),
        primary_index=palette.primary_index,
        palette_gamut_clamped=gamut_clamped,
        target_palette_lab=target_palette.centres.tolist(),
        matrix=matrix.tolist(),
        delta_e_max=search.delta_e_max,
        candidates=list(search.candidates),
        objectives=list(search.objectives),
        timings=timings,
        output_clamp_fraction=clamp_fraction,
    )
    return output, report


def apply_correction(
    img: PixelMatrix,
    matrix: np.ndarray,
    delta_e_max: float,
    target: LabColor,
    enable_regrain: bool = False,
    regrain_params: RegrainParams | None = None,
) -> tuple[PixelMatrix, float]:
    """Apply an already-estimated model at full resolution.

    Returns the edited image and the fraction of pixels clamped into
    [0, 1] after blending. Pixels whose corrected colour is at least
    ``delta_e_max`` from the target are restored to the input exactly.
    """
    corrected = img.with_pixels(apply_matrix(img.pixels, matrix))
    mask = build_mask(corrected, target, delta_e_max)
    blended = blend(img.pixels, corrected.pixels, mask)
    out_of_range = np.any((blended < 0.0) | (blended > 1.0), axis=1)
    clamp_fraction = float(out_of_range.mean())
    output = img.with_pixels(np.clip(blended, 0.0, 1.0))
    if enable_regrain:
        output = regrain(img, output, regrain_params or RegrainParams())
    return output, clamp_fraction


@dataclass(frozen=True)
class BatchEntry:
    input_path: str
    target_hex: str
    output_path: str


@dataclass
class BatchResult:
    entry: BatchEntry
    report: EditReport | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _run_entry(entry: BatchEntry, request: EditRequest) -> BatchResult:
    try:
        target = colorspace.parse_hex_color(entry.target_hex)
        img = load_image(entry.input_path)
        output, report = edit_primary_colour(img, replace(request, target=target))
        save_image(output, entry.output_path)
        return BatchResult(entry=entry, report=report)
    except Exception as exc:  # per-entry isolation: record, never abort batch
        return BatchResult(entry=entry, error=f"{type(exc).__name__}: {exc}")


def edit_batch(
    entries: list[BatchEntry], request: EditRequest, jobs: int = 1
) -> list[BatchResult]:
    """Process manifest entries independently; failures stay per-entry.

    ``request.target`` is ignored, each entry carries its own target. With
    ``jobs`` > 1 entries run in worker processes; outputs are deterministic
    per entry regardless of the job count.
    """
    if not entries:
        return []
    if jobs <= 1 or len(entries) == 1:
        return [_run_entry(entry, request) for entry in entries]
    with ProcessPoolExecutor(max_workers=min(jobs, len(entries))) as pool:
        return list(pool.map(_run_entry, entries, [request] * len(entries)))
