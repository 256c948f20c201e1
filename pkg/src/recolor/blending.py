"""Suppression of colour changes unrelated to the primary colour.

The corrected image is alpha-blended back towards the original with a
per-pixel mask derived from a*b* chroma distance to the target colour. The
capping threshold for that distance is picked by minimising the entropy of
the binary-edge disagreement between the blended and original images over
a fixed candidate grid.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .colorspace import LabColor, image_to_lab, image_to_lab_clipped
from .correction import GRID_CANDIDATES
from .image import PixelMatrix


def chroma_distance(x: LabColor, target: LabColor) -> float:
    """Euclidean distance in the a*b* plane; lightness is ignored."""
    return float(np.hypot(x.a - target.a, x.b - target.b))


def normalise_distance(delta_e: float, delta_e_max: float) -> float:
    """Cap at 1 and rescale so distances at/above the threshold saturate."""
    if delta_e_max <= 0:
        raise ValueError("delta_e_max must be positive")
    return min(1.0, delta_e / delta_e_max)


def build_mask(
    corrected: PixelMatrix, target: LabColor, delta_e_max: float
) -> np.ndarray:
    """Per-pixel scaling factors in [0, 1] from the corrected image.

    Pixels whose corrected colour sits far from the target in a*b* get a
    factor of 1 (fully restored to the original); pixels at the target get
    0 (fully corrected). Corrected pixels are clipped to [0, 1] for the Lab
    conversion only.
    """
    lab = image_to_lab_clipped(corrected.pixels)
    dist = np.hypot(lab[:, 1] - target.a, lab[:, 2] - target.b)
    return np.minimum(1.0, dist / float(delta_e_max))


def blend(original: np.ndarray, corrected: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Per-pixel convex combination: mask 1 keeps the original exactly."""
    original = np.asarray(original, dtype=np.float64)
    corrected = np.asarray(corrected, dtype=np.float64)
    if original.shape != corrected.shape:
        raise ValueError("image shapes differ")
    if mask.shape != (original.shape[0],):
        raise ValueError("mask length does not match pixel count")
    d = mask[:, None]
    return (1.0 - d) * corrected + d * original


def sobel_edges(channel: np.ndarray, threshold_scale: float = 4.0) -> np.ndarray:
    """Binary edge map from the 3x3 Sobel gradient magnitude (no thinning).

    Borders are replicate-padded and the binarisation threshold adapts to
    the channel: ``threshold_scale`` times its mean gradient magnitude.
    """
    p = np.pad(np.asarray(channel, dtype=np.float64), 1, mode="edge")
    gx = (
        (p[:-2, 2:] + 2.0 * p[1:-1, 2:] + p[2:, 2:])
        - (p[:-2, :-2] + 2.0 * p[1:-1, :-2] + p[2:, :-2])
    )
    gy = (
        (p[2:, :-2] + 2.0 * p[2:, 1:-1] + p[2:, 2:])
        - (p[:-2, :-2] + 2.0 * p[:-2, 1:-1] + p[:-2, 2:])
    )
    magnitude = np.hypot(gx, gy)
    return (magnitude > threshold_scale * magnitude.mean()).astype(np.uint8)


def entropy(p: np.ndarray) -> float:
    """Shannon entropy (natural log) of a nonnegative vector.

    The vector is normalised to sum 1 internally; 0 log 0 counts as 0 and
    the all-zero vector has entropy 0 (no discrepancies, no information).
    """
    p = np.asarray(p, dtype=np.float64).ravel()
    if np.any(p < 0):
        raise ValueError("entropy input must be nonnegative")
    total = p.sum()
    if total == 0:
        return 0.0
    q = p[p > 0] / total
    return float(-(q * np.log(q)).sum())


def edge_entropy_objective(original_lab: PixelMatrix, blended_lab: PixelMatrix) -> float:
    """Edge-preservation score: lower means the blend kept the original edges.

    Sums, over the a* and b* channels, the entropy of the absolute
    difference between the binary edge maps of the two images.
    """
    if (original_lab.height, original_lab.width) != (blended_lab.height, blended_lab.width):
        raise ValueError("image shapes differ")
    score = 0.0
    for channel in (1, 2):
        e_original = sobel_edges(original_lab.channel_grid(channel))
        e_blended = sobel_edges(blended_lab.channel_grid(channel))
        score += entropy(np.abs(e_blended.astype(np.int8) - e_original.astype(np.int8)))
    return score


class SearchResult(NamedTuple):
    delta_e_max: float
    mask: np.ndarray
    objectives: tuple[float, ...]  # one per candidate, in grid order
    candidates: tuple[float, ...] = GRID_CANDIDATES


def search_delta_e_max(
    original: PixelMatrix, corrected: PixelMatrix, target: LabColor
) -> SearchResult:
    """Pick the capping threshold over the fixed grid {10, 30, ..., 210}.

    Every candidate is evaluated exhaustively (the grid is tiny) and the
    global minimiser of the edge-entropy objective wins; ties go to the
    smallest threshold, i.e. the least intervention.
    """
    original_lab = image_to_lab(original)
    objectives: list[float] = []
    masks: list[np.ndarray] = []
    for candidate in GRID_CANDIDATES:
        mask = build_mask(corrected, target, candidate)
        blended = blend(original.pixels, corrected.pixels, mask)
        blended_lab = original.with_pixels(image_to_lab_clipped(blended))
        objectives.append(edge_entropy_objective(original_lab, blended_lab))
        masks.append(mask)
    best = int(np.argmin(objectives))  # argmin takes the first of tied minima
    return SearchResult(GRID_CANDIDATES[best], masks[best], tuple(objectives))
