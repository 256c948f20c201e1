"""Predominant-colour extraction via adaptive flat-kernel MeanShift.

MeanShift is seeded from every pixel and run with a uniform-ball kernel of
radius ``bandwidth`` in raw Lab units. The adaptive wrapper grows the
bandwidth geometrically until the mode count drops to the cluster budget,
so a fixed parameter set never has to be tuned per image.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .colorspace import LabColor
from .image import PixelMatrix


class ClusteringError(RuntimeError):
    """Raised when no usable palette can be extracted."""


@dataclass(frozen=True)
class ClusteringParams:
    initial_bandwidth: float = 0.1
    growth: float = 1.5
    max_clusters: int = 5
    max_iterations: int = 50
    chroma_floor: float = 10.0

    def __post_init__(self) -> None:
        if self.initial_bandwidth <= 0:
            raise ValueError("initial bandwidth must be positive")
        if self.growth <= 1:
            raise ValueError("bandwidth growth factor must exceed 1")
        if self.max_clusters < 1:
            raise ValueError("max_clusters must be at least 1")


@dataclass(frozen=True)
class Palette:
    """Predominant Lab colours with normalised weights and the primary pick."""

    centres: np.ndarray  # (n, 3) Lab rows
    weights: np.ndarray  # (n,), positive, sums to 1
    primary_index: int

    def __post_init__(self) -> None:
        n = len(self.centres)
        if n < 1:
            raise ValueError("palette needs at least one colour")
        if len(self.weights) != n:
            raise ValueError("weights do not match centres")
        if np.any(self.weights <= 0) or abs(self.weights.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be positive and sum to 1")
        if not 0 <= self.primary_index < n:
            raise ValueError("primary index out of range")

    def __len__(self) -> int:
        return len(self.centres)

    @property
    def primary(self) -> LabColor:
        return LabColor(*self.centres[self.primary_index])


def meanshift(
    points: np.ndarray, bandwidth: float, max_iter: int = 200, tol: float = 1e-9
) -> list[tuple[np.ndarray, int]]:
    """Flat-kernel MeanShift over Lab points; returns (centre, size) pairs.

    Every point seeds one mode seek; converged modes closer together than
    bandwidth/2 are merged, and each point is assigned to its nearest
    surviving mode. Output is sorted by size descending with ties broken by
    lexicographic centre order, which makes results order-independent.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.size == 0:
        raise ClusteringError("no pixels")
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")

    modes = points.copy()
    sq_bw = bandwidth * bandwidth
    active = np.ones(len(modes), dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        d2 = _sq_distances(modes[idx], points)
        within = d2 <= sq_bw
        counts = within.sum(axis=1)
        shifted = (within @ points) / counts[:, None]
        moved = np.abs(shifted - modes[idx]).max(axis=1) > tol
        modes[idx] = shifted
        active[idx] = moved

    centres = _merge_modes(modes, bandwidth / 2.0)
    labels = np.argmin(_sq_distances(points, centres), axis=1)
    sizes = np.bincount(labels, minlength=len(centres))
    keep = sizes > 0
    centres, sizes = centres[keep], sizes[keep]
    order = sorted(range(len(centres)), key=lambda i: (-sizes[i], tuple(centres[i])))
    return [(centres[i], int(sizes[i])) for i in order]


def _sq_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, (len(a), len(b))."""
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _merge_modes(modes: np.ndarray, radius: float) -> np.ndarray:
    """Group modes closer than ``radius`` (lexicographic scan, order-free)."""
    order = np.lexsort(modes.T[::-1])
    remaining = modes[order]
    merged = []
    while len(remaining):
        head = remaining[0]
        near = np.einsum("ij,ij->i", remaining - head, remaining - head) < radius**2
        merged.append(remaining[near].mean(axis=0))
        remaining = remaining[~near]
    return np.asarray(merged)


def adaptive_meanshift(img_lab: PixelMatrix, params: ClusteringParams) -> Palette:
    """Grow the kernel bandwidth until at most ``max_clusters`` modes remain.

    The bandwidth starts small, is multiplied by the growth factor each
    round, and the first palette not exceeding the cluster budget wins.
    """
    points = img_lab.pixels
    bandwidth = params.initial_bandwidth
    for _ in range(params.max_iterations):
        clusters = meanshift(points, bandwidth)
        if len(clusters) <= params.max_clusters:
            centres = np.array([c for c, _ in clusters])
            sizes = np.array([s for _, s in clusters], dtype=np.float64)
            weights = sizes / sizes.sum()
            primary = select_primary(centres, weights, params.chroma_floor)
            return Palette(centres=centres, weights=weights, primary_index=primary)
        bandwidth *= params.growth
    raise ClusteringError("bandwidth search did not converge")


def select_primary(
    centres: np.ndarray, weights: np.ndarray, chroma_floor: float = 10.0
) -> int:
    """Pick the cluster holding the product's primary colour.

    Near-neutral clusters (chroma below the floor) are usually background in
    product shots, so the heaviest sufficiently chromatic cluster wins; if
    everything is neutral, fall back to the heaviest overall. Ties go to the
    lower index.
    """
    chroma = np.hypot(centres[:, 1], centres[:, 2])
    eligible = chroma >= chroma_floor
    if np.any(eligible):
        masked = np.where(eligible, weights, -np.inf)
        return int(np.argmax(masked))
    return int(np.argmax(weights))


def build_target_palette(palette: Palette, target: LabColor) -> Palette:
    """Copy the palette with only the primary centre replaced by the target."""
    centres = palette.centres.copy()
    centres[palette.primary_index] = np.asarray(target, dtype=np.float64)
    return Palette(
        centres=centres,
        weights=palette.weights.copy(),
        primary_index=palette.primary_index,
    )
