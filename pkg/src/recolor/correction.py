"""Global 3x3 colour-change transform fitted to palette correspondences.

The transform acts on RGB row vectors (pixel @ M), so a recoloured image is
a single matrix product away from the original. Weighted ridge-regularised
least squares over the palette correspondences keeps the fit stable even
when the palette has fewer than three independent colours.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .colorspace import LabColor

GRID_CANDIDATES: tuple[float, ...] = tuple(float(v) for v in range(10, 211, 20))


class DegeneratePaletteError(RuntimeError):
    """Raised when the correspondence system cannot be solved."""


@dataclass(frozen=True)
class CorrectionModel:
    """Fitted colour-change parameters, enough to reproduce an edit."""

    matrix: np.ndarray  # (3, 3)
    delta_e_max: float
    target: LabColor
    regularisation: float = 1e-3

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (3, 3) or not np.all(np.isfinite(m)):
            raise ValueError("matrix must be a finite 3x3 array")
        object.__setattr__(self, "matrix", m)
        if self.delta_e_max not in GRID_CANDIDATES:
            raise ValueError(
                f"delta_e_max must be one of {GRID_CANDIDATES}, got {self.delta_e_max}"
            )


def estimate_matrix(
    source_rgb: np.ndarray,
    target_rgb: np.ndarray,
    weights: np.ndarray,
    regularisation: float = 1e-3,
) -> np.ndarray:
    """Solve M = (C^T W C + k I)^-1 C^T W D for row-vector correspondences.

    ``source_rgb`` and ``target_rgb`` are n x 3 palettes in [0, 1] and
    ``weights`` the normalised cluster weights forming diag(W).
    """
    c = np.asarray(source_rgb, dtype=np.float64)
    d = np.asarray(target_rgb, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if c.ndim != 2 or c.shape[1] != 3 or c.shape != d.shape:
        raise ValueError("correspondence palettes must both be n x 3")
    if w.shape != (c.shape[0],):
        raise ValueError("one weight per correspondence required")
    cw = c * w[:, None]
    normal = c.T @ cw + regularisation * np.eye(3)
    try:
        return np.linalg.solve(normal, cw.T @ d)
    except np.linalg.LinAlgError as exc:
        raise DegeneratePaletteError("degenerate palette") from exc


def apply_matrix(pixels: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Right-multiply every pixel row by the transform; output unclamped.

    Clamping is deferred until after blending so that out-of-range
    corrections can still be suppressed rather than distorted.
    """
    return np.asarray(pixels, dtype=np.float64) @ np.asarray(matrix, dtype=np.float64)
