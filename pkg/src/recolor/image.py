"""Image container, resampling, and file I/O.

Images are carried through the library as flat N x 3 matrices of float64
channel values in [0, 1] (sRGB) or CIE L*a*b* units, together with the
grid dimensions needed to rebuild the H x W image. Quantisation to 8-bit
happens only at encode time.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass

import numpy as np
from PIL import Image


@dataclass(frozen=True)
class PixelMatrix:
    """Flat row-per-pixel colour matrix plus the image grid shape.

    ``pixels`` has shape (height * width, 3); row i holds the pixel at
    grid position (i // width, i % width).
    """

    pixels: np.ndarray
    height: int
    width: int

    def __post_init__(self) -> None:
        if self.pixels.ndim != 2 or self.pixels.shape[1] != 3:
            raise ValueError(f"pixel matrix must be N x 3, got {self.pixels.shape}")
        if self.pixels.shape[0] != self.height * self.width:
            raise ValueError(
                f"{self.pixels.shape[0]} rows inconsistent with "
                f"{self.height} x {self.width} grid"
            )

    @property
    def n_pixels(self) -> int:
        return self.height * self.width

    @classmethod
    def from_grid(cls, grid: np.ndarray) -> "PixelMatrix":
        """Build from an (H, W, 3) array."""
        if grid.ndim != 3 or grid.shape[2] != 3:
            raise ValueError(f"expected an H x W x 3 array, got {grid.shape}")
        h, w = grid.shape[:2]
        return cls(np.ascontiguousarray(grid, dtype=np.float64).reshape(-1, 3), h, w)

    def to_grid(self) -> np.ndarray:
        """Return the (H, W, 3) view of the pixel data."""
        return self.pixels.reshape(self.height, self.width, 3)

    def channel_grid(self, index: int) -> np.ndarray:
        """Return one channel as an (H, W) array."""
        return self.pixels[:, index].reshape(self.height, self.width)

    def with_pixels(self, pixels: np.ndarray) -> "PixelMatrix":
        """Same grid shape, new pixel values."""
        return PixelMatrix(pixels, self.height, self.width)


def box_resample(grid: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Area-averaged (box filter) resample of an (H, W) or (H, W, C) array.

    Each output pixel is the exact area-weighted mean of the input pixels
    it covers, so the global mean is conserved. Aspect ratio is ignored.
    """
    if out_h < 1 or out_w < 1:
        raise ValueError("output dimensions must be positive")
    in_h, in_w = grid.shape[:2]
    rows = _overlap_matrix(in_h, out_h)
    cols = _overlap_matrix(in_w, out_w)
    if grid.ndim == 2:
        return rows @ grid @ cols.T
    out = np.empty((out_h, out_w, grid.shape[2]), dtype=np.float64)
    for c in range(grid.shape[2]):
        out[:, :, c] = rows @ grid[:, :, c] @ cols.T
    return out


def _overlap_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Row-normalised matrix of interval overlaps between output and input cells."""
    scale = n_in / n_out
    w = np.zeros((n_out, n_in), dtype=np.float64)
    for i in range(n_out):
        lo, hi = i * scale, (i + 1) * scale
        j0, j1 = int(np.floor(lo)), int(np.ceil(hi))
        for j in range(j0, min(j1, n_in)):
            w[i, j] = min(hi, j + 1) - max(lo, j)
    return w / scale


def load_image(path: str | os.PathLike) -> PixelMatrix:
    """Decode a PNG/JPEG file into a [0, 1] PixelMatrix (alpha discarded)."""
    with Image.open(path) as im:
        rgb = im.convert("RGB")
        arr = np.asarray(rgb, dtype=np.float64) / 255.0
    return PixelMatrix.from_grid(arr)


def encode_image(img: PixelMatrix) -> Image.Image:
    """Quantise a [0, 1] PixelMatrix to an 8-bit PIL image."""
    arr = np.clip(img.to_grid(), 0.0, 1.0)
    quantised = np.round(arr * 255.0).astype(np.uint8)
    return Image.fromarray(quantised, mode="RGB")


def save_image(img: PixelMatrix, path: str | os.PathLike) -> None:
    """Encode and write atomically (temp file + rename, no partial outputs).

    Format follows the output extension: .jpg/.jpeg writes JPEG at quality
    95, everything else writes PNG.
    """
    path = os.fspath(path)
    pil = encode_image(img)
    suffix = os.path.splitext(path)[1].lower()
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=suffix or ".png")
    try:
        with os.fdopen(fd, "wb") as fh:
            if suffix in (".jpg", ".jpeg"):
                pil.save(fh, format="JPEG", quality=95)
            else:
                pil.save(fh, format="PNG")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
