"""sRGB / linear RGB / CIE L*a*b* conversions (D65, 2 degree observer).

All arithmetic is double precision. The Lab white point is taken from the
row sums of the sRGB-to-XYZ matrix rather than quoted separately, so the
grey axis maps to a* = b* = 0 exactly and white to L* = 100 exactly.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .image import PixelMatrix


class RgbColor(NamedTuple):
    """Nonlinear (companded) sRGB triple, channels in [0, 1]."""

    r: float
    g: float
    b: float


class LabColor(NamedTuple):
    """CIE L*a*b* triple: L in [0, 100], a/b roughly in [-128, 128]."""

    L: float
    a: float
    b: float

    def chroma(self) -> float:
        """Distance from the grey axis in the a*b* plane."""
        return float(np.hypot(self.a, self.b))


# IEC 61966-2-1 sRGB primaries, D65 white, 2 degree observer.
RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
XYZ_TO_RGB = np.linalg.inv(RGB_TO_XYZ)
# White point = image of linear (1,1,1); deriving it from the matrix keeps
# the conversion self-consistent (grey in, a* = b* = 0 out).
WHITE_POINT = np.ones(3) @ RGB_TO_XYZ.T

_CIE_EPSILON = 216.0 / 24389.0
_CIE_KAPPA = 24389.0 / 27.0


def srgb_to_linear(c: np.ndarray) -> np.ndarray:
    """Undo the sRGB companding curve; input in [0, 1]."""
    c = np.asarray(c, dtype=np.float64)
    return np.where(c > 0.04045, ((c + 0.055) / 1.055) ** 2.4, c / 12.92)


def linear_to_srgb(c: np.ndarray) -> np.ndarray:
    """Apply the sRGB companding curve to linear values."""
    c = np.asarray(c, dtype=np.float64)
    # Negative linear values can reach here for out-of-gamut Lab input;
    # clip before the fractional power, the caller clamps anyway.
    safe = np.maximum(c, 0.0)
    return np.where(c > 0.0031308, 1.055 * safe ** (1.0 / 2.4) - 0.055, 12.92 * c)


def rgb_array_to_lab(rgb: np.ndarray) -> np.ndarray:
    """Convert an (..., 3) sRGB array in [0, 1] to CIE L*a*b*."""
    rgb = np.asarray(rgb, dtype=np.float64)
    xyz = srgb_to_linear(rgb) @ RGB_TO_XYZ.T
    t = xyz / WHITE_POINT
    f = np.where(t > _CIE_EPSILON, np.cbrt(t), (_CIE_KAPPA * t + 16.0) / 116.0)
    lab = np.empty_like(rgb)
    # Linear-branch L computed directly as kappa*y so black is exactly 0.
    y = t[..., 1]
    lab[..., 0] = np.where(y > _CIE_EPSILON, 116.0 * np.cbrt(y) - 16.0, _CIE_KAPPA * y)
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def lab_array_to_rgb(lab: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Convert an (..., 3) Lab array to sRGB, clamping out-of-gamut results.

    Returns (rgb, clamped) where ``clamped`` is a boolean array over pixels
    flagging any channel that had to be clipped into [0, 1].
    """
    lab = np.asarray(lab, dtype=np.float64)
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    f = np.stack([fx, fy, fz], axis=-1)
    t = np.where(f**3 > _CIE_EPSILON, f**3, (116.0 * f - 16.0) / _CIE_KAPPA)
    rgb = linear_to_srgb(t * WHITE_POINT @ XYZ_TO_RGB.T)
    clamped = np.any((rgb < 0.0) | (rgb > 1.0), axis=-1)
    return np.clip(rgb, 0.0, 1.0), clamped


def rgb_to_lab(c: RgbColor) -> LabColor:
    """Single-colour sRGB to Lab conversion."""
    return LabColor(*rgb_array_to_lab(np.array(c)))


def lab_to_rgb(c: LabColor) -> tuple[RgbColor, bool]:
    """Single-colour Lab to sRGB; flags whether clamping occurred."""
    rgb, clamped = lab_array_to_rgb(np.array(c))
    return RgbColor(*rgb), bool(clamped)


def parse_hex_color(text: str) -> RgbColor:
    """Parse a #RRGGBB sRGB colour string."""
    s = text.strip()
    if len(s) != 7 or not s.startswith("#"):
        raise ValueError(f"colour must look like #RRGGBB, got {text!r}")
    try:
        r, g, b = (int(s[i : i + 2], 16) for i in (1, 3, 5))
    except ValueError:
        raise ValueError(f"colour must look like #RRGGBB, got {text!r}") from None
    return RgbColor(r / 255.0, g / 255.0, b / 255.0)


def to_hex(c: RgbColor) -> str:
    """Nearest-8-bit #RRGGBB form of an sRGB colour."""
    r, g, b = (int(round(np.clip(v, 0.0, 1.0) * 255.0)) for v in c)
    return f"#{r:02X}{g:02X}{b:02X}"


def image_to_lab(img: PixelMatrix) -> PixelMatrix:
    """Row-wise sRGB to Lab conversion of a whole image."""
    return img.with_pixels(rgb_array_to_lab(img.pixels))


def image_to_lab_clipped(img_pixels: np.ndarray) -> np.ndarray:
    """Lab of pixel rows clipped to [0, 1] first (conversion-only clamp).

    Corrected images are deliberately left unclamped until after blending;
    whenever their colours are needed in Lab the values are clipped for the
    conversion only.
    """
    return rgb_array_to_lab(np.clip(img_pixels, 0.0, 1.0))
