"""sRGB <-> CIEXYZ <-> CIELAB conversion and weighted grayscale.

The sRGB -> XYZ matrix is derived from the sRGB primary chromaticities and the
D65 white chromaticity, so the matrix maps RGB white (1, 1, 1) onto the D65
reference white to machine precision and white lands on L* = 100 exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .raster import GrayImage, RasterImage

SIGMA = 6.0 / 29.0
SIGMA3 = SIGMA**3
_LIN_SLOPE = 3.0 * SIGMA**2
_OFFSET = 4.0 / 29.0

GRAY_WEIGHTS = (0.2989, 0.587, 0.1141)

_PRIMARIES_XY = ((0.64, 0.33), (0.30, 0.60), (0.15, 0.06))
_D65_XY = (0.3127, 0.3290)


def _xy_to_xyz(x, y):
    return np.array([x / y, 1.0, (1.0 - x - y) / y])


def _rgb_to_xyz_matrix():
    prim = np.column_stack([_xy_to_xyz(x, y) for x, y in _PRIMARIES_XY])
    white = _xy_to_xyz(*_D65_XY)
    scale = np.linalg.solve(prim, white)
    return prim * scale


RGB_TO_XYZ = _rgb_to_xyz_matrix()
XYZ_TO_RGB = np.linalg.inv(RGB_TO_XYZ)
RGB_TO_XYZ.flags.writeable = False
XYZ_TO_RGB.flags.writeable = False


@dataclass(frozen=True)
class WhitePoint:
    Xn: float
    Yn: float
    Zn: float

    def __post_init__(self):
        if min(self.Xn, self.Yn, self.Zn) <= 0:
            raise ValueError(f"white point components must be positive: {self}")

    @classmethod
    def d65(cls) -> "WhitePoint":
        x, y, z = _xy_to_xyz(*_D65_XY)
        return cls(float(x), float(y), float(z))

    def as_array(self) -> np.ndarray:
        return np.array([self.Xn, self.Yn, self.Zn])


@dataclass(frozen=True)
class XyzTriple:
    X: float
    Y: float
    Z: float


@dataclass(frozen=True, eq=False)
class LabImage:
    """CIELAB planes stored as float32, each of shape (height, width)."""

    L: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        planes = [np.array(p, dtype=np.float32, copy=True) for p in (self.L, self.a, self.b)]
        shape = planes[0].shape
        if len(shape) != 2 or shape[0] < 1 or shape[1] < 1:
            raise ValueError(f"Lab planes must be non-empty 2-d arrays, got {shape}")
        if any(p.shape != shape for p in planes):
            raise ValueError("Lab planes must share one shape")
        for name, p in zip("Lab", planes):
            p.flags.writeable = False
            object.__setattr__(self, name, p)

    @property
    def width(self) -> int:
        return self.L.shape[1]

    @property
    def height(self) -> int:
        return self.L.shape[0]

    def stack(self) -> np.ndarray:
        """(height, width, 3) float64 array of L*, a*, b*."""
        return np.stack([self.L, self.a, self.b], axis=-1).astype(np.float64)

    def to_display(self) -> RasterImage:
        """8-bit visualization: L* scaled by 2.55, a* and b* offset by 128."""
        chans = [self.L * 2.55, self.a + 128.0, self.b + 128.0]
        arr = np.stack([np.clip(np.floor(c.astype(np.float64) + 0.5), 0, 255) for c in chans], axis=-1)
        return RasterImage(arr.astype(np.uint8))


def g_forward(t):
    """Lab companding: cube root above SIGMA**3, linear below. Accepts scalars or arrays."""
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0) or np.any(np.isnan(t_arr)):
        raise DomainError("g_forward is defined for t >= 0 only")
    out = np.where(t_arr > SIGMA3, np.cbrt(t_arr), t_arr / _LIN_SLOPE + _OFFSET)
    return float(out) if out.ndim == 0 else out


def g_inverse(u):
    """Exact inverse of :func:`g_forward`; values below 4/29 follow the linear branch."""
    u_arr = np.asarray(u, dtype=np.float64)
    out = np.where(u_arr > SIGMA, u_arr**3, _LIN_SLOPE * (u_arr - _OFFSET))
    return float(out) if out.ndim == 0 else out


def srgb_to_linear(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def linear_to_srgb(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    return np.where(c <= 0.0031308, 12.92 * c, 1.055 * np.power(c, 1.0 / 2.4) - 0.055)


def xyz_to_lab(xyz: np.ndarray, wp: WhitePoint) -> np.ndarray:
    """(..., 3) XYZ -> (..., 3) L*a*b*."""
    f = g_forward(np.asarray(xyz, dtype=np.float64) / wp.as_array())
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
    return np.stack([116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)], axis=-1)


def lab_to_xyz(lab: np.ndarray, wp: WhitePoint) -> np.ndarray:
    lab = np.asarray(lab, dtype=np.float64)
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    return np.stack([g_inverse(fx), g_inverse(fy), g_inverse(fz)], axis=-1) * wp.as_array()


def rgb_to_lab(image: RasterImage, wp: WhitePoint | None = None) -> LabImage:
    wp = wp or WhitePoint.d65()
    lin = srgb_to_linear(image.pixels / 255.0)
    lab = xyz_to_lab(lin @ RGB_TO_XYZ.T, wp)
    return LabImage(lab[..., 0], lab[..., 1], lab[..., 2])


def lab_to_rgb(image: LabImage, wp: WhitePoint | None = None) -> RasterImage:
    wp = wp or WhitePoint.d65()
    lin = lab_to_xyz(image.stack(), wp) @ XYZ_TO_RGB.T
    srgb = linear_to_srgb(np.clip(lin, 0.0, 1.0))
    return RasterImage(np.clip(np.floor(srgb * 255.0 + 0.5), 0, 255).astype(np.uint8))


def rgb_to_gray(image: RasterImage) -> GrayImage:
    """Weighted sum 0.2989 R + 0.587 G + 0.1141 B, rounded half up and clamped."""
    px = image.pixels.astype(np.float64)
    wr, wg, wb = GRAY_WEIGHTS
    val = wr * px[..., 0] + wg * px[..., 1] + wb * px[..., 2]
    return GrayImage(np.clip(np.floor(val + 0.5), 0, 255).astype(np.uint8))
