"""Binarization, dilation, thickening and Canny edge detection.

Offsets are (dx, dy) in image coordinates: x to the right, y down. Pixels
outside the raster read as background for every binary operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import FrozenSet, Iterable, Optional, Tuple

import numpy as np
from scipy import ndimage

from .errors import ConfigError
from .raster import BinaryMask, GrayImage

_EIGHT = np.ones((3, 3), dtype=bool)


# --------------------------------------------------------------------------
# binarization


def otsu_threshold(image: GrayImage) -> Optional[int]:
    """Threshold maximizing between-class variance, classes ``<= t`` and ``> t``.

    Returns None when no split has positive between-class variance (a
    constant image). Ties resolve to the lowest threshold.
    """
    counts = np.bincount(image.pixels.reshape(-1), minlength=256).astype(np.float64)
    p = counts / counts.sum()
    levels = np.arange(256, dtype=np.float64)
    w0 = np.cumsum(p)
    mu = np.cumsum(levels * p)
    mu_t = mu[-1]
    denom = w0 * (1.0 - w0)
    with np.errstate(divide="ignore", invalid="ignore"):
        between = np.where(denom > 0, (mu_t * w0 - mu) ** 2 / denom, 0.0)
    t = int(np.argmax(between))
    if between[t] <= 0:
        return None
    return t


def binarize_otsu(image: GrayImage) -> BinaryMask:
    t = otsu_threshold(image)
    if t is None:
        return BinaryMask(np.zeros(image.pixels.shape, dtype=bool))
    return BinaryMask(image.pixels > t)


# --------------------------------------------------------------------------
# structuring elements


@dataclass(frozen=True)
class Strel:
    offsets: FrozenSet[Tuple[int, int]]
    kind: str = "custom"
    params: Tuple = ()

    def __post_init__(self):
        offs = frozenset((int(dx), int(dy)) for dx, dy in self.offsets)
        if not offs:
            raise ValueError("structuring element needs at least one offset")
        object.__setattr__(self, "offsets", offs)

    def __str__(self):
        if self.kind == "custom":
            return f"custom:{sorted(self.offsets)}"
        return ":".join([self.kind, *(f"{p:g}" for p in self.params)])


def _round_half_away(x: float) -> int:
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


def make_line_strel(length: int, angle_degrees: float) -> Strel:
    """Digital line of ``length`` pixels centered on the origin.

    The angle is counter-clockwise from +x as seen on screen, so 45 degrees
    runs up and to the right: offsets (1, -1) and (-1, 1). The line is
    stepped along its dominant axis and the minor coordinate rounded, which
    is the Bresenham rasterization of the segment. Even lengths extend one
    pixel further on the positive side.
    """
    if length < 1:
        raise ValueError("line length must be >= 1")
    theta = math.radians(angle_degrees)
    c, s = math.cos(theta), math.sin(theta)
    steps = range(-((length - 1) // 2), length - (length - 1) // 2)
    offsets = set()
    if abs(c) >= abs(s):
        slope = s / c
        sign = 1 if c > 0 else -1
        for t in steps:
            x = sign * t
            offsets.add((x, -_round_half_away(x * slope)))
    else:
        slope = c / s
        sign = 1 if s > 0 else -1
        for t in steps:
            y = sign * t
            offsets.add((_round_half_away(y * slope), -y))
    return Strel(frozenset(offsets), "line", (length, angle_degrees))


def make_square_strel(side: int) -> Strel:
    if side < 1:
        raise ValueError("square side must be >= 1")
    lo = -((side - 1) // 2)
    rng = range(lo, lo + side)
    return Strel(frozenset((dx, dy) for dx in rng for dy in rng), "square", (side,))


def parse_strel(spec: str) -> Strel:
    """Parse ``line:<len>:<deg>`` or ``square:<side>``."""
    parts = spec.split(":")
    try:
        if parts[0] == "line" and len(parts) == 3:
            return make_line_strel(int(parts[1]), float(parts[2]))
        if parts[0] == "square" and len(parts) == 2:
            return make_square_strel(int(parts[1]))
    except ValueError as exc:
        raise ConfigError(f"bad strel {spec!r}: {exc}", key="strel") from exc
    raise ConfigError(f"bad strel {spec!r}: expected line:<len>:<deg> or square:<side>", key="strel")


# --------------------------------------------------------------------------
# dilation and thickening


def _shifted(arr: np.ndarray, dx: int, dy: int, fill=False) -> np.ndarray:
    """out[y, x] = arr[y + dy, x + dx], ``fill`` outside."""
    h, w = arr.shape
    out = np.full_like(arr, fill)
    if abs(dx) >= w or abs(dy) >= h:
        return out
    ys, yd = (slice(dy, h), slice(0, h - dy)) if dy >= 0 else (slice(0, h + dy), slice(-dy, h))
    xs, xd = (slice(dx, w), slice(0, w - dx)) if dx >= 0 else (slice(0, w + dx), slice(-dx, w))
    out[yd, xd] = arr[ys, xs]
    return out


def dilate(mask: BinaryMask, strel: Strel) -> BinaryMask:
    """Minkowski sum: p is set iff mask(p - b) for some offset b."""
    src = mask.pixels
    out = np.zeros_like(src)
    for dx, dy in sorted(strel.offsets):
        out |= _shifted(src, -dx, -dy)
    return BinaryMask(out)


# 3x3 templates indexed [row][col]; 1 = foreground, 0 = background, None = either.
_THICKEN_BASE = (
    ((1, 1, None), (1, 0, None), (1, None, 0)),
    ((None, 1, 1), (None, 0, 1), (0, None, 1)),
)


def _rot90(t):
    return tuple(tuple(t[2 - c][r] for c in range(3)) for r in range(3))


def thickening_templates():
    """The eight convex-hull thickening templates: two mirror images, four rotations each."""
    out = []
    a, b = _THICKEN_BASE
    for _ in range(4):
        out.extend([a, b])
        a, b = _rot90(a), _rot90(b)
    return tuple(out)


THICKEN_TEMPLATES = thickening_templates()


def hit_or_miss(src: np.ndarray, template) -> np.ndarray:
    hit = np.ones_like(src, dtype=bool)
    for r in range(3):
        for c in range(3):
            want = template[r][c]
            if want is None:
                continue
            nb = _shifted(src, c - 1, r - 1)
            hit &= nb if want else ~nb
    return hit


def thicken_pass(src: np.ndarray, templates=THICKEN_TEMPLATES) -> np.ndarray:
    """One sweep A <- A | hitmiss(A, B_i) for each template in order."""
    out = src
    for t in templates:
        out = out | hit_or_miss(out, t)
    return out


def thicken(mask: BinaryMask, max_iterations: Optional[int] = None) -> BinaryMask:
    """Sequential thickening by the eight templates.

    ``max_iterations=None`` runs to the fixpoint; 0 returns the input.
    """
    if max_iterations is not None and max_iterations < 0:
        raise ValueError("max_iterations must be >= 0")
    cur = mask.pixels
    n = 0
    while max_iterations is None or n < max_iterations:
        nxt = thicken_pass(cur)
        n += 1
        if np.array_equal(nxt, cur):
            break
        cur = nxt
    return BinaryMask(cur)


# --------------------------------------------------------------------------
# Canny


@dataclass(frozen=True)
class CannyParams:
    gaussian_sigma: float = 1.4
    low_ratio: float = 0.10
    high_ratio: float = 0.25
    min_edge_size: int = 4

    def __post_init__(self):
        if not self.gaussian_sigma > 0:
            raise ConfigError("canny sigma must be > 0", key="canny_sigma")
        if not 0 < self.low_ratio < self.high_ratio < 1:
            raise ConfigError("need 0 < canny_low < canny_high < 1", key="canny_low")
        if self.min_edge_size < 0:
            raise ConfigError("min_edge_size must be >= 0", key="min_edge_size")


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = int(math.ceil(3 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x**2) / (2 * sigma**2))
    return k / k.sum()


def _correlate_rows_cols(img: np.ndarray, kx: np.ndarray, ky: np.ndarray) -> np.ndarray:
    """Separable correlation with edge replication."""
    rx, ry = len(kx) // 2, len(ky) // 2
    h, w = img.shape
    p = np.pad(img, ((0, 0), (rx, rx)), mode="edge")
    tmp = np.zeros((h, w))
    for i, kv in enumerate(kx):
        tmp += kv * p[:, i : i + w]
    p = np.pad(tmp, ((ry, ry), (0, 0)), mode="edge")
    out = np.zeros((h, w))
    for i, kv in enumerate(ky):
        out += kv * p[i : i + h, :]
    return out


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    k = gaussian_kernel(sigma)
    return _correlate_rows_cols(np.asarray(img, dtype=np.float64), k, k)


def sobel(img: np.ndarray):
    """(gx, gy) with gx positive for intensity rising to the right, gy rising downward."""
    deriv = np.array([-1.0, 0.0, 1.0])
    smooth = np.array([1.0, 2.0, 1.0])
    return _correlate_rows_cols(img, deriv, smooth), _correlate_rows_cols(img, smooth, deriv)


# neighbor offsets (dx, dy) on the negative / positive side of each sector
_SECTOR_NEIGHBORS = (
    ((-1, 0), (1, 0)),  # gradient ~ 0 deg: left / right
    ((-1, -1), (1, 1)),  # ~45 deg (y down): up-left / down-right
    ((0, -1), (0, 1)),  # ~90 deg: up / down
    ((1, -1), (-1, 1)),  # ~135 deg: up-right / down-left
)


def quantize_direction(gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    angle = np.degrees(np.arctan2(gy, gx)) % 180.0
    return (np.floor((angle + 22.5) / 45.0).astype(np.int64)) % 4


def non_maximum_suppression(mag: np.ndarray, sector: np.ndarray) -> np.ndarray:
    """Keep pixels that beat the negative-side neighbor and tie or beat the positive side.

    The asymmetric comparison keeps exactly one pixel of a plateau two
    pixels wide, so ideal steps come out one pixel thick.
    """
    out = np.zeros_like(mag)
    for s, ((ax, ay), (bx, by)) in enumerate(_SECTOR_NEIGHBORS):
        na = _shifted(mag, ax, ay, 0.0)
        nb = _shifted(mag, bx, by, 0.0)
        keep = (sector == s) & (mag > na) & (mag >= nb) & (mag > 0)
        out[keep] = mag[keep]
    return out


def hysteresis(mag: np.ndarray, low: float, high: float) -> np.ndarray:
    """Pixels >= low that are 8-connected (through such pixels) to a pixel >= high."""
    weak = mag >= low
    strong = mag >= high
    labels, n = ndimage.label(weak, structure=_EIGHT)
    if n == 0:
        return np.zeros_like(weak)
    keep = np.zeros(n + 1, dtype=bool)
    keep[np.unique(labels[strong])] = True
    keep[0] = False
    return keep[labels]


def remove_small_components(mask: np.ndarray, min_size: int) -> np.ndarray:
    if min_size <= 1:
        return mask
    labels, n = ndimage.label(mask, structure=_EIGHT)
    if n == 0:
        return mask
    sizes = np.bincount(labels.reshape(-1))
    keep = sizes >= min_size
    keep[0] = False
    return keep[labels]


@dataclass(frozen=True, eq=False)
class CannyTrace:
    """Intermediate arrays of one Canny run, for inspection and tests."""

    magnitude: np.ndarray
    sector: np.ndarray
    suppressed: np.ndarray
    low: float
    high: float
    edges: np.ndarray


def canny_trace(image: GrayImage, params: CannyParams | None = None) -> CannyTrace:
    params = params or CannyParams()
    blurred = gaussian_blur(image.pixels, params.gaussian_sigma)
    gx, gy = sobel(blurred)
    mag = np.hypot(gx, gy)
    sector = quantize_direction(gx, gy)
    nms = non_maximum_suppression(mag, sector)
    peak = float(mag.max())
    low, high = params.low_ratio * peak, params.high_ratio * peak
    if peak <= 0:
        edges = np.zeros(mag.shape, dtype=bool)
    else:
        edges = hysteresis(nms, low, high) & (nms > 0)
        edges = remove_small_components(edges, params.min_edge_size)
    return CannyTrace(mag, sector, nms, low, high, edges)


def canny(image: GrayImage, params: CannyParams | None = None) -> BinaryMask:
    """Gaussian blur, Sobel gradient, NMS, double threshold relative to the
    peak magnitude, hysteresis, then removal of components smaller than
    ``min_edge_size`` pixels."""
    return BinaryMask(canny_trace(image, params).edges)


def union(masks: Iterable[BinaryMask]) -> BinaryMask:
    masks = list(masks)
    out = np.zeros_like(masks[0].pixels)
    for m in masks:
        out |= m.pixels
    return BinaryMask(out)
