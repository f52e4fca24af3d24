"""Histogram equalization and contrast-limited adaptive equalization (CLAHE)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .raster import GrayImage

LEVELS = 256


@dataclass(frozen=True, eq=False)
class Histogram:
    bins: np.ndarray  # (256,) int64 counts
    total: int


@dataclass(frozen=True)
class ClaheParams:
    tiles_x: int = 8
    tiles_y: int = 8
    clip_alpha: float = 50.0
    s_max: float = 4.0
    region_size: int | None = None  # pixels per tile; derived from the image when None
    n_levels: int = LEVELS

    def __post_init__(self):
        if self.tiles_x < 1 or self.tiles_y < 1:
            raise ConfigError("CLAHE tile counts must be >= 1", key="clahe_tiles")
        if not 0.0 <= self.clip_alpha <= 100.0:
            raise ConfigError("clip alpha must lie in [0, 100]", key="clahe_alpha")
        if not self.s_max >= 1.0:
            raise ConfigError("s_max must be >= 1", key="clahe_smax")


def histogram(image: GrayImage) -> Histogram:
    bins = np.bincount(image.pixels.reshape(-1), minlength=LEVELS).astype(np.int64)
    return Histogram(bins, int(image.pixels.size))


def _cdf_mapping(counts: np.ndarray, total: float) -> np.ndarray:
    """round((L - 1) * CDF) as a 256-entry table; shared by HE and CLAHE."""
    cdf = np.cumsum(counts, dtype=np.float64) / float(total)
    return np.floor((LEVELS - 1) * cdf + 0.5).clip(0, LEVELS - 1).astype(np.uint8)


def equalize_mapping(hist: Histogram) -> np.ndarray:
    return _cdf_mapping(hist.bins, hist.total)


def equalize(image: GrayImage) -> GrayImage:
    """Global HE. A constant image maps to 255 since its CDF is 1 at its only level."""
    table = equalize_mapping(histogram(image))
    return GrayImage(table[image.pixels])


def compute_clip_limit(params: ClaheParams, region_size: int | None = None) -> float:
    """Clip limit (M / n) * (1 + alpha / 100 * (s_max - 1))."""
    m = region_size if region_size is not None else params.region_size
    if m is None:
        raise ValueError("region size unknown: pass region_size or set params.region_size")
    return (m / params.n_levels) * (1.0 + params.clip_alpha / 100.0 * (params.s_max - 1.0))


def clip_histogram(counts, beta: float, max_rounds: int = 1024) -> np.ndarray:
    """Clip at ``beta``, spreading the excess uniformly over all bins.

    Repeats while the clipped-off excess is at least one count, so every
    bin of the result is below ``beta + 1`` and the total is preserved.
    """
    h = np.asarray(counts, dtype=np.float64).copy()
    for _ in range(max_rounds):
        excess = float(np.sum(np.maximum(h - beta, 0.0)))
        if excess < 1.0:
            break
        h = np.minimum(h, beta) + excess / h.size
    return h


def _tile_edges(size: int, tiles: int) -> np.ndarray:
    return (np.arange(tiles + 1) * size) // tiles


def _interp_axis(size: int, edges: np.ndarray):
    """Lower/upper tile index and upper weight for each coordinate along one axis."""
    centers = (edges[:-1] + edges[1:] - 1) / 2.0
    coords = np.arange(size, dtype=np.float64)
    hi = np.searchsorted(centers, coords, side="right")
    lo = np.clip(hi - 1, 0, len(centers) - 1)
    hi = np.clip(hi, 0, len(centers) - 1)
    span = centers[hi] - centers[lo]
    w = np.where(span > 0, (coords - centers[lo]) / np.where(span > 0, span, 1.0), 0.0)
    return lo, hi, np.clip(w, 0.0, 1.0)


def clahe_tables(image: GrayImage, params: ClaheParams):
    """Per-tile mapping tables (tiles_y, tiles_x, 256) and the clip limits used."""
    if image.width < params.tiles_x or image.height < params.tiles_y:
        raise ConfigError(
            f"image {image.width}x{image.height} is smaller than the "
            f"{params.tiles_x}x{params.tiles_y} tile grid",
            key="clahe_tiles",
        )
    ye = _tile_edges(image.height, params.tiles_y)
    xe = _tile_edges(image.width, params.tiles_x)
    tables = np.empty((params.tiles_y, params.tiles_x, LEVELS), dtype=np.uint8)
    betas = np.empty((params.tiles_y, params.tiles_x))
    px = image.pixels
    for i in range(params.tiles_y):
        for j in range(params.tiles_x):
            tile = px[ye[i] : ye[i + 1], xe[j] : xe[j + 1]]
            beta = compute_clip_limit(params, tile.size)
            clipped = clip_histogram(np.bincount(tile.reshape(-1), minlength=LEVELS), beta)
            tables[i, j] = _cdf_mapping(clipped, tile.size)
            betas[i, j] = beta
    return tables, betas, ye, xe


def clahe(image: GrayImage, params: ClaheParams | None = None) -> GrayImage:
    """CLAHE with bilinear interpolation between tile-center mappings.

    Pixels outside the outermost tile centers use the nearest (clamped)
    tile, so corners take one table and edges blend two.
    """
    params = params or ClaheParams()
    tables, _, ye, xe = clahe_tables(image, params)
    y0, y1, wy = _interp_axis(image.height, ye)
    x0, x1, wx = _interp_axis(image.width, xe)
    v = image.pixels.astype(np.intp)
    m00 = tables[y0[:, None], x0[None, :], v].astype(np.float64)
    m01 = tables[y0[:, None], x1[None, :], v].astype(np.float64)
    m10 = tables[y1[:, None], x0[None, :], v].astype(np.float64)
    m11 = tables[y1[:, None], x1[None, :], v].astype(np.float64)
    wy = wy[:, None]
    wx = wx[None, :]
    out = (1 - wy) * ((1 - wx) * m00 + wx * m01) + wy * ((1 - wx) * m10 + wx * m11)
    return GrayImage(np.floor(out + 0.5).clip(0, 255).astype(np.uint8))
