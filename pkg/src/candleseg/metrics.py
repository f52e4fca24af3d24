"""Mean squared error and (mean) structural similarity."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Optional, Union

import numpy as np

from .errors import DimensionMismatch
from .raster import BinaryMask, GrayImage

Plane = Union[GrayImage, BinaryMask]


@dataclass(frozen=True)
class SsimParams:
    window: int = 11
    sigma: float = 1.5
    alpha: float = 1.0  # luminance exponent
    beta: float = 1.0  # contrast exponent
    gamma: float = 1.0  # structure exponent
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 255.0
    c1: Optional[float] = None  # explicit stabilizers override k1/k2
    c2: Optional[float] = None
    c3: Optional[float] = None

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError("SSIM window side must be odd and >= 3")
        if self.sigma <= 0:
            raise ValueError("SSIM sigma must be > 0")
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValueError("SSIM exponents must be >= 0")
        if min(self.C1, self.C2, self.C3) <= 0:
            raise ValueError("SSIM stabilizers must be > 0")

    @property
    def C1(self) -> float:
        return self.c1 if self.c1 is not None else (self.k1 * self.dynamic_range) ** 2

    @property
    def C2(self) -> float:
        return self.c2 if self.c2 is not None else (self.k2 * self.dynamic_range) ** 2

    @property
    def C3(self) -> float:
        return self.c3 if self.c3 is not None else self.C2 / 2.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(C1=self.C1, C2=self.C2, C3=self.C3)
        return d


@dataclass(frozen=True)
class MetricsReport:
    mse: float
    mssim: float
    ssim_min: float
    ssim_max: float
    window_count: int
    params: dict

    def to_dict(self) -> dict:
        return {
            "mse": self.mse,
            "mssim": self.mssim,
            "ssim_min": self.ssim_min,
            "ssim_max": self.ssim_max,
            "window_count": self.window_count,
            "params": self.params,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"


def _check_same(a: Plane, b: Plane) -> None:
    if a.pixels.shape != b.pixels.shape:
        raise DimensionMismatch(f"image dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}")


def _intensities(img: Plane, scale: str) -> np.ndarray:
    if scale not in ("unit", "byte"):
        raise ValueError(f"scale must be 'unit' or 'byte', got {scale!r}")
    if isinstance(img, BinaryMask):
        v = img.pixels.astype(np.float64)
        return v if scale == "unit" else v * 255.0
    v = img.pixels.astype(np.float64)
    return v / 255.0 if scale == "unit" else v


def mse(a: Plane, b: Plane, scale: str = "unit") -> float:
    """Mean of squared differences. ``unit`` maps 8-bit values to [0, 1]; masks are 0/1."""
    _check_same(a, b)
    d = _intensities(a, scale) - _intensities(b, scale)
    return float(np.mean(d * d))


def _as_gray_array(img: Plane) -> np.ndarray:
    if isinstance(img, BinaryMask):
        return img.pixels.astype(np.float64) * 255.0
    return img.pixels.astype(np.float64)


def gaussian_window(params: SsimParams) -> np.ndarray:
    """1-D normalized Gaussian taps; the 2-D window is their outer product."""
    r = params.window // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-(x**2) / (2 * params.sigma**2))
    return k / k.sum()


def _filter_valid(img: np.ndarray, k: np.ndarray) -> np.ndarray:
    n = len(k)
    h, w = img.shape
    tmp = np.zeros((h, w - n + 1))
    for i, kv in enumerate(k):
        tmp += kv * img[:, i : i + w - n + 1]
    out = np.zeros((h - n + 1, w - n + 1))
    for i, kv in enumerate(k):
        out += kv * tmp[i : i + h - n + 1, :]
    return out


def ssim_components(a: Plane, b: Plane, params: SsimParams | None = None):
    """Per-window luminance, contrast and structure maps (dense, stride 1, valid positions)."""
    params = params or SsimParams()
    _check_same(a, b)
    if a.height < params.window or a.width < params.window:
        raise DimensionMismatch(f"image {a.width}x{a.height} is smaller than the {params.window}px SSIM window")
    x, y = _as_gray_array(a), _as_gray_array(b)
    k = gaussian_window(params)
    mu_x, mu_y = _filter_valid(x, k), _filter_valid(y, k)
    var_x = np.maximum(_filter_valid(x * x, k) - mu_x * mu_x, 0.0)
    var_y = np.maximum(_filter_valid(y * y, k) - mu_y * mu_y, 0.0)
    cov = _filter_valid(x * y, k) - mu_x * mu_y
    sd_x, sd_y = np.sqrt(var_x), np.sqrt(var_y)
    c1, c2, c3 = params.C1, params.C2, params.C3
    lum = (2 * mu_x * mu_y + c1) / (mu_x * mu_x + mu_y * mu_y + c1)
    con = (2 * sd_x * sd_y + c2) / (var_x + var_y + c2)
    struct = (cov + c3) / (sd_x * sd_y + c3)
    return lum, con, struct


def _pow(base: np.ndarray, e: float) -> np.ndarray:
    if e == 1.0:
        return base
    if e == 0.0:
        return np.ones_like(base)
    return np.power(base, e)


def ssim(a: Plane, b: Plane, params: SsimParams | None = None):
    """Return ``(mssim, ssim_map)``; the map holds one value per window position."""
    params = params or SsimParams()
    lum, con, struct = ssim_components(a, b, params)
    smap = _pow(lum, params.alpha) * _pow(con, params.beta) * _pow(struct, params.gamma)
    # the float mean of equal values can land an ulp outside their range
    mssim = min(max(float(np.mean(smap)), float(smap.min())), float(smap.max()))
    return mssim, smap


def evaluate(a: Plane, b: Plane, ssim_params: SsimParams | None = None, scale: str = "unit") -> MetricsReport:
    ssim_params = ssim_params or SsimParams()
    err = mse(a, b, scale)
    mssim, smap = ssim(a, b, ssim_params)
    params = {"mse_scale": scale, "ssim": ssim_params.to_dict()}
    return MetricsReport(
        mse=err,
        mssim=mssim,
        ssim_min=float(smap.min()),
        ssim_max=float(smap.max()),
        window_count=int(smap.size),
        params=params,
    )

