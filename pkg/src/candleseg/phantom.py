"""Synthetic candled-egg image with exact ground-truth region masks.

The scene is a back-lit egg in a dark room: a dim background with a smooth
vertical gradient, a bright orange elliptical shell with mild radial
fall-off, a darker reddish yolk disk and thin dark vessel curves inside the
yolk. Region boundaries are hard (no anti-aliasing) so the truth masks are
exact. Sensor noise is seeded, so a given (width, height, seed) always
produces the same bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict

import numpy as np

from .raster import BinaryMask, RasterImage

BACKGROUND_RGB = (14.0, 9.0, 7.0)
SHELL_RGB = (240.0, 190.0, 110.0)
YOLK_RGB = (190.0, 95.0, 45.0)
VESSEL_RGB = (130.0, 35.0, 25.0)


@dataclass(frozen=True, eq=False)
class Phantom:
    image: RasterImage
    truth: Dict[str, BinaryMask]  # background / egg / yolk, disjoint and covering


def make_phantom(width: int = 582, height: int = 778, seed: int = 7, noise: float = 2.0) -> Phantom:
    if width < 16 or height < 16:
        raise ValueError("phantom needs at least 16x16 pixels")
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
    ax, ay = 0.42 * width, 0.44 * height
    r_egg = ((xx - cx) / ax) ** 2 + ((yy - cy) / ay) ** 2
    egg = r_egg <= 1.0

    yolk_cx, yolk_cy = cx, cy + 0.04 * height
    yolk_r = 0.2 * min(width, height)
    dy, dx = yy - yolk_cy, xx - yolk_cx
    rho = np.hypot(dx, dy)
    yolk = egg & (rho <= yolk_r)

    # vessels: sinuous spokes from the yolk center, about 2 px wide, inside the yolk
    phi = np.arctan2(dy, dx)
    spokes = 5
    wiggle = 0.25 * np.sin(rho / max(yolk_r, 1.0) * 3.0 * np.pi)
    phase = (phi + wiggle) * spokes / (2 * np.pi)
    dist_to_spoke = np.abs(phase - np.round(phase)) * (2 * np.pi / spokes) * rho
    vessels = yolk & (dist_to_spoke <= 1.0) & (rho >= 0.15 * yolk_r) & (rho <= 0.9 * yolk_r)

    img = np.empty((height, width, 3))
    gradient = 1.0 + 0.6 * (yy / max(height - 1, 1))
    for ch in range(3):
        img[..., ch] = BACKGROUND_RGB[ch] * gradient
    falloff = 1.0 - 0.12 * np.clip(r_egg, 0.0, 1.0)
    for ch in range(3):
        img[..., ch] = np.where(egg, SHELL_RGB[ch] * falloff, img[..., ch])
        img[..., ch] = np.where(yolk, YOLK_RGB[ch], img[..., ch])
        img[..., ch] = np.where(vessels, VESSEL_RGB[ch], img[..., ch])

    rng = np.random.default_rng(seed)
    img = img + rng.normal(0.0, noise, size=img.shape)
    pixels = np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)

    truth = {
        "background": BinaryMask(~egg),
        "egg": BinaryMask(egg & ~yolk),
        "yolk": BinaryMask(yolk),
    }
    return Phantom(RasterImage(pixels), truth)


def iou(a: BinaryMask, b: BinaryMask) -> float:
    inter = np.count_nonzero(a.pixels & b.pixels)
    uni = np.count_nonzero(a.pixels | b.pixels)
    return 1.0 if uni == 0 else inter / uni
