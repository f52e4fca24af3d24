"""Raster value types, lossless PNG/PNM file I/O and cropping.

All rasters wrap a read-only, C-contiguous numpy array indexed ``[row, col]``
(row-major, origin top-left). ``width`` is the column count, ``height`` the
row count.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import BoundsError, CorruptHeader, ImageFileMissing, ImageIOError, UnsupportedFormat


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True, order="C")
    arr.flags.writeable = False
    return arr


def _as_uint8(pixels, ndim: int, what: str) -> np.ndarray:
    arr = np.asarray(pixels)
    if arr.ndim != ndim:
        raise ValueError(f"{what} pixels must be a {ndim}-d array, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        if arr.size and (not np.issubdtype(arr.dtype, np.integer) and not np.all(arr == np.round(arr))):
            raise ValueError(f"{what} pixels must be integers")
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise ValueError(f"{what} pixels must lie in [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


def _check_dims(shape, what: str) -> None:
    if shape[0] < 1 or shape[1] < 1:
        raise ValueError(f"{what} must be at least 1x1, got {shape[1]}x{shape[0]}")


@dataclass(frozen=True, eq=False)
class RasterImage:
    """8-bit RGB raster, ``pixels`` has shape (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = _as_uint8(self.pixels, 3, "RasterImage")
        if arr.shape[2] != 3:
            raise ValueError(f"RasterImage needs 3 channels, got {arr.shape[2]}")
        _check_dims(arr.shape, "RasterImage")
        object.__setattr__(self, "pixels", _frozen(arr))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other):
        return type(other) is type(self) and np.array_equal(self.pixels, other.pixels)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit single-channel raster, ``pixels`` has shape (height, width)."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = _as_uint8(self.pixels, 2, "GrayImage")
        _check_dims(arr.shape, "GrayImage")
        object.__setattr__(self, "pixels", _frozen(arr))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other):
        return type(other) is type(self) and np.array_equal(self.pixels, other.pixels)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Boolean raster, True is foreground."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2:
            raise ValueError(f"BinaryMask pixels must be 2-d, got shape {arr.shape}")
        _check_dims(arr.shape, "BinaryMask")
        object.__setattr__(self, "pixels", _frozen(arr.astype(bool)))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def to_gray(self) -> GrayImage:
        return GrayImage(np.where(self.pixels, 255, 0).astype(np.uint8))

    def __eq__(self, other):
        return type(other) is type(self) and np.array_equal(self.pixels, other.pixels)

    __hash__ = None


AnyRaster = Union[RasterImage, GrayImage, BinaryMask]


@dataclass(frozen=True)
class Rect:
    x0: int
    y0: int
    w: int
    h: int

    def __post_init__(self):
        if self.x0 < 0 or self.y0 < 0:
            raise BoundsError(f"rect origin must be non-negative: {self}")
        if self.w < 1 or self.h < 1:
            raise BoundsError(f"rect extent must be positive: {self}")

    @classmethod
    def parse(cls, text: str) -> "Rect":
        """Parse ``"x0,y0,w,h"``."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError(f"expected x0,y0,w,h, got {text!r}")
        return cls(*(int(p) for p in parts))

    def compose(self, inner: "Rect") -> "Rect":
        """Rect equivalent to cropping by ``self`` and then by ``inner``."""
        return Rect(self.x0 + inner.x0, self.y0 + inner.y0, inner.w, inner.h)


def crop(image: AnyRaster, rect: Rect) -> AnyRaster:
    if rect.x0 + rect.w > image.width or rect.y0 + rect.h > image.height:
        raise BoundsError(
            f"crop rect (x0={rect.x0}, y0={rect.y0}, w={rect.w}, h={rect.h}) "
            f"exceeds image {image.width}x{image.height}"
        )
    return type(image)(image.pixels[rect.y0 : rect.y0 + rect.h, rect.x0 : rect.x0 + rect.w])


# --------------------------------------------------------------------------
# file I/O

_PNM_EXTS = {".ppm", ".pgm", ".pnm"}
_WS = (b" ", b"\t", b"\n", b"\r", b"\x0b", b"\x0c")


def _parse_pnm(path: Path, data: bytes) -> np.ndarray:
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        if magic[:1] == b"P" and magic[1:2] in b"1234":
            raise UnsupportedFormat(path, f"PNM variant {magic.decode()} not supported")
        raise UnsupportedFormat(path, "not a PNG or binary PNM file")
    if len(data) < 3 or data[2:3] not in _WS:
        raise CorruptHeader(path, "malformed magic number")
    fields = []
    pos, n = 2, len(data)
    while len(fields) < 3:
        while pos < n and (data[pos:pos + 1] in _WS or data[pos:pos + 1] == b"#"):
            if data[pos:pos + 1] == b"#":
                nl = data.find(b"\n", pos)
                pos = n if nl < 0 else nl
            pos += 1
        start = pos
        while pos < n and data[pos:pos + 1] not in _WS and data[pos:pos + 1] != b"#":
            pos += 1
        token = data[start:pos]
        if not token:
            raise CorruptHeader(path, "truncated header")
        if not token.isdigit():
            raise CorruptHeader(path, f"bad header field {token!r}")
        fields.append(int(token))
    # exactly one whitespace byte separates maxval from the raster
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise CorruptHeader(path, "missing raster separator")
    pos += 1
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise CorruptHeader(path, f"bad dimensions {width}x{height}")
    if maxval != 255:
        raise UnsupportedFormat(path, f"maxval {maxval} (only 255 supported)")
    channels = 3 if magic == b"P6" else 1
    need = width * height * channels
    raster = data[pos : pos + need]
    if len(raster) < need:
        raise CorruptHeader(path, f"raster truncated: {len(raster)} of {need} bytes")
    arr = np.frombuffer(raster, dtype=np.uint8)
    if channels == 3:
        return arr.reshape(height, width, 3)
    return arr.reshape(height, width)


def _read_png(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("RGB", "L"):
                arr = np.asarray(im)
            elif mode == "RGBA":
                arr = np.asarray(im)[:, :, :3]
            elif mode == "LA":
                arr = np.asarray(im)[:, :, 0]
            elif mode in ("P", "1"):
                arr = np.asarray(im.convert("RGBA" if "transparency" in im.info else "RGB"))[..., :3]
            else:
                raise UnsupportedFormat(path, f"PNG mode {mode} is not 8-bit")
    except UnidentifiedImageError as exc:
        raise CorruptHeader(path, str(exc)) from exc
    except (SyntaxError, OSError) as exc:
        raise CorruptHeader(path, str(exc)) from exc
    return arr


def _read_array(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise ImageFileMissing(path)
    with open(path, "rb") as fh:
        head = fh.read(8)
        if head.startswith(b"\x89PNG"):
            return _read_png(path)
        data = head + fh.read()
    if len(data) < 2:
        raise CorruptHeader(path, "file too short")
    return _parse_pnm(path, data)


def load_image(path) -> RasterImage:
    """Load a PNG or binary PNM (P5/P6) file as RGB; gray files are replicated."""
    arr = _read_array(path)
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    return RasterImage(arr)


def load_gray(path) -> GrayImage:
    """Load a single-channel image.

    Files whose three channels agree are taken as-is; true color files are
    rejected so a gray stage never silently consumes a color artifact.
    """
    arr = _read_array(path)
    if arr.ndim == 3:
        if not (np.array_equal(arr[..., 0], arr[..., 1]) and np.array_equal(arr[..., 0], arr[..., 2])):
            raise UnsupportedFormat(path, "expected a grayscale image, got color")
        arr = arr[..., 0]
    return GrayImage(arr)


def load_mask(path) -> BinaryMask:
    """Load a 0/255 mask file; any non-zero value is foreground."""
    return BinaryMask(load_gray(path).pixels > 0)


def _encode_pnm(arr: np.ndarray) -> bytes:
    h, w = arr.shape[:2]
    magic = b"P6" if arr.ndim == 3 else b"P5"
    return magic + f"\n{w} {h}\n255\n".encode("ascii") + arr.tobytes()


def save_image(image: AnyRaster, path) -> None:
    """Write ``image`` losslessly; the format follows the file extension.

    ``.png`` writes PNG, ``.ppm``/``.pgm``/``.pnm`` write binary PNM (P6 for
    RGB, P5 otherwise). Masks are stored as 0/255 gray.
    """
    path = Path(path)
    if isinstance(image, BinaryMask):
        image = image.to_gray()
    arr = image.pixels
    ext = path.suffix.lower()
    if ext == ".png":
        payload = None
    elif ext in _PNM_EXTS:
        if ext == ".pgm" and arr.ndim == 3:
            raise UnsupportedFormat(path, "PGM cannot hold an RGB raster")
        if ext == ".ppm" and arr.ndim == 2:
            arr = np.repeat(arr[:, :, None], 3, axis=2)
        payload = _encode_pnm(arr)
    else:
        raise UnsupportedFormat(path, f"unknown extension {ext!r}")
    try:
        if payload is None:
            Image.fromarray(np.ascontiguousarray(arr), mode="RGB" if arr.ndim == 3 else "L").save(
                path, format="PNG", compress_level=1
            )
        else:
            with open(path, "wb") as fh:
                fh.write(payload)
    except OSError as exc:
        raise ImageIOError(path, exc) from exc


def ensure_dir(path) -> Path:
    path = Path(path)
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise ImageIOError(path, exc) from exc
    return path
