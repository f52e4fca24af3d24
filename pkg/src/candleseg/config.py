"""Pipeline configuration: a flat TOML document with a strict key set.

Every key is optional; see ``DEFAULTS`` for the values used when a key is
absent. Unknown keys are rejected so a typo never silently falls back to a
default.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping, Optional, Tuple

import tomli

from .colorspace import WhitePoint
from .enhance import ClaheParams
from .errors import ConfigError
from .clustering import DEFAULT_REGION_ORDER, FEATURE_MODES, KMeansOptions
from .metrics import SsimParams
from .morphology import CannyParams, Strel, parse_strel
from .raster import Rect

SKIPPABLE = ("he", "clahe", "dilate", "thicken", "edges")
SKIP_ALIASES = {"morphology": ("dilate", "thicken", "edges"), "enhance": ("he", "clahe")}


@dataclass(frozen=True)
class PipelineConfig:
    input: Optional[Path] = None
    output: Optional[Path] = None
    crop: Optional[Rect] = None
    k: int = 3
    seed: int = 0
    kmeans_tol: float = 1e-4
    kmeans_max_iters: int = 100
    kmeans_n_init: int = 10
    feature_mode: str = "Lab"
    white_point: Tuple[float, float, float] = field(default_factory=lambda: tuple(WhitePoint.d65().as_array()))
    region_order: Tuple[str, ...] = DEFAULT_REGION_ORDER
    retain: Tuple[str, ...] = ("yolk",)
    clahe_tiles: Tuple[int, int] = (8, 8)
    clahe_alpha: float = 50.0
    clahe_smax: float = 4.0
    strel: str = "line:1:45"
    thicken_iterations: Optional[int] = 1
    canny_sigma: float = 1.4
    canny_low: float = 0.10
    canny_high: float = 0.25
    min_edge_size: int = 4
    ssim_window: int = 11
    ssim_sigma: float = 1.5
    ssim_exponents: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    mse_scale: str = "unit"
    skip: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.k < 2:
            raise ConfigError("k must be ≥ 2", key="k")
        if self.feature_mode not in FEATURE_MODES:
            raise ConfigError(f"feature_mode must be one of {FEATURE_MODES}", key="feature_mode")
        if self.mse_scale not in ("unit", "byte"):
            raise ConfigError("mse_scale must be 'unit' or 'byte'", key="mse_scale")
        if len(set(self.region_order)) != len(self.region_order) or len(self.region_order) < 2:
            raise ConfigError("region_order needs at least two distinct names", key="region_order")
        unknown = [r for r in self.retain if r not in self.region_order]
        if unknown:
            raise ConfigError(f"retain names unknown regions {unknown}", key="retain")
        bad = [s for s in self.skip if s not in SKIPPABLE]
        if bad:
            raise ConfigError(f"cannot skip {bad}; skippable stages are {SKIPPABLE}", key="skip")
        if self.thicken_iterations is not None and self.thicken_iterations < 0:
            raise ConfigError("thicken_iterations must be >= 0", key="thicken_iterations")
        if (
            self.input is not None
            and self.output is not None
            and Path(self.input).resolve() == Path(self.output).resolve()
        ):
            raise ConfigError("output directory must differ from the input path", key="output")
        # building the sub-parameter objects runs their own validation
        self.kmeans_options()
        self.clahe_params()
        self.canny_params()
        self.strel_element()
        self.ssim_params()
        self.white()

    def kmeans_options(self) -> KMeansOptions:
        try:
            return KMeansOptions(self.kmeans_max_iters, self.kmeans_tol, self.kmeans_n_init)
        except ValueError as exc:
            raise ConfigError(str(exc), key="kmeans") from exc

    def clahe_params(self) -> ClaheParams:
        tx, ty = self.clahe_tiles
        return ClaheParams(tiles_x=tx, tiles_y=ty, clip_alpha=self.clahe_alpha, s_max=self.clahe_smax)

    def canny_params(self) -> CannyParams:
        return CannyParams(self.canny_sigma, self.canny_low, self.canny_high, self.min_edge_size)

    def strel_element(self) -> Strel:
        return parse_strel(self.strel)

    def ssim_params(self) -> SsimParams:
        a, b, g = self.ssim_exponents
        try:
            return SsimParams(window=self.ssim_window, sigma=self.ssim_sigma, alpha=a, beta=b, gamma=g)
        except ValueError as exc:
            raise ConfigError(str(exc), key="ssim") from exc

    def white(self) -> WhitePoint:
        try:
            return WhitePoint(*self.white_point)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), key="white_point") from exc

    def enabled(self, stage: str) -> bool:
        return stage not in self.skip


DEFAULTS = PipelineConfig()
KEYS = tuple(f.name for f in fields(PipelineConfig))


def _pair(value, key, cast):
    if isinstance(value, str):
        parts = re.split(r"[x,]", value)
    else:
        parts = list(value)
    if len(parts) != 2:
        raise ConfigError(f"{key} expects two values", key=key)
    return tuple(cast(p) for p in parts)


def _coerce(key: str, value: Any):
    try:
        if key in ("input", "output"):
            return None if value is None else Path(value)
        if key == "crop":
            if value is None:
                return None
            if isinstance(value, str):
                return Rect.parse(value)
            return Rect(*(int(v) for v in value))
        if key == "clahe_tiles":
            return _pair(value, key, int)
        if key == "white_point":
            if isinstance(value, str):
                if value.upper() != "D65":
                    raise ConfigError("white_point must be 'D65' or [Xn, Yn, Zn]", key=key)
                return tuple(WhitePoint.d65().as_array())
            vals = tuple(float(v) for v in value)
            if len(vals) != 3:
                raise ConfigError("white_point expects three values", key=key)
            return vals
        if key == "ssim_exponents":
            vals = tuple(float(v) for v in value)
            if len(vals) != 3:
                raise ConfigError("ssim_exponents expects three values", key=key)
            return vals
        if key in ("region_order", "retain"):
            return (value,) if isinstance(value, str) else tuple(str(v) for v in value)
        if key == "skip":
            names = (value,) if isinstance(value, str) else tuple(str(v) for v in value)
            out = []
            for n in names:
                for s in SKIP_ALIASES.get(n, (n,)):
                    if s not in out:
                        out.append(s)
            return tuple(out)
        if key == "thicken_iterations":
            if value is None or (isinstance(value, str) and value.lower() in ("inf", "fixpoint")):
                return None
            return int(value)
        default = getattr(DEFAULTS, key)
        if isinstance(default, bool):
            return bool(value)
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(f"expected an integer, got {value}")
            return int(value)
        if isinstance(default, float):
            return float(value)
        return str(value)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid value for {key!r}: {value!r} ({exc})", key=key) from exc


def config_from_mapping(data: Mapping[str, Any], base: PipelineConfig | None = None) -> PipelineConfig:
    """Overlay ``data`` onto ``base`` (defaults when None), rejecting unknown keys."""
    unknown = sorted(set(data) - set(KEYS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}", key=unknown[0])
    values = {k: _coerce(k, v) for k, v in data.items()}
    try:
        return replace(base or DEFAULTS, **values)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


_LINE_RE = re.compile(r"line (\d+)")


def load_config(path, overrides: Mapping[str, Any] | None = None) -> PipelineConfig:
    """Read a TOML config file and apply ``overrides`` (e.g. from the command line) on top."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = _LINE_RE.search(str(exc))
        line = int(m.group(1)) if m else None
        raise ConfigError(f"{path}: parse error: {exc}", line=line) from exc
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"config must be flat; table(s) {nested} not allowed", key=nested[0])
    cfg = config_from_mapping(data)
    if overrides:
        cfg = config_from_mapping(overrides, cfg)
    return cfg
