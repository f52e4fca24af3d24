"""End-to-end run: Lab K-means segmentation, then grayscale enhancement and morphology.

Artifacts are written as ``NN_<stage>.png`` where NN is the zero-padded
position of the stage among the stages that ran, followed by
``report.json``. Nothing time-dependent goes into the files, so two runs
with one config produce identical bytes.
"""

from __future__ import annotations

import contextlib
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np

from . import clustering, colorspace, enhance, metrics, morphology
from .config import PipelineConfig
from .errors import CandleSegError, ConfigError, StageError
from .raster import BinaryMask, GrayImage, RasterImage, crop, ensure_dir, load_image, save_image

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".ppm", ".pgm", ".pnm")
THREADS_ENV = "CANDLESEG_THREADS"


@dataclass(frozen=True)
class StageRecord:
    name: str
    path: Path
    wall_ms: float


@dataclass
class StageArtifacts:
    records: List[StageRecord] = field(default_factory=list)

    @property
    def names(self) -> List[str]:
        return [r.name for r in self.records]

    def path(self, name: str) -> Path:
        for r in self.records:
            if r.name == name:
                return r.path
        raise KeyError(name)

    def images(self) -> List[StageRecord]:
        return [r for r in self.records if r.name != "report"]


# --------------------------------------------------------------------------
# stage helpers, shared with the per-operator CLI subcommands


def masked_rgb(image: RasterImage, mask: BinaryMask) -> RasterImage:
    """Keep ``image`` where ``mask`` is set, black elsewhere."""
    return RasterImage(np.where(mask.pixels[..., None], image.pixels, 0).astype(np.uint8))


def cluster_images(image: RasterImage, seg: clustering.SegmentationResult) -> List[RasterImage]:
    return [masked_rgb(image, seg.cluster_mask(c)) for c in range(seg.k)]


def composite(image: RasterImage, seg: clustering.SegmentationResult, retain) -> RasterImage:
    """Color image restricted to the retained named regions."""
    keep = np.zeros(seg.label_map.shape, dtype=bool)
    for name in retain:
        keep |= seg.masks[name].pixels
    return masked_rgb(image, BinaryMask(keep))


def run_segmentation(image: RasterImage, cfg: PipelineConfig) -> clustering.SegmentationResult:
    lab = colorspace.rgb_to_lab(image, cfg.white())
    return clustering.segment_lab(
        lab,
        k=cfg.k,
        seed=cfg.seed,
        opts=cfg.kmeans_options(),
        feature_mode=cfg.feature_mode,
        region_order=cfg.region_order,
    )


# --------------------------------------------------------------------------


class _Runner:
    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.artifacts = StageArtifacts()

    @contextlib.contextmanager
    def stage(self, name: str):
        try:
            yield
        except StageError:
            raise
        except (CandleSegError, ValueError, OSError) as exc:
            raise StageError(name, exc) from exc

    def emit(self, name: str, image, t0: float) -> None:
        idx = len(self.artifacts.records)
        path = self.out_dir / f"{idx:02d}_{name}.png"
        with self.stage(name):
            save_image(image, path)
        ms = (time.perf_counter() - t0) * 1000.0
        self.artifacts.records.append(StageRecord(name, path, ms))
        log.debug("stage %-16s %8.1f ms -> %s", name, ms, path.name)


def run_pipeline(cfg: PipelineConfig) -> Tuple[StageArtifacts, metrics.MetricsReport]:
    """Run every enabled stage on ``cfg.input`` and write artifacts to ``cfg.output``.

    Failures are re-raised as :class:`StageError` naming the stage.
    """
    if cfg.input is None or cfg.output is None:
        raise ConfigError("both input and output must be set", key="input" if cfg.input is None else "output")
    run = _Runner(Path(cfg.output))
    with run.stage("output"):
        ensure_dir(run.out_dir)

    with run.stage("load"):
        image = load_image(cfg.input)

    if cfg.crop is not None:
        t0 = time.perf_counter()
        with run.stage("crop"):
            image = crop(image, cfg.crop)
        run.emit("crop", image, t0)

    t0 = time.perf_counter()
    with run.stage("lab"):
        lab = colorspace.rgb_to_lab(image, cfg.white())
    run.emit("lab", lab.to_display(), t0)

    t0 = time.perf_counter()
    with run.stage("cluster_map"):
        seg = clustering.segment_lab(
            lab,
            k=cfg.k,
            seed=cfg.seed,
            opts=cfg.kmeans_options(),
            feature_mode=cfg.feature_mode,
            region_order=cfg.region_order,
        )
    run.emit("cluster_map", seg.label_image(), t0)
    for c, img in enumerate(cluster_images(image, seg), start=1):
        run.emit(f"cluster_{c}", img, time.perf_counter())

    t0 = time.perf_counter()
    with run.stage("color_segmented"):
        segmented = composite(image, seg, cfg.retain)
    run.emit("color_segmented", segmented, t0)

    t0 = time.perf_counter()
    gray = colorspace.rgb_to_gray(segmented)
    run.emit("gray", gray, t0)

    current: GrayImage = gray
    if cfg.enabled("he"):
        t0 = time.perf_counter()
        current = enhance.equalize(current)
        run.emit("he", current, t0)
    if cfg.enabled("clahe"):
        t0 = time.perf_counter()
        with run.stage("clahe"):
            current = enhance.clahe(current, cfg.clahe_params())
        run.emit("clahe", current, t0)

    t0 = time.perf_counter()
    bw = morphology.binarize_otsu(current)
    run.emit("bw", bw, t0)

    final: BinaryMask = bw
    final_stage = "bw"
    if cfg.enabled("dilate"):
        t0 = time.perf_counter()
        final = morphology.dilate(final, cfg.strel_element())
        final_stage = "dilate"
        run.emit("dilate", final, t0)
    if cfg.enabled("thicken"):
        t0 = time.perf_counter()
        final = morphology.thicken(final, cfg.thicken_iterations)
        final_stage = "thicken"
        run.emit("thicken", final, t0)
    if cfg.enabled("edges"):
        t0 = time.perf_counter()
        final = morphology.canny(final.to_gray(), cfg.canny_params())
        final_stage = "edges"
        run.emit("edges", final, t0)

    t0 = time.perf_counter()
    with run.stage("report"):
        reference = morphology.binarize_otsu(gray)
        report = metrics.evaluate(reference, final, cfg.ssim_params(), cfg.mse_scale)
        params = dict(report.params, reference="otsu(gray)", candidate=final_stage)
        report = replace(report, params=params)
        report_path = run.out_dir / "report.json"
        report_path.write_text(report.to_json(), encoding="utf-8")
    run.artifacts.records.append(StageRecord("report", report_path, (time.perf_counter() - t0) * 1000.0))
    return run.artifacts, report


def batch_inputs(directory) -> List[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigError(f"batch input {directory} is not a directory", key="input")
    return sorted(p for p in directory.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def thread_cap(default: int | None = None) -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            n = int(raw)
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}", key=THREADS_ENV) from exc
        return max(1, n)
    return default or os.cpu_count() or 1


def run_batch(cfg: PipelineConfig, directory) -> Dict[str, metrics.MetricsReport]:
    """Run the pipeline on every image in ``directory``; outputs go to ``cfg.output/<stem>/``.

    Images run concurrently, up to ``$CANDLESEG_THREADS`` at a time.
    """
    inputs = batch_inputs(directory)
    out_root = Path(cfg.output)
    jobs = [replace(cfg, input=p, output=out_root / p.stem) for p in inputs]
    if not jobs:
        return {}
    with ThreadPoolExecutor(max_workers=min(thread_cap(), len(jobs))) as pool:
        results = list(pool.map(run_pipeline, jobs))
    return {p.stem: rep for p, (_, rep) in zip(inputs, results)}
