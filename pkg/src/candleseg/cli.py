"""Command line interface.

Exit codes: 0 success, 1 usage error, 2 processing error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import colorspace, enhance, metrics, morphology, pipeline
from .config import DEFAULTS, PipelineConfig, config_from_mapping, load_config
from .errors import CandleSegError, ConfigError
from .phantom import make_phantom
from .raster import GrayImage, ensure_dir, load_gray, load_image, load_mask, save_image

EXIT_OK, EXIT_USAGE, EXIT_PROCESSING = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------
# option groups mapped onto config keys


def _add_kmeans_opts(p):
    p.add_argument("--k", type=int, help=f"cluster count (default {DEFAULTS.k})")
    p.add_argument("--seed", type=int, help="SplitMix64 seed for centroid initialization")
    p.add_argument("--tol", dest="kmeans_tol", type=float, help="max centroid displacement for convergence")
    p.add_argument("--max-iters", dest="kmeans_max_iters", type=int)
    p.add_argument("--n-init", dest="kmeans_n_init", type=int, help="seeded restarts; lowest objective wins")
    p.add_argument("--feature-mode", choices=("Lab", "ab"))
    p.add_argument("--region-order", help="comma list, darkest to brightest cluster")
    p.add_argument("--retain", help="comma list of regions kept in the color composite")
    p.add_argument("--white-point", help="'D65' or Xn,Yn,Zn")


def _add_clahe_opts(p):
    p.add_argument("--clahe-tiles", help="tile grid as COLSxROWS, e.g. 8x8")
    p.add_argument("--clahe-alpha", type=float, help="clip factor in [0, 100]")
    p.add_argument("--clahe-smax", type=float, help="maximum slope, >= 1")


def _add_morph_opts(p):
    p.add_argument("--strel", help="line:<len>:<deg> or square:<side>")
    p.add_argument("--thicken-iterations", help="passes of the thickening sweep, or 'inf' for the fixpoint")


def _add_canny_opts(p):
    p.add_argument("--canny-sigma", type=float)
    p.add_argument("--canny-low", type=float, help="low threshold as a fraction of the peak gradient")
    p.add_argument("--canny-high", type=float, help="high threshold as a fraction of the peak gradient")
    p.add_argument("--min-edge-size", type=int, help="drop edge components with fewer pixels")


def _add_metric_opts(p):
    p.add_argument("--mse-scale", choices=("unit", "byte"))
    p.add_argument("--ssim-window", type=int)
    p.add_argument("--ssim-sigma", type=float)


_LIST_KEYS = {"region_order", "retain", "white_point"}
_OPTION_KEYS = (
    "k seed kmeans_tol kmeans_max_iters kmeans_n_init feature_mode region_order retain white_point "
    "clahe_tiles clahe_alpha clahe_smax strel thicken_iterations canny_sigma canny_low canny_high "
    "min_edge_size mse_scale ssim_window ssim_sigma crop"
).split()


def _overrides(args) -> dict:
    out = {}
    for key in _OPTION_KEYS:
        val = getattr(args, key, None)
        if val is None:
            continue
        if key in _LIST_KEYS and not (key == "white_point" and val.upper() == "D65"):
            val = [v.strip() for v in val.split(",")]
        out[key] = val
    skip = getattr(args, "skip", None)
    if skip:
        out["skip"] = [s for item in skip for s in item.split(",")]
    return out


def _config(args, **extra) -> PipelineConfig:
    over = _overrides(args)
    over.update({k: v for k, v in extra.items() if v is not None})
    path = getattr(args, "config", None)
    if path:
        return load_config(path, over)
    return config_from_mapping(over)


def _read_plane(path) -> GrayImage:
    """Gray plane of any supported file; color files go through the weighted grayscale."""
    img = load_image(path)
    px = img.pixels
    if np.array_equal(px[..., 0], px[..., 1]) and np.array_equal(px[..., 0], px[..., 2]):
        return GrayImage(px[..., 0])
    return colorspace.rgb_to_gray(img)


# --------------------------------------------------------------------------
# subcommands


def cmd_pipeline(args) -> int:
    if args.batch:
        if args.input:
            raise UsageError("give either INPUT or --batch DIR, not both")
        cfg = _config(args, output=args.output)
        if cfg.output is None:
            raise UsageError("--output is required")
        reports = pipeline.run_batch(cfg, args.batch)
        print(json.dumps({k: r.to_dict() for k, r in reports.items()}, indent=2))
        return EXIT_OK
    cfg = _config(args, input=args.input, output=args.output)
    if cfg.input is None or cfg.output is None:
        raise UsageError("input and --output are required (on the command line or in --config)")
    artifacts, report = pipeline.run_pipeline(cfg)
    for rec in artifacts.records:
        logging.getLogger("candleseg").info("%-16s %8.1f ms  %s", rec.name, rec.wall_ms, rec.path)
    print(report.to_json(), end="")
    return EXIT_OK


def cmd_lab(args) -> int:
    cfg = _config(args)
    lab = colorspace.rgb_to_lab(load_image(args.input), cfg.white())
    save_image(lab.to_display(), args.output)
    return EXIT_OK


def cmd_segment(args) -> int:
    cfg = _config(args)
    image = load_image(args.input)
    seg = pipeline.run_segmentation(image, cfg)
    out = ensure_dir(args.output)
    save_image(seg.label_image(), out / "cluster_map.png")
    for c, img in enumerate(pipeline.cluster_images(image, seg), start=1):
        save_image(img, out / f"cluster_{c}.png")
    save_image(pipeline.composite(image, seg, cfg.retain), out / "color_segmented.png")
    summary = {
        "k": seg.k,
        "seed": seg.model.seed,
        "iterations": seg.model.iterations,
        "converged": seg.model.converged,
        "objective": seg.model.objective,
        "centroids": seg.model.centroids.tolist(),
        "cluster_lightness": list(seg.cluster_lightness),
        "regions": {k: list(v) for k, v in seg.region_assignment.items()},
    }
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_gray(args) -> int:
    save_image(colorspace.rgb_to_gray(load_image(args.input)), args.output)
    return EXIT_OK


def cmd_enhance(args) -> int:
    cfg = _config(args)
    img = load_gray(args.input)
    if args.method in ("he", "both"):
        img = enhance.equalize(img)
    if args.method in ("clahe", "both"):
        img = enhance.clahe(img, cfg.clahe_params())
    save_image(img, args.output)
    return EXIT_OK


def cmd_morph(args) -> int:
    cfg = _config(args)
    if args.op == "binarize":
        out = morphology.binarize_otsu(load_gray(args.input))
    elif args.op == "dilate":
        out = morphology.dilate(load_mask(args.input), cfg.strel_element())
    else:
        out = morphology.thicken(load_mask(args.input), cfg.thicken_iterations)
    save_image(out, args.output)
    return EXIT_OK


def cmd_edges(args) -> int:
    cfg = _config(args)
    save_image(morphology.canny(load_gray(args.input), cfg.canny_params()), args.output)
    return EXIT_OK


def cmd_metrics(args) -> int:
    cfg = _config(args)
    a, b = _read_plane(args.a), _read_plane(args.b)
    if args.binarize:
        a, b = morphology.binarize_otsu(a), morphology.binarize_otsu(b)
    report = metrics.evaluate(a, b, cfg.ssim_params(), cfg.mse_scale)
    text = report.to_json()
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    print(text, end="")
    return EXIT_OK


def cmd_phantom(args) -> int:
    ph = make_phantom(args.width, args.height, seed=args.seed, noise=args.noise)
    save_image(ph.image, args.output)
    if args.truth_dir:
        out = ensure_dir(args.truth_dir)
        for name, mask in ph.truth.items():
            save_image(mask, out / f"truth_{name}.png")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="candleseg", description="Lab K-means egg-embryo segmentation pipeline.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-stage timings")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("pipeline", help="run the full two-phase pipeline")
    p.add_argument("input", nargs="?", help="input PNG/PPM image")
    p.add_argument("-o", "--output", help="output directory for stage artifacts")
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--batch", metavar="DIR", help="process every image in DIR concurrently")
    p.add_argument("--crop", help="x0,y0,w,h crop rectangle (width x height order)")
    p.add_argument("--skip", action="append", help="stage(s) to skip: he, clahe, dilate, thicken, edges, "
                   "or the groups 'enhance' and 'morphology'")
    for add in (_add_kmeans_opts, _add_clahe_opts, _add_morph_opts, _add_canny_opts, _add_metric_opts):
        add(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("lab", help="RGB to Lab visualization (L*x2.55, a*+128, b*+128)")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--white-point", help="'D65' or Xn,Yn,Zn")
    p.set_defaults(func=cmd_lab)

    p = sub.add_parser("segment", help="K-means clustering in Lab; writes cluster map, clusters and composite")
    p.add_argument("input")
    p.add_argument("output", help="output directory")
    _add_kmeans_opts(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("gray", help="weighted grayscale conversion")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_gray)

    p = sub.add_parser("enhance", help="histogram equalization and/or CLAHE")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--method", choices=("he", "clahe", "both"), default="both")
    _add_clahe_opts(p)
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("morph", help="Otsu binarization, dilation or thickening")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--op", choices=("binarize", "dilate", "thicken"), required=True)
    _add_morph_opts(p)
    p.set_defaults(func=cmd_morph)

    p = sub.add_parser("edges", help="Canny edge detection")
    p.add_argument("input")
    p.add_argument("output")
    _add_canny_opts(p)
    p.set_defaults(func=cmd_edges)

    p = sub.add_parser("metrics", help="MSE and SSIM report between two images")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("-o", "--output", help="also write the JSON report here")
    p.add_argument("--binarize", action="store_true", help="Otsu-binarize both images first")
    _add_metric_opts(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("phantom", help="write the synthetic candled-egg test image")
    p.add_argument("output")
    p.add_argument("--width", type=int, default=582)
    p.add_argument("--height", type=int, default=778)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--noise", type=float, default=2.0)
    p.add_argument("--truth-dir", help="also write ground-truth region masks here")
    p.set_defaults(func=cmd_phantom)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        parser.print_usage(sys.stderr)
        print(f"candleseg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CandleSegError as exc:
        print(f"candleseg: error: {exc}", file=sys.stderr)
        return EXIT_PROCESSING
    except (ValueError, OSError) as exc:
        print(f"candleseg: error: {exc}", file=sys.stderr)
        return EXIT_PROCESSING


if __name__ == "__main__":
    sys.exit(main())
