"""Render the synthetic egg, run the full pipeline on it and print stage timings,
segmentation IoU against the known regions, and the metrics report.

    python scripts/run_phantom_pipeline.py --out runs/phantom --repeat 3
"""

import argparse
import json
import statistics
import time
from pathlib import Path

from candleseg.config import PipelineConfig
from candleseg.phantom import iou, make_phantom
from candleseg.pipeline import run_pipeline, run_segmentation
from candleseg.raster import save_image


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("runs/phantom"))
    ap.add_argument("--width", type=int, default=582)
    ap.add_argument("--height", type=int, default=778)
    ap.add_argument("--phantom-seed", type=int, default=7)
    ap.add_argument("--seed", type=int, default=0, help="k-means seed")
    ap.add_argument("--repeat", type=int, default=1)
    args = ap.parse_args()

    ph = make_phantom(args.width, args.height, seed=args.phantom_seed)
    args.out.mkdir(parents=True, exist_ok=True)
    src = args.out / "phantom.png"
    save_image(ph.image, src)

    cfg = PipelineConfig(input=src, output=args.out / "artifacts", seed=args.seed)
    seg = run_segmentation(ph.image, cfg)
    for name in ("background", "egg", "yolk"):
        print(f"IoU {name:<10} {iou(seg.masks[name], ph.truth[name]):.4f}")

    totals = []
    for _ in range(args.repeat):
        t0 = time.perf_counter()
        arts, report = run_pipeline(cfg)
        totals.append(time.perf_counter() - t0)

    print()
    for rec in arts.records:
        print(f"{rec.name:<16} {rec.wall_ms:8.1f} ms  {rec.path.name}")
    print(f"\ntotal {statistics.median(totals):.3f} s (median of {len(totals)})")
    print(json.dumps({k: v for k, v in report.to_dict().items() if k != "params"}, indent=2))


if __name__ == "__main__":
    main()
