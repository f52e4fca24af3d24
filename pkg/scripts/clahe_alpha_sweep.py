"""Sweep the CLAHE clip factor and report the contrast it adds to the phantom's
yolk composite, next to the plain HE result.

    python scripts/clahe_alpha_sweep.py --alphas 0 25 50 75 100 --smax 4
"""

import argparse

import numpy as np

from candleseg.colorspace import rgb_to_gray
from candleseg.config import PipelineConfig
from candleseg.enhance import ClaheParams, clahe, equalize
from candleseg.morphology import binarize_otsu
from candleseg.phantom import make_phantom
from candleseg.pipeline import composite, run_segmentation


def rms_contrast(px):
    return float(np.std(px.astype(np.float64)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alphas", type=float, nargs="+", default=[0, 25, 50, 75, 100])
    ap.add_argument("--smax", type=float, default=4.0)
    ap.add_argument("--tiles", type=int, default=8)
    args = ap.parse_args()

    ph = make_phantom()
    seg = run_segmentation(ph.image, PipelineConfig())
    gray = rgb_to_gray(composite(ph.image, seg, ("yolk",)))
    he = equalize(gray)
    print(f"gray  rms={rms_contrast(gray.pixels):6.2f}")
    print(f"he    rms={rms_contrast(he.pixels):6.2f}")
    print(f"{'alpha':>6} {'rms':>7} {'fg %':>6}")
    for a in args.alphas:
        p = ClaheParams(tiles_x=args.tiles, tiles_y=args.tiles, clip_alpha=a, s_max=args.smax)
        out = clahe(he, p)
        fg = binarize_otsu(out).pixels.mean() * 100
        print(f"{a:>6.0f} {rms_contrast(out.pixels):>7.2f} {fg:>6.2f}")


if __name__ == "__main__":
    main()
