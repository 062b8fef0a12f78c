"""Compare the downsample-and-upsample path against the full-resolution solve.

Prints wall time for both paths, their ratio and PSNR(fast, naive).

    python3 scripts/bench_fast_vs_naive.py [image] [--repeats 2]
"""
from __future__ import annotations

import argparse
import time
from pathlib import Path

import numpy as np

from pbsenhance.metrics import psnr
from pbsenhance.photo import enhance_photo
from pbsenhance.raster import load_image

DEFAULT = Path(__file__).resolve().parent.parent / "data" / "test_1024x685.png"


def timed(img, mode, repeats):
    best, out = np.inf, None
    for _ in range(repeats):
        t = time.perf_counter()
        out = enhance_photo(img, mode=mode)
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("image", type=Path, nargs="?", default=DEFAULT)
    ap.add_argument("--repeats", type=int, default=2)
    args = ap.parse_args()
    img = load_image(args.image)
    enhance_photo(img[:64, :64], mode="naive")  # compile kernels first
    t_fast, (R_fast, _, rep_fast) = timed(img, "fast", args.repeats)
    t_naive, (R_naive, _, rep_naive) = timed(img, "naive", 1)
    h, w = img.shape[:2]
    print(f"image            {args.image.name} ({w}x{h}, {w * h / 1e6:.2f} MP)")
    print(f"fast             {t_fast:.2f} s  outer={rep_fast.outer_iterations}")
    print(f"naive            {t_naive:.2f} s  outer={rep_naive.outer_iterations}")
    print(f"naive/fast       {t_naive / t_fast:.2f}")
    print(f"PSNR(fast,naive) {psnr(R_fast, R_naive):.2f} dB")


if __name__ == "__main__":
    main()
