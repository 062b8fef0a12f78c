"""Regenerate the bundled test data under data/.

  data/corpus/synthetic/*.png  10 seeded dimmed textures (I = R * S, S in [0.2, 0.6])
  data/corpus/real/*.png       10 photographs from scikit-image, darkened
  data/test_1024x685.png       ~0.7 MP darkened photograph for fast-vs-naive timing
  data/sample_underexposed.png small CLI sample
  data/video/frame_%05d.png    8-frame panning clip with one scene cut (2 keyframes)

Darkening is ``0.6 * x**1.8`` on the 8-bit sRGB values, which crushes
shadows the way an underexposed capture does. Requires scikit-image (only
this script uses it).

    python3 scripts/make_corpus.py [--out data]
"""
from __future__ import annotations

import argparse
from pathlib import Path

import cv2
import numpy as np
import skimage.data

from pbsenhance.raster import save_image
from pbsenhance.synthetic import dimmed_image, quantize8

REAL = [
    "astronaut",
    "coffee",
    "chelsea",
    "rocket",
    "hubble_deep_field",
    "immunohistochemistry",
    "retina",
    "camera",
    "coins",
    "colorwheel",
]
CORPUS_MAX_DIM = 240


def darken(img: np.ndarray) -> np.ndarray:
    return quantize8(0.6 * img**1.8)


def as_rgb(a: np.ndarray) -> np.ndarray:
    a = a.astype(np.float64) / 255.0
    return np.repeat(a[:, :, None], 3, axis=2) if a.ndim == 2 else a[:, :, :3]


def resize_max(img: np.ndarray, max_dim: int) -> np.ndarray:
    h, w = img.shape[:2]
    s = max_dim / max(h, w)
    size = (max(1, round(w * s)), max(1, round(h * s)))
    interp = cv2.INTER_AREA if s < 1 else cv2.INTER_CUBIC
    return np.clip(cv2.resize(img, size, interpolation=interp), 0.0, 1.0)


def video_frames(n: int = 8, cut: int = 4, shape=(72, 96)) -> list[np.ndarray]:
    h, w = shape
    a = resize_max(as_rgb(skimage.data.coffee()), 160)
    b = resize_max(as_rgb(skimage.data.astronaut()), 160)
    frames = []
    for t in range(n):
        src = a if t < cut else b
        # pan one pixel right per frame
        x0 = 20 + t
        frames.append(darken(src[20 : 20 + h, x0 : x0 + w]))
    return frames


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data")
    args = ap.parse_args()
    out = args.out
    for sub in ("corpus/synthetic", "corpus/real", "video"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    for seed in range(10):
        I, _, _ = dimmed_image(seed)
        save_image(I, out / "corpus/synthetic" / f"synthetic_{seed:02d}.png")
    for name in REAL:
        img = resize_max(as_rgb(getattr(skimage.data, name)()), CORPUS_MAX_DIM)
        save_image(darken(img), out / "corpus/real" / f"{name}.png")

    rocket = as_rgb(skimage.data.rocket())
    big = np.clip(cv2.resize(rocket, (1024, 685), interpolation=cv2.INTER_CUBIC), 0.0, 1.0)
    save_image(darken(big), out / "test_1024x685.png")
    save_image(darken(resize_max(as_rgb(skimage.data.chelsea()), 200)), out / "sample_underexposed.png")

    for t, frame in enumerate(video_frames()):
        save_image(frame, out / "video" / f"frame_{t:05d}.png")
    print(f"wrote corpus under {out}")


if __name__ == "__main__":
    main()
