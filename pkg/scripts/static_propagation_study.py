"""How far propagated illumination drifts on static clips.

For each still frame the keyframe illumination is propagated to an identical
next frame with zero flow. The table lists the largest deviation, the share of
pixels whose winning bin differs from their own, and for the worst pixel the
size of its own bin versus the winning bin. Likelihoods are divided by the
global bin size, so a sparse bin with a few well-matched members in the window
can outscore the pixel's own bin.

    python3 scripts/static_propagation_study.py
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from pbsenhance.photo import enhance_photo
from pbsenhance.raster import load_image, luminance
from pbsenhance.synthetic import dimmed_image
from pbsenhance.video import PropagationConfig, illumination_histogram, map_assignment, propagate_illumination

DATA = Path(__file__).resolve().parent.parent / "data"


def piecewise_frame():
    frame = np.zeros((24, 32, 3))
    frame[:, :16] = (0.1, 0.15, 0.2)
    frame[:, 16:] = (0.4, 0.3, 0.35)
    frame[:8] = (0.25, 0.2, 0.1)
    return frame


def study(name, img, cfg):
    _, S, _ = enhance_photo(img)
    L = luminance(img)
    zero = np.zeros(img.shape[:2] + (2,))
    choice, _ = map_assignment(S, L, L, zero, cfg)
    out = propagate_illumination(S, img, img, cfg, flow=zero)
    own = np.minimum(np.floor(S * cfg.bins), cfg.bins - 1).astype(int)
    dev = np.abs(out - S)
    hist = illumination_histogram(S, cfg.bins)
    y, x = np.unravel_index(np.argmax(dev), dev.shape)
    print(
        f"{name:<22s}{dev.max():9.4f}{(dev > 1 / cfg.bins).mean():9.4f}{(choice != own).mean():9.4f}"
        f"{hist.counts[own[y, x]]:9d}{hist.counts[max(choice[y, x], 0)]:9d}"
    )


def main():
    cfg = PropagationConfig()
    print(f"{'frame':<22s}{'max dev':>9s}{'>1/16':>9s}{'switch':>9s}{'own n':>9s}{'win n':>9s}")
    study("piecewise constant", piecewise_frame(), cfg)
    for seed in range(6):
        study(f"dimmed seed {seed}", dimmed_image(seed, (48, 64))[0], cfg)
    study("bundled video frame 0", load_image(DATA / "video" / "frame_00000.png"), cfg)
    study("bundled sample", load_image(DATA / "sample_underexposed.png"), cfg)


if __name__ == "__main__":
    main()
