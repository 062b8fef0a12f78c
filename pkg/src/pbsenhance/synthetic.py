"""Seeded synthetic scenes: dimmed textures, piecewise Retinex scenes and small videos."""
from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter

from .raster import VideoSequence


def _normalise(f: np.ndarray) -> np.ndarray:
    lo, hi = f.min(), f.max()
    return (f - lo) / (hi - lo) if hi > lo else np.zeros_like(f)


def quantize8(img: np.ndarray) -> np.ndarray:
    return np.floor(np.clip(img, 0.0, 1.0) * 255.0 + 0.5) / 255.0


def smooth_field(shape, rng: np.random.Generator, lo: float, hi: float, sigma_frac: float = 0.2) -> np.ndarray:
    """Low-frequency random field rescaled to ``[lo, hi]``."""
    sigma = sigma_frac * max(shape)
    return lo + (hi - lo) * _normalise(gaussian_filter(rng.random(shape), sigma, mode="reflect"))


def textured_reflectance(shape, rng: np.random.Generator) -> np.ndarray:
    """Colourful reflectance with blobs and fine texture, in [0.05, 1]."""
    h, w = shape
    base = np.stack([_normalise(gaussian_filter(rng.random(shape), 6.0)) for _ in range(3)], axis=-1)
    fine = _normalise(gaussian_filter(rng.random(shape), 1.0))[..., None]
    R = 0.05 + 0.95 * np.clip(0.7 * base + 0.3 * fine, 0.0, 1.0)
    # a few hard-edged rectangles give the scene structure
    for _ in range(4):
        y0, x0 = rng.integers(0, h - h // 4), rng.integers(0, w - w // 4)
        y1, x1 = y0 + rng.integers(h // 8, h // 4), x0 + rng.integers(w // 8, w // 4)
        R[y0:y1, x0:x1] = rng.uniform(0.2, 1.0, 3)
    return R


def dimmed_image(seed: int, shape=(96, 128)):
    """``I = R_true * S_true`` with ``S_true`` smooth in [0.2, 0.6], quantized to 8 bits.

    Returns ``(I, R_true, S_true)``.
    """
    rng = np.random.default_rng(seed)
    R = textured_reflectance(shape, rng)
    S = smooth_field(shape, rng, 0.2, 0.6)
    return quantize8(R * S[..., None]), R, S


def piecewise_scene(seed: int, shape=(64, 80), regions: int = 6):
    """Piecewise-constant reflectance whose brightest channel is 1 in every
    region, lit by a piecewise-smooth illumination (a smooth ramp plus a step
    along region boundaries). Because ``max_c R = 1`` the per-pixel channel
    maximum of ``I`` equals ``S_true`` exactly.

    Returns ``(I, R_true, S_true)`` in float (no quantization).
    """
    rng = np.random.default_rng(seed)
    h, w = shape
    centres = np.column_stack([rng.uniform(0, h, regions), rng.uniform(0, w, regions)])
    yy, xx = np.mgrid[0:h, 0:w]
    d = (yy[..., None] - centres[:, 0]) ** 2 + (xx[..., None] - centres[:, 1]) ** 2
    label = np.argmin(d, axis=-1)
    colours = rng.uniform(0.1, 1.0, (regions, 3))
    colours[np.arange(regions), rng.integers(0, 3, regions)] = 1.0
    R = colours[label]
    offsets = rng.uniform(0.0, 0.25, regions)
    ramp = 0.25 + 0.2 * (xx / max(w - 1, 1)) + 0.1 * (yy / max(h - 1, 1))
    S = np.clip(ramp + offsets[label], 0.05, 1.0)
    return R * S[..., None], R, S


def static_video(frame: np.ndarray, n: int) -> VideoSequence:
    return VideoSequence(frames=[frame.copy() for _ in range(n)])


def translating_video(seed: int, n: int, shape=(48, 64), step=(1, 0)) -> VideoSequence:
    """Dim textured scene panned by ``step = (dx, dy)`` pixels per frame."""
    dx, dy = step
    h, w = shape
    pad_h, pad_w = h + abs(dy) * n, w + abs(dx) * n
    big, _, _ = dimmed_image(seed, (pad_h, pad_w))
    frames = []
    for t in range(n):
        y0 = dy * t if dy >= 0 else pad_h - h + dy * t
        x0 = dx * t if dx >= 0 else pad_w - w + dx * t
        frames.append(big[y0 : y0 + h, x0 : x0 + w].copy())
    return VideoSequence(frames=frames)
