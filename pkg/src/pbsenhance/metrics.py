"""Image quality telemetry: discrete entropy, PSNR and mean luminance."""
from __future__ import annotations

import math

import numpy as np

from .raster import check_rgb, luminance

PSNR_CAP = 99.0
_HALF_UP_SLACK = 1e-9


def gray8(img: np.ndarray) -> np.ndarray:
    """8-bit luminance levels, rounded half up."""
    y = luminance(check_rgb(img), "yuv_y")
    # the slack absorbs rounding in the luma weights, so gray k/255 + 0.5/255 still rounds up
    return np.minimum(np.floor(y * 255.0 + 0.5 + _HALF_UP_SLACK), 255).astype(np.int64)


def discrete_entropy(img: np.ndarray) -> float:
    """Shannon entropy (bits) of the 256-bin luminance histogram."""
    hist = np.bincount(gray8(img).ravel(), minlength=256).astype(np.float64)
    h = hist[hist > 0] / hist.sum()
    return float(max(0.0, -np.sum(h * np.log2(h))))


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """``10 log10(1 / MSE)`` over all channels, capped at 99 dB."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(1.0 / mse))


def mean_luminance(img: np.ndarray) -> float:
    return float(np.mean(luminance(check_rgb(img), "yuv_y")))


def temporal_variance(frames: list[np.ndarray]) -> np.ndarray:
    """Per-pixel variance across frames (averaged over channels)."""
    stack = np.stack([np.asarray(f, dtype=np.float64) for f in frames])
    var = stack.var(axis=0)
    return var.mean(axis=-1) if var.ndim == 3 else var
