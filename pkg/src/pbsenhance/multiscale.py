"""Low-resolution solve followed by joint bilateral upsampling of the illumination."""
from __future__ import annotations

import math
from dataclasses import dataclass

import cv2
import numpy as np

from .illumination import initial_illumination, recover, s_min_map
from .solver import SolverConfig, estimate_illumination, project_box


@dataclass(frozen=True)
class JbuParams:
    sigma_d: float = 0.5
    sigma_r: float = 0.1
    window_radius: int = 2
    max_dim: int = 400

    def __post_init__(self):
        if self.sigma_d <= 0 or self.sigma_r <= 0 or self.max_dim <= 0:
            raise ValueError("JBU parameters must be positive")
        if self.window_radius < 1:
            raise ValueError("window_radius must be >= 1")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def downsample_max_dim(img: np.ndarray, max_dim: int) -> np.ndarray:
    """Area-average resample so the larger side equals ``max_dim``; no-op if already small enough."""
    h, w = img.shape[:2]
    if max(h, w) <= max_dim:
        return img
    scale = max_dim / max(h, w)
    nh = max_dim if h >= w else max(1, _round_half_up(h * scale))
    nw = max_dim if w > h else max(1, _round_half_up(w * scale))
    return cv2.resize(np.asarray(img, dtype=np.float64), (nw, nh), interpolation=cv2.INTER_AREA)


def _axis_taps(n_full: int, n_low: int, offset: int):
    # low-res sample coordinate of each full-res index (pixel-centre aligned)
    pos = (np.arange(n_full) + 0.5) * (n_low / n_full) - 0.5
    centre = np.clip(np.floor(pos + 0.5).astype(np.int64), 0, n_low - 1)
    q_low = centre + offset
    valid = (q_low >= 0) & (q_low < n_low)
    q_low = np.clip(q_low, 0, n_low - 1)
    q_full = np.clip(np.floor((q_low + 0.5) * (n_full / n_low)).astype(np.int64), 0, n_full - 1)
    return q_low, q_full, (pos - q_low) ** 2, valid


def joint_bilateral_upsample(S_low: np.ndarray, guide_full: np.ndarray, params: JbuParams = JbuParams()) -> np.ndarray:
    """Upsample ``S_low`` to the guide's resolution with spatial weights on
    low-res distances and range weights on guide differences."""
    H, W = guide_full.shape
    h, w = S_low.shape
    r = params.window_radius
    num = np.zeros((H, W))
    den = np.zeros((H, W))
    two_sd2 = 2.0 * params.sigma_d**2
    two_sr2 = 2.0 * params.sigma_r**2
    for dy in range(-r, r + 1):
        qy, Qy, d2y, vy = _axis_taps(H, h, dy)
        for dx in range(-r, r + 1):
            qx, Qx, d2x, vx = _axis_taps(W, w, dx)
            spatial = np.exp(-(d2y[:, None] + d2x[None, :]) / two_sd2)
            diff = guide_full - guide_full[Qy[:, None], Qx[None, :]]
            weight = spatial * np.exp(-(diff**2) / two_sr2) * (vy[:, None] & vx[None, :])
            num += weight * S_low[qy[:, None], qx[None, :]]
            den += weight
    return num / den


def enhance_fast(img: np.ndarray, solver: SolverConfig = SolverConfig(), jbu: JbuParams = JbuParams()):
    """Solve on a downsampled copy, upsample the illumination, re-project and recover.

    Returns ``(R, S, report)``. Images already within ``max_dim`` take the
    full-resolution path unchanged.
    """
    low = downsample_max_dim(img, jbu.max_dim)
    S, report = estimate_illumination(low, solver)
    if low is not img:
        S = joint_bilateral_upsample(S, initial_illumination(img), jbu)
        S = project_box(S, s_min_map(img, solver.gamma))
    R, report.clamped_pixels = recover(img, S, solver.gamma)
    return R, S, report


def enhance_naive(img: np.ndarray, solver: SolverConfig = SolverConfig()):
    S, report = estimate_illumination(img, solver)
    R, report.clamped_pixels = recover(img, S, solver.gamma)
    return R, S, report

