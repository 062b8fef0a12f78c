"""Coarse-to-fine Horn-Schunck optical flow and bilinear flow warping.

A flow field is a float64 ``(H, W, 2)`` array of ``(vx, vy)`` displacements
from the current frame to the previous one: ``cur(p) ~ prev(p + v_p)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import cv2
import numpy as np
from scipy.ndimage import correlate, map_coordinates, median_filter

# Horn-Schunck neighbourhood average
_HS_KERNEL = np.array([[1, 2, 1], [2, 0, 2], [1, 2, 1]], dtype=np.float64) / 12.0
# brightness constancy is evaluated on the 8-bit scale so alpha keeps its usual meaning
_INTENSITY_SCALE = 255.0


@dataclass(frozen=True)
class FlowParams:
    alpha: float = 10.0
    iterations: int = 100
    levels: int = 3
    warps: int = 2  # re-linearisations per pyramid level
    median_size: int = 3  # flow median filter before each re-linearisation; 1 disables

    def __post_init__(self):
        if self.alpha <= 0 or min(self.iterations, self.levels, self.warps, self.median_size) < 1:
            raise ValueError("flow parameters must be positive")


def warp(field: np.ndarray, flow: np.ndarray) -> np.ndarray:
    """Bilinear sample of ``field`` at ``p + v_p``; samples outside clamp to the border."""
    field = np.asarray(field, dtype=np.float64)
    if flow.shape != field.shape + (2,):
        raise ValueError(f"flow shape {flow.shape} does not match field {field.shape}")
    h, w = field.shape
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    coords = np.array([yy + flow[..., 1], xx + flow[..., 0]])
    return map_coordinates(field, coords, order=1, mode="nearest")


def _half(f: np.ndarray) -> np.ndarray:
    h, w = f.shape
    return cv2.resize(f, ((w + 1) // 2, (h + 1) // 2), interpolation=cv2.INTER_AREA)


def _upsample_flow(flow: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    h, w = shape
    sy = h / flow.shape[0]
    sx = w / flow.shape[1]
    up = cv2.resize(flow, (w, h), interpolation=cv2.INTER_LINEAR)
    up[..., 0] *= sx
    up[..., 1] *= sy
    return up


def _refine(cur: np.ndarray, prev: np.ndarray, flow: np.ndarray, params: FlowParams) -> np.ndarray:
    if params.median_size > 1:
        flow = np.stack([median_filter(flow[..., k], size=params.median_size, mode="nearest") for k in range(2)], axis=-1)
    warped = warp(prev, flow)
    gy_w, gx_w = np.gradient(warped)
    gy_c, gx_c = np.gradient(cur)
    ix = 0.5 * (gx_w + gx_c)
    iy = 0.5 * (gy_w + gy_c)
    it = warped - cur
    denom = params.alpha**2 + ix**2 + iy**2
    u = flow[..., 0].copy()
    v = flow[..., 1].copy()
    base_u, base_v = u.copy(), v.copy()
    for _ in range(params.iterations):
        # Jacobi update of the increment around the warp point
        du = correlate(u, _HS_KERNEL, mode="nearest") - base_u
        dv = correlate(v, _HS_KERNEL, mode="nearest") - base_v
        t = (ix * du + iy * dv + it) / denom
        u = base_u + du - ix * t
        v = base_v + dv - iy * t
    return np.stack([u, v], axis=-1)


def estimate_flow(f_cur: np.ndarray, f_prev: np.ndarray, params: FlowParams = FlowParams()) -> np.ndarray:
    """Dense flow from luminance ``f_cur`` to ``f_prev`` (both in [0, 1])."""
    f_cur = np.asarray(f_cur, dtype=np.float64)
    f_prev = np.asarray(f_prev, dtype=np.float64)
    if f_cur.shape != f_prev.shape:
        raise ValueError(f"frame shapes differ: {f_cur.shape} vs {f_prev.shape}")
    pyramid = [(f_cur * _INTENSITY_SCALE, f_prev * _INTENSITY_SCALE)]
    for _ in range(params.levels - 1):
        c, p = pyramid[-1]
        if min(c.shape) < 8:
            break
        pyramid.append((_half(c), _half(p)))

    flow = np.zeros(pyramid[-1][0].shape + (2,))
    for level, (c, p) in enumerate(reversed(pyramid)):
        if level:
            flow = _upsample_flow(flow, c.shape)
        for _ in range(params.warps):
            flow = _refine(c, p, flow, params)
    limit = float(max(f_cur.shape))
    return np.clip(np.nan_to_num(flow, nan=0.0, posinf=0.0, neginf=0.0), -limit, limit)
