"""Relative total variation: finite differences, Gaussian smoothing, the
per-pixel weights used by the lagged quadratic solver and the windowed energy."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.ndimage import correlate1d


@dataclass(frozen=True)
class RtvParams:
    sigma: float = 3.0
    epsilon: float = 1e-3
    window_radius: int = 7

    def __post_init__(self):
        if self.sigma <= 0 or self.epsilon <= 0:
            raise ValueError("sigma and epsilon must be positive")
        if self.window_radius < 1:
            raise ValueError("window_radius must be >= 1")


class RtvWeights(NamedTuple):
    ux: np.ndarray
    wx: np.ndarray
    uy: np.ndarray
    wy: np.ndarray


_AXES = {"x": 1, "y": 0}


def forward_diff(field: np.ndarray, axis: str) -> np.ndarray:
    """``f(p + e_axis) - f(p)``; zero on the last column (``x``) or row (``y``)."""
    ax = _AXES[axis]
    field = np.asarray(field, dtype=np.float64)
    out = np.zeros_like(field)
    if ax == 1:
        out[:, :-1] = field[:, 1:] - field[:, :-1]
    else:
        out[:-1, :] = field[1:, :] - field[:-1, :]
    return out


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = max(1, math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x**2) / (2.0 * sigma**2))
    return k / k.sum()


def gaussian_convolve(field: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur, kernel truncated at ``ceil(3 sigma)``, replicate padding."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    k = gaussian_kernel(sigma)
    out = correlate1d(np.asarray(field, dtype=np.float64), k, axis=0, mode="nearest")
    return correlate1d(out, k, axis=1, mode="nearest")


def rtv_weights(S: np.ndarray, params: RtvParams = RtvParams()) -> RtvWeights:
    eps = params.epsilon
    out = []
    for axis in ("x", "y"):
        grad = forward_diff(S, axis)
        w = 1.0 / (np.abs(grad) + eps)
        u = gaussian_convolve(1.0 / (np.abs(gaussian_convolve(grad, params.sigma)) + eps), params.sigma)
        out += [u, w]
    ux, wx, uy, wy = out
    return RtvWeights(ux=ux, wx=wx, uy=uy, wy=wy)


def _window_counts(n: int, radius: int) -> np.ndarray:
    # number of window centres (clamped windows) covering each index
    idx = np.arange(n)
    return np.minimum(idx + radius, n - 1) - np.maximum(idx - radius, 0) + 1


def rtv_energy_from_weights(S: np.ndarray, weights: RtvWeights, radius: int) -> float:
    gx = forward_diff(S, "x")
    gy = forward_diff(S, "y")
    per_pixel = weights.ux * weights.wx * gx**2 + weights.uy * weights.wy * gy**2
    h, w = per_pixel.shape
    cover = np.outer(_window_counts(h, radius), _window_counts(w, radius))
    return float(np.sum(per_pixel * cover))


def rtv_energy(S: np.ndarray, params: RtvParams = RtvParams()) -> float:
    """Sum over pixels of the windowed x- and y-direction RTV measures.

    Each window ``N_p`` is ``(2r+1)^2`` truncated at the image border, so the
    total equals every pixel's weighted squared gradient times the number of
    windows covering it.
    """
    return rtv_energy_from_weights(S, rtv_weights(S, params), params.window_radius)
