"""Retinex primitives: initial illumination, its color-consistency lower bound,
the Gamma adjustment and recovery of the enhanced image from ``I = S * R``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# pre-clamp tolerance before a recovered pixel counts as clipped
GAMUT_TOL = 1e-6


@dataclass(frozen=True)
class GammaParams:
    gamma: float = 0.6
    s_floor: float = 1e-3

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0,1]")
        if not 0.0 < self.s_floor < 1.0:
            raise ValueError("s_floor must be in (0,1)")


def initial_illumination(img: np.ndarray) -> np.ndarray:
    """Per-pixel maximum over the RGB channels."""
    return np.asarray(img, dtype=np.float64).max(axis=2)


def s_min_map(img: np.ndarray, params: GammaParams = GammaParams()) -> np.ndarray:
    """Smallest illumination that keeps every channel of ``I / S**gamma`` in gamut.

    ``(max_c I)**(1/gamma)``, floored at ``params.s_floor`` so black pixels do
    not divide by zero.
    """
    peak = initial_illumination(img)
    return np.maximum(peak ** (1.0 / params.gamma), params.s_floor)


def gamma_map(S: np.ndarray, params: GammaParams = GammaParams()) -> np.ndarray:
    S = np.asarray(S, dtype=np.float64)
    if np.any(S <= 0.0):
        raise ValueError("illumination must be strictly positive")
    return S**params.gamma


def recover(
    img: np.ndarray, S: np.ndarray, params: GammaParams = GammaParams()
) -> tuple[np.ndarray, int]:
    """Enhanced image ``R = I / S**gamma`` and the number of clamped pixels.

    With ``S >= s_min_map(img)`` the result is in gamut analytically; the final
    clamp is defensive and a nonzero count points at a solver bug.
    """
    img = np.asarray(img, dtype=np.float64)
    S = np.asarray(S, dtype=np.float64)
    if S.shape != img.shape[:2]:
        raise ValueError(f"illumination shape {S.shape} does not match image {img.shape[:2]}")
    R = img / gamma_map(S, params)[:, :, None]
    out_of_gamut = np.any((R > 1.0 + GAMUT_TOL) | (R < -GAMUT_TOL), axis=2)
    return np.clip(R, 0.0, 1.0), int(out_of_gamut.sum())
