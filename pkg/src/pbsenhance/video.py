"""Video enhancement: keyframe selection, histogram-based MAP propagation of the
illumination between keyframes, recovery and a motion-compensated temporal blend.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numba
import numpy as np

from .flow import FlowParams, estimate_flow, warp
from .illumination import GammaParams, recover, s_min_map
from .multiscale import JbuParams
from .photo import enhance_photo
from .raster import VideoSequence, check_rgb, luminance
from .rtv import gaussian_convolve
from .solver import SolveReport, SolverConfig, project_box


@dataclass(frozen=True)
class PropagationConfig:
    window_n: int = 30
    parzen_d: float = 5.0  # on the 8-bit luminance scale
    bins: int = 16
    keyframe_ell: float = 0.1
    keyframe_ratio: float = 0.3
    keyframe_blur_sigma: float = 2.0
    min_distance_clamp: float = 1.0
    flow: FlowParams = field(default_factory=FlowParams)

    def __post_init__(self):
        if min(self.window_n, self.bins) < 1:
            raise ValueError("window_n and bins must be >= 1")
        if min(self.parzen_d, self.keyframe_ell, self.keyframe_blur_sigma, self.min_distance_clamp) <= 0:
            raise ValueError("propagation parameters must be positive")
        if not 0.0 < self.keyframe_ratio < 1.0:
            raise ValueError("keyframe_ratio must be in (0, 1)")


# -- keyframes ---------------------------------------------------------------

def _keyframe_luma(frame: np.ndarray, sigma: float) -> np.ndarray:
    return gaussian_convolve(luminance(frame, "lab_l"), sigma)


def extract_keyframes(video: VideoSequence, config: PropagationConfig = PropagationConfig()) -> list[int]:
    """Indices of keyframes, starting with 0.

    A frame becomes a keyframe when strictly more than ``keyframe_ratio`` of
    its pixels differ from the last keyframe by at least ``keyframe_ell`` in
    blurred Lab lightness (scaled to [0, 1]).
    """
    sigma = config.keyframe_blur_sigma
    ref = _keyframe_luma(video.frames[0], sigma)
    # exact rational comparison so that "exactly 30%" is never promoted by rounding
    ratio = Fraction(repr(float(config.keyframe_ratio)))
    keys = [0]
    for t in range(1, len(video)):
        cur = _keyframe_luma(video.frames[t], sigma)
        changed = int(np.count_nonzero(np.abs(cur - ref) >= config.keyframe_ell))
        if Fraction(changed, cur.size) > ratio:
            keys.append(t)
            ref = cur
    return keys


# -- histogram ----------------------------------------------------------------

@dataclass
class IlluminationHistogram:
    labels: np.ndarray  # (H, W) bin index per pixel
    counts: np.ndarray  # (bins,)

    @property
    def bins(self) -> int:
        return len(self.counts)

    def members(self, i: int) -> np.ndarray:
        """Flat (row-major) indices of the pixels in bin ``i``."""
        return np.flatnonzero(self.labels == i)


def illumination_histogram(S: np.ndarray, bins: int = 16) -> IlluminationHistogram:
    """Uniform bins ``[i/bins, (i+1)/bins)``; the last bin also takes 1.0."""
    S = np.asarray(S, dtype=np.float64)
    if S.min() < 0.0 or S.max() > 1.0:
        raise ValueError("illumination must lie in [0, 1]")
    labels = np.minimum(np.floor(S * bins).astype(np.int64), bins - 1)
    counts = np.bincount(labels.ravel(), minlength=bins)
    return IlluminationHistogram(labels=labels, counts=counts)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def corresponding_pixel(p: tuple[int, int], flow: np.ndarray) -> tuple[int, int]:
    """``p + v_p`` rounded to the nearest pixel and clamped to the frame."""
    y, x = p
    h, w = flow.shape[:2]
    yy = min(max(_round_half_up(y + flow[y, x, 1]), 0), h - 1)
    xx = min(max(_round_half_up(x + flow[y, x, 0]), 0), w - 1)
    return yy, xx


def window_bounds(centre: tuple[int, int], shape: tuple[int, int], n: int) -> tuple[int, int, int, int]:
    """``n x n`` window starting ``n // 2`` before the centre, truncated to the frame.

    Returns half-open ``(y0, y1, x0, x1)``.
    """
    y, x = centre
    h, w = shape
    y0, x0 = y - n // 2, x - n // 2
    return max(y0, 0), min(y0 + n, h), max(x0, 0), min(x0 + n, w)


def likelihood(p, bin_i, L_cur, L_prev, hist: IlluminationHistogram, flow, config: PropagationConfig = PropagationConfig()) -> float:
    """Parzen estimate of ``P(p | H_i)`` over the window around ``p + v_p``."""
    size = int(hist.counts[bin_i])
    if size == 0:
        return 0.0
    pp = corresponding_pixel(p, flow)
    y0, y1, x0, x1 = window_bounds(pp, L_prev.shape, config.window_n)
    two_d2 = 2.0 * config.parzen_d * config.parzen_d
    lp = L_cur[p]
    total = 0.0
    for qy in range(y0, y1):
        for qx in range(x0, x1):
            if hist.labels[qy, qx] == bin_i:
                diff = 255.0 * (L_prev[qy, qx] - lp)
                total += math.exp(-(diff * diff) / two_d2)
    return total / size


def prior(p_prime, bin_i, hist: IlluminationHistogram, config: PropagationConfig = PropagationConfig()) -> float:
    """``1 / sqrt(max(D, clamp))`` for the nearest bin-``i`` member in the window; 0 if none."""
    y0, y1, x0, x1 = window_bounds(p_prime, hist.labels.shape, config.window_n)
    best = math.inf
    for qy in range(y0, y1):
        for qx in range(x0, x1):
            if hist.labels[qy, qx] == bin_i:
                best = min(best, math.hypot(qy - p_prime[0], qx - p_prime[1]))
    if math.isinf(best):
        return 0.0
    return 1.0 / math.sqrt(max(best, config.min_distance_clamp))


@numba.njit(cache=True)
def _map_kernel(labels, counts, S_prev, L_prev, L_cur, flow, n, two_d2, clamp):
    h, w = labels.shape
    nb = counts.shape[0]
    choice = np.full((h, w), -1, np.int64)
    value = np.zeros((h, w))
    lik = np.zeros(nb)
    dmin = np.zeros(nb)
    ref = np.zeros(nb)
    acc = np.zeros(nb)
    cnt = np.zeros(nb, np.int64)
    for y in range(h):
        for x in range(w):
            py = min(max(int(math.floor(y + flow[y, x, 1] + 0.5)), 0), h - 1)
            px = min(max(int(math.floor(x + flow[y, x, 0] + 0.5)), 0), w - 1)
            y0 = py - n // 2
            x0 = px - n // 2
            y1 = min(y0 + n, h)
            x1 = min(x0 + n, w)
            y0 = max(y0, 0)
            x0 = max(x0, 0)
            lik[:] = 0.0
            dmin[:] = np.inf
            acc[:] = 0.0
            cnt[:] = 0
            lp = L_cur[y, x]
            for qy in range(y0, y1):
                for qx in range(x0, x1):
                    b = labels[qy, qx]
                    diff = 255.0 * (L_prev[qy, qx] - lp)
                    lik[b] += math.exp(-(diff * diff) / two_d2)
                    d = math.hypot(qy - py, qx - px)
                    if d < dmin[b]:
                        dmin[b] = d
                    s = S_prev[qy, qx]
                    if cnt[b] == 0:
                        ref[b] = s
                    else:
                        acc[b] += s - ref[b]
                    cnt[b] += 1
            best = 0.0
            arg = -1
            for b in range(nb):
                if cnt[b] == 0:
                    continue
                post = (lik[b] / counts[b]) * (1.0 / math.sqrt(max(dmin[b], clamp)))
                if post > best:
                    best = post
                    arg = b
            choice[y, x] = arg
            if arg >= 0:
                # offset from the first member keeps constant regions exact
                value[y, x] = ref[arg] + acc[arg] / cnt[arg]
    return choice, value


def map_assignment(S_prev, L_prev, L_cur, flow, config: PropagationConfig = PropagationConfig()):
    """Per-pixel MAP bin (-1 where every posterior is zero) and the windowed
    mean of ``S_prev`` over that bin's members."""
    hist = illumination_histogram(S_prev, config.bins)
    return _map_kernel(
        hist.labels,
        hist.counts.astype(np.float64),
        np.ascontiguousarray(S_prev, dtype=np.float64),
        np.ascontiguousarray(L_prev, dtype=np.float64),
        np.ascontiguousarray(L_cur, dtype=np.float64),
        np.ascontiguousarray(flow, dtype=np.float64),
        int(config.window_n),
        2.0 * config.parzen_d**2,
        float(config.min_distance_clamp),
    )


def propagate_illumination(
    S_prev: np.ndarray,
    f_prev: np.ndarray,
    f_cur: np.ndarray,
    config: PropagationConfig = PropagationConfig(),
    gamma: GammaParams = GammaParams(),
    flow: np.ndarray | None = None,
) -> np.ndarray:
    """Carry the previous frame's illumination onto the current frame.

    ``flow`` maps the current frame onto the previous one; it is estimated
    from the luminance when omitted.
    """
    f_prev = check_rgb(f_prev, "f_prev")
    f_cur = check_rgb(f_cur, "f_cur")
    L_prev = luminance(f_prev, "yuv_y")
    L_cur = luminance(f_cur, "yuv_y")
    if flow is None:
        flow = estimate_flow(L_cur, L_prev, config.flow)
    choice, value = map_assignment(S_prev, L_prev, L_cur, flow, config)
    empty = choice < 0
    if empty.any():
        value[empty] = warp(S_prev, flow)[empty]
    return project_box(value, s_min_map(f_cur, gamma))


# -- denoise ------------------------------------------------------------------

def temporal_denoise(video: VideoSequence, flows: list[np.ndarray], strength: float) -> VideoSequence:
    """Motion-compensated exponential blend: ``out_t = (1-s) in_t + s warp(out_{t-1})``.

    ``flows[t-1]`` maps frame ``t`` onto frame ``t-1``.
    """
    if not 0.0 <= strength <= 1.0:
        raise ValueError("strength must be in [0, 1]")
    if len(flows) != len(video) - 1:
        raise ValueError(f"expected {len(video) - 1} flows, got {len(flows)}")
    out = [np.asarray(video.frames[0], dtype=np.float64).copy()]
    for t in range(1, len(video)):
        cur = np.asarray(video.frames[t], dtype=np.float64)
        if flows[t - 1].shape != cur.shape[:2] + (2,):
            raise ValueError("flow does not match frame dimensions")
        if strength == 0.0:
            out.append(cur.copy())
            continue
        prev = out[-1]
        warped = np.stack([warp(prev[:, :, c], flows[t - 1]) for c in range(cur.shape[2])], axis=-1)
        out.append(np.clip((1.0 - strength) * cur + strength * warped, 0.0, 1.0))
    return VideoSequence(frames=out, fps=video.fps, names=list(video.names))


# -- pipeline -----------------------------------------------------------------

@dataclass
class VideoResult:
    video: VideoSequence
    illuminations: list[np.ndarray]
    keyframes: list[int]
    reports: dict[int, SolveReport]  # per keyframe
    clamped_pixels: int


def video_flows(video: VideoSequence, params: FlowParams = FlowParams()) -> list[np.ndarray]:
    lum = [luminance(check_rgb(f), "yuv_y") for f in video.frames]
    return [estimate_flow(lum[t], lum[t - 1], params) for t in range(1, len(lum))]


def enhance_video(
    video: VideoSequence,
    solver: SolverConfig = SolverConfig(),
    jbu: JbuParams = JbuParams(),
    prop: PropagationConfig = PropagationConfig(),
    denoise_strength: float = 0.0,
) -> VideoResult:
    """Solve keyframes, propagate forward in between (and past the last one),
    recover every frame and optionally blend temporally."""
    keys = extract_keyframes(video, prop)
    key_set = set(keys)
    flows = video_flows(video, prop.flow)
    illum: list[np.ndarray] = []
    reports = {}
    out = []
    clamped = 0
    for t, frame in enumerate(video.frames):
        if t in key_set:
            R, S, report = enhance_photo(frame, solver, jbu, "fast")
            reports[t] = report
        else:
            S = propagate_illumination(illum[-1], video.frames[t - 1], frame, prop, solver.gamma, flows[t - 1])
            R, n = recover(frame, S, solver.gamma)
            clamped += n
        illum.append(S)
        out.append(R)
    clamped += sum(r.clamped_pixels for r in reports.values())
    enhanced = VideoSequence(frames=out, fps=video.fps, names=list(video.names))
    if denoise_strength > 0.0:
        enhanced = temporal_denoise(enhanced, flows, denoise_strength)
    return VideoResult(video=enhanced, illuminations=illum, keyframes=keys, reports=reports, clamped_pixels=clamped)
