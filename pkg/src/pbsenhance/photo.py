"""Photo-level entry points: scalar and per-channel enhancement, overexposure correction."""
from __future__ import annotations

import numpy as np

from .multiscale import JbuParams, enhance_fast, enhance_naive
from .raster import check_rgb
from .solver import SolveReport, SolverConfig

MODES = ("fast", "naive")


def enhance_photo(
    img: np.ndarray,
    solver: SolverConfig = SolverConfig(),
    jbu: JbuParams = JbuParams(),
    mode: str = "fast",
) -> tuple[np.ndarray, np.ndarray, SolveReport]:
    img = check_rgb(img)
    if mode == "fast":
        return enhance_fast(img, solver, jbu)
    if mode == "naive":
        return enhance_naive(img, solver)
    raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def _merge_reports(reports: list[SolveReport]) -> SolveReport:
    worst = max(reports, key=lambda r: r.final_change)
    return SolveReport(
        outer_iterations=max(r.outer_iterations for r in reports),
        iterate_changes=list(worst.iterate_changes),
        objective_values=list(worst.objective_values),
        residual_edge_violations=sum(r.residual_edge_violations for r in reports),
        edge_pairs=sum(r.edge_pairs for r in reports),
        clamped_pixels=sum(r.clamped_pixels for r in reports),
    )


def enhance_per_channel(
    img: np.ndarray,
    solver: SolverConfig = SolverConfig(),
    jbu: JbuParams = JbuParams(),
    mode: str = "fast",
) -> tuple[np.ndarray, np.ndarray, SolveReport]:
    """Estimate one illumination per RGB channel and recover each channel with its own.

    Each channel is solved as a gray image (the channel replicated three
    times). Returns the stacked result, the ``(H, W, 3)`` illuminations and a
    merged report.
    """
    img = check_rgb(img)
    out = np.empty_like(img)
    illum = np.empty_like(img)
    reports = []
    for c in range(3):
        gray = np.repeat(img[:, :, c : c + 1], 3, axis=2)
        R, S, report = enhance_photo(gray, solver, jbu, mode)
        out[:, :, c] = R[:, :, 0]
        illum[:, :, c] = S
        reports.append(report)
    return np.clip(out, 0.0, 1.0), illum, _merge_reports(reports)


def correct_overexposure(
    img: np.ndarray,
    solver: SolverConfig = SolverConfig(),
    jbu: JbuParams = JbuParams(),
    mode: str = "fast",
    per_channel: bool = False,
) -> tuple[np.ndarray, np.ndarray, SolveReport]:
    """Enhance the inverted image and invert back: ``1 - enhance(1 - I)``."""
    img = check_rgb(img)
    enhance = enhance_per_channel if per_channel else enhance_photo
    R_inv, S, report = enhance(1.0 - img, solver, jbu, mode)
    return np.clip(1.0 - R_inv, 0.0, 1.0), S, report
