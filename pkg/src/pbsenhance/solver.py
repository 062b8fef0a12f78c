"""Constrained illumination estimation.

The refined illumination minimises ``sum (S - S')^2 + lam * RTV(S)`` subject to
the box ``S_min <= S <= 1`` and the detail-consistency constraints on
``R = I / S``. It is computed by an outer loop of

1. RTV weights lagged from the current iterate,
2. a sparse SPD solve of the resulting weighted-Laplacian quadratic,
3. projection onto the box,
4. detail-consistency projection (flat pairs equalised, edge pairs whose
   gradient ratio dropped below ``1 - delta_slack`` repaired by bisection).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numba
import numpy as np
import pyamg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import cg

from .illumination import GammaParams, initial_illumination, s_min_map
from .rtv import RtvParams, RtvWeights, rtv_energy_from_weights, rtv_weights

# systems at most this large get an exact (dense) coarse solve as preconditioner
_AMG_MAX_COARSE = 100
_BISECTION_STEPS = 30


@dataclass(frozen=True)
class SolverConfig:
    lam: float = 0.8
    tau: float = 1e-5
    conv_tol: float = 1e-3
    max_outer: int = 20
    cg_tol: float = 1e-5
    cg_max_iter: int = 500
    # inf: flat pairs are hard equalities (solved on flat components)
    w_flat: float = math.inf
    delta_slack: float = 1e-3
    max_projection_passes: int = 5
    cleanup_passes: int = 50
    enforce_details: bool = True
    rtv: RtvParams = RtvParams()
    gamma: GammaParams = GammaParams()

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.tau <= 0 or self.conv_tol <= 0:
            raise ValueError("tau and conv_tol must be positive")
        if self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")
        if not 0.0 <= self.delta_slack <= 0.1:
            raise ValueError("delta_slack must be in [0, 0.1]")
        if self.w_flat <= 0:
            raise ValueError("w_flat must be positive")


@dataclass
class SolveReport:
    outer_iterations: int = 0
    iterate_changes: list[float] = field(default_factory=list)
    objective_values: list[float] = field(default_factory=list)
    residual_edge_violations: int = 0
    edge_pairs: int = 0
    clamped_pixels: int = 0

    @property
    def final_change(self) -> float:
        return self.iterate_changes[-1] if self.iterate_changes else 0.0

    def to_text(self, **extra) -> str:
        items = {
            "outer_iterations": self.outer_iterations,
            "final_change": f"{self.final_change:.6g}",
            "clamped_pixels": self.clamped_pixels,
            "residual_edge_violations": self.residual_edge_violations,
            "edge_pairs": self.edge_pairs,
        }
        items.update(extra)
        return "".join(f"{k}={v}\n" for k, v in items.items())


class EdgeMasks(NamedTuple):
    """Pair classification. x masks are ``(H, W-1)``: entry ``[i, j]`` is the pair
    ``(i, j)-(i, j+1)``; y masks are ``(H-1, W)`` likewise."""

    flat_x: np.ndarray
    flat_y: np.ndarray
    edge_x: np.ndarray
    edge_y: np.ndarray


@dataclass
class QuadraticSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    x0: np.ndarray
    shape: tuple[int, int]
    # pixel -> unknown map when flat pairs were collapsed, else None
    labels: np.ndarray | None = None


class CGConvergenceError(RuntimeError):
    pass


def flat_edge_masks(I_lum: np.ndarray, tau: float) -> EdgeMasks:
    I_lum = np.asarray(I_lum, dtype=np.float64)
    flat_x = np.abs(I_lum[:, 1:] - I_lum[:, :-1]) <= tau
    flat_y = np.abs(I_lum[1:, :] - I_lum[:-1, :]) <= tau
    return EdgeMasks(flat_x, flat_y, ~flat_x, ~flat_y)


def _pair_indices(shape: tuple[int, int]):
    h, w = shape
    idx = np.arange(h * w).reshape(h, w)
    return (idx[:, :-1], idx[:, 1:]), (idx[:-1, :], idx[1:, :])


def flat_components(masks: EdgeMasks, shape: tuple[int, int]) -> tuple[int, np.ndarray]:
    """Connected components of the graph whose edges are the flat pairs."""
    n = shape[0] * shape[1]
    (px, qx), (py, qy) = _pair_indices(shape)
    rows = np.concatenate([px[masks.flat_x], py[masks.flat_y]])
    cols = np.concatenate([qx[masks.flat_x], qy[masks.flat_y]])
    graph = sp.coo_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
    count, labels = connected_components(graph, directed=False)
    return count, labels.reshape(shape)


def assemble_system(
    S_prev: np.ndarray,
    S_init: np.ndarray,
    weights: RtvWeights,
    masks: EdgeMasks,
    config: SolverConfig,
    labels: np.ndarray | None = None,
) -> QuadraticSystem:
    """Normal equations of the lagged quadratic
    ``sum (S - S')^2 + lam * sum_d sum_p c^d_p (d_d S_p)^2``
    with ``c = u * w`` (times ``w_flat`` on flat pairs).

    For ``w_flat = inf`` the flat pairs become equalities and the system is
    the Galerkin restriction onto flat components (``labels``).
    """
    shape = S_init.shape
    n = shape[0] * shape[1]
    ax = (weights.ux * weights.wx)[:, :-1]
    ay = (weights.uy * weights.wy)[:-1, :]
    if np.any(~np.isfinite(ax)) or np.any(~np.isfinite(ay)) or np.any(ax <= 0) or np.any(ay <= 0):
        raise ValueError("nonpositive or non-finite smoothness weight")
    (px, qx), (py, qy) = _pair_indices(shape)
    s_init = np.asarray(S_init, dtype=np.float64).ravel()
    s_prev = np.asarray(S_prev, dtype=np.float64).ravel()

    if math.isinf(config.w_flat):
        if labels is None:
            _, labels = flat_components(masks, shape)
        lab = labels.ravel()
        nc = int(lab.max()) + 1
        p = lab[np.concatenate([px[masks.edge_x], py[masks.edge_y]])]
        q = lab[np.concatenate([qx[masks.edge_x], qy[masks.edge_y]])]
        c = config.lam * np.concatenate([ax[masks.edge_x], ay[masks.edge_y]])
        keep = p != q
        p, q, c = p[keep], q[keep], c[keep]
        sizes = np.bincount(lab, minlength=nc).astype(np.float64)
        diag = sizes + np.bincount(p, c, nc) + np.bincount(q, c, nc)
        rhs = np.bincount(lab, s_init, nc)
        x0 = np.bincount(lab, s_prev, nc) / sizes
        size = nc
    else:
        scale_x = np.where(masks.flat_x, config.w_flat, 1.0)
        scale_y = np.where(masks.flat_y, config.w_flat, 1.0)
        p = np.concatenate([px.ravel(), py.ravel()])
        q = np.concatenate([qx.ravel(), qy.ravel()])
        c = config.lam * np.concatenate([(ax * scale_x).ravel(), (ay * scale_y).ravel()])
        diag = 1.0 + np.bincount(p, c, n) + np.bincount(q, c, n)
        rhs = s_init.copy()
        x0 = s_prev.copy()
        size = n
        labels = None

    rows = np.concatenate([np.arange(size), p, q])
    cols = np.concatenate([np.arange(size), q, p])
    vals = np.concatenate([diag, -c, -c])
    matrix = sp.coo_matrix((vals, (rows, cols)), shape=(size, size)).tocsr()
    return QuadraticSystem(matrix=matrix, rhs=rhs, x0=x0, shape=shape, labels=labels)


def solve_quadratic(system: QuadraticSystem, tol: float = 1e-5, max_iter: int = 500) -> np.ndarray:
    """Preconditioned CG (classical AMG preconditioner), warm-started from ``system.x0``.

    Returns the solution as a full-resolution field. Raises
    :class:`CGConvergenceError` when the true relative residual does not reach
    ``tol`` within ``max_iter`` iterations.
    """
    A, b = system.matrix, system.rhs
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        x = np.zeros_like(b)
    else:
        M = pyamg.ruge_stuben_solver(A, max_coarse=_AMG_MAX_COARSE).aspreconditioner()
        x = np.array(system.x0, dtype=np.float64)
        used = 0

        def count(_):
            nonlocal used
            used += 1

        while True:
            residual = float(np.linalg.norm(b - A @ x))
            if residual <= tol * bnorm:
                break
            if used >= max_iter:
                raise CGConvergenceError(
                    f"CG stalled: relative residual {residual / bnorm:.3e} > {tol:.1e} "
                    f"after {used} iterations (n={A.shape[0]})"
                )
            x, _ = cg(A, b, x0=x, rtol=tol, atol=0.0, maxiter=max_iter - used, M=M, callback=count)
    if system.labels is not None:
        return x[system.labels]
    return x.reshape(system.shape)


def project_box(S: np.ndarray, S_min: np.ndarray) -> np.ndarray:
    S_min = np.asarray(S_min, dtype=np.float64)
    if np.any(S_min > 1.0):
        raise ValueError("S_min exceeds 1")
    return np.clip(S, S_min, 1.0)


def edge_ratios(S: np.ndarray, I_lum: np.ndarray, masks: EdgeMasks) -> np.ndarray:
    """``d(I/S) / dI`` on every edge pair, x pairs first then y pairs, row-major."""
    R = I_lum / S
    rx = (R[:, 1:] - R[:, :-1])[masks.edge_x] / (I_lum[:, 1:] - I_lum[:, :-1])[masks.edge_x]
    ry = (R[1:, :] - R[:-1, :])[masks.edge_y] / (I_lum[1:, :] - I_lum[:-1, :])[masks.edge_y]
    return np.concatenate([rx, ry])


def count_edge_violations(S, I_lum, masks: EdgeMasks, slack: float) -> int:
    return int(np.sum(edge_ratios(S, I_lum, masks) < 1.0 - slack))


@numba.njit(cache=True)
def _ratio(ip, iq, sp_, sq):
    return (iq / sq - ip / sp_) / (iq - ip)


@numba.njit(cache=True)
def _repair_pairs(s, lo, cp, cq, ip, iq, n_x, thr, passes, raise_only):
    # Sweeps x pairs forward then backward, then y pairs likewise. The mover is
    # the second endpoint in sweep order, or the lower-valued one when raise_only.
    m = cp.shape[0]
    for _ in range(passes):
        moves = 0
        for axis in range(2):
            start = 0 if axis == 0 else n_x
            stop = n_x if axis == 0 else m
            for direction in range(2):
                for j in range(stop - start):
                    k = start + j if direction == 0 else stop - 1 - j
                    a = cp[k]
                    b = cq[k]
                    if a == b or _ratio(ip[k], iq[k], s[a], s[b]) >= thr:
                        continue
                    if raise_only:
                        mover, anchor = (b, a) if s[b] <= s[a] else (a, b)
                    elif direction == 0:
                        mover, anchor = b, a
                    else:
                        mover, anchor = a, b
                    s0 = s[mover]
                    target = s[anchor]
                    t_lo = 0.0
                    t_hi = 1.0
                    for _step in range(_BISECTION_STEPS):
                        t = 0.5 * (t_lo + t_hi)
                        s[mover] = s0 + t * (target - s0)
                        if _ratio(ip[k], iq[k], s[a], s[b]) >= thr:
                            t_hi = t
                        else:
                            t_lo = t
                    v = s0 + t_hi * (target - s0)
                    s[mover] = min(max(v, lo[mover]), 1.0)
                    moves += 1
        if moves == 0:
            break


def enforce_detail_consistency(
    S: np.ndarray,
    I_lum: np.ndarray,
    S_min: np.ndarray,
    masks: EdgeMasks,
    config: SolverConfig,
    labels: np.ndarray | None = None,
) -> tuple[np.ndarray, int]:
    """Project ``S`` toward the detail-consistency constraints.

    Flat pairs: each flat-connected component is set to its mean (the limit of
    repeated pairwise averaging) and re-clamped to the box. Edge pairs with
    ratio below ``1 - delta_slack`` are repaired by bisecting one endpoint's
    component toward the other; ``max_projection_passes`` forward/backward
    passes move the second pixel in sweep order, then up to ``cleanup_passes``
    passes raise the lower endpoint, which cannot cycle.

    Returns the projected field and the number of edge pairs still violating.
    """
    shape = S.shape
    if labels is None:
        _, labels = flat_components(masks, shape)
    lab = labels.ravel()
    nc = int(lab.max()) + 1
    sizes = np.bincount(lab, minlength=nc)
    s = np.bincount(lab, np.asarray(S, dtype=np.float64).ravel(), nc) / sizes
    lo = np.zeros(nc)
    np.maximum.at(lo, lab, np.asarray(S_min, dtype=np.float64).ravel())
    s = np.clip(s, lo, 1.0)

    (px, qx), (py, qy) = _pair_indices(shape)
    p = np.concatenate([px[masks.edge_x], py[masks.edge_y]])
    q = np.concatenate([qx[masks.edge_x], qy[masks.edge_y]])
    n_x = int(masks.edge_x.sum())
    i_flat = np.asarray(I_lum, dtype=np.float64).ravel()
    thr = 1.0 - config.delta_slack
    args = (lo, lab[p], lab[q], i_flat[p], i_flat[q], n_x, thr)
    if p.size:
        _repair_pairs(s, *args, config.max_projection_passes, False)
        _repair_pairs(s, *args, config.cleanup_passes, True)
    out = s[labels]
    return out, count_edge_violations(out, I_lum, masks, config.delta_slack)


def estimate_illumination(img: np.ndarray, config: SolverConfig = SolverConfig()) -> tuple[np.ndarray, SolveReport]:
    S_init = initial_illumination(img)
    S_min = s_min_map(img, config.gamma)
    masks = flat_edge_masks(S_init, config.tau)
    labels = flat_components(masks, S_init.shape)[1] if math.isinf(config.w_flat) or config.enforce_details else None
    report = SolveReport(edge_pairs=int(masks.edge_x.sum() + masks.edge_y.sum()))

    S = project_box(S_init, S_min)
    weights = rtv_weights(S, config.rtv)
    for _ in range(config.max_outer):
        system = assemble_system(S, S_init, weights, masks, config, labels=labels)
        S_new = project_box(solve_quadratic(system, config.cg_tol, config.cg_max_iter), S_min)
        if config.enforce_details:
            S_new, violations = enforce_detail_consistency(S_new, S_init, S_min, masks, config, labels=labels)
        else:
            violations = count_edge_violations(S_new, S_init, masks, config.delta_slack)
        weights = rtv_weights(S_new, config.rtv)
        change = float(np.max(np.abs(S_new - S)))
        data = float(np.sum((S_new - S_init) ** 2))
        report.objective_values.append(data + config.lam * rtv_energy_from_weights(S_new, weights, config.rtv.window_radius))
        report.iterate_changes.append(change)
        report.outer_iterations += 1
        report.residual_edge_violations = violations
        S = S_new
        if change < config.conv_tol:
            break
    return S, report
