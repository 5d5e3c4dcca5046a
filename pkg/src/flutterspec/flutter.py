"""Flutter point location by the iterated contour-plot method.

Flutter points are real pairs (U, chi_R) with chi_I = 0 where A is
singular.  Candidates come from intersecting the Re(det) = 0 and
Im(det) = 0 contours of a determinant field, refined by shrinking the
window around each intersection; a damped 2-D Newton on (Re det, Im det)
then polishes each candidate to tolerance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConvergenceError, NumericalError
from .operator import EigenPoint, ParametricOperator, Window, evaluate, sigma_min
from .pseudospectrum import ComplexField, ContourSet, Grid2D, compute_det_field, extract_contours

__all__ = [
    "FlutterSearchSettings",
    "FlutterPoint",
    "locate_candidates",
    "polish_flutter_point",
    "find_flutter_points",
]

logger = logging.getLogger(__name__)

# |chi_R| below this fraction of the window span marks a static
# (divergence) instability rather than flutter.
STATIC_CHI_R_FRACTION = 1e-6


@dataclass(frozen=True)
class FlutterSearchSettings:
    grid_count: int = 64
    refine_iters: int = 3
    tol: float = 1e-10
    max_iters: int = 50

    def __post_init__(self):
        if self.grid_count < 8:
            raise ValueError("grid_count must be >= 8")
        if self.refine_iters < 1:
            raise ValueError("refine_iters must be >= 1")
        if self.tol <= 0.0 or self.max_iters < 1:
            raise ValueError("tol must be positive and max_iters >= 1")


@dataclass(frozen=True)
class FlutterPoint:
    """A polished instability point; chi_I is stored as exactly zero."""

    point: EigenPoint
    window_history: Tuple[Window, ...] = ()
    iterations: int = 0
    static: bool = False


def _segment_arrays(contours: ContourSet) -> Tuple[np.ndarray, np.ndarray]:
    starts, ends = [], []
    for pl in contours.polylines:
        if len(pl) >= 2:
            starts.append(pl[:-1])
            ends.append(pl[1:])
    if not starts:
        empty = np.empty((0, 2))
        return empty, empty
    return np.vstack(starts), np.vstack(ends)


def _polyline_intersections(re_set: ContourSet, im_set: ContourSet) -> List[Tuple[float, float]]:
    """Pairwise segment intersections between two contour families."""
    a1, a2 = _segment_arrays(re_set)
    b1, b2 = _segment_arrays(im_set)
    if a1.shape[0] == 0 or b1.shape[0] == 0:
        return []
    d1 = a2 - a1                                   # (N, 2)
    d2 = b2 - b1                                   # (M, 2)
    denom = d1[:, None, 0] * d2[None, :, 1] - d1[:, None, 1] * d2[None, :, 0]
    rel = b1[None, :, :] - a1[:, None, :]          # (N, M, 2)
    t_num = rel[:, :, 0] * d2[None, :, 1] - rel[:, :, 1] * d2[None, :, 0]
    s_num = rel[:, :, 0] * d1[:, None, 1] - rel[:, :, 1] * d1[:, None, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = t_num / denom
        s = s_num / denom
    hit = (np.abs(denom) > 0.0) & (t >= 0.0) & (t <= 1.0) & (s >= 0.0) & (s <= 1.0)
    ii, jj = np.nonzero(hit)
    pts = a1[ii] + t[ii, jj, None] * d1[ii]
    return [(float(u), float(w)) for u, w in pts]


def _merge_points(points: List[Tuple[float, float, tuple]],
                  du: float, dw: float) -> List[Tuple[float, float, tuple]]:
    """Greedy clustering: points closer than one cell in both axes merge."""
    merged: List[List] = []
    for u, w, hist in points:
        for cluster in merged:
            if abs(cluster[0] - u) <= du and abs(cluster[1] - w) <= dw:
                n = cluster[3]
                cluster[0] = (cluster[0] * n + u) / (n + 1)
                cluster[1] = (cluster[1] * n + w) / (n + 1)
                cluster[3] = n + 1
                break
        else:
            merged.append([u, w, hist, 1])
    return [(c[0], c[1], c[2]) for c in merged]


def _shrunk_window(parent: Window, outer: Window, u: float, w: float) -> Window:
    """Quarter-span window centered on (u, w), clamped inside ``outer``."""
    su, sw = parent.u_span / 4.0, parent.chi_r_span / 4.0
    u_min = min(max(u - su / 2.0, outer.u_min), outer.u_max - su)
    w_min = min(max(w - sw / 2.0, outer.chi_r_min), outer.chi_r_max - sw)
    return Window(u_min, u_min + su, w_min, w_min + sw)


def _locate_with_history(op: ParametricOperator, window: Window, grid_count: int,
                         refine_iters: int) -> List[Tuple[float, float, Tuple[Window, ...]]]:
    active: List[Tuple[Window, Tuple[Window, ...]]] = [(window, (window,))]
    found: List[Tuple[float, float, tuple]] = []
    for level in range(refine_iters + 1):
        found = []
        cell_u = cell_w = 0.0
        for win, hist in active:
            grid = Grid2D.over_window(win, grid_count, grid_count, 0.0)
            fld = compute_det_field(op, grid)
            pts = _polyline_intersections(extract_contours(fld.real_part(), 0.0),
                                          extract_contours(fld.imag_part(), 0.0))
            found.extend((u, w, hist) for u, w in pts)
            cell_u = max(cell_u, win.u_span / (grid_count - 1))
            cell_w = max(cell_w, win.chi_r_span / (grid_count - 1))
        found = _merge_points(found, cell_u, cell_w)
        if not found:
            return []
        if level == refine_iters:
            break
        next_active = []
        for u, w, hist in found:
            win = _shrunk_window(hist[-1], window, u, w)
            next_active.append((win, hist + (win,)))
        active = next_active
    return found


def locate_candidates(op: ParametricOperator, window: Window, grid_count: int = 64,
                      refine_iters: int = 3) -> List[Tuple[float, float]]:
    """Candidate (U, chi_R) pairs from iterated Re/Im det contour crossings.

    Each refinement shrinks a window around every candidate to a quarter
    span per side and recomputes the contours; candidates within one
    final-grid cell are merged.  No intersections is not an error.
    """
    if grid_count < 8 or refine_iters < 1:
        raise ValueError("grid_count must be >= 8 and refine_iters >= 1")
    if not (op.window.contains(window.u_min, window.chi_r_min)
            and op.window.contains(window.u_max, window.chi_r_max)):
        raise ValueError(f"search window {window} exceeds operator window {op.window}")
    return [(u, w) for u, w, _ in _locate_with_history(op, window, grid_count, refine_iters)]


def _scaled_det(op: ParametricOperator, u: float, w: float, log_ref: float) -> np.ndarray:
    sign, logdet = np.linalg.slogdet(evaluate(op, complex(w, 0.0), u))
    if sign == 0.0:
        return np.zeros(2)
    mag = math.exp(min(logdet - log_ref, 700.0))
    return np.array([mag * sign.real, mag * sign.imag])


def polish_flutter_point(op: ParametricOperator, candidate: Tuple[float, float],
                         tol: float = 1e-10, max_iters: int = 50) -> FlutterPoint:
    """Damped 2-D Newton on F(U, chi_R) = (Re det, Im det) at chi_I = 0.

    The determinant is rescaled by its magnitude at the current iterate,
    which leaves the root and the Newton step unchanged but avoids
    overflow.  Convergence is judged on sigma_min <= tol.
    """
    u, w = float(candidate[0]), float(candidate[1])
    if not op.window.contains(u, w):
        raise ValueError(f"candidate {candidate} outside operator window {op.window}")

    best = (math.inf, u, w)
    for iteration in range(max_iters):
        sig, x = sigma_min(op, complex(w, 0.0), u)
        pt = EigenPoint.from_vector(op, w, 0.0, u, x)
        if pt.residual < best[0]:
            best = (pt.residual, u, w)
        # accept on the recomputed ||A x||, the quantity the result carries
        if pt.residual <= tol and sig <= tol:
            return FlutterPoint(point=pt, iterations=iteration)

        _, log_ref = np.linalg.slogdet(evaluate(op, complex(w, 0.0), u))
        if not math.isfinite(log_ref):
            log_ref = 0.0
        f0 = _scaled_det(op, u, w, log_ref)
        h_u = max(op.fd_step[1], 1e-8 * abs(u))
        h_w = max(op.fd_step[0], 1e-8 * abs(w))
        jac = np.column_stack([
            (_scaled_det(op, u + h_u, w, log_ref) - _scaled_det(op, u - h_u, w, log_ref)) / (2 * h_u),
            (_scaled_det(op, u, w + h_w, log_ref) - _scaled_det(op, u, w - h_w, log_ref)) / (2 * h_w),
        ])
        try:
            delta = np.linalg.solve(jac, -f0)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                f"singular det Jacobian at (U={u}, chi_R={w}); refine the search window "
                f"(locate_candidates with more refine_iters) and retry") from exc

        norm0 = np.linalg.norm(f0)
        scale = 1.0
        for _ in range(20):
            u_new, w_new = u + scale * delta[0], w + scale * delta[1]
            if np.linalg.norm(_scaled_det(op, u_new, w_new, log_ref)) < norm0:
                break
            scale *= 0.5
        else:
            raise ConvergenceError(
                f"flutter polish stalled at (U={u}, chi_R={w}), sigma_min={sig:.3e}",
                best=best, iterations=iteration)
        u, w = u + scale * delta[0], w + scale * delta[1]

    raise ConvergenceError(
        f"flutter polish did not reach sigma_min <= {tol} in {max_iters} iterations "
        f"(best sigma_min={best[0]:.3e} at U={best[1]}, chi_R={best[2]})",
        best=best, iterations=max_iters)


def find_flutter_points(op: ParametricOperator, window: Optional[Window] = None,
                        settings: Optional[FlutterSearchSettings] = None) -> List[FlutterPoint]:
    """Locate candidates, polish each, and return points sorted by U.

    Failed polishes are logged (not silently dropped); if every candidate
    fails, the per-candidate errors are aggregated into one exception.
    Duplicate polished points within one final-grid cell are merged,
    keeping the smaller residual.  Points with |chi_R| below 1e-6 of the
    window span are flagged static (divergence).
    """
    window = window or op.window
    settings = settings or FlutterSearchSettings()
    candidates = _locate_with_history(op, window, settings.grid_count, settings.refine_iters)

    points: List[FlutterPoint] = []
    failures: List[str] = []
    for u, w, hist in candidates:
        try:
            fp = polish_flutter_point(op, (u, w), tol=settings.tol, max_iters=settings.max_iters)
        except (ConvergenceError, NumericalError) as exc:
            failures.append(f"candidate (U={u:.6g}, chi_R={w:.6g}): {exc}")
            logger.warning("flutter polish failed for %s", failures[-1])
            continue
        static = abs(fp.point.chi_R) < STATIC_CHI_R_FRACTION * window.chi_r_span
        points.append(replace(fp, window_history=hist, static=static))

    if candidates and not points:
        raise ConvergenceError("all flutter candidates failed to polish:\n  "
                               + "\n  ".join(failures))

    shrink = 4.0 ** settings.refine_iters
    cell_u = window.u_span / shrink / (settings.grid_count - 1)
    cell_w = window.chi_r_span / shrink / (settings.grid_count - 1)
    points.sort(key=lambda p: p.point.residual)
    unique: List[FlutterPoint] = []
    for fp in points:
        if not any(abs(fp.point.U - q.point.U) <= cell_u
                   and abs(fp.point.chi_R - q.point.chi_R) <= cell_w for q in unique):
            unique.append(fp)
    unique.sort(key=lambda p: p.point.U)
    return unique
