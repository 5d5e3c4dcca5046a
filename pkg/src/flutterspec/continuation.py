"""Pseudo-arclength continuation of modal damping paths.

A path point is a solved eigentriple (chi_R, chi_I, U).  Pseudo-arclength
steps predict along the local tangent and correct back onto the solution
curve subject to the arclength constraint t.(p - p0) = ds; the constraint
is imposed either through a three-parameter eigenvalue corrector solved by
successive linear problems (the operator-determinant reduction) or through
a damped Newton solve of the bordered real system, which serves as the
cross-check oracle.  Natural continuation in airspeed and continuation on
a damping-parameter grid are provided as the classical reference methods;
the latter cannot pass damping turning points and says so when it stops.

All tangents and step lengths live in scaled coordinates
(U/u_scale, chi_R/chi_scale, chi_I/chi_scale) so that ds is dimensionless.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, DegenerateTangentError, NumericalError
from .flutter import FlutterPoint
from .operator import (DampingParameterization, EigenPoint, ParametricOperator,
                       complex_to_damping, evaluate, param_derivatives, sigma_min)

__all__ = [
    "Tangent",
    "ContinuationSettings",
    "ModePath",
    "EnvelopeCrossing",
    "DampingExtremum",
    "initial_tangent",
    "fd_tangent",
    "predictor",
    "corrector_slp",
    "corrector_newton",
    "trace_path",
    "natural_continuation",
    "damping_continuation",
    "solve_at_airspeed",
    "flight_envelope",
    "extremum_damping",
]

logger = logging.getLogger(__name__)

TURNING_POINT_REASON = "turning-point suspected"

# Accepted damping-continuation steps that jump farther than this in scaled
# coordinates are treated as branch jumps past a turning point.
DAMPING_JUMP_GUARD = 0.25

# Eigenvector change (after phase alignment) flagged as a mode switch.
MODE_SWITCH_NORM = 0.5

Scale = Tuple[float, float]  # (u_scale, chi_scale)
Triple = Tuple[float, float, float]  # (U, chi_R, chi_I)


@dataclass(frozen=True)
class Tangent:
    """Unit tangent in scaled (U, chi_R, chi_I) coordinates."""

    du: float
    dchi_r: float
    dchi_i: float

    def array(self) -> np.ndarray:
        return np.array([self.du, self.dchi_r, self.dchi_i])

    def negated(self) -> "Tangent":
        return Tangent(-self.du, -self.dchi_r, -self.dchi_i)


@dataclass(frozen=True)
class ContinuationSettings:
    ds: float = 0.05
    max_steps: int = 500
    corrector_tol: float = 1e-10
    max_corrector_iters: int = 25
    step_shrink: float = 0.5
    step_grow: float = 1.3
    min_ds: float = 1e-6
    max_ds: float = 0.5
    scale: Optional[Scale] = None
    corrector: str = "slp"             # "slp" | "newton"
    constraint_form: str = "eq2"       # "eq2" (absolute, with -ds) | "eq3" (increment form)

    def __post_init__(self):
        if not (0.0 < self.min_ds <= self.ds <= self.max_ds):
            raise ValueError("need 0 < min_ds <= ds <= max_ds")
        if self.corrector_tol <= 0.0 or self.max_corrector_iters < 1:
            raise ValueError("tolerances must be positive")
        if not (0.0 < self.step_shrink < 1.0 < self.step_grow):
            raise ValueError("step factors must satisfy 0 < shrink < 1 < grow")
        if self.corrector not in ("slp", "newton"):
            raise ValueError("corrector must be 'slp' or 'newton'")
        if self.constraint_form not in ("eq2", "eq3"):
            raise ValueError("constraint_form must be 'eq2' or 'eq3'")

    def resolved_scale(self, origin: EigenPoint) -> Scale:
        if self.scale is not None:
            return self.scale
        return (max(abs(origin.U), 1.0), max(abs(origin.chi_R), 1.0))


@dataclass
class ModePath:
    """Ordered eigentriples with cumulative arclength bookkeeping."""

    points: List[EigenPoint]
    s: List[float]
    origin: Union[FlutterPoint, str]
    direction: int = 1
    scale: Scale = (1.0, 1.0)
    parameterization_note: str = "CHI_I"
    termination_reason: Optional[str] = None
    notes: List[str] = field(default_factory=list)

    def zetas(self) -> np.ndarray:
        chi = np.array([p.chi for p in self.points])
        with np.errstate(invalid="ignore", divide="ignore"):
            return chi.imag / np.abs(chi)


@dataclass(frozen=True)
class EnvelopeCrossing:
    """A zeta = zeta_max crossing along a path."""

    zeta_max: float
    u_star: float
    bracket: Tuple[int, int]
    side: str                      # "subcritical" | "supercritical"
    point: Optional[EigenPoint] = None


@dataclass(frozen=True)
class DampingExtremum:
    point: EigenPoint
    zeta: float
    on_boundary: bool


def _scaled(triple: Triple, scale: Scale) -> np.ndarray:
    return np.array([triple[0] / scale[0], triple[1] / scale[1], triple[2] / scale[1]])


def _point_triple(p: EigenPoint) -> Triple:
    return (p.U, p.chi_R, p.chi_I)


RowFn = Callable[[float, float, float], Tuple[float, Tuple[float, float, float]]]


def _solve_bordered(op: ParametricOperator, triple: Triple, x0: np.ndarray,
                    row_fn: RowFn, tol: float, max_iters: int) -> Tuple[EigenPoint, int]:
    """Damped Newton on {A x = 0, c*x = 1, scalar row = 0}.

    Unknowns are (Re x, Im x, chi_R, chi_I, U); the fixed normalization
    vector c is the initial eigenvector guess.  Converges when the unit
    eigenvector residual and the scalar row are both below ``tol``.
    """
    n = op.dim
    u, wr, wi = float(triple[0]), float(triple[1]), float(triple[2])
    x = np.asarray(x0, dtype=complex).reshape(n)
    x = x / np.linalg.norm(x)
    c = x.copy()

    def full_residual(xv, wr_v, wi_v, u_v):
        a = evaluate(op, complex(wr_v, wi_v), u_v)
        ax = a @ xv
        cn = np.vdot(c, xv) - 1.0
        rowv, _ = row_fn(wr_v, wi_v, u_v)
        return np.concatenate([ax.real, ax.imag, [cn.real, cn.imag, rowv]]), a

    best = (math.inf, None)
    for iteration in range(max_iters):
        f, a = full_residual(x, wr, wi, u)
        xhat = x / np.linalg.norm(x)
        res = float(np.linalg.norm(a @ xhat))
        rowv, rowg = row_fn(wr, wi, u)
        if res <= tol and abs(rowv) <= tol:
            return EigenPoint.from_vector(op, wr, wi, u, xhat), iteration
        fn = float(np.linalg.norm(f))
        if fn < best[0]:
            best = (fn, (u, wr, wi))

        d_r, d_i, d_u = param_derivatives(op, wr, wi, u)
        jac = np.zeros((2 * n + 3, 2 * n + 3))
        jac[:n, :n] = a.real
        jac[:n, n:2 * n] = -a.imag
        jac[n:2 * n, :n] = a.imag
        jac[n:2 * n, n:2 * n] = a.real
        for col, mat in ((2 * n, d_r), (2 * n + 1, d_i), (2 * n + 2, d_u)):
            mv = mat @ x
            jac[:n, col] = mv.real
            jac[n:2 * n, col] = mv.imag
        jac[2 * n, :n] = c.real
        jac[2 * n, n:2 * n] = c.imag
        jac[2 * n + 1, :n] = -c.imag
        jac[2 * n + 1, n:2 * n] = c.real
        jac[2 * n + 2, 2 * n:] = rowg

        try:
            delta = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"bordered Jacobian singular at U={u}, chi={wr}+{wi}j",
                                   best=best[1], iterations=iteration) from exc

        step = 1.0
        for _ in range(20):
            x_t = x + step * (delta[:n] + 1j * delta[n:2 * n])
            wr_t = wr + step * delta[2 * n]
            wi_t = wi + step * delta[2 * n + 1]
            u_t = u + step * delta[2 * n + 2]
            f_t, _ = full_residual(x_t, wr_t, wi_t, u_t)
            if np.linalg.norm(f_t) < fn:
                break
            step *= 0.5
        else:
            raise ConvergenceError(f"bordered Newton stalled at U={u}, chi={wr}+{wi}j "
                                   f"(|F|={fn:.3e})", best=best[1], iterations=iteration)
        x, wr, wi, u = x_t, wr_t, wi_t, u_t

    raise ConvergenceError(f"bordered Newton did not converge in {max_iters} iterations "
                           f"(best |F|={best[0]:.3e})", best=best[1], iterations=max_iters)


def _arclength_row(base: EigenPoint, t: Tangent, ds: float, scale: Scale) -> RowFn:
    tu, tr, ti = t.du, t.dchi_r, t.dchi_i
    us, cs = scale

    def row(wr, wi, u):
        value = (tu * (u - base.U) / us + tr * (wr - base.chi_R) / cs
                 + ti * (wi - base.chi_I) / cs - ds)
        return value, (tr / cs, ti / cs, tu / us)

    return row


def _constraint_residual(p: Triple, base: EigenPoint, t: Tangent, ds: float,
                         scale: Scale) -> float:
    return float(t.array() @ (_scaled(p, scale) - _scaled(_point_triple(base), scale)) - ds)


def solve_at_airspeed(op: ParametricOperator, U: float, seed: EigenPoint,
                      tol: float = 1e-10, max_iters: int = 25) -> EigenPoint:
    """Solve the eigentriple at a fixed airspeed, seeded by a nearby point."""

    def row(wr, wi, u):
        return u - U, (0.0, 0.0, 1.0)

    point, _ = _solve_bordered(op, (U, seed.chi_R, seed.chi_I), seed.x, row, tol, max_iters)
    return point


def fd_tangent(prev: EigenPoint, curr: EigenPoint, scale: Scale) -> Tangent:
    """Normalized scaled secant from prev to curr."""
    delta = _scaled(_point_triple(curr), scale) - _scaled(_point_triple(prev), scale)
    nrm = float(np.linalg.norm(delta))
    if nrm == 0.0:
        raise DegenerateTangentError("tangent requested between coincident points")
    return Tangent(delta[0] / nrm, delta[1] / nrm, delta[2] / nrm)


def initial_tangent(op: ParametricOperator, fp: Union[FlutterPoint, EigenPoint],
                    delta_U: Optional[float] = None, scale: Optional[Scale] = None,
                    tol: float = 1e-10) -> Tangent:
    """First-step tangent from centered airspeed micro-steps.

    Solves the eigenproblem at U +/- delta_U (natural-continuation steps
    seeded by the start point), forms the centered difference of chi with
    respect to U, scales and normalizes.  The sign makes dchi_i > 0 so the
    default march heads into the stable side; callers negate for the
    supercritical direction.
    """
    point = fp.point if isinstance(fp, FlutterPoint) else fp
    if delta_U is None:
        delta_U = 1e-3 * max(abs(point.U), 1.0)
    if scale is None:
        scale = (max(abs(point.U), 1.0), max(abs(point.chi_R), 1.0))
    plus = solve_at_airspeed(op, point.U + delta_U, point, tol=tol)
    minus = solve_at_airspeed(op, point.U - delta_U, point, tol=tol)
    dchi = (plus.chi - minus.chi) / (2.0 * delta_U)
    raw = np.array([1.0 / scale[0], dchi.real / scale[1], dchi.imag / scale[1]])
    raw /= np.linalg.norm(raw)
    if raw[2] < 0.0 or (raw[2] == 0.0 and raw[0] < 0.0):
        raw = -raw
    return Tangent(raw[0], raw[1], raw[2])


def predictor(base: EigenPoint, t: Tangent, ds: float, scale: Scale) -> Triple:
    """Step ds along the tangent in scaled coordinates; physical units out."""
    return (base.U + ds * t.du * scale[0],
            base.chi_R + ds * t.dchi_r * scale[1],
            base.chi_I + ds * t.dchi_i * scale[1])


def _operator_det3(cols) -> np.ndarray:
    """Operator determinant of a 3x3 block array given per column.

    ``cols[c] = (top, mid, bot)`` holds the row entries of column c: two
    n x n matrices and a scalar (the auxiliary y equation is 1x1).  The
    expansion is over permutations with Kronecker products respecting the
    row order, so the result acts on the n^2 tensor space.
    """
    perms = (((0, 1, 2), 1.0), ((0, 2, 1), -1.0), ((1, 0, 2), -1.0),
             ((1, 2, 0), 1.0), ((2, 0, 1), 1.0), ((2, 1, 0), -1.0))
    n = cols[0][0].shape[0]
    out = np.zeros((n * n, n * n), dtype=complex)
    for (c0, c1, c2), sign in perms:
        out += sign * cols[c2][2] * np.kron(cols[c0][0], cols[c1][1])
    return out


def _corrector_slp(op: ParametricOperator, guess: Triple, base: EigenPoint, t: Tangent,
                   ds: float, settings: ContinuationSettings,
                   scale: Scale) -> Tuple[EigenPoint, int]:
    """Successive linear problems on the three-parameter corrector.

    Each iteration linearizes A in (chi_R, chi_I, U), pairs the linearized
    equation with its elementwise conjugate acting on the conjugate
    eigenvector (which forces real increments), and appends the scalar
    pseudo-arclength row (t.dp - r)y = 0.  The linear three-parameter
    problem is reduced by the operator determinant to three generalized
    eigenproblems sharing eigenvectors; the real increment triple of
    smallest scaled norm is applied and the eigenvector is refreshed as
    the minimum singular vector of the updated operator.

    With constraint_form "eq2" the scalar residual r is recomputed every
    iteration from absolute coordinates (the -ds form); "eq3" keeps the
    increment-only form r = 0, exact when the predictor already satisfies
    the constraint.
    """
    u, wr, wi = float(guess[0]), float(guess[1]), float(guess[2])
    tol = settings.corrector_tol
    us, cs = scale
    x_prev = None
    for iteration in range(settings.max_corrector_iters):
        sig, x = sigma_min(op, complex(wr, wi), u)
        if x_prev is not None:
            aligned = x * np.exp(-1j * np.angle(np.vdot(x_prev, x)))
            if np.linalg.norm(aligned - x_prev) > MODE_SWITCH_NORM:
                logger.warning("SLP eigenvector jump at U=%.6g (mode switch suspected)", u)
        x_prev = x
        g = _constraint_residual((u, wr, wi), base, t, ds, scale)
        if sig <= tol and abs(g) <= tol:
            return EigenPoint.from_vector(op, wr, wi, u, x), iteration

        a0 = evaluate(op, complex(wr, wi), u)
        d_r, d_i, d_u = param_derivatives(op, wr, wi, u)
        v1, v2, v3 = cs * d_r, cs * d_i, us * d_u
        r = -g if settings.constraint_form == "eq2" else 0.0
        col1 = (v1, v1.conj(), t.dchi_r)
        col2 = (v2, v2.conj(), t.dchi_i)
        col3 = (v3, v3.conj(), t.du)
        col_rhs = (-a0, -a0.conj(), r)
        delta0 = _operator_det3((col1, col2, col3))
        delta1 = _operator_det3((col_rhs, col2, col3))
        delta2 = _operator_det3((col1, col_rhs, col3))
        delta3 = _operator_det3((col1, col2, col_rhs))

        try:
            eigvals, eigvecs = scipy.linalg.eig(delta1, delta0)
        except (ValueError, np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
            raise ConvergenceError(f"Delta-matrix eigenproblem failed at U={u}: {exc}",
                                   iterations=iteration) from exc

        candidate = None
        candidate_norm = math.inf
        for k in range(eigvals.size):
            eta1 = eigvals[k]
            if not np.isfinite(eta1):
                continue
            z = eigvecs[:, k]
            d0z = delta0 @ z
            denom = np.vdot(d0z, d0z)
            if abs(denom) == 0.0:
                continue
            eta2 = np.vdot(d0z, delta2 @ z) / denom
            eta3 = np.vdot(d0z, delta3 @ z) / denom
            eta = np.array([eta1, eta2, eta3])
            if not np.all(np.isfinite(eta)):
                continue
            re = eta.real
            if np.max(np.abs(eta.imag)) > 1e-6 * (1.0 + np.max(np.abs(re))):
                continue
            nrm = float(np.linalg.norm(re))
            if nrm < candidate_norm:
                candidate_norm = nrm
                candidate = re
        if candidate is None:
            raise ConvergenceError(f"no real increment triple found at U={u} "
                                   f"(Delta_0 may be singular)", iterations=iteration)

        wr += cs * candidate[0]
        wi += cs * candidate[1]
        u += us * candidate[2]
        if candidate_norm <= 1e-2 * tol:
            # Increments at rounding level but residuals still above tol.
            sig, x = sigma_min(op, complex(wr, wi), u)
            g = _constraint_residual((u, wr, wi), base, t, ds, scale)
            if sig <= tol and abs(g) <= tol:
                return EigenPoint.from_vector(op, wr, wi, u, x), iteration + 1
            raise ConvergenceError(f"SLP stalled at U={u} (sigma={sig:.3e}, |g|={abs(g):.3e})",
                                   iterations=iteration)

    raise ConvergenceError(f"SLP corrector did not converge in "
                           f"{settings.max_corrector_iters} iterations",
                           iterations=settings.max_corrector_iters)


def _corrector_newton(op: ParametricOperator, guess: Triple, base: EigenPoint, t: Tangent,
                      ds: float, settings: ContinuationSettings,
                      scale: Scale) -> Tuple[EigenPoint, int]:
    row = _arclength_row(base, t, ds, scale)
    return _solve_bordered(op, guess, base.x, row, settings.corrector_tol,
                           settings.max_corrector_iters)


def corrector_slp(op: ParametricOperator, guess: Triple, base: EigenPoint, t: Tangent,
                  ds: float, settings: Optional[ContinuationSettings] = None) -> EigenPoint:
    """Correct a predictor guess via the SLP multiparameter route."""
    settings = settings or ContinuationSettings()
    return _corrector_slp(op, guess, base, t, ds, settings, settings.resolved_scale(base))[0]


def corrector_newton(op: ParametricOperator, guess: Triple, base: EigenPoint, t: Tangent,
                     ds: float, settings: Optional[ContinuationSettings] = None) -> EigenPoint:
    """Correct a predictor guess via the bordered-system Newton oracle."""
    settings = settings or ContinuationSettings()
    return _corrector_newton(op, guess, base, t, ds, settings, settings.resolved_scale(base))[0]


_CORRECTORS = {"slp": _corrector_slp, "newton": _corrector_newton}


def trace_path(op: ParametricOperator, start: Union[FlutterPoint, EigenPoint],
               direction: int = 1,
               settings: Optional[ContinuationSettings] = None) -> ModePath:
    """Trace a modal damping path outward from a solved start point.

    Repeats tangent -> predictor -> corrector with step adaptation: a
    corrector failure shrinks ds (permanent failure below min_ds), fast
    convergence grows it up to max_ds.  Terminates on max_steps, window
    exit or min_ds exhaustion, recording the reason.
    """
    settings = settings or ContinuationSettings()
    origin = start
    point = start.point if isinstance(start, FlutterPoint) else start
    if point.residual > settings.corrector_tol:
        raise ValueError(f"start point residual {point.residual:.3e} exceeds "
                         f"corrector_tol {settings.corrector_tol:.1e}")
    scale = settings.resolved_scale(point)
    correct = _CORRECTORS[settings.corrector]

    path = ModePath(points=[point], s=[0.0], origin=origin,
                    direction=+1 if direction >= 0 else -1, scale=scale)
    if settings.max_steps == 0:
        path.termination_reason = "max-steps"
        return path

    tangent = initial_tangent(op, point, scale=scale, tol=settings.corrector_tol)
    if path.direction < 0:
        tangent = tangent.negated()

    ds = settings.ds
    for _ in range(settings.max_steps):
        base = path.points[-1]
        accepted = None
        while True:
            guess = predictor(base, tangent, ds, scale)
            try:
                accepted, iters = correct(op, guess, base, tangent, ds, settings, scale)
                break
            except (ConvergenceError, NumericalError):
                ds *= settings.step_shrink
                if ds < settings.min_ds:
                    break
        if accepted is None:
            if len(path.points) == 1:
                raise ConvergenceError("first continuation step failed at every ds "
                                       f">= min_ds={settings.min_ds}")
            path.termination_reason = "min-ds-exhausted"
            return path

        aligned = accepted.x * np.exp(-1j * np.angle(np.vdot(base.x, accepted.x)))
        if np.linalg.norm(aligned - base.x) > MODE_SWITCH_NORM:
            path.notes.append(f"mode switch suspected at step {len(path.points)}")

        path.points.append(accepted)
        path.s.append(path.s[-1] + ds)
        if not op.window.contains(accepted.U, accepted.chi_R):
            path.termination_reason = "window-exit"
            return path
        tangent = fd_tangent(base, accepted, scale)
        if iters <= 3:
            ds = min(ds * settings.step_grow, settings.max_ds)

    path.termination_reason = "max-steps"
    return path


def natural_continuation(op: ParametricOperator, U_start: float, U_end: float, dU: float,
                         seed: EigenPoint, tol: float = 1e-10, max_iters: int = 25,
                         scale: Optional[Scale] = None) -> ModePath:
    """March airspeed on a fixed grid, solving (chi_R, chi_I) at each U.

    The classical modal damping plot; the reference method for the
    pseudo-arclength tracer.  No step adaptation: a failed step terminates
    the path with the reason recorded.
    """
    if dU <= 0.0:
        raise ValueError("dU must be positive")
    if abs(seed.U - U_start) > 1e-9 * max(1.0, abs(U_start)):
        raise ValueError(f"seed is converged at U={seed.U}, not at U_start={U_start}")
    if scale is None:
        scale = (max(abs(seed.U), 1.0), max(abs(seed.chi_R), 1.0))
    sign = 1.0 if U_end >= U_start else -1.0
    targets = []
    k, u = 1, U_start
    while abs((U_start + sign * k * dU) - U_start) < abs(U_end - U_start):
        targets.append(U_start + sign * k * dU)
        k += 1
    if U_end != U_start:
        targets.append(U_end)

    path = ModePath(points=[seed], s=[0.0], origin="natural",
                    direction=+1 if sign > 0 else -1, scale=scale)
    for u in targets:
        prev = path.points[-1]
        try:
            nxt = solve_at_airspeed(op, u, prev, tol=tol, max_iters=max_iters)
        except ConvergenceError as exc:
            path.termination_reason = f"non-convergence at U={u:.6g}: {exc}"
            return path
        step = float(np.linalg.norm(_scaled(_point_triple(nxt), scale)
                                    - _scaled(_point_triple(prev), scale)))
        path.points.append(nxt)
        path.s.append(path.s[-1] + step)
    path.termination_reason = "completed"
    return path


def _damping_row(p: DampingParameterization, d: float) -> RowFn:
    if p is DampingParameterization.CHI_I:
        def row(wr, wi, u):
            return wi - d, (0.0, 1.0, 0.0)
    elif p is DampingParameterization.XI:
        def row(wr, wi, u):
            return wi - d * wr, (-d, 1.0, 0.0)
    elif p is DampingParameterization.ZETA:
        if abs(d) >= 1.0:
            raise ValueError(f"zeta value {d} outside (-1, 1)")
        root = math.sqrt(1.0 - d * d)

        def row(wr, wi, u):
            return wi * root - d * wr, (-d, root, 0.0)
    else:
        raise ValueError(f"unknown parameterization {p}")
    return row


def damping_continuation(op: ParametricOperator, d_values: Sequence[float],
                         p: DampingParameterization, seed: EigenPoint,
                         tol: float = 1e-10, max_iters: int = 25,
                         scale: Optional[Scale] = None) -> ModePath:
    """Solve (chi_R, U) on a grid of damping values; stops at turning points.

    Fixing the damping parameter restricts each solve to the fixed-d slice;
    past a damping turning point no nearby solution exists, so the step
    either fails to converge or jumps branches, and the path terminates
    with reason "turning-point suspected".
    """
    d_values = [float(d) for d in d_values]
    if not d_values:
        raise ValueError("d_values must be nonempty")
    diffs = np.diff(d_values)
    if diffs.size and not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise ValueError("d_values must be monotone")
    _, d_seed = complex_to_damping(p, seed.chi)
    if abs(d_seed - d_values[0]) > 1e-6 * (1.0 + abs(d_seed)):
        raise ValueError(f"seed damping {d_seed} does not match d_values[0] = {d_values[0]}")
    if scale is None:
        scale = (max(abs(seed.U), 1.0), max(abs(seed.chi_R), 1.0))

    path = ModePath(points=[seed], s=[0.0], origin="natural",
                    direction=+1 if (diffs.size == 0 or diffs[0] > 0) else -1, scale=scale)
    for d in d_values[1:]:
        prev = path.points[-1]
        row = _damping_row(p, d)
        try:
            nxt, _ = _solve_bordered(op, _point_triple(prev), prev.x, row, tol, max_iters)
        except ConvergenceError:
            path.termination_reason = TURNING_POINT_REASON
            return path
        jump = float(np.linalg.norm(_scaled(_point_triple(nxt), scale)
                                    - _scaled(_point_triple(prev), scale)))
        if jump > DAMPING_JUMP_GUARD:
            path.termination_reason = TURNING_POINT_REASON
            return path
        path.points.append(nxt)
        path.s.append(path.s[-1] + jump)
    path.termination_reason = "completed"
    return path


def _zeta_row(zeta_max: float) -> RowFn:
    def row(wr, wi, u):
        nrm = math.hypot(wr, wi)
        return wi / nrm - zeta_max, (-wr * wi / nrm ** 3, wr * wr / nrm ** 3, 0.0)

    return row


def _interp_triple(path: ModePath, k: int, s_star: float) -> Triple:
    p0, p1 = path.points[k], path.points[k + 1]
    s0, s1 = path.s[k], path.s[k + 1]
    f = (s_star - s0) / (s1 - s0)
    return (p0.U + f * (p1.U - p0.U), p0.chi_R + f * (p1.chi_R - p0.chi_R),
            p0.chi_I + f * (p1.chi_I - p0.chi_I))


def flight_envelope(path: ModePath, zeta_max: float,
                    op: Optional[ParametricOperator] = None,
                    tol: float = 1e-10) -> List[EnvelopeCrossing]:
    """All zeta = zeta_max crossings along a path.

    Each sign change of (zeta - zeta_max) is located by piecewise-linear
    interpolation in arclength; when the operator is supplied the crossing
    is refined by one bordered corrector solve with the zeta constraint
    replacing the arclength row (so the reported U_star re-evaluates to
    zeta_max at solver accuracy).  Sides follow the local dzeta/dU sign:
    negative slope means damping is deteriorating with airspeed, the
    subcritical approach to instability.
    """
    zetas = path.zetas()
    located: List[Tuple[float, EnvelopeCrossing]] = []
    last = len(zetas) - 1
    for k, z in enumerate(zetas):
        # a path point exactly on the level is itself the crossing
        if np.isfinite(z) and z - zeta_max == 0.0:
            lo, hi = max(k - 1, 0), min(k + 1, last)
            du = path.points[hi].U - path.points[lo].U
            slope = (zetas[hi] - zetas[lo]) / du if du != 0.0 else 0.0
            side = "subcritical" if slope < 0.0 else "supercritical"
            located.append((path.s[k],
                            EnvelopeCrossing(float(zeta_max), float(path.points[k].U),
                                             (lo, hi), side, path.points[k])))
    for k in range(len(zetas) - 1):
        z0, z1 = zetas[k] - zeta_max, zetas[k + 1] - zeta_max
        if not (np.isfinite(z0) and np.isfinite(z1)) or z0 * z1 >= 0.0:
            continue
        frac = z0 / (z0 - z1)
        s_star = path.s[k] + frac * (path.s[k + 1] - path.s[k])
        guess = _interp_triple(path, k, s_star)
        point = None
        u_star = guess[0]
        if op is not None:
            point, _ = _solve_bordered(op, guess, path.points[k].x, _zeta_row(zeta_max),
                                       tol, 25)
            u_star = point.U
        du = path.points[k + 1].U - path.points[k].U
        slope = (zetas[k + 1] - zetas[k]) / du if du != 0.0 else 0.0
        side = "subcritical" if slope < 0.0 else "supercritical"
        located.append((s_star, EnvelopeCrossing(float(zeta_max), float(u_star), (k, k + 1),
                                                 side, point)))
    located.sort(key=lambda t: t[0])
    return [c for _, c in located]


def extremum_damping(path: ModePath, op: Optional[ParametricOperator] = None,
                     tol: float = 1e-10) -> DampingExtremum:
    """Interior extremum of zeta along a path.

    Located by a quadratic fit in arclength over the bracketing triple and
    refined by one arclength-constrained corrector solve.  When several
    interior extrema exist, the one closest to the stability boundary
    (smallest |zeta|) is reported: that is the near-restabilization
    feature borderline-zone analysis is after.  A monotone path reports
    the endpoint with the larger |zeta|, flagged on_boundary, unrefined.
    """
    if len(path.points) < 3:
        raise ValueError("extremum search needs a path with >= 3 points")
    z = path.zetas()
    interior = [k for k in range(1, len(z) - 1)
                if (z[k] - z[k - 1]) * (z[k + 1] - z[k]) <= 0.0]
    if not interior:
        k = 0 if abs(z[0]) >= abs(z[-1]) else len(z) - 1
        return DampingExtremum(path.points[k], float(z[k]), True)

    k = min(interior, key=lambda i: abs(z[i]))
    s0, s1, s2 = path.s[k - 1], path.s[k], path.s[k + 1]
    z0, z1, z2 = z[k - 1], z[k], z[k + 1]
    denom = (z0 * (s1 - s2) + z1 * (s2 - s0) + z2 * (s0 - s1))
    if denom == 0.0:
        s_star = s1
    else:
        s_star = ((z0 * (s1 * s1 - s2 * s2) + z1 * (s2 * s2 - s0 * s0)
                   + z2 * (s0 * s0 - s1 * s1)) / (2.0 * denom))
    s_star = min(max(s_star, s0), s2)

    seg = k - 1 if s_star <= s1 else k
    guess = _interp_triple(path, seg, s_star)
    point = path.points[k]
    if op is not None:
        t = fd_tangent(path.points[k - 1], path.points[k + 1], path.scale)
        row = _arclength_row(path.points[k], t, s_star - s1, path.scale)
        point, _ = _solve_bordered(op, guess, path.points[k].x, row, tol, 25)
    chi = point.chi
    return DampingExtremum(point, float(chi.imag / abs(chi)), False)
