"""Shared fixtures and independent oracles.

Oracles live here so every expected value in the tests traces back to a
computation that does not share code with the path it checks: closed-form
polynomial trajectories, brute-force distance-to-spectrum, and a dense
determinant scan with bisection refinement for the typical section.
"""

import numpy as np
import numpy.polynomial.polynomial as P
import pytest
from scipy.optimize import brentq

from flutterspec import (ContinuationSettings, EigenPoint, Window, evaluate,
                         build_normal_operator, build_trajectory_operator,
                         build_typical_section, find_flutter_points,
                         reference_restabilization_spec, trace_path)

# ---------------------------------------------------------------------------
# closed-form oracle for the reference restabilization trajectory


class TrajectoryOracle:
    """Exact values for the engineered two-mode restabilization fixture."""

    def __init__(self, spec):
        self.mode = spec.modes[0]
        self.u_flutter = 120.0
        dg = P.polyder(self.mode.g_coeffs)
        roots = np.sort(np.roots(dg[::-1]).real)
        interior = roots[(roots > 120.0) & (roots < 700.0)]
        self.dip_u = float(interior[0])       # damping minimum (most unstable)
        self.hump_u = float(interior[-1])     # near-restabilization maximum
        self.hump_g = float(self.mode.g(self.hump_u))
        # extremum of zeta: root of g'(U) omega(U) - g(U) omega'(U)
        h = P.polysub(P.polymul(dg, self.mode.omega_coeffs),
                      P.polymul(self.mode.g_coeffs, P.polyder(self.mode.omega_coeffs)))
        zr = np.roots(h[::-1])
        zr = zr[np.abs(zr.imag) < 1e-9].real
        self.zeta_ext_u = float([r for r in zr if 400.0 < r < 700.0][0])

    def omega(self, u):
        return float(self.mode.omega(u))

    def g(self, u):
        return float(self.mode.g(u))

    def zeta(self, u):
        chi = complex(self.omega(u), self.g(u))
        return chi.imag / abs(chi)

    def u_at_zeta(self, level, lo, hi):
        return brentq(lambda u: self.zeta(u) - level, lo, hi, xtol=1e-12, rtol=8.9e-16)


@pytest.fixture(scope="session")
def traj_spec():
    return reference_restabilization_spec()


@pytest.fixture(scope="session")
def traj_oracle(traj_spec):
    return TrajectoryOracle(traj_spec)


@pytest.fixture(scope="session")
def traj_op(traj_spec):
    return build_trajectory_operator(traj_spec)


@pytest.fixture(scope="session")
def traj_flutter(traj_op):
    points = find_flutter_points(traj_op, Window(10.0, 400.0, 20.0, 200.0))
    assert len(points) == 1
    return points[0]


@pytest.fixture(scope="session")
def traj_point(traj_oracle, traj_op):
    """Exact closed-form eigenpoint factory for the trajectory fixture."""

    def make(u):
        return EigenPoint.from_vector(traj_op, traj_oracle.omega(u), traj_oracle.g(u),
                                      u, np.array([1.0, 0.0]))

    return make


@pytest.fixture(scope="session")
def super_path(traj_op, traj_flutter):
    """Supercritical reference path: fixed ds, through the hump and beyond."""
    settings = ContinuationSettings(ds=0.025, max_ds=0.025, max_steps=300)
    return trace_path(traj_op, traj_flutter, direction=-1, settings=settings)


# ---------------------------------------------------------------------------
# typical section and its determinant-scan oracle


@pytest.fixture(scope="session")
def ts_op():
    return build_typical_section()


@pytest.fixture(scope="session")
def ts_flutter(ts_op):
    points = find_flutter_points(ts_op)
    assert len(points) == 1
    return points[0]


def det_at(op, w, u):
    return complex(np.linalg.det(evaluate(op, complex(w, 0.0), u)))


def _re_det_roots(op, u, w_lo, w_hi, n_w):
    ws = np.linspace(w_lo, w_hi, n_w)
    vals = np.array([det_at(op, w, u).real for w in ws])
    roots = []
    for a, b, va, vb in zip(ws[:-1], ws[1:], vals[:-1], vals[1:]):
        if va == 0.0:
            roots.append(float(a))
        elif va * vb < 0.0:
            roots.append(brentq(lambda w: det_at(op, w, u).real, a, b,
                                xtol=1e-13, rtol=8.9e-16))
    return roots


def _branch_at(op, u, w_near, h, max_expand=50):
    lo, hi = w_near - h, w_near + h
    for _ in range(max_expand):
        if det_at(op, lo, u).real * det_at(op, hi, u).real <= 0.0:
            break
        lo -= h
        hi += h
    else:
        raise RuntimeError("oracle lost the Re(det) root branch")
    w = brentq(lambda w_: det_at(op, w_, u).real, lo, hi, xtol=1e-14, rtol=8.9e-16)
    return w, det_at(op, w, u).imag


def det_scan_flutter(op, u_lo, u_hi, w_lo, w_hi, n_u=160, n_w=400):
    """Brute-force oracle: scan (U, chi_R) for simultaneous Re/Im det zeros.

    For each airspeed the Re(det) roots in chi_R are found by scan plus
    bisection; Im(det) is tracked along each root branch and its sign
    changes are bisected in U.  Independent of the contour machinery.
    """
    h = (w_hi - w_lo) / (n_w - 1)
    us = np.linspace(u_lo, u_hi, n_u)
    hits = []
    prev = None
    for u in us:
        cur = [(w, det_at(op, w, u).imag) for w in _re_det_roots(op, u, w_lo, w_hi, n_w)]
        if prev is not None:
            u_prev, branches = prev
            for w0, im0 in branches:
                if not cur:
                    continue
                w1, im1 = min(cur, key=lambda t: abs(t[0] - w0))
                if abs(w1 - w0) > (w_hi - w_lo) / 10.0:
                    continue
                if im0 * im1 < 0.0:
                    ua, ub, w = u_prev, u, w0
                    im_a = im0
                    for _ in range(80):
                        um = 0.5 * (ua + ub)
                        wm, im_m = _branch_at(op, um, w, h)
                        if im_m == 0.0:
                            ua = ub = um
                            w = wm
                            break
                        if im_a * im_m < 0.0:
                            ub = um
                        else:
                            ua, im_a = um, im_m
                        w = wm
                        if ub - ua <= 1e-13 * max(1.0, abs(um)):
                            break
                    um = 0.5 * (ua + ub)
                    wm, _ = _branch_at(op, um, w, h)
                    hits.append((um, wm))
        prev = (u, cur)
    return hits


@pytest.fixture(scope="session")
def ts_oracle(ts_op):
    hits = det_scan_flutter(ts_op, 1.0, 80.0, 5.0, 75.0)
    assert len(hits) == 1, f"oracle expected a unique flutter point, got {hits}"
    return hits[0]


# ---------------------------------------------------------------------------
# normal operator with prescribed spectrum

NORMAL_EIGENVALUES = (2.0 + 0.03j, 4.5 + 0.0j, 6.0 - 0.05j)


@pytest.fixture(scope="session")
def normal_op():
    return build_normal_operator(NORMAL_EIGENVALUES, Window(-10.0, 10.0, -10.0, 20.0))


def distance_to_spectrum(chi):
    """Brute-force min_k |chi - lambda_k| for the prescribed spectrum."""
    return min(abs(complex(chi) - lam) for lam in NORMAL_EIGENVALUES)
