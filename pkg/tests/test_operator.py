"""Operator evaluation, singular values, derivatives, damping maps."""

import dataclasses
import math

import numpy as np
import pytest

from flutterspec import (DampingParameterization, EigenPoint, NumericalError,
                         ParametricOperator, Window, build_normal_operator,
                         complex_to_damping, damping_to_complex, evaluate,
                         param_derivatives, residual_norm, sigma_min)

from conftest import NORMAL_EIGENVALUES, distance_to_spectrum

WIDE = Window(-100.0, 100.0, -100.0, 100.0)


@pytest.fixture(scope="module")
def identity_op():
    return ParametricOperator("identity", 2, lambda chi, u: np.eye(2, dtype=complex), WIDE)


@pytest.fixture(scope="module")
def shifted_op():
    return build_normal_operator([1.0, 3.0], WIDE)


class TestEvaluate:
    def test_identity(self, identity_op):
        for chi, u in ((0.0, 0.0), (1 + 2j, 5.0), (-3.0, 40.0)):
            assert np.array_equal(evaluate(identity_op, chi, u), np.eye(2))

    def test_shifted_diagonal(self, shifted_op):
        a = evaluate(shifted_op, 1.0, 0.0)
        assert np.array_equal(a, np.diag([0.0, 2.0]).astype(complex))

    def test_typical_section_at_origin_is_stiffness(self, ts_op):
        a = evaluate(ts_op, 0.0, 0.0)
        assert np.allclose(a, np.diag([20000.0, 7200.0]), rtol=0, atol=0)

    def test_nonfinite_arguments_rejected(self, identity_op):
        with pytest.raises(ValueError):
            evaluate(identity_op, complex(np.nan, 0.0), 1.0)
        with pytest.raises(ValueError):
            evaluate(identity_op, 1.0, np.inf)

    def test_wrong_shape_rejected(self):
        op = ParametricOperator("bad", 3, lambda chi, u: np.eye(2, dtype=complex), WIDE)
        with pytest.raises(ValueError):
            evaluate(op, 0.0, 0.0)


class TestResidualNorm:
    def test_identity_basis_vector(self, identity_op):
        assert residual_norm(identity_op, 0.0, 0.0, np.array([1.0, 0.0])) == 1.0

    def test_exact_null_vector(self, shifted_op):
        assert residual_norm(shifted_op, 1.0, 0.0, np.array([1.0, 0.0])) == 0.0

    def test_closed_form_eigentriple(self, traj_op, traj_oracle):
        u = 310.0
        chi = complex(traj_oracle.omega(u), traj_oracle.g(u))
        assert residual_norm(traj_op, chi, u, np.array([1.0, 0.0])) <= 1e-12

    def test_non_unit_vector_rejected(self, identity_op):
        with pytest.raises(ValueError):
            residual_norm(identity_op, 0.0, 0.0, np.array([1.0, 1.0]))


class TestSigmaMin:
    def test_identity(self, identity_op):
        sigma, x = sigma_min(identity_op, 0.0, 0.0)
        assert sigma == pytest.approx(1.0, abs=1e-14)
        assert np.linalg.norm(x) == pytest.approx(1.0, abs=1e-14)

    def test_shifted_null_direction(self, shifted_op):
        sigma, x = sigma_min(shifted_op, 1.0, 0.0)
        assert sigma == 0.0
        assert abs(x[0]) == pytest.approx(1.0, abs=1e-14)

    def test_normal_fixture_distance(self, normal_op):
        rng = np.random.default_rng(7)
        for chi in rng.uniform(-2.0, 9.0, size=40):
            sigma, _ = sigma_min(normal_op, complex(chi, 0.0), 0.0)
            assert sigma == pytest.approx(distance_to_spectrum(chi), abs=1e-9)

    def test_residual_matches_sigma(self, ts_op):
        sigma, x = sigma_min(ts_op, complex(30.0, 2.0), 25.0)
        assert residual_norm(ts_op, complex(30.0, 2.0), 25.0, x) == pytest.approx(sigma, abs=1e-10)

    def test_min_max_bound(self, ts_op):
        rng = np.random.default_rng(11)
        sigma, _ = sigma_min(ts_op, complex(35.0, 1.0), 30.0)
        for _ in range(50):
            x = rng.normal(size=2) + 1j * rng.normal(size=2)
            x /= np.linalg.norm(x)
            assert sigma <= residual_norm(ts_op, complex(35.0, 1.0), 30.0, x) + 1e-12


class TestParamDerivatives:
    def test_polynomial_pencil(self):
        m = np.array([[2.0, 0.3], [0.3, 1.0]], dtype=complex)
        k = np.diag([5.0, 9.0]).astype(complex)
        op = ParametricOperator("pencil", 2, lambda chi, u: -chi * chi * m + k, WIDE)
        chi_r = 1.7
        d_r, d_i, d_u = param_derivatives(op, chi_r, 0.0, 0.0)
        assert np.allclose(d_r, -2.0 * chi_r * m, rtol=1e-7)
        assert np.allclose(d_i, -2.0j * chi_r * m, rtol=1e-7)
        assert np.allclose(d_u, 0.0, atol=1e-8)

    def test_typical_section_fd_vs_analytic(self, ts_op):
        fd_op = dataclasses.replace(ts_op, derivs=None)
        analytic = param_derivatives(ts_op, 30.0, 1.5, 20.0)
        numeric = param_derivatives(fd_op, 30.0, 1.5, 20.0)
        for a, n in zip(analytic, numeric):
            assert np.linalg.norm(a - n) / np.linalg.norm(a) <= 1e-6

    def test_fd_consistency_all_fixtures(self, traj_op, ts_op, normal_op):
        rng = np.random.default_rng(3)
        for op in (traj_op, ts_op, normal_op):
            fd_op = dataclasses.replace(op, derivs=None)
            w = op.window
            for _ in range(5):
                u = rng.uniform(w.u_min + 0.1 * w.u_span, w.u_max - 0.1 * w.u_span)
                wr = rng.uniform(w.chi_r_min + 0.1 * w.chi_r_span,
                                 w.chi_r_max - 0.1 * w.chi_r_span)
                wi = rng.uniform(-1.0, 1.0)
                analytic = param_derivatives(op, wr, wi, u)
                numeric = param_derivatives(fd_op, wr, wi, u)
                for a, n in zip(analytic, numeric):
                    scale = max(np.linalg.norm(a), 1.0)
                    assert np.linalg.norm(a - n) / scale <= 1e-5


class TestDampingMaps:
    def test_chi_i_forward(self):
        assert damping_to_complex(DampingParameterization.CHI_I, 2.0, 0.5) == 2.0 + 0.5j

    def test_xi_forward(self):
        chi = damping_to_complex(DampingParameterization.XI, 2.0, 0.1)
        assert chi == pytest.approx(2.0 + 0.2j, abs=1e-15)

    def test_zeta_zero_damping(self):
        for omega in (0.5, 2.0, 731.0):
            assert damping_to_complex(DampingParameterization.ZETA, omega, 0.0) == omega

    def test_zeta_ratio_definition(self):
        # forward map realizes zeta = chi_I/|chi| exactly
        chi = damping_to_complex(DampingParameterization.ZETA, 3.0, 0.6)
        assert chi.imag / abs(chi) == pytest.approx(0.6, abs=1e-15)
        assert chi.real == 3.0

    def test_chi_i_inverse(self):
        assert complex_to_damping(DampingParameterization.CHI_I, 2.0 + 0.5j) == (2.0, 0.5)

    def test_zeta_inverse_pythagorean(self):
        chi_r, d = complex_to_damping(DampingParameterization.ZETA, 3.0 + 4.0j)
        assert chi_r == 3.0
        assert d == pytest.approx(0.8, abs=1e-15)

    @pytest.mark.parametrize("kind", list(DampingParameterization))
    def test_round_trip(self, kind):
        rng = np.random.default_rng(hash(kind.value) % 2 ** 32)
        for _ in range(100):
            chi_r = rng.uniform(0.1, 500.0)
            d = rng.uniform(-0.95, 0.95) if kind is DampingParameterization.ZETA \
                else rng.uniform(-5.0, 5.0)
            chi = damping_to_complex(kind, chi_r, d)
            back_r, back_d = complex_to_damping(kind, chi)
            assert back_r == pytest.approx(chi_r, rel=1e-12, abs=1e-12)
            assert back_d == pytest.approx(d, rel=1e-12, abs=1e-12)

    def test_zeta_domain_errors(self):
        with pytest.raises(ValueError):
            damping_to_complex(DampingParameterization.ZETA, 2.0, 1.0)
        with pytest.raises(ValueError):
            damping_to_complex(DampingParameterization.ZETA, -2.0, 0.5)
        with pytest.raises(ValueError):
            complex_to_damping(DampingParameterization.ZETA, -1.0 + 1.0j)
        with pytest.raises(ValueError):
            complex_to_damping(DampingParameterization.XI, -1.0 + 1.0j)


class TestEigenPoint:
    def test_invariants(self, traj_op, traj_oracle):
        u = 250.0
        pt = EigenPoint.from_vector(traj_op, traj_oracle.omega(u), traj_oracle.g(u), u,
                                    np.array([2.0, 0.0]))
        assert abs(np.linalg.norm(pt.x) - 1.0) <= 1e-12
        recomputed = residual_norm(traj_op, pt.chi, pt.U, pt.x)
        assert abs(recomputed - pt.residual) <= 1e-12
        assert all(math.isfinite(v) for v in (pt.chi_R, pt.chi_I, pt.U))

    def test_zero_vector_rejected(self, traj_op):
        with pytest.raises(ValueError):
            EigenPoint.from_vector(traj_op, 50.0, 0.0, 10.0, np.zeros(2))


class TestWindow:
    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            Window(1.0, 1.0, 0.0, 2.0)
        with pytest.raises(ValueError):
            Window(0.0, 1.0, 3.0, 2.0)

    def test_contains(self):
        w = Window(0.0, 10.0, 1.0, 5.0)
        assert w.contains(0.0, 1.0) and w.contains(10.0, 5.0)
        assert not w.contains(-0.1, 2.0) and not w.contains(5.0, 5.1)
