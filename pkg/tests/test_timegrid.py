"""Graded meshes, L1 coefficients, complementary kernels, modal block solves."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

import fracpod as fp
from fracpod.timegrid import _lower_triangular_matrix, singular_weight


class TestGradedMesh:
    def test_uniform(self):
        mesh = fp.build_graded_mesh(1.0, 4, 1.0)
        np.testing.assert_allclose(mesh.t, [0.0, 0.25, 0.5, 0.75, 1.0], rtol=0, atol=0)

    def test_quadratic(self):
        mesh = fp.build_graded_mesh(1.0, 2, 2.0)
        np.testing.assert_allclose(mesh.t, [0.0, 0.25, 1.0], rtol=0, atol=0)

    def test_strong_grading_first_node(self):
        mesh = fp.build_graded_mesh(0.1, 400, 5.0)
        assert mesh.t[1] == pytest.approx(0.1 * (1.0 / 400.0) ** 5, rel=1e-15)

    @pytest.mark.parametrize("T,N,r", [(1.0, 7, 1.0), (0.1, 33, 3.7), (2.5, 100, 5.0)])
    def test_invariants(self, T, N, r):
        mesh = fp.build_graded_mesh(T, N, r)
        assert mesh.t[0] == 0.0
        assert mesh.t[-1] == T
        assert np.all(np.diff(mesh.t) > 0)
        n = np.arange(N + 1)
        expected = T * (n / N) ** r
        # within 4 ulps
        np.testing.assert_allclose(mesh.t, expected, rtol=4 * np.finfo(float).eps)
        np.testing.assert_allclose(mesh.tau, np.diff(mesh.t), rtol=0, atol=0)

    def test_validation(self):
        with pytest.raises(ValueError):
            fp.build_graded_mesh(1.0, 0, 1.0)
        with pytest.raises(ValueError):
            fp.build_graded_mesh(0.0, 4, 1.0)
        with pytest.raises(ValueError):
            fp.build_graded_mesh(1.0, 4, 0.5)
        with pytest.raises(ValueError):
            fp.build_graded_mesh(1.0, 4, 25.0)


class TestL1Coefficients:
    def test_uniform_diagonal_closed_form(self):
        mesh = fp.build_graded_mesh(1.0, 5, 1.0)
        nu = 0.4
        kern = fp.l1_coefficients(mesh, nu)
        tau = 0.2
        for n in range(1, 6):
            assert kern.coeffs[n - 1][0] == pytest.approx(
                tau**-nu / math.gamma(2 - nu), rel=1e-14)

    def test_uniform_antiderivative_form(self):
        mesh = fp.build_graded_mesh(1.0, 6, 1.0)
        nu = 0.75
        kern = fp.l1_coefficients(mesh, nu)
        tau = 1.0 / 6.0
        for n in range(1, 7):
            for k in range(1, n + 1):
                j = n - k
                expected = tau**-nu * ((j + 1) ** (1 - nu) - j ** (1 - nu)) / math.gamma(2 - nu)
                assert kern.coeffs[n - 1][j] == pytest.approx(expected, rel=1e-13)

    @pytest.mark.parametrize("nu,r,N", [(0.75, 5.0, 30), (0.3, 2.0, 17), (0.5, 1.0, 12)])
    def test_matches_quadrature_of_kernel(self, nu, r, N):
        # independent oracle: numerical quadrature of the weakly singular integral
        mesh = fp.build_graded_mesh(0.7, N, r)
        kern = fp.l1_coefficients(mesh, nu)
        g = math.gamma(1 - nu)
        for n in (1, 2, N // 2, N):
            for k in (1, max(1, n // 2), n):
                val, _ = quad(
                    lambda s: (mesh.t[n] - s) ** -nu / g / mesh.tau[k - 1],
                    mesh.t[k - 1], mesh.t[k],
                    points=[mesh.t[k]] if k == n else None)
                assert kern.coeffs[n - 1][n - k] == pytest.approx(val, rel=1e-7)

    @pytest.mark.parametrize("nu,r,N", [(0.75, 2.0, 25), (0.2, 1.0, 10),
                                        (0.5, 3.3, 40), (0.9, 5.0, 18)])
    def test_positivity_and_monotonicity(self, nu, r, N):
        mesh = fp.build_graded_mesh(1.3, N, r)
        kern = fp.l1_coefficients(mesh, nu)
        for row in kern.coeffs:
            assert np.all(row > 0)
            assert np.all(np.diff(row) < 0)    # A_0 > A_1 > ... > A_{n-1}

    def test_order_validation(self):
        mesh = fp.build_graded_mesh(1.0, 4, 1.0)
        for nu in (0.0, 1.0, -0.2, 1.4):
            with pytest.raises(ValueError):
                fp.l1_coefficients(mesh, nu)


class TestApplyL1:
    def test_constant_history_is_zero(self):
        mesh = fp.build_graded_mesh(1.0, 8, 2.0)
        kern = fp.l1_coefficients(mesh, 0.6)
        assert fp.apply_l1(kern, np.full(9, 3.7)) == pytest.approx(0.0, abs=1e-12)

    def test_exact_on_linear_functions(self):
        # the L1 quotient reproduces the Caputo derivative of t exactly
        for r in (1.0, 3.0):
            mesh = fp.build_graded_mesh(1.0, 10, r)
            nu = 0.75
            kern = fp.l1_coefficients(mesh, nu)
            for n in (1, 4, 10):
                val = fp.apply_l1(kern, mesh.t[: n + 1])
                expected = mesh.t[n] ** (1 - nu) / math.gamma(2 - nu)
                assert val == pytest.approx(expected, rel=1e-12)

    def test_single_step(self):
        mesh = fp.build_graded_mesh(1.0, 4, 1.0)
        kern = fp.l1_coefficients(mesh, 0.3)
        assert fp.apply_l1(kern, [0.0, 1.0]) == pytest.approx(kern.coeffs[0][0], rel=1e-15)

    def test_vector_history(self):
        mesh = fp.build_graded_mesh(1.0, 5, 1.5)
        kern = fp.l1_coefficients(mesh, 0.5)
        hist = np.outer(mesh.t[:4], [1.0, -2.0])
        out = fp.apply_l1(kern, hist)
        assert out.shape == (2,)
        assert out[1] == pytest.approx(-2.0 * out[0], rel=1e-13)

    def test_length_mismatch(self):
        mesh = fp.build_graded_mesh(1.0, 3, 1.0)
        kern = fp.l1_coefficients(mesh, 0.5)
        with pytest.raises(ValueError):
            fp.apply_l1(kern, [1.0])
        with pytest.raises(ValueError):
            fp.apply_l1(kern, np.zeros(6))

    def test_fractional_difference_inequality(self):
        # v^n * (L1 v)^n >= (1/2) L1(v^2)^n for v^0 = 0 (200 random sequences)
        mesh = fp.build_graded_mesh(1.0, 12, 2.5)
        kern = fp.l1_coefficients(mesh, 0.75)
        rng = np.random.default_rng(42)
        for _ in range(200):
            v = rng.standard_normal(13)
            v[0] = 0.0
            for n in range(1, 13):
                lhs = v[n] * fp.apply_l1(kern, v[: n + 1])
                rhs = 0.5 * fp.apply_l1(kern, v[: n + 1] ** 2)
                assert lhs >= rhs - 1e-12


class TestComplementaryKernel:
    def test_single_step_reciprocal(self):
        mesh = fp.build_graded_mesh(1.0, 1, 1.0)
        nu = 0.6
        kern = fp.l1_coefficients(mesh, nu)
        comp = fp.complementary_kernel(kern)
        assert comp.rows[0][0] == pytest.approx(
            math.gamma(2 - nu) * mesh.tau[0] ** nu, rel=1e-13)

    def test_convolution_identity(self):
        mesh = fp.build_graded_mesh(1.0, 8, 2.0)
        kern = fp.l1_coefficients(mesh, 0.75)
        comp = fp.complementary_kernel(kern)
        for n in range(1, 9):
            for k in range(1, n + 1):
                s = sum(comp.rows[n - 1][n - j] * kern.coeffs[j - 1][j - k]
                        for j in range(k, n + 1))
                assert s == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("nu,r,N", [(0.75, 2.0, 8), (0.4, 1.0, 20), (0.6, 4.0, 15)])
    def test_bounds(self, nu, r, N):
        mesh = fp.build_graded_mesh(0.9, N, r)
        kern = fp.l1_coefficients(mesh, nu)
        comp = fp.complementary_kernel(kern)
        g = math.gamma(2 - nu)
        for n in range(1, N + 1):
            row = comp.rows[n - 1]
            assert np.all(row >= -1e-15)
            for j in range(1, n + 1):
                assert row[n - j] <= g * mesh.tau[j - 1] ** nu * (1 + 1e-12)


class TestModeBlockSolve:
    def test_zero_source(self):
        mesh = fp.build_graded_mesh(1.0, 6, 2.0)
        kern = fp.l1_coefficients(mesh, 0.75)
        V, U = fp.mode_block_solve(kern, 2.0, 0.0, mesh, 1.5)
        np.testing.assert_array_equal(U, 0.0)
        np.testing.assert_array_equal(V, 0.0)

    def test_linearity(self):
        mesh = fp.build_graded_mesh(1.0, 10, 3.0)
        kern = fp.l1_coefficients(mesh, 0.6)
        V1, U1 = fp.mode_block_solve(kern, 1.5, 1.0, mesh, 1.2)
        V2, U2 = fp.mode_block_solve(kern, 1.5, 2.0, mesh, 1.2)
        np.testing.assert_array_equal(U2, 2.0 * U1)
        np.testing.assert_array_equal(V2, 2.0 * V1)

    def test_against_dense_block_solve(self):
        # independent oracle: assemble the full 2N x 2N system and solve densely
        mesh = fp.build_graded_mesh(0.5, 24, 2.0)
        nu = 0.7
        alpha = 1.4
        kern = fp.l1_coefficients(mesh, nu)
        mu = 3.0
        c = 1.7
        A = _lower_triangular_matrix(kern)
        N = 24
        block = np.block([[A, mu * np.eye(N)], [np.eye(N), -A]])
        rhs = np.concatenate([c * singular_weight(mesh.t[1:], alpha), np.zeros(N)])
        sol = np.linalg.solve(block, rhs)
        V, U = fp.mode_block_solve(kern, mu, c, mesh, alpha)
        np.testing.assert_allclose(V, sol[:N], rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(U, sol[N:], rtol=1e-12, atol=1e-14)

    def test_against_scalar_recursion(self):
        # step the two-variable recursion directly from the L1 difference form
        mesh = fp.build_graded_mesh(0.1, 50, 5.0)
        nu = 0.75
        alpha = 1.5
        kern = fp.l1_coefficients(mesh, nu)
        mu, c = 4.0, 0.8
        om = c * singular_weight(mesh.t[1:], alpha)
        u = np.zeros(51)
        v = np.zeros(51)
        for n in range(1, 51):
            row = kern.coeffs[n - 1]
            a0 = row[0]
            hu = (row[1:n] @ np.diff(u[:n])[::-1] if n > 1 else 0.0) - a0 * u[n - 1]
            hv = (row[1:n] @ np.diff(v[:n])[::-1] if n > 1 else 0.0) - a0 * v[n - 1]
            u[n] = (om[n - 1] - a0 * hu - hv) / (a0 * a0 + mu)
            v[n] = a0 * u[n] + hu
        V, U = fp.mode_block_solve(kern, mu, c, mesh, alpha)
        np.testing.assert_allclose(U, u[1:], rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(V, v[1:], rtol=1e-12, atol=1e-15)

    def test_terminal_value_against_spectral_oracle(self):
        # relative gap is the L1 discretization error, ~1.25e-3 at N=400, r=5
        mesh = fp.build_graded_mesh(0.1, 400, 5.0)
        kern = fp.l1_coefficients(mesh, 0.75)
        V, U = fp.mode_block_solve(kern, 1.0, 1.0, mesh, 1.5)
        oracle = fp.terminal_mode_value(1.5, 1.0, 0.1, 1.0)
        assert U[-1] == pytest.approx(oracle, rel=1.3e-3)

    def test_negative_eigenvalue_rejected(self):
        mesh = fp.build_graded_mesh(1.0, 4, 1.0)
        kern = fp.l1_coefficients(mesh, 0.75)
        with pytest.raises(ValueError):
            fp.mode_block_solve(kern, -1.0, 1.0, mesh, 1.5)
