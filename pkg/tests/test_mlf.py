"""Mittag-Leffler evaluator against closed forms, the dd oracle and mpmath."""

import math

import numpy as np
import pytest

import fracpod as fp
from fracpod.mlf import _asymptotic

from conftest import ml_reference


class TestMittagLeffler:
    def test_value_at_zero(self):
        # E_{a,b}(0) = 1/Gamma(b)
        assert fp.mittag_leffler(1.5, 2.0, 0.0) == pytest.approx(1.0, abs=1e-15)
        assert fp.mittag_leffler(0.8, 3.0, 0.0) == pytest.approx(0.5, abs=1e-15)

    def test_exponential_identity(self):
        # E_{1,2}(z) = (e^z - 1)/z
        for z in (-1.0, -0.25, -5.0, -20.0, -80.0):
            expected = (math.exp(z) - 1.0) / z
            assert fp.mittag_leffler(1.0, 2.0, z) == pytest.approx(expected, rel=1e-10)
        assert fp.mittag_leffler(1.0, 2.0, -1.0) == pytest.approx(0.6321205588285577, rel=1e-12)

    def test_sine_identity(self):
        # E_{2,2}(-x) = sin(sqrt(x))/sqrt(x)
        for x in (4.0, 0.5, 9.0, 30.0, 77.0):
            expected = math.sin(math.sqrt(x)) / math.sqrt(x)
            assert fp.mittag_leffler(2.0, 2.0, -x) == pytest.approx(expected, rel=1e-10)
        assert fp.mittag_leffler(2.0, 2.0, -4.0) == pytest.approx(0.4546487134, abs=1e-9)

    @pytest.mark.parametrize("alpha", [1.25, 1.5, 1.75])
    def test_matches_dd_oracle_on_grid(self, alpha):
        for z in np.linspace(-100.0, 0.0, 25):
            ref = fp.mittag_leffler_series(alpha, 2.0, float(z))
            val = fp.mittag_leffler(alpha, 2.0, float(z))
            assert val == pytest.approx(ref, rel=1e-8)

    @pytest.mark.parametrize("alpha,z", [
        (1.25, -3.0), (1.25, -40.0), (1.25, -100.0),
        (1.5, -7.5), (1.5, -60.0), (1.75, -25.0), (1.75, -95.0),
        (0.5, -4.0), (2.0, -50.0),
    ])
    def test_matches_independent_reference(self, alpha, z):
        # both the production value and the dd oracle against mpmath
        ref = ml_reference(alpha, 2.0, z)
        assert fp.mittag_leffler(alpha, 2.0, z) == pytest.approx(ref, rel=1e-8)
        assert fp.mittag_leffler_series(alpha, 2.0, z) == pytest.approx(ref, rel=1e-10)

    def test_production_beyond_oracle_reach(self):
        # deep completely-monotone regime: the Taylor cancellation outruns the
        # dd oracle, the asymptotic branch still certifies
        ref = ml_reference(0.5, 2.0, -12.0)
        assert fp.mittag_leffler(0.5, 2.0, -12.0) == pytest.approx(ref, rel=1e-8)
        with pytest.raises(ValueError):
            fp.mittag_leffler_series(0.5, 2.0, -12.0)

    def test_asymptotic_branch_agrees_far_out(self):
        # truncated algebraic expansion is the valid large-|z| description
        for alpha, z in [(1.25, -60.0), (1.25, -200.0), (1.5, -500.0)]:
            ref = ml_reference(alpha, 2.0, z)
            val, err = _asymptotic(alpha, 2.0, z)
            assert err <= 1e-6 * abs(val)
            assert val == pytest.approx(ref, rel=1e-6)
            assert fp.mittag_leffler(alpha, 2.0, z) == pytest.approx(ref, rel=1e-8)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            fp.mittag_leffler(1.5, 2.0, 0.5)
        with pytest.raises(ValueError):
            fp.mittag_leffler(0.0, 2.0, -1.0)
        with pytest.raises(ValueError):
            fp.mittag_leffler(2.5, 2.0, -1.0)
        with pytest.raises(ValueError):
            fp.mittag_leffler(1.5, 0.0, -1.0)


class TestTerminalModeValue:
    def test_zero_eigenvalue(self):
        # E_{a,2}(0) = 1, so the mode is T * coeff
        assert fp.terminal_mode_value(1.5, 0.0, 0.1, 3.0) == pytest.approx(0.3, rel=1e-14)

    def test_zero_coefficient(self):
        assert fp.terminal_mode_value(1.5, 7.0, 0.1, 0.0) == 0.0

    def test_small_argument_series_value(self):
        # 0.1 * E_{1.5,2}(-0.1^1.5); reference frozen from the dd oracle
        val = fp.terminal_mode_value(1.5, 1.0, 0.1, 1.0)
        assert val == pytest.approx(0.1 * 0.9905262284002697, rel=1e-10)

    def test_strictly_decreasing_in_mu(self):
        # E_{1.5,2}(-x) stays positive over this range, so u_m(T) decays in mu
        mus = np.linspace(0.0, 1000.0, 60)
        vals = [fp.terminal_mode_value(1.5, float(m), 0.1, 1.0) for m in mus]
        assert all(a > b > 0.0 for a, b in zip(vals, vals[1:]))

    def test_validation(self):
        with pytest.raises(ValueError):
            fp.terminal_mode_value(1.5, -1.0, 0.1, 1.0)
        with pytest.raises(ValueError):
            fp.terminal_mode_value(1.5, 1.0, 0.0, 1.0)


class TestModeRatio:
    def test_zero_eigenvalue_is_one_over_T(self):
        assert fp.mode_ratio(1.5, 0.0, 0.25) == pytest.approx(4.0, rel=1e-12)

    def test_quadratic_growth_in_mode_index(self):
        # 1D eigenvalues mu = m^2: the amplification grows like m^2
        m = np.arange(1, 41)
        ratios = np.array([fp.mode_ratio(1.5, float(mm) ** 2, 1.0) for mm in m])
        slope = np.polyfit(np.log(m), np.log(np.abs(ratios)), 1)[0]
        assert 1.8 <= slope <= 2.2

    def test_vanishing_denominator_raises(self):
        # E_{2,2}(-pi^2) = sin(pi)/pi = 0: surfaced, not masked
        with pytest.raises(ZeroDivisionError):
            fp.mode_ratio(2.0, math.pi**2, 1.0)


class TestSpectralField:
    def test_single_sine_mode(self):
        sol = fp.interval_solution(1.5, 0.1, [1.0])
        x = np.linspace(0.0, math.pi, 7)
        expected = 0.1 * 0.9905262284002697 * np.sin(x)
        np.testing.assert_allclose(fp.spectral_terminal_field(sol, x), expected, rtol=1e-9, atol=1e-18)

    def test_single_tensor_mode(self):
        # a1 = sin(2 pi x) sin(2 pi y) has one mode with mu = 8 pi^2
        sol = fp.square_solution(1.25, 0.1, {(2, 2): 1.0})
        assert sol.modes[0][1] == pytest.approx(8 * math.pi**2, rel=1e-15)
        pts = np.array([[0.125, 0.125], [0.3, 0.7], [0.5, 0.5]])
        tv = fp.terminal_mode_value(1.25, 8 * math.pi**2, 0.1, 1.0)
        expected = tv * np.sin(2 * math.pi * pts[:, 0]) * np.sin(2 * math.pi * pts[:, 1])
        np.testing.assert_allclose(fp.spectral_terminal_field(sol, pts), expected, rtol=1e-12, atol=1e-18)

    def test_zero_coefficients(self):
        sol = fp.interval_solution(1.5, 0.1, [0.0, 0.0, 0.0])
        np.testing.assert_array_equal(fp.spectral_terminal_field(sol, np.linspace(0, 3, 5)), 0.0)

    def test_empty_points(self):
        sol = fp.interval_solution(1.5, 0.1, [1.0])
        assert fp.spectral_terminal_field(sol, []).size == 0

    def test_linear_in_coefficients(self):
        rng = np.random.default_rng(3)
        c1 = rng.standard_normal(6)
        c2 = rng.standard_normal(6)
        x = rng.uniform(0, math.pi, 9)
        f = lambda c: fp.spectral_terminal_field(fp.interval_solution(1.5, 0.1, c), x)
        np.testing.assert_allclose(f(c1 + c2), f(c1) + f(c2), rtol=1e-12, atol=1e-15)

    def test_mode_validation(self):
        with pytest.raises(ValueError):
            fp.interval_solution(1.5, 0.1, [float("nan")])
        with pytest.raises(ValueError):
            fp.SpectralSolution(1.5, 0.1, "disk", ())
