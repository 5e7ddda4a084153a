"""
Tests for the spectral calculus: heat kernels, fractional powers and the
semigroup reports, against the closed-form alpha = 2 kernels.
"""

import math

import numpy as np
import pytest

from semigroup import (
    CoverageError,
    LogQuadrature,
    SectorError,
    SpectralDecomp,
    SpectralFloorError,
    SweepWindowError,
    balakrishnan_power,
    bessel_heat_kernel,
    cauchy_ptk_kernel,
    check_window,
    compact_bump,
    complex_heat,
    dirichlet_images_kernel,
    dyadic_times,
    frac_power,
    heat_kernel,
    power_values,
    ptk_kernel,
    random_suite,
    reproducing_check,
    semigroup_decay_report,
    semigroup_law_defect,
    standard_suite,
    trusted_window,
)
from utils import DomainError


def nearest(grid, x):
    return int(np.argmin(np.abs(grid.nodes - x)))


class TestDecomposition:
    """W-orthonormal eigendecomposition of the assembled operator."""

    def test_diagnostics(self, small_decomp):
        """Residual and orthonormality are within tolerance and the spectrum is ascending."""
        diagnostics = small_decomp.diagnostics
        assert diagnostics["residual"] <= 1e-9
        assert diagnostics["orthonormality_defect"] <= 1e-10
        assert np.all(np.diff(small_decomp.eigenvalues) >= 0.0)
        assert small_decomp.mu_min > 0.0

    def test_eigenvector_synthesis(self, small_decomp):
        """coefficients and synthesize are inverse to each other."""
        f = compact_bump(small_decomp.grid)
        back = small_decomp.synthesize(small_decomp.coefficients(f))
        assert np.allclose(back, f, atol=1e-9)


class TestClosedFormKernels:
    """Discrete heat kernels against the images and Bessel formulas."""

    def test_images_value(self):
        """p_1(1, 1) = (4 pi)^{-1/2} (1 - e^{-1}), about 0.178318."""
        exact = (1.0 - math.exp(-1.0)) / math.sqrt(4.0 * math.pi)
        assert float(dirichlet_images_kernel(1.0, 1.0, 1.0)) == pytest.approx(exact, rel=1e-12)

    def test_bessel_reduces_to_images(self):
        """sigma = 1 (lambda = 0) turns the Bessel kernel into the images kernel."""
        x = np.array([0.3, 1.0, 2.0, 5.0])
        y = np.array([0.7, 1.0, 3.0, 4.0])
        for t in (0.25, 1.0, 4.0):
            assert np.allclose(bessel_heat_kernel(x, y, t, 1.0), dirichlet_images_kernel(x, y, t), rtol=1e-12)

    @pytest.mark.slow
    @pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
    def test_lambda_zero_matches_images(self, heat_decomp, t):
        """alpha = 2, lambda = 0: discrete kernel within 2% of the images formula."""
        grid = heat_decomp.grid
        kernel = heat_kernel(heat_decomp, t)
        for x, y in ((1.0, 1.0), (1.0, 2.0), (2.0, 3.0)):
            i, j = nearest(grid, x), nearest(grid, y)
            exact = float(dirichlet_images_kernel(grid.nodes[i], grid.nodes[j], t))
            assert kernel[i, j] == pytest.approx(exact, rel=0.02)

    @pytest.mark.slow
    @pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
    def test_lambda_two_matches_bessel(self, bessel_decomp, t):
        """alpha = 2, lambda = 2 (sigma = 2): discrete kernel within 3% of the Bessel formula."""
        grid = bessel_decomp.grid
        kernel = heat_kernel(bessel_decomp, t)
        for x, y in ((1.0, 1.0), (2.0, 2.0), (2.0, 3.0)):
            i, j = nearest(grid, x), nearest(grid, y)
            exact = float(bessel_heat_kernel(grid.nodes[i], grid.nodes[j], t, 2.0))
            assert kernel[i, j] == pytest.approx(exact, rel=0.03)

    def test_row_mass_at_most_one(self, small_decomp):
        """sum_j p_t(x_i, x_j) w_j <= 1 for lambda >= 0 and the kernel is nonnegative."""
        for t in (0.05, 0.5, 5.0):
            kernel = heat_kernel(small_decomp, t)
            mass = kernel @ small_decomp.weights
            assert mass.max() <= 1.0 + 1e-8
            assert kernel.min() >= -1e-10 * kernel.max()

    def test_symmetric(self, small_decomp):
        """Heat kernels are symmetric."""
        kernel = heat_kernel(small_decomp, 0.5)
        assert np.allclose(kernel, kernel.T, atol=1e-12 * np.abs(kernel).max())

    def test_nonpositive_time(self, small_decomp):
        """t <= 0 is rejected."""
        with pytest.raises(DomainError):
            heat_kernel(small_decomp, 0.0)
        with pytest.raises(DomainError):
            ptk_kernel(small_decomp, 1.0, 0)


class TestComplexTime:
    """e^{-zL} in the sector |arg z| <= pi/4."""

    def test_real_axis(self, small_decomp):
        """complex_heat at real z equals heat_kernel."""
        real = heat_kernel(small_decomp, 0.7)
        complex_kernel = complex_heat(small_decomp, 0.7 + 0.0j)
        assert np.allclose(complex_kernel.real, real, atol=1e-12 * np.abs(real).max())
        assert np.abs(complex_kernel.imag).max() <= 1e-12 * np.abs(real).max()

    def test_outside_sector(self, small_decomp):
        """arg z > pi/4 and Re z <= 0 are rejected."""
        with pytest.raises(SectorError):
            complex_heat(small_decomp, 1.0 + 2.0j)
        with pytest.raises(SectorError):
            complex_heat(small_decomp, -1.0 + 0.1j)

    def test_cauchy_schwarz_bound(self, small_decomp):
        """|p_z(x, y)| <= sqrt(p_{Re z}(x, x) p_{Re z}(y, y))."""
        z = 1.0 * complex(math.cos(0.7), math.sin(0.7))
        kernel = np.abs(complex_heat(small_decomp, z))
        diagonal = np.diag(heat_kernel(small_decomp, z.real))
        bound = np.sqrt(np.outer(diagonal, diagonal))
        assert np.all(kernel <= bound * (1.0 + 1e-9) + 1e-12)


class TestPtk:
    """Kernels of (tL)^k e^{-tL}."""

    @pytest.mark.parametrize("k", [1, 2])
    def test_cauchy_formula_matches_spectral(self, small_decomp, k):
        """The contour-integral route reproduces the spectral kernel."""
        direct = ptk_kernel(small_decomp, 1.0, k)
        contour = cauchy_ptk_kernel(small_decomp, 1.0, k)
        assert np.allclose(contour, direct, atol=1e-9 * np.abs(direct).max())

    def test_eta_outside_sector(self, small_decomp):
        """The contour must stay inside the sector."""
        with pytest.raises(DomainError):
            cauchy_ptk_kernel(small_decomp, 1.0, 1, eta=0.9)


class TestFractionalPowers:
    """L^{s/2}, the Riesz potential and the Balakrishnan formula."""

    @pytest.mark.parametrize("s", [0.5, 1.0, 1.5])
    def test_round_trip(self, small_decomp, s):
        """L^{s/2} L^{-s/2} f = f."""
        f = compact_bump(small_decomp.grid)
        back = frac_power(small_decomp, s, "+").apply(frac_power(small_decomp, s, "-").apply(f))
        assert np.linalg.norm(back - f) <= 1e-6 * np.linalg.norm(f)

    def test_s_two_is_the_operator(self, small_decomp):
        """L^{2/2} equals the assembled operator W^{-1} A."""
        power = frac_power(small_decomp, 2.0, "+").operator
        operator = small_decomp.assembly.operator
        assert np.abs(power - operator).max() <= 1e-7 * np.abs(operator).max()

    @pytest.mark.parametrize("gamma_", [0.25, 0.5, 0.75])
    def test_balakrishnan_matches_spectral_power(self, small_decomp, gamma_):
        """The time-integral representation agrees with mu^gamma."""
        f = compact_bump(small_decomp.grid)
        expected = frac_power(small_decomp, 2.0 * gamma_, "+").apply(f)
        value = balakrishnan_power(small_decomp, gamma_, f)
        assert np.linalg.norm(value - expected) <= 1e-3 * np.linalg.norm(expected)

    def test_bad_sign(self, small_decomp):
        """sign must be '+' or '-'."""
        with pytest.raises(DomainError):
            frac_power(small_decomp, 1.0, "*")

    def test_spectral_floor(self):
        """Negative powers need the first eigenvalue above the floor."""
        decomp = SpectralDecomp(eigenvalues=np.array([0.0, 1.0]), eigenvectors=np.eye(2), assembly=None)
        with pytest.raises(SpectralFloorError):
            power_values(decomp, -0.5)
        assert np.allclose(power_values(decomp, 0.5), [0.0, 1.0])


class TestQuadratureAndWindows:
    """Time windows and the log-t quadrature."""

    def test_trusted_window(self, heat_decomp):
        """t^{1/2} in [3 h, x_max / 8] at alpha = 2."""
        lo, hi = trusted_window(heat_decomp.grid, 2.0)
        assert lo == pytest.approx((3.0 * 0.04) ** 2)
        assert hi == pytest.approx(25.0)
        times = dyadic_times(heat_decomp.grid, 2.0)
        assert times[0] == pytest.approx(2.0**-6)
        assert times[-1] == pytest.approx(16.0)

    def test_outside_window(self, heat_decomp):
        """Times beyond x_max/8 are refused."""
        with pytest.raises(SweepWindowError):
            check_window([100.0], heat_decomp.grid, 2.0)

    def test_coverage(self, small_decomp):
        """The default rule covers the spectrum, a narrow one does not."""
        LogQuadrature.covering(small_decomp).check_coverage(small_decomp)
        with pytest.raises(CoverageError):
            LogQuadrature(t_min=1.0, t_max=10.0).check_coverage(small_decomp)

    def test_nodes_and_weights(self):
        """Trapezoid weights integrate dt/t exactly."""
        quad = LogQuadrature(t_min=1e-3, t_max=10.0)
        times, weights = quad.nodes_and_weights()
        assert times[0] == pytest.approx(1e-3)
        assert times[-1] == pytest.approx(10.0)
        assert weights.sum() == pytest.approx(math.log(1e4))
        assert times.size >= 4 * 40


class TestSemigroupReports:
    """Decay, semigroup law and reproducing formula."""

    def setup_method(self):
        """Sup of (t mu)^gamma e^{-t mu} over mu."""
        self.decay_bound = {1.0: math.exp(-1.0), 0.5: (2.0 * math.e) ** -0.5}

    @pytest.mark.parametrize("gamma_", [1.0, 0.5])
    def test_decay_bound_on_l2(self, small_decomp, gamma_):
        """p = 2: t^gamma ||L^gamma e^{-tL} f|| <= sup (t mu)^gamma e^{-t mu} ||f||."""
        suite = standard_suite(small_decomp.grid, small_decomp.params.sigma)
        report = semigroup_decay_report(small_decomp, gamma_, 2.0, suite)
        assert report.status == "PASS"
        assert report.max_ratio <= self.decay_bound[gamma_] + 1e-6
        assert report.metrics["difference_constant"] is not None
        assert report.sweep["suite_size"] == 13

    def test_decay_on_random_suite(self, small_decomp):
        """Random spectral mixtures obey the same bound."""
        suite = random_suite(small_decomp, size=8)
        report = semigroup_decay_report(small_decomp, 1.0, 2.0, suite)
        assert report.max_ratio <= self.decay_bound[1.0] + 1e-6

    def test_semigroup_law(self, small_decomp):
        """p_t composed with p_s is p_{t+s}."""
        assert semigroup_law_defect(small_decomp, 0.3, 0.7) <= 1e-8

    def test_reproducing(self, heat_decomp):
        """(I - e^{-tL}) f -> 0 as t -> 0 and e^{-tL} f -> 0 as t -> inf, monotonically."""
        small, large = reproducing_check(heat_decomp, 2.0, compact_bump(heat_decomp.grid))
        assert small.monotone and small.reached_target
        assert large.monotone and large.reached_target
        assert small.status == "PASS"
        assert large.trusted_until == pytest.approx(25.0)

    def test_reproducing_eigenvector(self, small_decomp):
        """On an eigenvector the small-time defect is 1 - e^{-t mu} exactly."""
        v = small_decomp.eigenvectors[:, 0]
        small, _ = reproducing_check(small_decomp, 2.0, v)
        mu = small_decomp.eigenvalues[0]
        for t, value in zip(small.parameters, small.values):
            assert value == pytest.approx(-math.expm1(-t * mu), rel=1e-6, abs=1e-9)
