"""
Tests for the scalar special functions, against mpmath.
"""

import math

import mpmath
import pytest

from specfun import OverflowRangeError, bessel_i, bessel_ie, gamma, log_gamma, sinpi
from utils import DomainError


class TestSinPi:
    """sin(pi x) with exact zeros."""

    def test_integers_are_exact_zeros(self):
        """sinpi vanishes exactly at integers."""
        for k in (-3, -1, 0, 1, 2, 7):
            assert sinpi(float(k)) == 0.0

    def test_half_integers(self):
        """sinpi(1/2) = 1 and sinpi(-1/2) = -1 exactly."""
        assert sinpi(0.5) == 1.0
        assert sinpi(-0.5) == -1.0
        assert sinpi(1.5) == -1.0

    def test_generic_values(self):
        """Agrees with math.sin(pi x) away from the special points."""
        for x in (0.1, 0.3, 0.77, -1.2, 2.25):
            assert sinpi(x) == pytest.approx(math.sin(math.pi * x), abs=1e-15)


class TestGamma:
    """Gamma and log-Gamma on the positive axis."""

    def test_factorials(self):
        """Gamma(5) = 24 and Gamma(1) = 1."""
        assert gamma(5.0) == pytest.approx(24.0, rel=1e-13)
        assert gamma(1.0) == pytest.approx(1.0, rel=1e-13)

    def test_half(self):
        """Gamma(1/2) = sqrt(pi)."""
        assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-13)

    @pytest.mark.parametrize("x", [0.01, 0.3, 0.75, 1.5, 2.5, 7.3, 30.0, 150.0])
    def test_against_mpmath(self, x):
        """Relative error below 1e-12 on a spread of arguments."""
        assert gamma(x) == pytest.approx(float(mpmath.gamma(x)), rel=1e-12)

    @pytest.mark.parametrize("x", [0.01, 0.5, 3.0, 50.0, 500.0])
    def test_log_gamma_against_mpmath(self, x):
        """log_gamma matches mpmath.loggamma."""
        assert log_gamma(x) == pytest.approx(float(mpmath.loggamma(x)), rel=1e-12, abs=1e-13)

    def test_nonpositive_argument(self):
        """Gamma is evaluated on x > 0 only."""
        with pytest.raises(DomainError):
            gamma(0.0)
        with pytest.raises(DomainError):
            gamma(-1.5)
        with pytest.raises(DomainError):
            log_gamma(0.0)

    def test_overflow(self):
        """Gamma(200) does not fit in a double."""
        with pytest.raises(OverflowRangeError):
            gamma(200.0)


class TestBessel:
    """Scaled and unscaled modified Bessel functions I_nu."""

    @pytest.mark.parametrize("nu", [-0.5, 0.0, 0.25, 1.5, 3.0])
    @pytest.mark.parametrize("z", [0.1, 1.0, 5.0, 19.9, 25.0, 80.0, 300.0])
    def test_scaled_against_mpmath(self, nu, z):
        """e^{-z} I_nu(z) to relative 1e-10 across the series/asymptotic crossover."""
        expected = float(mpmath.exp(-z) * mpmath.besseli(nu, z))
        assert bessel_ie(nu, z) == pytest.approx(expected, rel=1e-10)

    @pytest.mark.parametrize("nu", [0.0, 0.5, 1.0, 3.0])
    @pytest.mark.parametrize("z", [12.0, 14.0, 16.0, 20.0, 20.5])
    def test_double_precision_near_the_crossover(self, nu, z):
        """Between z = 12 and just past the switch the scaled value is good to 1e-13."""
        expected = float(mpmath.exp(-z) * mpmath.besseli(nu, z))
        assert bessel_ie(nu, z) == pytest.approx(expected, rel=1e-13)

    @pytest.mark.parametrize("z", [0.2, 1.0, 4.0, 12.0])
    def test_half_order_closed_form(self, z):
        """I_{1/2}(z) = sqrt(2/(pi z)) sinh z."""
        assert bessel_i(0.5, z) == pytest.approx(math.sqrt(2.0 / (math.pi * z)) * math.sinh(z), rel=1e-11)

    def test_at_zero(self):
        """I_0(0) = 1 and I_nu(0) = 0 for nu > 0."""
        assert bessel_ie(0.0, 0.0) == 1.0
        assert bessel_ie(1.5, 0.0) == 0.0

    def test_domain(self):
        """nu < -1/2 and z < 0 are rejected."""
        with pytest.raises(DomainError):
            bessel_ie(-1.0, 1.0)
        with pytest.raises(DomainError):
            bessel_ie(0.5, -1.0)

    def test_unscaled_overflow(self):
        """bessel_i refuses arguments whose value overflows."""
        with pytest.raises(OverflowRangeError):
            bessel_i(0.0, 800.0)
        assert math.isfinite(bessel_ie(0.0, 800.0))
