"""
Tests for the coupling map C(sigma), lambda_star and sigma(lambda).
"""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from coupling import (
    AdmissibilityError,
    ModelParams,
    PoleError,
    audit_branch,
    branch_end,
    c_of_sigma,
    conjectural_p_range,
    lambda_star,
    sigma_closed_form,
    sigma_from_lambda,
)
from utils import DomainError


class TestCouplingMap:
    """C(sigma) on its domain."""

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 2.0])
    def test_symmetric_about_branch_point(self, alpha):
        """C((alpha-1)/2 + u) = C((alpha-1)/2 - u)."""
        centre = (alpha - 1.0) / 2.0
        for u in (0.05, 0.1, 0.2):
            assert c_of_sigma(centre + u, alpha) == pytest.approx(c_of_sigma(centre - u, alpha), rel=1e-11, abs=1e-12)

    @pytest.mark.parametrize("sigma", [0.0, 0.5, 0.75, 1.0, 1.7, 2.0, 2.5, 4.0])
    def test_alpha_two_closed_form(self, sigma):
        """For alpha = 2 the map is sigma(sigma - 1), removable poles included."""
        assert c_of_sigma(sigma, 2.0, strict=False) == pytest.approx(sigma * (sigma - 1.0), abs=1e-11)

    def test_strict_pole(self):
        """Default evaluation refuses the removable poles at sigma = 2 and 3."""
        with pytest.raises(PoleError):
            c_of_sigma(3.0, 2.0, strict=True)
        with pytest.raises(PoleError):
            c_of_sigma(2.0, 2.0)
        assert c_of_sigma(2.0, 2.0, strict=False) == pytest.approx(2.0)

    def test_domain(self):
        """sigma <= -1, sigma >= alpha (alpha < 2) and alpha outside (0, 2] are rejected."""
        with pytest.raises(DomainError):
            c_of_sigma(-1.0, 1.5)
        with pytest.raises(DomainError):
            c_of_sigma(1.5, 1.5)
        with pytest.raises(DomainError):
            c_of_sigma(0.5, 2.5)

    def test_zero_at_sigma_zero(self):
        """C(0) = 0 for alpha < 2: lambda = 0 corresponds to sigma = alpha - 1 or 0."""
        for alpha in (0.5, 1.5):
            assert c_of_sigma(0.0, alpha) == pytest.approx(0.0, abs=1e-13)
            assert c_of_sigma(alpha - 1.0, alpha) == pytest.approx(0.0, abs=1e-13)

    def test_branch_end(self):
        """M = alpha below 2 and infinity at 2."""
        assert branch_end(1.5) == 1.5
        assert math.isinf(branch_end(2.0))


class TestCriticalCoupling:
    """lambda_star(alpha) = C((alpha-1)/2)."""

    def test_classical_value(self):
        """lambda_star(2) = -1/4."""
        assert lambda_star(2.0) == pytest.approx(-0.25, abs=1e-12)

    def test_alpha_one(self):
        """lambda_star(1) = 0."""
        assert lambda_star(1.0) == pytest.approx(0.0, abs=1e-12)

    def test_fractional_value(self):
        """lambda_star(1.5) is about -0.062."""
        assert lambda_star(1.5) < 0.0
        assert lambda_star(1.5) == pytest.approx(-0.062, abs=5e-3)


class TestSigmaOfLambda:
    """Inversion of the coupling map on the increasing branch."""

    def test_alpha_two_examples(self):
        """sigma(2) = 2 and sigma(-1/4) = 1/2 at alpha = 2."""
        assert sigma_from_lambda(2.0, 2.0) == pytest.approx(2.0, abs=1e-14)
        assert sigma_from_lambda(-0.25, 2.0) == pytest.approx(0.5, abs=1e-12)
        assert sigma_from_lambda(0.0, 2.0) == pytest.approx(1.0, abs=1e-14)

    def test_below_critical(self):
        """lambda = -0.3 at alpha = 2 is inadmissible and names lambda_star."""
        with pytest.raises(AdmissibilityError) as excinfo:
            sigma_from_lambda(-0.3, 2.0)
        assert excinfo.value.lambda_star == pytest.approx(-0.25, abs=1e-12)
        assert "lambda_star" in str(excinfo.value)

    def test_lambda_zero_fractional(self):
        """lambda = 0 gives sigma = max(0, alpha - 1) on the right branch."""
        assert sigma_from_lambda(0.0, 1.5) == pytest.approx(0.5, abs=1e-10)
        assert sigma_from_lambda(0.0, 0.5) == pytest.approx(0.0, abs=1e-10)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 2.0])
    def test_residual(self, alpha):
        """C(sigma(lambda)) = lambda to 1e-10 over a coupling grid."""
        lam_star = lambda_star(alpha)
        for lam in np.linspace(lam_star, lam_star + 20.0, 21):
            sigma = sigma_from_lambda(float(lam), alpha)
            assert (alpha - 1.0) / 2.0 - 1e-12 <= sigma < branch_end(alpha)
            assert abs(c_of_sigma(sigma, alpha, strict=False) - lam) <= 1e-10

    def test_root_method_matches_closed_form(self):
        """The bracketed root agrees with the explicit alpha = 2 root."""
        for lam in (0.5, 2.0, 10.0):
            assert sigma_from_lambda(lam, 2.0, method="root") == pytest.approx(sigma_closed_form(lam), abs=1e-10)

    def test_monotone_in_lambda(self):
        """sigma increases with lambda."""
        values = [sigma_from_lambda(lam, 1.5) for lam in (-0.05, 0.0, 0.5, 2.0, 8.0)]
        assert all(b > a for a, b in zip(values, values[1:]))


class TestBranchAudit:
    """audit_branch records monotonicity and the alpha = 2 closed form."""

    def test_alpha_two(self):
        """C increases and matches sigma(sigma - 1)."""
        audit = audit_branch(2.0, samples=400)
        assert audit["increasing"] == 1.0
        assert audit["closed_form_deviation"] <= 1e-9

    def test_fractional(self):
        """C increases on [(alpha-1)/2, alpha) and grows toward the pole."""
        audit = audit_branch(1.5, samples=400)
        assert audit["increasing"] == 1.0
        assert audit["value_at_end"] > 10.0


class TestModelParams:
    """ModelParams validation and derived exponents."""

    def test_from_lambda(self):
        """sigma and M are filled in."""
        params = ModelParams.from_lambda(2.0, 2.0)
        assert params.sigma == pytest.approx(2.0)
        assert math.isinf(params.M)
        assert params.q == pytest.approx(1.0)
        assert params.r == 0.0
        assert not params.exploratory

    def test_negative_fractional_coupling(self):
        """alpha < 2 with lambda < 0 is exploratory and has r > 0 when sigma < 0."""
        params = ModelParams.from_sigma(0.5, -0.1)
        assert params.lam < 0.0
        assert params.exploratory
        assert params.q == pytest.approx(-0.1)
        assert params.r == pytest.approx(0.1)

    def test_critical_flag(self):
        """lambda = lambda_star is flagged critical."""
        assert ModelParams.from_lambda(2.0, -0.25).critical

    def test_inconsistent_sigma(self):
        """A sigma that does not solve C(sigma) = lambda is rejected."""
        with pytest.raises(ValidationError):
            ModelParams(alpha=2.0, lam=2.0, sigma=1.5, M=math.inf)

    def test_alias(self):
        """The coupling is accepted under its public name."""
        params = ModelParams.model_validate({"alpha": 2.0, "lambda": 0.0, "sigma": 1.0, "M": math.inf})
        assert params.lam == 0.0
        assert params.summary() == {"alpha": 2.0, "lambda": 0.0, "sigma": 1.0, "d": 1}


class TestConjecturalRange:
    """Exponent range expected for negative coupling."""

    def test_critical_alpha_two(self):
        """sigma = -1/4 gives (4/3, 4)."""
        lo, hi = conjectural_p_range(-0.25)
        assert lo == pytest.approx(4.0 / 3.0)
        assert hi == pytest.approx(4.0)

    def test_nonnegative_sigma(self):
        """sigma >= 0 gives (1, inf)."""
        assert conjectural_p_range(0.5) == (1.0, math.inf)
