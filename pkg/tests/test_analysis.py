"""
Tests for the square functions, admissible exponent ranges, Schur tests
and the norm-ratio reports.
"""

import math

import mpmath
import numpy as np
import pytest

from analysis import (
    DivergenceError,
    EmptyWindowError,
    GradingError,
    admissible_range,
    divergence_probe,
    generalized_hardy_report,
    hardy_admissible,
    lp_norm,
    norm_equivalence_report,
    reversed_hardy_report,
    riesz_transform_report,
    schur_case_report,
    schur_marginal_report,
    schur_scalar_integral,
    sf_equivalence_report,
    square_function,
    square_function_constant,
    weight_exponent_select,
    weighted_square_function,
    weighted_square_function_constant,
)
from conftest import build_decomp
from coupling import ModelParams
from halfline import Grading, make_grid
from reports import RatioReport
from semigroup import random_suite, standard_suite
from utils import PreconditionError, RangeError
from verification import weight_window_check, window_oracle


def mp_schur_integral(beta, p, r, alpha):
    """
    The same integral by mpmath at 30 digits. The endpoint powers at 0 and
    at infinity (mapped to 0 by u = 1/t) are removed by substituting u = v^m.
    """
    with mpmath.workdps(30):
        a = mpmath.mpf(beta) / p + r
        alpha = mpmath.mpf(alpha)
        r = mpmath.mpf(r)
        half = mpmath.mpf(1) / 2

        # t^{-a} (1 - t)^{-1-alpha} on (0, 1/2), t = v^m with m = 1/(1 - a)
        m_near = 1 / (1 - a)
        near = mpmath.quad(lambda v: m_near * (1 - v**m_near) ** (-1 - alpha), [0, half**(1 / m_near)])
        middle = mpmath.quad(lambda t: t ** (-a - 1 - alpha), [half, 1]) + mpmath.quad(
            lambda t: t ** (alpha + 2 * r - a), [1, 2]
        )
        # u^{a-2r-1} (1 - u)^{-1-alpha} on (0, 1/2), u = v^m with m = 1/(a - 2r)
        m_far = 1 / (a - 2 * r)
        far = mpmath.quad(lambda v: m_far * (1 - v**m_far) ** (-1 - alpha), [0, half**(1 / m_far)])
        return float(near + middle + far)


class TestSquareFunctions:
    """L^2 identities of the vertical square functions."""

    def test_constants(self):
        """c(1/2) = 1/2 and the weighted constant at s = 1 is 1/2."""
        assert square_function_constant(0.5) == pytest.approx(0.5, rel=1e-12)
        assert square_function_constant(0.25) == pytest.approx(math.sqrt(math.pi) / math.sqrt(2.0), rel=1e-12)
        assert weighted_square_function_constant(1.0) == pytest.approx(0.5, rel=1e-12)

    def test_square_function_on_eigenvector(self, small_decomp):
        """S_{L,gamma} v = sqrt(c(gamma)) |v| for an eigenvector v."""
        v = small_decomp.eigenvectors[:, 5]
        for gamma_ in (0.25, 0.5, 0.75):
            result = square_function(small_decomp, v, gamma_)
            assert np.allclose(result, math.sqrt(square_function_constant(gamma_)) * np.abs(v), rtol=1e-3, atol=1e-9)

    def test_weighted_square_function_on_eigenvector(self, small_decomp):
        """The weighted square function of v_k is sqrt(C(s) mu_k^s) |v_k|."""
        k, s = 5, 1.0
        v = small_decomp.eigenvectors[:, k]
        mu = small_decomp.eigenvalues[k]
        result = weighted_square_function(small_decomp, v, s)
        expected = math.sqrt(weighted_square_function_constant(s) * mu**s) * np.abs(v)
        assert np.allclose(result, expected, rtol=1e-3, atol=1e-9)

    def test_l2_ratio_is_constant(self, small_decomp):
        """For p = 2 the norm ratio equals sqrt(c(gamma)) for every function."""
        report = sf_equivalence_report(small_decomp, 2.0, 0.5, random_suite(small_decomp, size=6))
        assert report.min_ratio == pytest.approx(math.sqrt(0.5), rel=1e-3)
        assert report.max_ratio == pytest.approx(math.sqrt(0.5), rel=1e-3)
        assert report.metrics["l2_constant"] == pytest.approx(math.sqrt(0.5))

    def test_scaling_invariance(self, small_decomp):
        """Multiplying f by 7 leaves the norm ratio unchanged."""
        f = standard_suite(small_decomp.grid, small_decomp.params.sigma)["x_exp"]
        one = sf_equivalence_report(small_decomp, 3.0, 0.5, {"f": f})
        seven = sf_equivalence_report(small_decomp, 3.0, 0.5, {"f": 7.0 * f})
        assert seven.max_ratio == pytest.approx(one.max_ratio, rel=1e-10)


class TestAdmissibleRanges:
    """Exponent intervals of the forward, backward and reversed statements."""

    def test_positive_coupling(self):
        """alpha = 2, lambda = 2, s = 1: forward range is (1, inf)."""
        params = ModelParams.from_lambda(2.0, 2.0)
        forward = admissible_range(params, 1.0, "forward")
        assert forward.p_lo == pytest.approx(1.0)
        assert math.isinf(forward.p_hi)

    def test_negative_coupling(self):
        """lambda = -3/16 (sigma = 3/4), s = 1: forward and equivalence (1, 4), backward unbounded."""
        params = ModelParams.from_lambda(2.0, -3.0 / 16.0)
        assert params.sigma == pytest.approx(0.75)
        for direction in ("forward", "equivalence"):
            interval = admissible_range(params, 1.0, direction)
            assert interval.p_lo == pytest.approx(1.0)
            assert interval.p_hi == pytest.approx(4.0)
        assert math.isinf(admissible_range(params, 1.0, "backward").p_hi)

    def test_hardy_predicate(self):
        """(alpha s/2 - sigma)_+ < 1/p < 1 + sigma ^ 0."""
        assert hardy_admissible(ModelParams.from_lambda(2.0, 0.0), 1.0, 2.0)
        assert not hardy_admissible(ModelParams.from_lambda(2.0, -3.0 / 16.0), 1.9, 8.0)

    def test_require_names_condition(self):
        """p outside the range raises RangeError with the violated inequality."""
        interval = admissible_range(ModelParams.from_lambda(2.0, -3.0 / 16.0), 1.0, "forward")
        interval.require(2.0)
        with pytest.raises(RangeError) as excinfo:
            interval.require(5.0)
        assert "alpha s/2 - sigma" in excinfo.value.condition

    def test_lp_norm(self):
        """lp_norm is the weighted grid norm."""
        grid = make_grid(40, 4.0)
        f = np.exp(-grid.nodes)
        assert lp_norm(f, grid, 3.0) == pytest.approx(float(np.sum(grid.weights * f**3)) ** (1.0 / 3.0))
        assert lp_norm(-f, grid, math.inf) == pytest.approx(f.max())

    def test_reversed_range(self):
        """r = -sigma for sigma < 0 gives (1/(1-r), 1/r)."""
        interval = admissible_range(ModelParams.from_sigma(0.5, -0.1), 1.0, "reversed")
        assert interval.p_lo == pytest.approx(1.0 / 0.9)
        assert interval.p_hi == pytest.approx(10.0)


# (alpha, lambda, sigma, s, p, hardy admissible, upper end of the hardy range, (beta, gamma) or None when empty)
ADMISSIBILITY_TABLE = [
    (2.0, 2.0, 2.0, 1.0, 2.0, True, math.inf, (1.0, 5.0)),
    (2.0, 0.0, 1.0, 1.5, 3.0, False, 2.0, None),
    (2.0, 0.0, 1.0, 1.5, 1.5, True, 2.0, None),
    (2.0, -0.1875, 0.75, 1.0, 2.0, True, 4.0, (1.0, 2.5)),
    (2.0, -0.1875, 0.75, 1.0, 5.0, False, 4.0, None),
    (2.0, 0.75, 1.5, 2.0, 4.0, False, 2.0, None),
    (2.0, -0.25, 0.5, 0.5, 3.0, True, math.inf, (0.75, 2.625)),
    (1.0, 1.0 / math.pi, 0.5, 0.5, 2.0, True, math.inf, (1.0, 2.0)),
    (1.0, (1.0 - math.pi / 4.0) / math.pi, 0.25, 1.5, 1.8, True, 2.0, (1.0125, 1.40625)),
    (1.0, (1.0 - math.pi / 4.0) / math.pi, 0.25, 1.5, 3.0, False, 2.0, None),
    (1.5, 0.0, 0.5, 1.0, 2.0, True, 4.0, (1.0, 2.0)),
    (0.5, 0.0, 0.0, 1.5, 4.0, False, 8.0 / 3.0, None),
]


class TestAdmissibilityTable:
    """Predicates and weight windows on a pinned table of (alpha, lambda, s, p)."""

    @pytest.mark.parametrize("alpha,lam,sigma,s,p,hardy,p_hi,windows", ADMISSIBILITY_TABLE)
    def test_sigma(self, alpha, lam, sigma, s, p, hardy, p_hi, windows):
        """The table's sigma is the boundary exponent of the coupling."""
        assert ModelParams.from_lambda(alpha, lam).sigma == pytest.approx(sigma, abs=1e-9)

    @pytest.mark.parametrize("alpha,lam,sigma,s,p,hardy,p_hi,windows", ADMISSIBILITY_TABLE)
    def test_hardy_predicate(self, alpha, lam, sigma, s, p, hardy, p_hi, windows):
        """(alpha s/2 - sigma)_+ < 1/p < 1 + min(sigma, 0), written out."""
        params = ModelParams.from_lambda(alpha, lam)
        assert hardy_admissible(params, s, p) is hardy
        assert (max(alpha * s / 2.0 - sigma, 0.0) < 1.0 / p < 1.0 + min(sigma, 0.0)) is hardy
        span = admissible_range(params, s, "hardy")
        assert span.p_lo == 1.0
        assert span.p_hi == pytest.approx(p_hi, rel=1e-9)

    @pytest.mark.parametrize("alpha,lam,sigma,s,p,hardy,p_hi,windows", ADMISSIBILITY_TABLE)
    def test_weight_windows(self, alpha, lam, sigma, s, p, hardy, p_hi, windows):
        """Window midpoints match the hand-expanded intervals; empty windows raise."""
        params = ModelParams.from_lambda(alpha, lam)
        if windows is None:
            with pytest.raises(EmptyWindowError):
                weight_exponent_select(p, s, params.sigma, alpha)
        else:
            beta, gamma_ = weight_exponent_select(p, s, params.sigma, alpha)
            assert beta == pytest.approx(windows[0], rel=1e-9)
            assert gamma_ == pytest.approx(windows[1], rel=1e-9)

    @pytest.mark.parametrize("alpha,lam,sigma,s,p,hardy,p_hi,windows", ADMISSIBILITY_TABLE)
    def test_suite_oracle_agrees(self, alpha, lam, sigma, s, p, hardy, p_hi, windows):
        """The schur suite's window check passes on every row, empty rows included."""
        params = ModelParams.from_lambda(alpha, lam)
        check, runnable = weight_window_check(p, s, params, "weight windows")
        assert check.status == "PASS"
        assert runnable is (windows is not None)
        (b_lo, b_hi), (g_lo, g_hi) = window_oracle(p, s, params.sigma, alpha)
        if windows is not None:
            assert 0.5 * (b_lo + b_hi) == pytest.approx(windows[0], rel=1e-9)
            assert 0.5 * (g_lo + g_hi) == pytest.approx(windows[1], rel=1e-9)


class TestSchurScalars:
    """Scalar Schur integrals and weight-exponent windows."""

    @pytest.mark.parametrize("beta,p,r,alpha", [(1.0, 2.0, 0.0, 1.5), (1.0, 2.0, 0.25, 0.5), (0.8, 3.0, 0.1, 2.0)])
    def test_against_mpmath(self, beta, p, r, alpha):
        """The split quadrature agrees with mpmath."""
        assert schur_scalar_integral(beta, p, r, alpha) == pytest.approx(
            mp_schur_integral(beta, p, r, alpha), rel=1e-8
        )

    def test_divergence_conditions(self):
        """beta <= p r diverges at infinity; beta >= p(1 - r) at 0."""
        with pytest.raises(DivergenceError) as excinfo:
            schur_scalar_integral(0.5, 2.0, 0.25, 1.0)
        assert excinfo.value.condition == "p r < beta"
        assert math.isinf(excinfo.value.value)
        with pytest.raises(DivergenceError) as excinfo:
            schur_scalar_integral(1.5, 2.0, 0.25, 1.0)
        assert excinfo.value.condition == "beta < p (1 - r)"

    def test_marginal_report(self):
        """Discrete sums of the reduced kernel stay finite; beta is the window midpoint."""
        grid = make_grid(200, 20.0, Grading.boundary_layer(20.0))
        report = schur_marginal_report(grid, 0.1, 1.5, 2.0)
        assert report.finite
        assert report.min_ratio > 0.0
        assert report.sweep["beta"] == pytest.approx(1.0)
        assert report.metrics["row_integral"] > 0.0

    def test_weight_exponents(self):
        """alpha = 2, sigma = 1, s = 1, p = 2 selects (beta, gamma) = (1, 3)."""
        beta, gamma_ = weight_exponent_select(2.0, 1.0, 1.0, 2.0)
        assert beta == pytest.approx(1.0)
        assert gamma_ == pytest.approx(3.0)

    def test_empty_window(self):
        """A very negative sigma empties the beta window."""
        with pytest.raises(EmptyWindowError):
            weight_exponent_select(2.0, 1.0, -0.9, 2.0)


class TestSchurCases:
    """Weighted Schur sums on the four case regions."""

    def test_case_four_is_empty(self, small_decomp):
        """4 max(x, y) <= |x - y| never holds on the half-line."""
        report = schur_case_report(small_decomp, 2.0, 1.0, 4)
        assert report.status == "EMPTY-REGION"

    def test_near_diagonal_case_is_finite(self, small_decomp):
        """Case 1 sums are finite and positive."""
        report = schur_case_report(small_decomp, 2.0, 1.0, 1)
        assert report.finite
        assert report.min_ratio > 0.0
        assert report.sweep["beta"] == pytest.approx(1.0)
        assert report.sweep["gamma"] == pytest.approx(5.0)


class TestDivergenceProbe:
    """Growth under refinement decides EXPECTED-DIVERGENCE."""

    def test_growth(self):
        """Growth 1.5 is divergence, 1.1 is inconclusive."""
        coarse = RatioReport(name="probe", min_ratio=0.5, max_ratio=1.0)
        grown = divergence_probe(coarse, RatioReport(name="probe", min_ratio=0.5, max_ratio=1.5))
        assert grown.status == "EXPECTED-DIVERGENCE"
        assert grown.metrics["growth"] == pytest.approx(1.5)
        assert grown.refinement_drift == pytest.approx(0.5)
        flat = divergence_probe(coarse, RatioReport(name="probe", min_ratio=0.5, max_ratio=1.1))
        assert flat.status == "INCONCLUSIVE"


class TestNormRatioReports:
    """Reversed Hardy, generalized Hardy, norm equivalence and Riesz reports."""

    def setup_method(self):
        self.p = 2.0
        self.s = 1.0

    def test_reversed_identical_operators(self, small_pair):
        """lambda = 0 against itself: the difference vanishes and the triangle defect is zero."""
        free = small_pair[0]
        suite = standard_suite(free.grid, free.params.sigma)
        report = reversed_hardy_report(free, free, self.p, self.s, suite)
        assert report.max_ratio <= 1e-12
        assert report.metrics["triangle_defect"] <= 1e-10

    def test_reversed_needs_graded_grid(self):
        """alpha s/2 >= 1/p on a uniform grid raises GradingError."""
        decomp = build_decomp(2.0, 0.0, 64, 8.0)
        with pytest.raises(GradingError):
            reversed_hardy_report(decomp, decomp, self.p, self.s, {"f": np.ones(64)})

    def test_generalized_hardy(self, small_decomp):
        """Admissible (p, s) gives a finite PASS report."""
        suite = standard_suite(small_decomp.grid, small_decomp.params.sigma)
        report = generalized_hardy_report(small_decomp, self.p, self.s, suite)
        assert report.metrics["admissible"] is True
        assert report.status == "PASS"
        assert 0.0 < report.min_ratio <= report.max_ratio < math.inf

    def test_generalized_hardy_preconditions(self, small_decomp):
        """s above 2d/alpha is rejected."""
        with pytest.raises(PreconditionError):
            generalized_hardy_report(small_decomp, self.p, 1.5, {"f": np.ones(small_decomp.grid.n)})

    def test_norm_equivalence_identity(self, small_pair):
        """The same operator on both sides gives ratio 1."""
        free = small_pair[0]
        result = norm_equivalence_report(free, free, self.p, self.s, standard_suite(free.grid, 1.0))
        assert result.forward.min_ratio == pytest.approx(1.0, rel=1e-12)
        assert result.forward.max_ratio == pytest.approx(1.0, rel=1e-12)
        assert result.backward.max_ratio == pytest.approx(1.0, rel=1e-12)

    def test_norm_equivalence_product(self, small_pair):
        """sup forward times sup backward is at least 1."""
        free, coupled = small_pair
        result = norm_equivalence_report(free, coupled, self.p, self.s, standard_suite(free.grid, 2.0))
        assert result.forward.max_ratio * result.backward.max_ratio >= 1.0 - 1e-12

    def test_norm_equivalence_range(self, small_pair):
        """p outside the forward range raises RangeError."""
        grid = small_pair[0].grid
        coupled = build_decomp(2.0, -3.0 / 16.0, 200, 20.0, graded=True)
        with pytest.raises(RangeError):
            norm_equivalence_report(small_pair[0], coupled, 5.0, self.s, {"f": np.ones(grid.n)}, "forward")

    def test_riesz_identity(self, small_pair):
        """L_0^{s/2} L_0^{-s/2} is the identity."""
        free = small_pair[0]
        report = riesz_transform_report(free, free, self.p, self.s, standard_suite(free.grid, 1.0))
        assert report.min_ratio == pytest.approx(1.0, rel=1e-8)
        assert report.max_ratio == pytest.approx(1.0, rel=1e-8)
