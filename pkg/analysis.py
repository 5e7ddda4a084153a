"""
L^p norms, continuous square functions and the inequality reports built on
them: square-function equivalence, reversed and generalized Hardy
inequalities, Sobolev-norm equivalence, the Riesz transform and the
weighted Schur tests.

Norm reports record locations as (suite index, p, s) triples.
"""

import math
from typing import Callable, Dict, List, Literal, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import integrate

from coupling import ModelParams
from defaults import ANALYSIS, QUADRATURE, STATUS
from envelopes import GridMismatchError, schur_kernel
from halfline import Grid
from logger import event_logger
from reports import RatioReport
from semigroup import CoverageError, LogQuadrature, SpectralDecomp, frac_power, power_values
from specfun import gamma
from utils import DomainError, InputError, NumericalError, PreconditionError, RangeError

logger = event_logger(__name__)

__all__ = [
    "AdmissibleRange",
    "CoverageError",
    "LogQuadrature",
    "admissible_range",
    "hardy_admissible",
    "lp_norm",
    "square_function",
    "weighted_square_function",
    "sf_equivalence_report",
    "reversed_hardy_report",
    "generalized_hardy_report",
    "divergence_probe",
    "norm_equivalence_report",
    "riesz_transform_report",
    "schur_scalar_integral",
    "schur_test_sums",
    "schur_case_report",
    "weight_exponent_select",
    "schur_marginal_kernel",
    "schur_marginal_report",
]

Direction = Literal["forward", "backward", "equivalence", "hardy", "reversed", "riesz"]


class GradingError(InputError):
    """Singular weight evaluated on a grid without a boundary layer."""


class EmptyWindowError(InputError):
    """Schur weight-exponent window is empty."""


class DivergenceError(NumericalError):
    """A scalar integral diverges; ``value`` is inf and ``condition`` names the failed inequality."""

    def __init__(self, message: str, condition: str):
        super().__init__(message)
        self.condition = condition
        self.value = math.inf


def _inverse(value: float) -> float:
    """1/value with 1/0 = inf."""
    return math.inf if value <= 0.0 else 1.0 / value


class AdmissibleRange(BaseModel):
    """Open exponent interval (p_lo, p_hi) for one statement."""

    model_config = ConfigDict(frozen=True)

    p_lo: float
    p_hi: float
    s: float
    direction: Direction
    lower_condition: str = ""
    upper_condition: str = ""

    @property
    def empty(self) -> bool:
        return not self.p_lo < self.p_hi

    def contains(self, p: float) -> bool:
        return self.p_lo < p < self.p_hi

    def violation(self, p: float) -> Optional[str]:
        if p <= self.p_lo:
            return f"p > {self.p_lo:.6g} ({self.lower_condition})"
        if p >= self.p_hi:
            return f"p < {self.p_hi:.6g} ({self.upper_condition})"
        return None

    def require(self, p: float) -> None:
        """
        Raises:
            RangeError: p outside the interval, naming the violated inequality
        """
        condition = self.violation(p)
        if condition is not None:
            raise RangeError(f"p={p!r} is outside the {self.direction} range: need {condition}", condition)


def admissible_range(params: ModelParams, s: float, direction: Direction) -> AdmissibleRange:
    """
    Exponent range of each statement, with 1/0 = inf.

    forward and hardy: (1/(1 + sigma ^ 0), 1/(alpha s/2 - sigma)_+); backward has
    upper end 1/max{alpha s/2 - (alpha-1)_+, -sigma}; equivalence is the
    intersection; riesz coincides with forward since s < 2(1/p + sigma)/alpha
    is the same upper bound; reversed is (1/(1-r), 1/r).
    """
    alpha, sigma = params.alpha, params.sigma
    p_lo = _inverse(1.0 + min(sigma, 0.0))
    lower = "1/p < 1 + min(sigma, 0)"
    forward_hi = _inverse(max(alpha * s / 2.0 - sigma, 0.0))
    forward_cond = "1/p > (alpha s/2 - sigma)_+"
    backward_hi = _inverse(max(alpha * s / 2.0 - max(alpha - 1.0, 0.0), -sigma))
    backward_cond = "1/p > max(alpha s/2 - (alpha-1)_+, -sigma)"

    if direction in ("forward", "hardy", "riesz"):
        hi, upper = forward_hi, forward_cond
    elif direction == "backward":
        hi, upper = backward_hi, backward_cond
    elif direction == "equivalence":
        hi, upper = (forward_hi, forward_cond) if forward_hi <= backward_hi else (backward_hi, backward_cond)
    elif direction == "reversed":
        r = params.r
        return AdmissibleRange(
            p_lo=1.0 / (1.0 - r),
            p_hi=_inverse(r),
            s=s,
            direction=direction,
            lower_condition="1/p < 1 - r",
            upper_condition="1/p > r",
        )
    else:
        raise DomainError(f"unknown direction {direction!r}")
    return AdmissibleRange(
        p_lo=p_lo, p_hi=hi, s=s, direction=direction, lower_condition=lower, upper_condition=upper
    )


def hardy_admissible(params: ModelParams, s: float, p: float) -> bool:
    """(alpha s/2 - sigma)_+ < 1/p < 1 + sigma ^ 0."""
    return max(params.alpha * s / 2.0 - params.sigma, 0.0) < 1.0 / p < 1.0 + min(params.sigma, 0.0)


def lp_norm(f: np.ndarray, grid: Grid, p: float) -> float:
    return grid.lp_norm(f, p)


Multiplier = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _time_square_integral(
    f: np.ndarray,
    quad: LogQuadrature,
    parts: Sequence[Tuple[SpectralDecomp, float, Multiplier]],
    tail: Optional[np.ndarray],
    tail_power: float,
) -> np.ndarray:
    """
    (int |sum_parts sign * m(t, L) f|^2 dt/t)^{1/2} by the log-t trapezoid rule;
    below t_min the integrand is t^{tail_power} |tail|^2.
    """
    times, weights = quad.nodes_and_weights()
    total = None
    for decomp, sign, multiplier in parts:
        quad.check_coverage(decomp)
        coeffs = decomp.coefficients(f)
        table = multiplier(times[:, None], decomp.nonnegative()[None, :])
        values = sign * decomp.eigenvectors @ (table * coeffs[None, :]).T
        total = values if total is None else total + values
    square = (total**2) @ weights
    if tail is not None:
        square = square + tail**2 * quad.t_min**tail_power / tail_power
    return np.sqrt(square)


def _columns(f: np.ndarray, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.ndim == 1:
        return fn(f)
    return np.stack([fn(f[:, j]) for j in range(f.shape[1])], axis=1)


def square_function(
    decomp: SpectralDecomp, f: np.ndarray, gamma_: float, quad: Optional[LogQuadrature] = None
) -> np.ndarray:
    """
    S_{L,gamma} f(x_i) = (int_0^inf |(tL)^gamma e^{-tL} f|^2 dt/t)^{1/2}.

    Raises:
        DomainError: gamma outside (0, 1)
        CoverageError: the quadrature misses part of the spectrum
    """
    if not 0.0 < gamma_ < 1.0:
        raise DomainError(f"square_function needs 0 < gamma < 1, got {gamma_!r}")
    quad = quad or LogQuadrature.covering(decomp)

    def multiplier(t, mu):
        return (t * mu) ** gamma_ * np.exp(-t * mu)

    def one(g):
        tail = decomp.apply(decomp.nonnegative() ** gamma_, g)
        return _time_square_integral(g, quad, [(decomp, 1.0, multiplier)], tail, 2.0 * gamma_)

    return _columns(f, one)


def _weighted_multiplier(s: float) -> Multiplier:
    def multiplier(t, mu):
        return t ** (-s / 2.0) * (t * mu) * np.exp(-t * mu)

    return multiplier


def weighted_square_function(
    decomp: SpectralDecomp, f: np.ndarray, s: float, quad: Optional[LogQuadrature] = None
) -> np.ndarray:
    """(int_0^inf t^{-s} |tL e^{-tL} f|^2 dt/t)^{1/2}, 0 < s < 2."""
    if not 0.0 < s < 2.0:
        raise DomainError(f"weighted_square_function needs 0 < s < 2, got {s!r}")
    quad = quad or LogQuadrature.covering(decomp)

    def one(g):
        tail = decomp.apply(decomp.nonnegative(), g)
        return _time_square_integral(g, quad, [(decomp, 1.0, _weighted_multiplier(s))], tail, 2.0 - s)

    return _columns(f, one)


def difference_square_function(
    decomp0: SpectralDecomp, decompL: SpectralDecomp, f: np.ndarray, s: float, quad: Optional[LogQuadrature] = None
) -> np.ndarray:
    """(int t^{-s} |(tL_lambda e^{-tL_lambda} - tL_0 e^{-tL_0}) f|^2 dt/t)^{1/2}."""
    if not decomp0.grid.same_as(decompL.grid):
        raise GridMismatchError("difference square function needs one grid")
    quad = quad or LogQuadrature.covering(decomp0, decompL)
    multiplier = _weighted_multiplier(s)

    def one(g):
        tail = decompL.apply(decompL.nonnegative(), g) - decomp0.apply(decomp0.nonnegative(), g)
        parts = [(decompL, 1.0, multiplier), (decomp0, -1.0, multiplier)]
        return _time_square_integral(g, quad, parts, tail, 2.0 - s)

    return _columns(f, one)


def square_function_constant(gamma_: float) -> float:
    """c(gamma) = int_0^inf t^{2 gamma} e^{-2t} dt/t = Gamma(2 gamma) / 4^gamma."""
    return gamma(2.0 * gamma_) / 4.0**gamma_


def weighted_square_function_constant(s: float) -> float:
    """int_0^inf t^{-s} t^2 e^{-2t} dt/t = Gamma(2-s) 2^{s-2}."""
    return gamma(2.0 - s) * 2.0 ** (s - 2.0)


def _norm_ratios(
    grid: Grid,
    suite: Mapping[str, np.ndarray],
    numerator: Callable[[np.ndarray], np.ndarray],
    denominator: Callable[[np.ndarray], np.ndarray],
    p: float,
    s: float,
    name: str,
    sweep: Dict,
    metrics: Optional[Dict] = None,
) -> RatioReport:
    if not suite:
        raise InputError("test-function suite is empty")
    ratios = []
    for f in suite.values():
        ratios.append(grid.lp_norm(numerator(f), p) / grid.lp_norm(denominator(f), p))
    count = len(ratios)
    return RatioReport.from_ratios(
        np.array(ratios),
        [np.arange(count, dtype=float), np.full(count, p), np.full(count, s)],
        name=name,
        sweep={"p": p, "s": s, "suite_size": count, "n": grid.n, **sweep},
        metrics=metrics,
    )


def _identity(f: np.ndarray) -> np.ndarray:
    return f


def sf_equivalence_report(
    decomp: SpectralDecomp,
    p: float,
    gamma_: float,
    suite: Mapping[str, np.ndarray],
    quad: Optional[LogQuadrature] = None,
) -> RatioReport:
    """min/max over the suite of ||S_{L,gamma} f||_p / ||f||_p, with c(gamma) in the metrics."""
    if not 1.0 < p < math.inf:
        raise DomainError(f"p must lie in (1, inf), got {p!r}")
    quad = quad or LogQuadrature.covering(decomp)
    constant = square_function_constant(gamma_)
    return _norm_ratios(
        decomp.grid,
        suite,
        lambda f: square_function(decomp, f, gamma_, quad),
        _identity,
        p,
        0.0,
        "square_function",
        {"gamma": gamma_, "t_min": quad.t_min, "t_max": quad.t_max},
        {"c_gamma": constant, "l2_constant": math.sqrt(constant)},
    )


def _require_boundary_layer(grid: Grid, alpha: float, s: float, p: float) -> None:
    if not grid.graded and alpha * s / 2.0 >= 1.0 / p:
        raise GradingError(
            f"x^(-alpha s/2) with alpha s/2={alpha * s / 2.0:.3g} >= 1/p={1.0 / p:.3g} needs a graded grid"
        )


def reversed_hardy_report(
    decomp0: SpectralDecomp,
    decompL: SpectralDecomp,
    p: float,
    s: float,
    suite: Mapping[str, np.ndarray],
    quad: Optional[LogQuadrature] = None,
) -> RatioReport:
    """
    sup ||difference square function||_p / ||f / x^{alpha s/2}||_p.

    The metric ``triangle_defect`` is the largest
    ||wsf_0 f||_p - ||wsf_lambda f||_p - lhs(f) over the suite; it is <= 0
    up to rounding for every computed triple.

    Raises:
        RangeError: p outside (1/(1-r), 1/r)
        GradingError: uniform grid with alpha s/2 >= 1/p
    """
    params = decompL.params
    admissible_range(params, s, "reversed").require(p)
    grid = decompL.grid
    _require_boundary_layer(grid, params.alpha, s, p)
    quad = quad or LogQuadrature.covering(decomp0, decompL)
    weight = grid.nodes ** (-params.alpha * s / 2.0)

    defects = []

    def lhs(f):
        diff = difference_square_function(decomp0, decompL, f, s, quad)
        upper = grid.lp_norm(weighted_square_function(decompL, f, s, quad), p) + grid.lp_norm(diff, p)
        defects.append(grid.lp_norm(weighted_square_function(decomp0, f, s, quad), p) - upper)
        return diff

    report = _norm_ratios(
        grid,
        suite,
        lhs,
        lambda f: f * weight,
        p,
        s,
        "reversed_hardy",
        {"t_min": quad.t_min, "t_max": quad.t_max},
    )
    return report.model_copy(update={"metrics": {**report.metrics, "triangle_defect": max(defects)}})


def generalized_hardy_report(
    decomp: SpectralDecomp, p: float, s: float, suite: Mapping[str, np.ndarray]
) -> RatioReport:
    """
    sup ||x^{-alpha s/2} L^{-s/2} f||_p / ||f||_p with the admissibility verdict
    in ``metrics['admissible']``; inadmissible p gives an INCONCLUSIVE report
    until a divergence probe decides.

    Raises:
        PreconditionError: s outside (0, 2 ^ 2d/alpha] or alpha s/2 >= 1 + 2 sigma
        SpectralFloorError: no spectral gap
    """
    params = decomp.params
    s_max = min(2.0, 2.0 * params.d / params.alpha)
    if not 0.0 < s <= s_max:
        raise PreconditionError(f"s must lie in (0, {s_max:.6g}], got {s!r}")
    if not params.alpha * s / 2.0 < 1.0 + 2.0 * params.sigma:
        raise PreconditionError(f"alpha s/2 < 1 + 2 sigma fails for s={s!r}, sigma={params.sigma!r}")
    grid = decomp.grid
    riesz = frac_power(decomp, s, "-")
    weight = grid.nodes ** (-params.alpha * s / 2.0)
    admissible = hardy_admissible(params, s, p)
    report = _norm_ratios(
        grid,
        suite,
        lambda f: weight * riesz.apply(f),
        _identity,
        p,
        s,
        "generalized_hardy",
        {"graded": grid.graded},
        {"admissible": admissible},
    )
    if not admissible and report.status == STATUS["pass"]:
        report = report.model_copy(update={"status": STATUS["inconclusive"]})
    return report


def divergence_probe(coarse: RatioReport, fine: RatioReport) -> RatioReport:
    """
    Growth of the sup under one refinement: >= 1.25 is EXPECTED-DIVERGENCE,
    anything else INCONCLUSIVE (a finite grid cannot prove unboundedness).
    """
    growth = fine.max_ratio / coarse.max_ratio if coarse.max_ratio > 0.0 else math.inf
    status = STATUS["divergence"] if growth >= ANALYSIS["divergence_growth"] else STATUS["inconclusive"]
    logger.info_event("divergence_probe", f"{fine.name}: growth {growth:.4g}", growth=growth, status=status)
    return fine.with_refinement(coarse).model_copy(
        update={"status": status, "metrics": {**fine.metrics, "growth": growth}}
    )


class NormEquivalence(NamedTuple):
    forward: Optional[RatioReport]
    backward: Optional[RatioReport]


def _sobolev(decomp: SpectralDecomp, s: float) -> Callable[[np.ndarray], np.ndarray]:
    if s == 2.0:
        return decomp.assembly.apply
    return frac_power(decomp, s, "+").apply


def norm_equivalence_report(
    decomp0: SpectralDecomp,
    decompL: SpectralDecomp,
    p: float,
    s: float,
    suite: Mapping[str, np.ndarray],
    direction: Literal["forward", "backward", "equivalence"] = "equivalence",
) -> NormEquivalence:
    """
    forward: sup ||L_0^{s/2} u||_p / ||L_lambda^{s/2} u||_p; backward: the
    reciprocal ratio. For s = 2 both sides are direct operator applications.

    Raises:
        RangeError: (p, s) outside the range of ``direction``
    """
    if not decomp0.grid.same_as(decompL.grid):
        raise GridMismatchError("norm equivalence needs one grid")
    admissible_range(decompL.params, s, direction).require(p)
    grid = decompL.grid
    zero, full = _sobolev(decomp0, s), _sobolev(decompL, s)
    forward = backward = None
    if direction in ("forward", "equivalence"):
        forward = _norm_ratios(grid, suite, zero, full, p, s, "norm_equivalence_forward", {})
    if direction in ("backward", "equivalence"):
        backward = _norm_ratios(grid, suite, full, zero, p, s, "norm_equivalence_backward", {})
    return NormEquivalence(forward, backward)


def riesz_transform_report(
    decomp0: SpectralDecomp, decompL: SpectralDecomp, p: float, s: float, suite: Mapping[str, np.ndarray]
) -> RatioReport:
    """sup ||L_0^{s/2} L_lambda^{-s/2} f||_p / ||f||_p."""
    if not decomp0.grid.same_as(decompL.grid):
        raise GridMismatchError("Riesz transform needs one grid")
    params = decompL.params
    admissible_range(params, s, "riesz").require(p)
    if not s < 2.0 * (1.0 / p + params.sigma) / params.alpha:
        condition = "s < 2(1/p + sigma)/alpha"
        raise RangeError(f"s={s!r} violates {condition}", condition)
    zero = _sobolev(decomp0, s)
    inverse = frac_power(decompL, s, "-")
    return _norm_ratios(
        decompL.grid, suite, lambda f: zero(inverse.apply(f)), _identity, p, s, "riesz_transform", {}
    )


def _power_integral(exponent: float, lo: float, hi: float) -> float:
    if exponent == -1.0:
        return math.log(hi / lo)
    return (hi ** (exponent + 1.0) - lo ** (exponent + 1.0)) / (exponent + 1.0)


def _singular_part(exponent: float, alpha: float, limit: int = 200) -> float:
    """int_0^{1/2} u^exponent (1-u)^{-1-alpha} du."""
    value, error = integrate.quad(
        lambda u: (1.0 - u) ** (-1.0 - alpha),
        0.0,
        0.5,
        weight="alg",
        wvar=(exponent, 0.0),
        epsabs=QUADRATURE["scalar_abs_tol"],
        epsrel=QUADRATURE["scalar_rel_tol"],
        limit=limit,
    )
    return value


def schur_scalar_integral(beta: float, p: float, r: float, alpha: float, limit: int = 200) -> float:
    """
    int_0^inf t^{-a} (1 v t)^{alpha+2r} / (|1-t| v (1 ^ t))^{1+alpha} dt, a = beta/p + r.

    Split at 1/2, 1 and 2; the piece beyond 2 is mapped to (0, 1/2] by u = 1/t.

    Raises:
        DivergenceError: beta <= p r (divergence at infinity) or beta >= p(1-r) (at 0)
    """
    if not beta > p * r:
        raise DivergenceError(f"integral diverges at infinity: beta={beta!r} <= p r={p * r!r}", "p r < beta")
    if not beta < p * (1.0 - r):
        raise DivergenceError(
            f"integral diverges at 0: beta={beta!r} >= p(1-r)={p * (1.0 - r)!r}", "beta < p (1 - r)"
        )
    a = beta / p + r
    near_zero = _singular_part(-a, alpha, limit)
    left = _power_integral(-a - 1.0 - alpha, 0.5, 1.0)
    right = _power_integral(alpha + 2.0 * r - a, 1.0, 2.0)
    far = _singular_part(a - 2.0 * r - 1.0, alpha, limit)
    return near_zero + left + right + far


def weight_exponent_select(p: float, s: float, sigma: float, alpha: float) -> Tuple[float, float]:
    """
    Midpoints of the beta window (p(alpha s/2 - sigma), min{p'(1 + sigma - alpha s/2), p(1 + sigma)})
    and the gamma window (sigma p', p(1 + sigma)). For alpha < 2 and
    sigma > alpha/2 (1 + s/2) the beta window starts at max(0, .).

    Raises:
        EmptyWindowError: either window is empty
    """
    p_dual = p / (p - 1.0)
    beta_lo = p * (alpha * s / 2.0 - sigma)
    if alpha < 2.0 and sigma > alpha / 2.0 * (1.0 + s / 2.0):
        beta_lo = max(0.0, beta_lo)
    beta_hi = min(p_dual * (1.0 + sigma - alpha * s / 2.0), p * (1.0 + sigma))
    if not beta_lo < beta_hi:
        raise EmptyWindowError(
            f"beta window empty: p(alpha s/2 - sigma)={beta_lo:.6g} >= min(p'(1+sigma-alpha s/2), p(1+sigma))={beta_hi:.6g}"
        )
    gamma_lo = sigma * p_dual
    gamma_hi = p * (1.0 + sigma)
    if not gamma_lo < gamma_hi:
        raise EmptyWindowError(f"gamma window empty: sigma p'={gamma_lo:.6g} >= p(1+sigma)={gamma_hi:.6g}")
    return 0.5 * (beta_lo + beta_hi), 0.5 * (gamma_lo + gamma_hi)


def schur_test_sums(
    kernel: np.ndarray, grid: Grid, mask: np.ndarray, weight: np.ndarray, p: float
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Row sums sum_y w^{1/p} K w_y and column sums sum_x w^{-1/p'} K w_x over
    the masked region.
    """
    p_dual = p / (p - 1.0)
    region = np.where(mask, kernel, 0.0)
    safe = np.where(mask, weight, 1.0)
    rows = (safe ** (1.0 / p) * region) @ grid.weights
    columns = grid.weights @ (safe ** (-1.0 / p_dual) * region)
    return rows, columns


def _case_region(case: int, x: np.ndarray, y: np.ndarray, dist: np.ndarray) -> np.ndarray:
    if case == 1:
        return dist <= 4.0 * np.minimum(x, y)
    if case == 2:
        return (4.0 * x <= dist) & (dist <= 4.0 * y)
    if case == 3:
        return (4.0 * y <= dist) & (dist <= 4.0 * x)
    if case == 4:
        return 4.0 * np.maximum(x, y) <= dist
    raise DomainError(f"Schur case must be 1..4, got {case!r}")


def schur_case_report(decomp: SpectralDecomp, p: float, s: float, case: int) -> RatioReport:
    """
    Weighted Schur sums of K(x, y) = x^{-alpha s/2} L^{-s/2}(x, y) on one case
    region; the report brackets row sums (side 0) and column sums (side 1),
    evaluated at interior points. Locations are (point, side, case).
    """
    params = decomp.params
    grid = decomp.grid
    x = grid.nodes[:, None]
    y = grid.nodes[None, :]
    dist = np.abs(x - y)
    mask = _case_region(case, x, y, dist)
    sweep = {"case": case, "p": p, "s": s, "n": grid.n}
    if not mask.any():
        logger.warning_event("empty_schur_region", f"Schur case {case} misses the grid", **sweep)
        return RatioReport.empty(f"schur_case_{case}", sweep)

    beta, gamma_ = weight_exponent_select(p, s, params.sigma, params.alpha)
    with np.errstate(divide="ignore"):
        if case == 1:
            weight = np.ones_like(dist)
        elif case == 2:
            weight = (x / np.where(dist > 0.0, dist, 1.0)) ** beta
        elif case == 3:
            weight = (dist / y) ** gamma_
        else:
            weight = (x / y) ** beta
    kernel = x ** (-params.alpha * s / 2.0) * frac_power(decomp, s, "-").kernel
    rows, columns = schur_test_sums(kernel, grid, mask, weight, p)

    idx = grid.interior()
    points = grid.nodes[idx]
    values = np.concatenate([rows[idx], columns[idx]])
    report = RatioReport.from_ratios(
        values,
        [np.concatenate([points, points]), np.repeat([0.0, 1.0], idx.size), np.full(2 * idx.size, float(case))],
        name=f"schur_case_{case}",
        sweep={**sweep, "beta": beta, "gamma": gamma_},
        metrics={"row_sup": float(rows[idx].max()), "column_sup": float(columns[idx].max())},
    )
    return report


def schur_marginal_kernel(x: np.ndarray, y: np.ndarray, r: float, alpha: float) -> np.ndarray:
    """((x v y)/sqrt(xy))^{2r} (x v y)^alpha / (|x-y| v (x ^ y))^{1+alpha}."""
    if not 0.0 <= r < 0.5:
        raise DomainError(f"r must lie in [0, 1/2), got {r!r}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    top = np.maximum(x, y)
    return (top / np.sqrt(x * y)) ** (2.0 * r) * top**alpha / np.maximum(np.abs(x - y), np.minimum(x, y)) ** (
        1.0 + alpha
    )


def schur_marginal_report(
    grid: Grid, r: float, alpha: float, p: float, beta: Optional[float] = None
) -> RatioReport:
    """
    Discrete Schur sums of the reduced kernel with w = (x/y)^beta against the
    scalar integrals; ratios are taken at points x <= x_max/8 where the
    truncated tail is small.
    """
    p_dual = p / (p - 1.0)
    lo = max(p * r, p_dual * r)
    hi = min(p * (1.0 - r), p_dual * (1.0 - r))
    if beta is None:
        if not lo < hi:
            raise EmptyWindowError(f"beta window ({lo:.6g}, {hi:.6g}) is empty for p={p!r}, r={r!r}")
        beta = 0.5 * (lo + hi)
    row_integral = schur_scalar_integral(beta, p, r, alpha)
    column_integral = schur_scalar_integral(beta, p_dual, r, alpha)

    x = grid.nodes[:, None]
    y = grid.nodes[None, :]
    kernel = schur_marginal_kernel(x, y, r, alpha)
    rows, columns = schur_test_sums(kernel, grid, np.ones(kernel.shape, dtype=bool), (x / y) ** beta, p)
    idx = np.flatnonzero(grid.nodes <= grid.x_max / 8.0)
    points = grid.nodes[idx]
    return RatioReport.from_ratios(
        np.concatenate([rows[idx] / row_integral, columns[idx] / column_integral]),
        [np.concatenate([points, points]), np.repeat([0.0, 1.0], idx.size), np.full(2 * idx.size, r)],
        name="schur_marginal",
        sweep={"r": r, "alpha": alpha, "p": p, "beta": beta, "n": grid.n},
        metrics={"row_integral": row_integral, "column_integral": column_integral},
    )
